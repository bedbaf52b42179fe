"""JSON and CSV persistence for parameters, scenes, reports and run tables.

Complex numbers are stored as ``[re, im]`` pairs.
"""
from __future__ import annotations

import csv
import dataclasses
import json
import math
import platform
from pathlib import Path
from typing import Iterable

import numpy as np

from .core import RadarParams, Target, TargetScene

__all__ = [
    "params_to_dict",
    "params_from_dict",
    "scene_to_dict",
    "scene_from_dict",
    "load_json",
    "dump_json",
    "write_csv",
    "run_manifest",
]


def params_to_dict(params: RadarParams) -> dict:
    return dataclasses.asdict(params)


def params_from_dict(d: dict) -> RadarParams:
    known = {f.name for f in dataclasses.fields(RadarParams)}
    unknown = set(d) - known
    if unknown:
        raise ValueError(f"unknown radar parameter(s): {sorted(unknown)}")
    return RadarParams(**d)


def _complex_pair(z: complex) -> list[float]:
    return [float(z.real), float(z.imag)]


def scene_to_dict(scene: TargetScene) -> dict:
    return {"targets": [
        {"velocity_index": t.velocity_index,
         "scatterers": [{"range_index": p, "amplitude": _complex_pair(a)}
                        for p, a in t.scatterers]}
        for t in scene.targets]}


def scene_from_dict(d: dict) -> TargetScene:
    targets = []
    for t in d.get("targets", []):
        scat = []
        for s in t["scatterers"]:
            amp = s["amplitude"]
            if isinstance(amp, (list, tuple)):
                if len(amp) != 2:
                    raise ValueError(f"amplitude must be [re, im], got {amp!r}")
                amp = complex(amp[0], amp[1])
            scat.append((int(s["range_index"]), complex(amp)))
        targets.append(Target(int(t["velocity_index"]), tuple(scat)))
    return TargetScene(tuple(targets))


def _default(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, (np.floating,)):
        return float(o)
    if isinstance(o, complex):
        return _complex_pair(o)
    if isinstance(o, frozenset):
        return sorted(o)
    raise TypeError(f"cannot serialise {type(o).__name__}")


def dump_json(obj, path: str | Path | None = None) -> str:
    text = json.dumps(obj, indent=2, default=_default, allow_nan=True)
    if path is not None:
        Path(path).write_text(text + "\n", encoding="utf-8")
    return text


def load_json(path: str | Path) -> dict:
    return json.loads(Path(path).read_text(encoding="utf-8"))


def write_csv(rows: Iterable, path) -> int:
    """Write dataclass or dict rows with a header line; returns the row count.

    ``path`` may also be an open text stream.
    """
    rows = list(rows)
    records = [dataclasses.asdict(r) if dataclasses.is_dataclass(r) else dict(r)
               for r in rows]
    fields: list[str] = []
    for rec in records:
        fields.extend(k for k in rec if k not in fields)
    if hasattr(path, "write"):
        _write_records(path, fields, records)
    else:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            _write_records(fh, fields, records)
    return len(records)


def _write_records(fh, fields, records):
    writer = csv.DictWriter(fh, fieldnames=fields, lineterminator="\n")
    writer.writeheader()
    for rec in records:
        writer.writerow({k: _cell(v) for k, v in rec.items()})


def _cell(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return "nan" if math.isnan(v) else repr(v)
    return v


def run_manifest(spec: dict, wall_time: float, **extra) -> dict:
    from . import __version__

    return {"spec": spec, "library_version": __version__, "wall_time_s": wall_time,
            "python": platform.python_version(), "numpy": np.__version__, **extra}

"""Command-line entry point: ``rsfr <subcommand> [options]``.

Exit codes: 0 success, 1 invalid configuration, 2 solver non-convergence
in ``recover``.
"""
from __future__ import annotations

import argparse
import dataclasses
import logging
import sys
import time
from pathlib import Path

import numpy as np

from . import serialize
from .core import (DopplerMode, FrequencyCodes, RadarParams, build_observation_matrix,
                   draw_codes, scene_to_vector, snr_to_noise_power, synthesize_measurement)
from .experiments import (Algorithm, ExperimentKind, ModeSetting, bound_table, desk_scale,
                          paper_scale, recover_support, run_analysis, run_ccdf_experiment,
                          run_exact_rate_experiment, run_hit_rate_experiment)
from .recovery import SolverConfig

log = logging.getLogger("rsfr")

EXIT_OK, EXIT_CONFIG, EXIT_NONCONVERGED = 0, 1, 2


class ConfigError(ValueError):
    pass


def parse_range(text: str, cast=float) -> list:
    """``"1:8"`` (inclusive), ``"-5:20:2.5"`` or ``"0,5,10"``."""
    text = text.strip()
    if ":" in text:
        parts = [float(p) for p in text.split(":")]
        if len(parts) not in (2, 3):
            raise ConfigError(f"bad range {text!r}")
        start, stop = parts[0], parts[1]
        step = parts[2] if len(parts) == 3 else 1.0
        if step <= 0:
            raise ConfigError(f"range step must be positive in {text!r}")
        values = np.arange(start, stop + step / 2, step)
        return [cast(v) for v in values]
    return [cast(float(p)) for p in text.split(",") if p.strip()]


def _add_radar_flags(p: argparse.ArgumentParser):
    g = p.add_argument_group("radar")
    g.add_argument("--n", type=int, help="pulses per CPI (N)")
    g.add_argument("--m", type=int, help="frequency points (M)")
    g.add_argument("--freq-step", type=float, help="frequency step in Hz")
    g.add_argument("--carrier", type=float, help="initial carrier in Hz")
    g.add_argument("--pri", type=float, help="pulse repetition interval in s")
    g.add_argument("--mode", choices=[m.value for m in DopplerMode])
    g.add_argument("--rb", help="relative bandwidth(s) for exact mode, comma separated")
    g.add_argument("--seed", type=int, default=None, help="base seed")


def _add_run_flags(p: argparse.ArgumentParser, recovery: bool):
    _add_radar_flags(p)
    p.add_argument("--trials", type=int)
    p.add_argument("--out", type=Path, help="CSV output path (manifest written alongside)")
    p.add_argument("--workers", type=int, default=1)
    scale = p.add_mutually_exclusive_group()
    scale.add_argument("--paper-scale", dest="scale", action="store_const", const="paper")
    scale.add_argument("--desk-scale", dest="scale", action="store_const", const="desk")
    p.set_defaults(scale="desk")
    if recovery:
        p.add_argument("--algos", help="comma separated: " +
                       ",".join(a.value for a in Algorithm))
        p.add_argument("--k-range", help="block counts, e.g. 1:8")
        p.add_argument("--snr-range", help="SNR grid in dB, e.g. 0:15:5")
        p.add_argument("--scatterers", type=int, help="scatterers per target (P)")
        p.add_argument("--lam", type=float, help="regularisation weight")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rsfr", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    _add_run_flags(sub.add_parser("ccdf", help="CCDFs of mu_I, mu_B and ||Psi||"), False)
    _add_run_flags(sub.add_parser("exact-rate", help="noiseless exact recovery rate"), True)
    _add_run_flags(sub.add_parser("hit-rate", help="noisy hit rate over (K, SNR)"), True)

    p = sub.add_parser("analyze", help="coherence report and guarantees for one draw")
    _add_radar_flags(p)
    p.add_argument("--k", type=int, default=1, help="block sparsity for the condition")
    p.add_argument("--epsilon", type=float, default=0.1)
    p.add_argument("--out", type=Path)

    p = sub.add_parser("bound", help="sparsity bound table")
    p.add_argument("--m", default="2,4,8", help="M values")
    p.add_argument("--n", default="128,1024,1048576", help="N values")
    p.add_argument("--epsilon", default="0.1", help="failure probabilities")
    p.add_argument("--mu-intra", type=float)
    p.add_argument("--mu-inter", type=float)
    p.add_argument("--k", type=int, default=1)
    p.add_argument("--out", type=Path)

    p = sub.add_parser("recover", help="reconstruct one scene from a JSON config")
    p.add_argument("config", type=Path)
    p.add_argument("--algos", help="algorithm (overrides the config)")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", type=Path)
    return parser


def _params(args, base: RadarParams) -> RadarParams:
    changes = {}
    for flag, name in (("n", "n_pulses"), ("m", "n_freqs"), ("freq_step", "freq_step"),
                       ("carrier", "carrier"), ("pri", "pri")):
        v = getattr(args, flag, None)
        if v is not None:
            changes[name] = v
    return dataclasses.replace(base, **changes)


def _modes(args, default):
    if args.mode is None and args.rb is None:
        return default
    mode = DopplerMode(args.mode or DopplerMode.EXACT)
    if mode is DopplerMode.SIMPLIFIED:
        return (ModeSetting(mode),)
    if args.rb is None:
        return (ModeSetting(mode),)
    return tuple(ModeSetting(mode, rb) for rb in parse_range(args.rb))


def _spec_from_args(args, kind: ExperimentKind):
    spec = (paper_scale if args.scale == "paper" else desk_scale)(kind)
    changes = {"params": _params(args, spec.params), "modes": _modes(args, spec.modes),
               "workers": args.workers}
    if args.trials is not None:
        changes["trials"] = args.trials
    if args.seed is not None:
        changes["base_seed"] = args.seed
    if kind is not ExperimentKind.CCDF:
        if args.algos:
            changes["algorithms"] = tuple(Algorithm(a.strip()) for a in args.algos.split(","))
        if args.k_range:
            changes["k_range"] = tuple(parse_range(args.k_range, int))
        if args.snr_range:
            changes["snr_range_db"] = tuple(parse_range(args.snr_range))
        if args.scatterers is not None:
            changes["scatterers_per_target"] = args.scatterers
        elif changes["params"].n_freqs < spec.scatterers_per_target:
            changes["scatterers_per_target"] = changes["params"].n_freqs
        if args.lam is not None:
            changes["solver"] = SolverConfig(lam=args.lam)
    return dataclasses.replace(spec, **changes)


def _emit_table(rows, out: Path | None, spec_dict: dict, wall: float):
    if out is None:
        serialize.write_csv(rows, sys.stdout)
        return
    n = serialize.write_csv(rows, out)
    manifest = serialize.run_manifest(spec_dict, wall, rows=n, output=str(out))
    serialize.dump_json(manifest, out.with_suffix(out.suffix + ".manifest.json"))
    log.info("wrote %d rows to %s", n, out)


def _cmd_experiment(args, kind, runner):
    spec = _spec_from_args(args, kind)
    t0 = time.perf_counter()
    rows = runner(spec)
    _emit_table(rows, args.out, spec.to_dict(), time.perf_counter() - t0)
    return EXIT_OK


def _cmd_analyze(args):
    params = _params(args, RadarParams(32, 4))
    mode = DopplerMode(args.mode or DopplerMode.SIMPLIFIED)
    if args.rb is not None and mode is DopplerMode.EXACT:
        params = params.with_relative_bandwidth(parse_range(args.rb)[0])
    report = run_analysis(params, seed=args.seed or 0, mode=mode,
                          block_sparsity=args.k, epsilon=args.epsilon)
    text = serialize.dump_json(report.to_dict(), args.out)
    if args.out is None:
        print(text)
    return EXIT_OK


def _cmd_bound(args):
    mu_given = args.mu_intra is not None or args.mu_inter is not None
    if mu_given and (args.mu_intra is None or args.mu_inter is None):
        raise ConfigError("--mu-intra and --mu-inter must be given together")
    rows = bound_table(parse_range(args.m, int), parse_range(args.n, int),
                       parse_range(args.epsilon), args.mu_intra, args.mu_inter, args.k)
    if args.out is not None:
        serialize.write_csv(rows, args.out)
        return EXIT_OK
    cols = list(rows[0]) if rows else []
    print("  ".join(f"{c:>12}" for c in cols))
    for r in rows:
        print("  ".join(f"{_fmt(r[c]):>12}" for c in cols))
    return EXIT_OK


def _fmt(v):
    if isinstance(v, float):
        return f"{v:.4g}"
    return str(v)


def _cmd_recover(args):
    cfg = serialize.load_json(args.config)
    params = serialize.params_from_dict(cfg.get("params", {}))
    mode = DopplerMode(cfg.get("mode", DopplerMode.EXACT))
    seed = args.seed if args.seed is not None else int(cfg.get("seed", 0))
    if "codes" in cfg:
        codes = FrequencyCodes(np.asarray(cfg["codes"]), params.n_freqs, None)
    else:
        codes = draw_codes(params, seed)
    matrix = build_observation_matrix(params, codes, mode)
    scene = serialize.scene_from_dict(cfg.get("scene", {}))
    x = scene_to_vector(scene, params)
    if "snr_db" in cfg:
        noise = snr_to_noise_power(float(cfg["snr_db"]))
    else:
        noise = float(cfg.get("noise_power", 0.0))
    y = synthesize_measurement(matrix, x, noise, seed).samples
    algorithm = Algorithm(args.algos or cfg.get("algorithm", Algorithm.BLOCK_LASSO))
    solver = SolverConfig(**cfg.get("solver", {}))
    n_scat = max(scene.n_scatterers, 1)
    n_blocks = max(scene.n_targets, 1)
    support, result = recover_support(algorithm, matrix, y, n_blocks, n_scat, solver,
                                      noise > 0)
    out = result.to_dict()
    out["support"] = sorted(support)
    out["true_support"] = sorted(x.support())
    out["params"] = serialize.params_to_dict(params)
    out["mode"] = mode.value
    text = serialize.dump_json(out, args.out)
    if args.out is None:
        print(text)
    if not result.converged:
        log.error("solver did not converge: %s", result.message)
        return EXIT_NONCONVERGED
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "ccdf":
            return _cmd_experiment(args, ExperimentKind.CCDF, run_ccdf_experiment)
        if args.command == "exact-rate":
            return _cmd_experiment(args, ExperimentKind.EXACT_RATE, run_exact_rate_experiment)
        if args.command == "hit-rate":
            return _cmd_experiment(args, ExperimentKind.HIT_RATE, run_hit_rate_experiment)
        if args.command == "analyze":
            return _cmd_analyze(args)
        if args.command == "bound":
            return _cmd_bound(args)
        return _cmd_recover(args)
    except (ValueError, KeyError, TypeError, OSError) as exc:
        print(f"rsfr: invalid configuration: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())

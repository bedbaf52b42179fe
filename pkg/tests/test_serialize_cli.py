import csv
import io
import json

import numpy as np
import pytest

from rsfr import __version__
from rsfr.cli import EXIT_CONFIG, EXIT_NONCONVERGED, EXIT_OK, main, parse_range
from rsfr.core import RadarParams, TargetScene, synthesize_scene
from rsfr.experiments import MetricsRow
from rsfr.serialize import (dump_json, load_json, params_from_dict, params_to_dict,
                            run_manifest, scene_from_dict, scene_to_dict, write_csv)


class TestSerialize:
    def test_params_round_trip(self):
        p = RadarParams(64, 4, carrier=1e9)
        assert params_from_dict(json.loads(json.dumps(params_to_dict(p)))) == p
        with pytest.raises(ValueError):
            params_from_dict({"n_pulses": 8, "bogus": 1})

    def test_scene_round_trip(self):
        scene = synthesize_scene(RadarParams(32, 8), 3, 5, 1)
        d = json.loads(json.dumps(scene_to_dict(scene)))
        assert scene_from_dict(d) == scene
        amp = d["targets"][0]["scatterers"][0]["amplitude"]
        assert isinstance(amp, list) and len(amp) == 2
        assert scene_from_dict({}) == TargetScene()

    def test_bad_amplitude(self):
        with pytest.raises(ValueError):
            scene_from_dict({"targets": [{"velocity_index": 0,
                                          "scatterers": [{"range_index": 0,
                                                          "amplitude": [1, 2, 3]}]}]})

    def test_json_handles_numpy(self, tmp_path):
        obj = {"a": np.arange(3), "b": np.float64(1.5), "c": 1 + 2j, "d": frozenset({3, 1})}
        dump_json(obj, tmp_path / "x.json")
        assert load_json(tmp_path / "x.json") == {"a": [0, 1, 2], "b": 1.5, "c": [1.0, 2.0],
                                                  "d": [1, 3]}

    def test_csv(self, tmp_path):
        rows = [MetricsRow("omp", "exact", 1, None, "exact_recovery_rate", 0.5, 10)]
        buf = io.StringIO()
        assert write_csv(rows, buf) == 1
        lines = buf.getvalue().split("\n")
        assert lines[0] == "algorithm,mode,K,snr_db,metric_name,value,trials"
        assert lines[1] == "omp,exact,1,,exact_recovery_rate,0.5,10"
        write_csv(rows, tmp_path / "r.csv")
        assert (tmp_path / "r.csv").read_text(encoding="utf-8") == buf.getvalue()

    def test_manifest(self):
        m = run_manifest({"kind": "ccdf"}, 1.25, rows=3)
        assert m["library_version"] == __version__ and m["wall_time_s"] == 1.25
        assert m["rows"] == 3


class TestParseRange:
    def test_forms(self):
        assert parse_range("1:4", int) == [1, 2, 3, 4]
        assert parse_range("-5:0:2.5") == [-5.0, -2.5, 0.0]
        assert parse_range("0,5,10") == [0.0, 5.0, 10.0]
        with pytest.raises(ValueError):
            parse_range("1:2:0")
        with pytest.raises(ValueError):
            parse_range("1:2:3:4")


def read_csv(path):
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


class TestCli:
    def test_bound(self, capsys):
        assert main(["bound", "--m", "2", "--n", "128,17179869184", "--epsilon", "0.1"]) == 0
        out = capsys.readouterr().out.splitlines()
        assert "k_max" in out[0] and "vacuous" in out[0]
        assert out[1].split()[-1] == "True" and out[2].split()[-1] == "False"

    def test_bound_with_coherence(self, tmp_path):
        out = tmp_path / "b.csv"
        assert main(["bound", "--m", "4", "--n", "1024", "--mu-intra", "0.02",
                     "--mu-inter", "0.02", "--out", str(out)]) == EXIT_OK
        (row,) = read_csv(out)
        assert float(row["theorem1_lhs"]) == pytest.approx(11.147666523326828)
        assert main(["bound", "--mu-intra", "0.1"]) == EXIT_CONFIG

    def test_analyze(self, capsys):
        assert main(["analyze", "--n", "32", "--m", "4", "--seed", "5"]) == 0
        report = json.loads(capsys.readouterr().out)
        assert report["coherence"]["spectral_norm"] == 2.0
        assert report["theorem3"]["vacuous"] is True

    def test_ccdf_writes_csv_and_manifest(self, tmp_path):
        out = tmp_path / "ccdf.csv"
        assert main(["ccdf", "--n", "16", "--m", "4", "--trials", "5", "--mode", "simplified",
                     "--out", str(out)]) == 0
        rows = read_csv(out)
        assert len(rows) == 3 * 200 and rows[0]["mode"] == "RB=0"
        manifest = load_json(tmp_path / "ccdf.csv.manifest.json")
        assert manifest["spec"]["trials"] == 5 and manifest["rows"] == 600

    def test_exact_rate_to_stdout(self, capsys):
        assert main(["exact-rate", "--n", "16", "--m", "4", "--trials", "3", "--k-range", "1:2",
                     "--algos", "omp,block-omp", "--seed", "9"]) == 0
        rows = list(csv.DictReader(io.StringIO(capsys.readouterr().out)))
        assert len(rows) == 4 and {r["algorithm"] for r in rows} == {"omp", "block-omp"}
        assert all(r["snr_db"] == "" for r in rows)

    def test_hit_rate(self, tmp_path):
        out = tmp_path / "hit.csv"
        assert main(["hit-rate", "--n", "16", "--m", "4", "--trials", "2", "--k-range", "1",
                     "--snr-range", "0:10:10", "--algos", "mf,lasso", "--rb", "0.1",
                     "--out", str(out)]) == 0
        rows = read_csv(out)
        assert len(rows) == 4 and {r["mode"] for r in rows} == {"RB=0.1"}

    def test_invalid_configuration(self, capsys):
        assert main(["exact-rate", "--n", "4", "--m", "2", "--k-range", "9"]) == EXIT_CONFIG
        assert "invalid configuration" in capsys.readouterr().err

    def _config(self, tmp_path, **extra):
        cfg = {"params": {"n_pulses": 16, "n_freqs": 4}, "mode": "simplified", "seed": 2,
               "scene": {"targets": [{"velocity_index": 5, "scatterers": [
                   {"range_index": 1, "amplitude": [1.0, -0.5]},
                   {"range_index": 2, "amplitude": [0.3, 0.2]}]}]},
               "algorithm": "block-omp"}
        cfg.update(extra)
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps(cfg), encoding="utf-8")
        return path

    def test_recover(self, tmp_path):
        out = tmp_path / "rec.json"
        assert main(["recover", str(self._config(tmp_path)), "--out", str(out)]) == EXIT_OK
        res = load_json(out)
        assert res["support"] == res["true_support"] == [21, 22]
        assert len(res["grid_magnitude"]) == 4 and len(res["grid_magnitude"][0]) == 16
        assert np.argmax(res["velocity_spectrum"]) == 5

    def test_recover_with_codes_and_noise(self, tmp_path, capsys):
        cfg = self._config(tmp_path, codes=[0, 1, 2, 3] * 4, snr_db=30, algorithm="lasso")
        assert main(["recover", str(cfg)]) == EXIT_OK
        res = json.loads(capsys.readouterr().out)
        assert res["algorithm"] == "lasso" and len(res["support"]) == 2

    def test_recover_non_convergence(self, tmp_path):
        cfg = self._config(tmp_path, algorithm="bp", solver={"max_iterations": 1})
        assert main(["recover", str(cfg), "--out", str(tmp_path / "o.json")]) == \
            EXIT_NONCONVERGED

    def test_recover_bad_config(self, tmp_path):
        cfg = self._config(tmp_path, params={"n_pulses": 16, "n_freqs": 4, "oops": 1})
        assert main(["recover", str(cfg)]) == EXIT_CONFIG
        assert main(["recover", str(tmp_path / "missing.json")]) == EXIT_CONFIG

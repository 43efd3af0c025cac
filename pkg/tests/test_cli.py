import json
import math
import subprocess
import sys

import pytest

from ruelle import cli
from ruelle.config import load_config
from ruelle.errors import ConfigError

GOLDEN = {"n": 2, "rows": [[1, 1], [1, 0]]}
FULL2 = {"n": 2, "rows": [[1, 1], [1, 1]]}


def write_config(tmp_path, doc, name="run.json"):
    path = tmp_path / name
    path.write_text(json.dumps(doc))
    return str(path)


def run(tmp_path, command, doc, *extra):
    cfg = write_config(tmp_path, doc)
    out = tmp_path / "out"
    code = cli.main([command, "--config", cfg, "--out", str(out), *extra])
    return code, out


def test_entropy_golden(tmp_path):
    code, out = run(tmp_path, "entropy", {"matrix": GOLDEN})
    assert code == 0
    doc = json.loads((out / "entropy.json").read_text())
    assert doc["h_top"] == pytest.approx(0.481212, abs=1e-6)


def test_spectrum_zero_full2(tmp_path):
    code, out = run(tmp_path, "spectrum", {"matrix": FULL2, "schedule": {"m": [1, 3]}})
    assert code == 0
    doc = json.loads((out / "spectrum.json").read_text())
    for entry in doc["spectra"]:
        assert entry["eigenvalues"] == [[pytest.approx(2.0), pytest.approx(0.0)]]


def test_pressure_constant(tmp_path):
    doc = {"matrix": GOLDEN, "potential": {"family": "constant", "value": 0.3}}
    code, out = run(tmp_path, "pressure", doc)
    assert code == 0
    res = json.loads((out / "pressure.json").read_text())
    for entry in res["pressure"]:
        assert entry["pressure"] == pytest.approx(math.log((1 + math.sqrt(5)) / 2) + 0.3, abs=1e-12)


@pytest.mark.parametrize("matrix,expected", [(GOLDEN, [1, -1, -1, 0, 0]), (FULL2, [1, -2, 0, 0, 0])])
def test_zeta_coefficients(tmp_path, matrix, expected):
    code, out = run(tmp_path, "zeta", {"matrix": matrix, "schedule": {"Q": 4, "m": [2]}})
    assert code == 0
    doc = json.loads((out / "zeta.json").read_text())
    for route in ("orbit-series", "determinant", "product"):
        got = [c[0] for c in doc["coefficients"][route]]
        assert got == pytest.approx(expected, abs=1e-12)
        assert all(abs(c[1]) < 1e-12 for c in doc["coefficients"][route])
    assert all(row["agrees"] for row in doc["evaluations"])


def test_zeta_geometric_defects(tmp_path):
    doc = {"matrix": FULL2, "potential": {"family": "geometric", "r": 0.5},
           "schedule": {"m": {"from": 2, "to": 6}, "q": [2], "Q": 10}}
    code, out = run(tmp_path, "zeta", doc, "--format", "both")
    assert code == 0
    res = json.loads((out / "zeta.json").read_text())
    defects = [d["delta"] for d in res["defects"][0]["defects"]]
    assert defects == sorted(defects, reverse=True)
    assert res["defects"][0]["fit_slope"] is not None
    assert (out / "plot_trace_q2.csv").read_text().startswith("m,delta\n")
    assert (out / "zeta_evaluations.csv").exists()


def test_words_and_orbits(tmp_path):
    code, out = run(tmp_path, "words", {"matrix": GOLDEN, "schedule": {"m": [3]}})
    assert code == 0
    words = json.loads((out / "words.json").read_text())["words"][0]["words"]
    assert words == ["111", "112", "121", "211", "212"]
    code, out = run(tmp_path, "orbits", {"matrix": GOLDEN, "schedule": {"q": [1, 2, 3]}})
    orbits = json.loads((out / "orbits.json").read_text())["orbits"]
    assert [o["count"] for o in orbits] == [o["trace"] for o in orbits] == [1, 3, 4]


def test_trace_check_writes_plots(tmp_path):
    doc = {"matrix": FULL2, "potential": {"family": "geometric", "r": 0.5},
           "schedule": {"m": [2, 3, 4], "q": [2, 3]}}
    code, out = run(tmp_path, "trace-check", doc)
    assert code == 0
    assert {p.name for p in out.iterdir()} >= {"trace_check.json", "plot_trace_q2.csv", "plot_trace_q3.csv"}


def test_cohomology_command(tmp_path):
    code, out = run(tmp_path, "cohomology", {"matrix": GOLDEN, "schedule": {"m": [1, 2]}})
    assert code == 0
    doc = json.loads((out / "cohomology.json").read_text())
    assert doc["witness"]["w_tilde"] == "11" and doc["witness"]["v"] == "12"
    for entry in doc["defects"]:
        assert entry["defect"] == [0.0, 0.0]
        assert entry["perturbed"]["2"][0] == pytest.approx(0.5)


@pytest.mark.parametrize("potential", [None, {"family": "geometric", "r": 0.5}])
def test_verify_all_satisfied(tmp_path, capsys, potential):
    doc = {"matrix": FULL2, "verify": {"samples": 8}}
    if potential:
        doc["potential"] = potential
    code, out = run(tmp_path, "verify", doc, "--strict")
    assert code == 0
    lines = [json.loads(line) for line in capsys.readouterr().out.splitlines()]
    assert lines and all(r["satisfied"] for r in lines)
    assert (out / "reports.jsonl").read_text().count("\n") == len(lines)


def test_verify_halved_constant_strict(tmp_path, capsys):
    doc = {"matrix": FULL2, "potential": {"family": "geometric", "r": 0.5},
           "verify": {"samples": 4, "overrides": {"C2_scale": 0.5}}}
    code, _ = run(tmp_path, "verify", doc, "--strict")
    assert code == 1
    lines = [json.loads(line) for line in capsys.readouterr().out.splitlines()]
    assert any(not r["satisfied"] for r in lines)
    code, _ = run(tmp_path, "verify", doc)
    assert code == 0


def test_deterministic_outputs(tmp_path):
    doc = {"matrix": FULL2, "potential": {"family": "geometric", "r": 0.5},
           "schedule": {"m": [2, 3], "q": [2], "Q": 8}, "verify": {"samples": 4}}
    cfg = write_config(tmp_path, doc)
    blobs = []
    for k in range(2):
        out = tmp_path / f"o{k}"
        for command in ("zeta", "verify", "spectrum"):
            assert cli.main([command, "--config", cfg, "--out", str(out), "--format", "both"]) == 0
        blobs.append({p.name: p.read_bytes() for p in sorted(out.iterdir())})
    assert blobs[0] == blobs[1]


def test_config_error_exit_code(tmp_path, capsys):
    code, _ = run(tmp_path, "entropy", {"matrix": {"n": 3, "rows": [[1, 1], [1, 1]]}})
    assert code == 2
    assert "config error" in capsys.readouterr().err
    assert cli.main(["entropy", "--config", str(tmp_path / "missing.json")]) == 2


def test_computation_error_exit_code(tmp_path, capsys):
    code, _ = run(tmp_path, "entropy", {"matrix": {"n": 2, "rows": [[0, 1], [1, 0]]}})
    assert code == 3
    assert "NotAperiodic" in capsys.readouterr().err


def test_complex_pressure_is_config_error(tmp_path):
    code, _ = run(tmp_path, "pressure", {"matrix": FULL2, "potential": {"family": "constant", "value": [0, 1]}})
    assert code == 2


def test_table_potential_from_file(tmp_path):
    table = {"depth": 1, "values": {"1": [0.2, 0.0], "2": [-0.1, 0.0]}}
    (tmp_path / "f.json").write_text(json.dumps(table))
    doc = {"matrix": FULL2, "potential": {"family": "table", "path": "f.json"}, "schedule": {"m": [1]}}
    code, out = run(tmp_path, "pressure", doc)
    assert code == 0
    res = json.loads((out / "pressure.json").read_text())
    assert res["pressure"][0]["pressure"] == pytest.approx(math.log(math.exp(0.2) + math.exp(-0.1)))


class TestConfig:
    def test_defaults(self):
        cfg = load_config({"matrix": GOLDEN})
        assert cfg.tolerances == {"eigensolve": 1e-12, "cluster": 1e-8, "birkhoff": 1e-10, "quadrature_extra": 4}
        assert cfg.caps["dense"] == 4096 and cfg.caps["words"] == 10**7
        assert cfg.formats == ("json",)

    def test_ranges(self):
        cfg = load_config({"matrix": GOLDEN, "schedule": {"m": {"from": 2, "to": 5}, "q": 3}})
        assert cfg.schedule.m == [2, 3, 4, 5] and cfg.schedule.q == [3]

    @pytest.mark.parametrize("doc", [
        {"matrix": GOLDEN, "schedule": {"m": []}},
        {"matrix": GOLDEN, "tolerances": {"cluster": 0}},
        {"matrix": GOLDEN, "potential": {"family": "nope"}},
        {"matrix": GOLDEN, "output": {"format": "xml"}},
        {"potential": {"family": "constant"}},
    ])
    def test_rejects(self, doc):
        with pytest.raises(ConfigError):
            load_config(doc)

    def test_linear_combination(self):
        doc = {"matrix": FULL2, "potential": {"family": "linear-combination", "terms": [
            [2.0, {"family": "geometric", "r": 0.5}], [[0, 1], {"family": "indicator", "word": "12"}]]}}
        f = load_config(doc).potential
        assert not f.is_real and len(f.terms) == 2


def test_console_script_help():
    res = subprocess.run([sys.executable, "-m", "ruelle.cli", "--help"], capture_output=True, text=True)
    assert res.returncode == 0 and "verify" in res.stdout

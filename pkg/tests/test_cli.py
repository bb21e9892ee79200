import csv
import json

import numpy as np
import pytest

from hclab import scenarios
from hclab.cli import main

FAST = {
    "example21": {"evolution": {"t_max": 1.0, "dt": 1e-3}, "backend": {"N": 256}, "eigenfields": {"samples": 5},
                  "tolerances": {"backend_residual": 0.1, "eigen_residual": 0.5}},
    "example23": {"evolution": {"t_max": 2.0}},
    "diag-rotation": {"evolution": {"t_max": 400.0}, "oracle": {"samples": 1000, "short_horizon": 200.0},
                      "tolerances": {"oracle_gap": 1.0, "horizon_drift": 1.0}},
    "delta-vs-companion": {"instances": {"count": 4}, "evolution": {"t_max": 1.0, "dt": 1e-2}},
}


def _run(tmp_path, name, cfg, *extra):
    path = tmp_path / f"{name}.json"
    path.write_text(json.dumps({"scenario": name, **cfg}))
    out = tmp_path / name
    return main(["run", "--config", str(path), "--out", str(out), *extra]), out


def _table(path):
    with open(path, newline="") as fh:
        header, *rows = list(csv.reader(fh))
    return {c: np.array([float(r[k]) for r in rows]) for k, c in enumerate(header)}


def test_list_is_stable(capsys):
    assert main(["list"]) == 0
    first = capsys.readouterr().out
    main(["list"])
    assert capsys.readouterr().out == first
    assert [line.split()[0] for line in first.splitlines()] == list(scenarios.SCENARIOS)
    main(["list", "--json"])
    rows = json.loads(capsys.readouterr().out)
    assert {r["name"] for r in rows} == set(scenarios.SCENARIOS)


@pytest.mark.parametrize("name", list(FAST))
def test_run_and_rederive(tmp_path, name):
    code, out = _run(tmp_path, name, FAST[name])
    report = json.loads((out / "report.json").read_text())
    assert code == (0 if report["passed"] else 1)
    assert report["error"] is None and report["checks"]
    assert "kernelBackend" in json.loads((out / "meta.json").read_text())
    for chk in report["checks"]:
        value = scenarios.rederive(chk, _table(out / chk["curve"]))
        assert value == pytest.approx(float(chk["value"]), rel=1e-12, abs=1e-300), chk["name"]


def test_negative_radius_names_path(tmp_path, capsys):
    code, out = _run(tmp_path, "diag-rotation", {"targets": {"radius": -1.0}})
    assert code == 2
    assert "targets.radius" in capsys.readouterr().err
    assert not (out / "report.json").exists()


def test_unknown_scenario(capsys):
    assert main(["run", "--scenario", "nope"]) == 2
    assert "scenario" in capsys.readouterr().err


def test_grid_n_rejected_without_grid(capsys):
    assert main(["run", "--scenario", "diag-rotation", "--grid-n", "64"]) == 2
    assert "--grid-n" in capsys.readouterr().err


def test_flags_override_config(tmp_path):
    code, out = _run(tmp_path, "example23", FAST["example23"], "--t-max", "1.0", "--seed", "9",
                     "--grid-n", "32")
    report = json.loads((out / "report.json").read_text())
    assert report["config"]["evolution"]["t_max"] == 1.0
    assert report["seed"] == 9 and report["config"]["backend"]["N"] == 32


def test_csv_only_format(tmp_path):
    code, out = _run(tmp_path, "example23", FAST["example23"], "--report-format", "csv")
    assert not (out / "report.json").exists()
    assert (out / "meta.json").exists() and any((out / "curves").iterdir())


def test_tolerance_failure_exits_one(tmp_path, capsys):
    cfg = {"evolution": {"t_max": 2.0}, "tolerances": {"acp_residual": 1e-15}}
    code, out = _run(tmp_path, "example23", cfg)
    assert code == 1
    assert "FAIL" in capsys.readouterr().out
    assert json.loads((out / "report.json").read_text())["passed"] is False


def test_schema_rejects_bad_types():
    with pytest.raises(scenarios.ConfigInvalidError) as exc:
        scenarios.resolve_config({"scenario": "example23", "backend": {"N": 3}})
    assert "backend.N" in str(exc.value)

"""Command-line behavior: reports, CSV bodies, and the exit-code table."""

import json
import math

import pytest

from holobc.cli import main

SQUARE_PIECES = [
    {"kind": "box-side", "axis": "x", "side": "min", "value": 0.0},
    {"kind": "box-side", "axis": "x", "side": "max", "value": 2.0},
    {"kind": "box-side", "axis": "y", "side": "min", "value": 0.0},
    {"kind": "box-side", "axis": "y", "side": "max", "value": 2.0},
]


def run(capsys, *argv):
    rc = main(list(argv))
    out = capsys.readouterr().out
    return rc, (json.loads(out) if out.strip().startswith("{") else out)


def csv_body(path):
    return "\n".join(line for line in path.read_text().splitlines()
                     if not line.startswith("#"))


def write_scenario(tmp_path, name, **patch):
    data = {
        "name": name,
        "ambient_dim": 1,
        "domain": {"pieces": [dict(p) for p in SQUARE_PIECES]},
        "function": "1/z",
        "forms": [{"coefficients": ["x"],
                   "cutoff": {"center": [1.0, 1.0], "plateau": 1.6,
                              "support": 2.2},
                   "label": "x dz cutoff"}],
    }
    data.update(patch)
    path = tmp_path / f"{name}.json"
    path.write_text(json.dumps(data), encoding="utf-8")
    return str(path)


def test_version_flag(capsys):
    with pytest.raises(SystemExit) as info:
        main(["--version"])
    assert info.value.code == 0


def test_classify_square(capsys):
    rc, report = run(capsys, "classify", "--scenario", "square")
    assert rc == 0
    assert report["domain_verdict"] == "non-generic corners"
    assert report["active_strata"] == 4
    assert report["version"]
    assert report["config"]["name"] == "square"


def test_classify_bidisc_generic(capsys):
    rc, report = run(capsys, "classify", "--scenario", "bidisc",
                     "--resolution", "6")
    assert rc == 0
    assert report["domain_verdict"] == "generic corners"


def test_report_keys_are_sorted(capsys):
    rc, _ = run(capsys, "classify", "--scenario", "square")
    raw = main(["classify", "--scenario", "square"])
    out = capsys.readouterr().out
    assert out == json.dumps(json.loads(out), indent=2, sort_keys=True) + "\n"


def test_pair_writes_deterministic_csv(tmp_path, capsys):
    args = ("pair", "--scenario", "square_f=1", "--steps", "6",
            "--out", str(tmp_path / "a"))
    rc, report = run(capsys, *args)
    assert rc == 0
    entry = report["forms"][0]
    assert entry["existence"] == "EXISTS_NUMERICALLY"
    assert abs(entry["limit"][0]) < 1e-9
    assert abs(entry["limit"][1] - 4.0) < 1e-8

    rc2, _ = run(capsys, "pair", "--scenario", "square_f=1", "--steps", "6",
                 "--out", str(tmp_path / "b"))
    assert rc2 == 0
    a = csv_body(tmp_path / "a" / "square_f_1_pairing_0.csv")
    b = csv_body(tmp_path / "b" / "square_f_1_pairing_0.csv")
    assert a == b
    assert a.splitlines()[0] == "epsilon,re,im,err_est"
    assert len(a.splitlines()) == 1 + 6


def test_asymptotics_from_csv(tmp_path, capsys):
    rc, _ = run(capsys, "pair", "--scenario", "square_f=1", "--steps", "6",
                "--out", str(tmp_path))
    assert rc == 0
    rc, report = run(capsys, "asymptotics", "--csv",
                     str(tmp_path / "square_f_1_pairing_0.csv"))
    assert rc == 0
    assert report["existence"] == "EXISTS_NUMERICALLY"
    assert abs(report["limit"][1] - 4.0) < 1e-8


def test_weinstock_command_passes(capsys, tmp_path):
    rc, report = run(capsys, "weinstock", "--scenario", "square-weinstock",
                     "--out", str(tmp_path))
    assert rc == 0
    assert report["passed"]
    assert len(report["entries"]) == 6
    assert (tmp_path / "square-weinstock_weinstock.json").exists()


def test_growth_command(capsys):
    rc, report = run(capsys, "growth", "--scenario", "square_f=1/z^2")
    assert rc == 0
    assert abs(report["k_hat"] - 2.0) < 0.2
    assert report["r2"] >= 0.98


def test_exit_2_on_malformed_scenario(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("{oops")
    assert main(["pair", "--scenario", str(bad)]) == 2
    assert main(["pair", "--scenario", "no-such-scenario"]) == 2
    capsys.readouterr()


def test_exit_3_on_bad_geometry(tmp_path, capsys):
    pieces = [dict(p) for p in SQUARE_PIECES]
    pieces[0]["value"], pieces[1]["value"] = 2.0, 0.0
    path = write_scenario(tmp_path, "inverted",
                          domain={"pieces": pieces})
    assert main(["pair", "--scenario", path]) == 3
    capsys.readouterr()


def test_exit_4_on_blocked_corner_direction(tmp_path, capsys):
    path = write_scenario(tmp_path, "blocked",
                          cover={"corner_v_rotation": math.pi})
    assert main(["pair", "--scenario", path]) == 4
    capsys.readouterr()


def test_exit_5_on_budget_with_partial_csv(tmp_path, capsys):
    path = write_scenario(tmp_path, "starved",
                          quadrature={"max_subdivisions": 40})
    out = tmp_path / "run"
    assert main(["pair", "--scenario", path, "--out", str(out)]) == 5
    partial = out / "starved_pairing_0.csv"
    assert partial.exists()
    assert partial.read_text().splitlines()[-1] == "epsilon,re,im,err_est"
    capsys.readouterr()


def test_exit_6_on_open_test_form(tmp_path, capsys):
    path = write_scenario(tmp_path, "open-form",
                          forms=[{"coefficients": ["zbar"], "cutoff": None,
                                  "label": "zbar dz"}])
    assert main(["weinstock", "--scenario", path]) == 6
    capsys.readouterr()


def test_exit_7_on_interior_pole(tmp_path, capsys):
    path = write_scenario(tmp_path, "inner-pole", function="1/(z-1-i)")
    assert main(["growth", "--scenario", path]) == 7
    capsys.readouterr()


def test_diagnostics_flag_exposes_chart_values(tmp_path, capsys):
    rc, report = run(capsys, "pair", "--scenario", "square_f=1", "--steps", "6",
                     "--diagnostics", "--out", str(tmp_path))
    assert rc == 0
    charts = report["forms"][0]["per_chart"][0]
    assert len(charts) >= 4
    assert all("label" in c and "value" in c for c in charts)

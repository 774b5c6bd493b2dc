"""End-to-end command-line runs over the shipped instance files."""

from __future__ import annotations

import json
import subprocess
import sys
from pathlib import Path

import pytest

from nsnf import cli

INSTANCES = Path(__file__).resolve().parent.parent / "instances"


def run_cli(capsys, *args) -> tuple[int, dict, str]:
    code = cli.main(list(args))
    captured = capsys.readouterr()
    report = json.loads(captured.out) if captured.out else {}
    return code, report, captured.err


def path(name: str) -> str:
    return str(INSTANCES / name)


def test_constants_worked(capsys):
    code, rep, err = run_cli(capsys, "constants", path("worked_2block_rational.json"))
    assert code == 0
    assert rep["constants"]["d"] == 2
    assert rep["constants"]["lam"] == {"num": -1, "den": 1}
    assert rep["constants"]["mu"] == {"num": -1, "den": 1}
    assert rep["constants"]["eps0"] == {"num": 1, "den": 4}
    assert rep["narrowness"]["ok"] is True
    assert rep["criticality"]["ok"] is True
    assert "[constants]" in err


def test_validate_pass_and_fail(capsys):
    code, rep, _ = run_cli(capsys, "validate", path("three_cycle.json"))
    assert code == 0 and rep["validation"]["passed"] is True

    code, rep, err = run_cli(capsys, "validate", path("strictsub_linear_rational.json"))
    assert code == 2
    assert rep["validation"]["passed"] is False
    failed = {c["name"] for c in rep["validation"]["checks"] if not c["ok"]}
    assert "block-diagonal" in failed
    assert "error:" in err


def test_build_worked_rational_coefficients(capsys):
    code, rep, _ = run_cli(capsys, "build", path("worked_2block_rational.json"))
    assert code == 0
    assert rep["build"]["certified"] is True
    assert rep["validation"]["passed"] is True
    h0 = rep["build"]["h"][0]
    assert {"coord": 1, "exponents": [1, 1], "num": 12500, "den": 3979} in h0
    p0 = rep["build"]["p"][0]
    assert {"coord": 0, "exponents": [0, 2], "num": 1, "den": 1} in p0
    identity_records = [
        {"coord": 1, "exponents": [0, 1], "num": 1, "den": 1},
        {"coord": 0, "exponents": [1, 0], "num": 1, "den": 1},
    ]
    assert sorted(rep["reduction"]["h_prime"][0], key=str) == sorted(identity_records, key=str)
    assert rep["exit_code"] == 0


def test_build_reports_are_bit_identical(tmp_path, capsys):
    out_a, out_b = tmp_path / "a.json", tmp_path / "b.json"
    assert cli.main(["build", path("worked_2block_rational.json"), "--out", str(out_a)]) == 0
    assert cli.main(["build", path("worked_2block_rational.json"), "--out", str(out_b)]) == 0
    capsys.readouterr()
    assert out_a.read_bytes() == out_b.read_bytes()


def test_forced_strictsub_reduction_shear(capsys):
    code, rep, _ = run_cli(capsys, "reduce", path("strictsub_linear_rational.json"))
    assert code == 0
    assert rep["build"]["certified"] is False
    shear = rep["reduction"]["h_prime"][0]
    assert {"coord": 0, "exponents": [0, 1], "num": -1000, "den": 233} in shear
    assert rep["reduction"]["certified_exponents"]["1"] == {"num": -3, "den": 5}


def test_eval_float_worked(capsys):
    code, rep, _ = run_cli(
        capsys, "eval", path("worked_2block.json"), "--samples", "300"
    )
    assert code == 0
    ev = rep["evaluation"]
    assert ev["samples"] == 300
    assert ev["max_residual"] <= 1e-11
    slope = ev["order_of_contact"][0]["slope"]
    assert 3.5 <= slope <= 4.5


def test_verify_worked_rational_full(capsys):
    code, rep, _ = run_cli(capsys, "verify", path("worked_2block_rational.json"))
    assert code == 0
    v = rep["verification"]
    assert v["uniqueness"]["ok"] and v["uniqueness"]["tag"] == "sub-resonance"
    assert v["uniqueness_resonance"]["ok"]
    assert v["pinned_rebuild"]["ok"]
    assert v["flag_preservation"]["ok"]
    assert v["centralizer"]["ok"] and v["centralizer"]["tag"] == "resonance"


def test_verify_noncommuting_aborts_with_code_4(capsys):
    code, rep, err = run_cli(capsys, "verify", path("noncommuting.json"))
    assert code == 4
    assert rep["verification"]["aborted"]["stage"] == "commutation"
    assert "commut" in err


def test_all_scalar_includes_linearization(capsys):
    code, rep, _ = run_cli(capsys, "all", path("scalar_quadratic.json"))
    assert code == 0
    assert rep["verification"]["linearization"]["ok"]
    assert rep["verification"]["centralizer"]["ok"]


def test_parse_errors_exit_5(tmp_path, capsys):
    assert cli.main(["build", str(tmp_path / "missing.json")]) == 5
    bad = tmp_path / "bad.json"
    bad.write_text('{"spectrum": [,]}')
    assert cli.main(["build", str(bad)]) == 5
    err = capsys.readouterr().err
    assert "missing.json" in err and "bad.json:1:" in err


def test_semantic_parse_error_names_path(tmp_path, capsys):
    raw = json.loads(Path(path("scalar_quadratic.json")).read_text())
    raw["spectrum"]["chi"][0] = {"num": 1, "den": 2}
    twisted = tmp_path / "positive_rate.json"
    twisted.write_text(json.dumps(raw))
    code = cli.main(["build", str(twisted)])
    err = capsys.readouterr().err
    assert code == 5
    assert "spectrum" in err


def test_mode_overrides(capsys):
    code, rep, _ = run_cli(
        capsys, "build", path("worked_2block_rational.json"), "--mode", "float"
    )
    assert code == 0 and rep["mode"] == "float"
    h0 = rep["build"]["h"][0]
    rec = next(r for r in h0 if r["coord"] == 1 and r["exponents"] == [1, 1])
    assert rec["value"] == pytest.approx(12500 / 3979, rel=1e-9)

    code = cli.main(["build", path("worked_2block.json"), "--mode", "rational"])
    capsys.readouterr()
    assert code == 5


def test_lift_and_seed_flags_reach_report(capsys):
    code, rep, _ = run_cli(
        capsys,
        "build",
        path("worked_2block_rational.json"),
        "--lift",
        "seeded",
        "--seed",
        "3",
    )
    assert code == 0
    assert rep["build"]["lift"] == {"kind": "seeded", "seed": 3}
    assert rep["seed"] == 3


def test_timings_flag(capsys):
    _, rep, _ = run_cli(capsys, "constants", path("scalar_quadratic.json"))
    assert rep["timings"] is None
    _, rep, _ = run_cli(capsys, "constants", path("scalar_quadratic.json"), "--timings")
    assert set(rep["timings"]) == {"constants"} and rep["timings"]["constants"] >= 0


def test_radius_above_sigma_rejected(capsys):
    code = cli.main(["eval", path("worked_2block.json"), "--radius", "0.5"])
    err = capsys.readouterr().err
    assert code == 5
    assert "radius" in err


def test_module_entry_point_runs():
    proc = subprocess.run(
        [sys.executable, "-m", "nsnf.cli", "constants", path("scalar_quadratic.json")],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["constants"]["d"] == 1

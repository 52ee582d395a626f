"""Acceptance criteria, checked against one ``tale verify-all --seed 7`` run.

Each test prints one ``criterion N: PASS|FAIL`` line with the key numbers.
"""

import json
import subprocess
import sys

import pytest

NAMES = {
    1: "screw loop formula",
    2: "holonomy bound pi/(2r) L",
    3: "flat sliding",
    4: "curved sliding inequality",
    5: "Ricci-flat models",
    6: "curvature decay exponents",
    7: "short-basis exactness",
    8: "perturbed short bases",
    9: "Hitchin-Thorpe table",
    10: "monodromy classification",
    11: "G(A) enumeration",
    12: "tangent-cone probe",
    13: "Hardy inequality",
    14: "Jacobi comparisons",
    15: "torus at infinity",
    16: "determinism",
}

KEYS = {
    1: ("max_length_error", "max_rotation_error"),
    2: ("max_ratio_to_pi_over_2r", "pi_over_4r_failures"),
    3: ("max_rotation_drift", "max_length_error"),
    4: ("length_max_ratio", "steps"),
    5: ("schwarzschild_max", "multi_taub_nut_max"),
    6: ("schwarzschild_slope", "taub_nut_slope"),
    7: ("hexagonal_lambda_sq",),
    8: ("subsets", "failures"),
    9: ("schwarzschild_slack", "alg_eta"),
    10: ("orders", "parabolic_rejected"),
    11: ("orders",),
    12: ("max_ratio_sqrt_r",),
    13: ("by_delta",),
    14: ("jacobi_C1", "shifted_C"),
    15: ("taub_nut_fitted_error", "taub_nut_relative_gap_at_1000", "flat_gram_error"),
}


def _verify_all(out):
    cmd = [sys.executable, "-m", "tale.cli", "verify-all", "--seed", "7", "--no-timestamp", "--out", str(out)]
    proc = subprocess.run(cmd, capture_output=True, text=True, timeout=900)
    return proc.returncode, (out / "verify-all.json").read_bytes()


@pytest.fixture(scope="module")
def first_run(tmp_path_factory):
    return _verify_all(tmp_path_factory.mktemp("run1"))


@pytest.fixture(scope="module")
def report(first_run):
    data = json.loads(first_run[1])
    return {c["id"]: c for c in data["criteria"]}


def _line(capsys, cid, passed, detail):
    with capsys.disabled():
        print(f"\ncriterion {cid:2d}: {'PASS' if passed else 'FAIL'}  {NAMES[cid]}  {detail}")


@pytest.mark.parametrize("cid", range(1, 16))
def test_criterion(cid, report, capsys):
    row = report[cid]
    detail = ", ".join(f"{k}={row.get(k)}" for k in KEYS[cid]) if "error" not in row else row["error"]
    _line(capsys, cid, row["passed"], detail)
    assert row["passed"], row


def test_criterion_16_determinism(first_run, tmp_path, capsys):
    code2, second = _verify_all(tmp_path)
    same = second == first_run[1]
    _line(capsys, 16, same and code2 == first_run[0] == 0, f"byte_identical={same}, exit_codes=({first_run[0]}, {code2})")
    assert same
    assert code2 == first_run[0] == 0

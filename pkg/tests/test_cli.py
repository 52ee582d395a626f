import csv
import json
import textwrap

import pytest

from tale.cli import dumps, jsonable, run


def _run(capsys, *argv):
    code = run(list(argv))
    out = capsys.readouterr().out
    return code, json.loads(out)


def test_hitchin_thorpe_example(capsys):
    code, rep = _run(capsys, "hitchin-thorpe", "--type", "alf-cyclic", "--chi", "1", "--tau", "0", "--euler", "-1",
                     "--no-timestamp")
    assert code == 0
    r = rep["result"]
    assert round(r["eta"], 4) == -0.6667 and r["lambda"] == 0 and r["slack"] == 0 and r["equality"] is True
    assert rep["schema_version"] == 1 and "generated_at" not in rep


def test_timestamp_present_by_default(capsys):
    _, rep = _run(capsys, "hitchin-thorpe", "--type", "ALG", "--chi", "2", "--tau", "0", "--monodromy", "Z4")
    assert "generated_at" in rep


def test_curvature_decay_example(capsys):
    code, rep = _run(capsys, "curvature-decay", "--model", "schwarzschild", "--n", "4", "--m", "1",
                     "--range", "10:200", "--no-timestamp")
    assert code == 0
    assert rep["result"]["slope"] == pytest.approx(-3.0, abs=0.05)


def test_verify_all_on_an_empty_scenario_set(capsys, tmp_path):
    cfg = tmp_path / "empty.toml"
    cfg.write_text("")
    code, rep = _run(capsys, "verify-all", "--seed", "7", "--config", str(cfg), "--no-timestamp")
    assert code == 0 and rep["scenarios"] == [] and rep["failures"] == []


def test_exit_codes(capsys):
    assert run(["curvature-decay", "--model", "kerr"]) == 2
    assert run(["loops", "--model", "schwarzschild", "--radius", "3", "--rho", "50"]) == 3
    assert run(["hitchin-thorpe", "--type", "ALF-cyclic", "--chi", "0", "--tau", "3", "--euler", "-1"]) == 1
    assert run(["hitchin-thorpe", "--type", "ALE", "--chi", "1", "--tau", "0", "--gamma", "2"]) == 2
    capsys.readouterr()


def test_failure_list_is_machine_readable(capsys):
    code, rep = _run(capsys, "hitchin-thorpe", "--type", "ALF-cyclic", "--chi", "0", "--tau", "3", "--euler", "-1",
                     "--no-timestamp")
    assert code == 1 and rep["passed"] is False
    assert rep["failures"][0]["property"] == "Hitchin-Thorpe inequality"


def test_bad_toml_is_a_config_error(capsys, tmp_path):
    cfg = tmp_path / "bad.toml"
    cfg.write_text("[model\nname=")
    assert run(["curvature-decay", "--config", str(cfg)]) == 2
    assert run(["curvature-decay", "--config", str(tmp_path / "missing.toml")]) == 2
    capsys.readouterr()


def test_single_scenario_config(capsys, tmp_path):
    cfg = tmp_path / "decay.toml"
    cfg.write_text(textwrap.dedent("""
        task = "curvature-decay"
        seed = 3
        [model]
        name = "schwarzschild"
        n = 5
        [params]
        range = [10.0, 100.0]
    """))
    code, rep = _run(capsys, "curvature-decay", "--config", str(cfg), "--no-timestamp")
    assert code == 0 and rep["seed"] == 3
    assert rep["result"]["slope"] == pytest.approx(-4.0, abs=0.05)
    assert run(["loops", "--config", str(cfg)]) == 2  # task mismatch
    capsys.readouterr()


def test_scenario_file_collects_results(capsys, tmp_path):
    cfg = tmp_path / "many.toml"
    cfg.write_text(textwrap.dedent("""
        [[scenario]]
        name = "tn"
        task = "hitchin-thorpe"
        params = {type = "ALF-cyclic", chi = 1, tau = 0, euler = -1}

        [[scenario]]
        name = "hex"
        task = "short-basis"
        params = {generators = [["1", "0"], ["1/2", "sqrt(3)/2"]]}

        [[scenario]]
        name = "broken"
        task = "curvature-decay"
        model = {name = "nope"}
    """))
    code, rep = _run(capsys, "verify-all", "--config", str(cfg), "--no-timestamp", "--out", str(tmp_path / "o"))
    assert code == 2
    by_name = {s["name"]: s for s in rep["scenarios"]}
    assert by_name["tn"]["passed"] and by_name["hex"]["passed"]
    assert by_name["hex"]["result"]["basis"]["lambda_sq"] == "4/3"
    assert rep["failures"] == ["broken"]
    assert json.loads((tmp_path / "o" / "verify-all.json").read_text()) == rep


def test_slide_writes_a_csv_trace(capsys, tmp_path):
    code, rep = _run(capsys, "slide", "--model", "screw", "--theta", "1/2", "--words", "2", "--r0", "2", "--r1", "20",
                     "--samples", "30", "--torus", "--out", str(tmp_path), "--no-timestamp")
    assert code == 0
    assert rep["result"]["torus_at_infinity"]["lengths"] == [pytest.approx(2.0)]
    rows = list(csv.DictReader((tmp_path / "slide_trace.csv").open()))
    assert len(rows) == 30 and float(rows[0]["length"]) == pytest.approx(2.0)


def test_loops_and_tangent_cone(capsys):
    code, rep = _run(capsys, "loops", "--model", "screw", "--theta", "1/3", "--radius", "2", "--rho", "6",
                     "--no-timestamp")
    assert code == 0 and rep["result"]["rotation_bound_asserted"]
    code, rep = _run(capsys, "tangent-cone", "--theta", "golden", "--radii", "100,1000", "--no-timestamp")
    assert code == 0 and rep["result"]["max_ratio_sqrt_r"] <= 10


def test_short_basis_subcommand(capsys):
    code, rep = _run(capsys, "short-basis", "--generators", "1,0;0,1", "--slab", "lower", "--no-timestamp")
    assert code == 0 and rep["result"]["basis"]["lambda_sq"] == "1"


def test_reports_are_byte_stable(capsys, tmp_path):
    argv = ["tangent-cone", "--seed", "11", "--no-timestamp"]
    run(argv + ["--out", str(tmp_path / "a")])
    run(argv + ["--out", str(tmp_path / "b")])
    capsys.readouterr()
    a = (tmp_path / "a" / "tangent-cone.json").read_bytes()
    assert a == (tmp_path / "b" / "tangent-cone.json").read_bytes()


def test_jsonable_handles_non_finite_values():
    assert json.loads(dumps({"x": float("inf"), "y": (1, 2)})) == {"x": "inf", "y": [1, 2]}
    assert jsonable({(0, 1): 2}) == {"0,1": 2}

"""Batch command-line front end.

Every subcommand builds a report dict, writes it as JSON (and traces as CSV)
when ``--out`` is given, prints the JSON and exits with

    0  all asserted properties hold
    1  a property failed (the report lists the failures)
    2  bad configuration
    3  a computation left its domain

Scenario files are TOML.  A single scenario uses top-level ``task``, a
``[model]`` table and a ``[params]`` table; several scenarios go in
``[[scenario]]`` entries with the same keys plus ``name``.
"""

from __future__ import annotations

import argparse
import csv
import datetime as _dt
import json
import math
import sys
from fractions import Fraction
from pathlib import Path

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # python < 3.11
    import tomli as tomllib

from . import SCHEMA_VERSION, __version__
from .asymptotics import decay_exponent_prediction, decay_fit, tangent_cone_probe
from .errors import ConfigError, DomainError, TaleError
from .geodesics import radial_ray_to
from .holonomy import find_loops
from .metrics import MODEL_NAMES, curvature_norm, make_model
from .pseudogroup import length_step_check, rotation_step_check, slide
from .shortbasis import (lattice_subset, perturbed_lattice_subset, rho1_for_rho_bar, standard_short_basis,
                         verify_basis_properties)
from .suite import run_suite
from .topology import END_TYPES, EndDescriptor, hitchin_thorpe, torus_at_infinity

TASKS = ("curvature-decay", "loops", "slide", "short-basis", "tangent-cone", "hitchin-thorpe", "verify-all")


# ---------------------------------------------------------------------------
# helpers


def jsonable(x):
    """Plain JSON types; non-finite floats become strings so the output stays valid JSON."""
    if isinstance(x, dict):
        return {str(k) if not isinstance(k, tuple) else ",".join(map(str, k)): jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return jsonable(x.tolist())
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return x if math.isfinite(x) else str(x)
    if isinstance(x, Fraction):
        return str(x)
    if x is None or isinstance(x, str):
        return x
    return str(x)


def dumps(report: dict) -> str:
    return json.dumps(jsonable(report), indent=2, sort_keys=True, ensure_ascii=False) + "\n"


def _floats(text, name: str) -> list[float]:
    if isinstance(text, (list, tuple)):
        return [float(v) for v in text]
    try:
        return [float(v) for v in str(text).replace(":", ",").split(",") if v.strip()]
    except ValueError as exc:
        raise ConfigError(f"cannot read {name} from {text!r}") from exc


def _matrix(text, name: str) -> list[list]:
    """'1,0;0,1' or a nested list.  Entries stay strings so exact forms like sqrt(3)/2 survive."""
    if isinstance(text, (list, tuple)):
        return [list(row) for row in text]
    rows = [r for r in str(text).split(";") if r.strip()]
    if not rows:
        raise ConfigError(f"empty {name}")
    return [[v.strip() for v in r.split(",")] for r in rows]


def _words(value) -> list[tuple]:
    if value is None:
        return [(1,)]
    if isinstance(value, str):
        return [tuple(int(v) for v in w.split(",")) for w in value.split(";") if w.strip()]
    return [tuple(int(v) for v in (w if isinstance(w, (list, tuple)) else [w])) for w in value]


def build_model(spec: dict):
    spec = dict(spec)
    name = spec.pop("name", None)
    if not name:
        raise ConfigError(f"model needs a name; known models: {', '.join(MODEL_NAMES)}")
    if "lattice" in spec:
        spec["lattice"] = [[float(Fraction(str(v))) if not isinstance(v, float) else v for v in row]
                           for row in _matrix(spec["lattice"], "lattice")]
    if "centers" in spec:
        spec["centers"] = _floats(spec["centers"], "centers")
    return make_model(name, **spec)


class Outcome:
    def __init__(self, result: dict, failures: list | None = None, tables: dict | None = None):
        self.result = result
        self.failures = failures or []
        self.tables = tables or {}


# ---------------------------------------------------------------------------
# tasks: (model spec, params, seed, tol) -> Outcome


def task_curvature_decay(model_spec, p, seed, tol):
    M = build_model(model_spec)
    r = _floats(p.get("range", "10:200"), "range")
    if len(r) != 2:
        raise ConfigError("range needs two radii, e.g. 10:200")
    fit = decay_fit(M, tuple(r), int(p.get("samples", 24)), bool(p.get("exponential", False)),
                    p.get("method", "analytic"))
    res = fit.describe()
    failures = []
    expected = p.get("expected_slope")
    if expected is None:
        if M.name == "schwarzschild":
            expected = -(M.n - 1)
        elif M.name in ("taub_nut", "multi_taub_nut"):
            expected = -decay_exponent_prediction(3, 4)
    default_tol = 0.05 if M.name == "schwarzschild" else 0.15
    slope_tol = float(p.get("slope_tol", tol if tol is not None else default_tol))
    if expected is not None:
        res["expected_slope"] = float(expected)
        res["slope_tol"] = slope_tol
        if abs(fit.slope - float(expected)) > slope_tol:
            failures.append({"property": "decay slope", "slope": fit.slope, "expected": float(expected)})
    radii = np.geomspace(r[0], r[1], int(p.get("samples", 24)))
    rows = []
    for x in radii:
        v = curvature_norm(M, M.radial_point(x))
        rows.append({"radius": float(x), "value": v})
    return Outcome(res, failures, {"decay": rows})


def task_loops(model_spec, p, seed, tol):
    M = build_model(model_spec)
    r = float(p.get("radius", 10.0))
    rho = float(p.get("rho", 0.4 * r if M.name != "screw" else 5.0))
    q = M.radial_point(r)
    found = find_loops(M, q, rho, strategy=p.get("strategy", "deck"))
    rq = M.radius_of(q)
    rows, failures = [], []
    for lp in found.loops:
        bound = math.pi / (2 * rq) * lp.length if rq > 0 else math.inf
        ok = lp.rot_norm <= bound + 1e-12
        rows.append({"word": " ".join(map(str, lp.word)), "length": lp.length, "rot_norm": lp.rot_norm,
                     "bound": bound, "pass": ok})
        if M.name == "screw" and not ok:
            failures.append({"property": "rotation bound pi/(2r) L", "word": list(lp.word)})
    res = {"model": M.describe(), "base_radius": rq, "rho": rho, "strategy": found.strategy,
           "loops": [lp.summary() for lp in found.loops], "misses": found.misses,
           "rotation_bound_asserted": M.name == "screw"}
    return Outcome(res, failures, {"loops": rows})


def task_slide(model_spec, p, seed, tol):
    M = build_model(model_spec)
    words = _words(p.get("words"))
    r0, r1 = float(p.get("r0", 20.0)), float(p.get("r1", 200.0))
    curve = radial_ray_to(M, r0, r1, n_samples=int(p.get("samples", 60)), spacing=p.get("spacing", "log"))
    curved = not M.is_flat
    tr = slide(M, words, curve, with_curvature=curved)
    res: dict = {"model": M.describe(), "words": [list(w) for w in words], "r0": r0, "r1": r1,
                 "final_lengths": tr.lengths[:, -1], "final_rot_norms": tr.rot_norms[:, -1]}
    failures = []
    checks = []
    for i in range(len(words)):
        c = {"word": list(words[i]), "length_step": length_step_check(tr, i)}
        if curved:
            c["rotation_step"] = rotation_step_check(tr, i)
        if not c["length_step"]["passes"]:
            failures.append({"property": "length step inequality", "word": list(words[i])})
        checks.append(c)
    res["checks"] = checks
    if p.get("torus", False):
        res["torus_at_infinity"] = torus_at_infinity(tr, tol=float(p.get("torus_tol", 1e-3))).to_dict()
    return Outcome(res, failures, {"trace": tr.to_rows()})


def task_short_basis(model_spec, p, seed, tol):
    gens = _matrix(p.get("generators", "1,0;0,1"), "generators")
    n = len(gens[0])
    theta = p.get("theta", 0)
    if p.get("perturbed", False):
        theta = float(Fraction(str(theta)))
        rho = float(p.get("rho", rho1_for_rho_bar(float(p.get("rho_bar", 3.0)), n, theta)))
        T = perturbed_lattice_subset([[float(Fraction(str(v))) for v in g] for g in gens], theta, rho, seed)
    else:
        if "rho" in p:
            rho = Fraction(str(p["rho"]))
        else:
            th = float(Fraction(str(theta)))
            rho = Fraction(rho1_for_rho_bar(float(p.get("rho_bar", 2.5)), n, th)).limit_denominator(1000)
        T = lattice_subset([tuple(g) for g in gens], rho, theta=theta, exact=bool(p.get("exact", True)))
    B = standard_short_basis(T, slab=p.get("slab", "upper"))
    props = verify_basis_properties(B)
    res = {"basis": B.describe(), "properties": props, "theta": str(T.theta), "rho": str(T.rho)}
    failures = [] if props["passes"] else [{"property": k} for k, v in props.items() if v is False]
    return Outcome(res, failures)


def task_tangent_cone(model_spec, p, seed, tol):
    th = p.get("theta", "golden")
    theta = (math.sqrt(5) - 1) / 2 if str(th) == "golden" else float(Fraction(str(th)))
    radii = _floats(p.get("radii", "100,1000,10000"), "radii")
    probe = tangent_cone_probe(theta, radii, samples=int(p.get("samples", 32)), seed=seed)
    bound = float(p.get("bound", 10.0))
    failures = [] if probe["max_ratio_sqrt_r"] <= bound else [{"property": "distance / sqrt(r) bound",
                                                               "value": probe["max_ratio_sqrt_r"]}]
    probe["bound"] = bound
    return Outcome(probe, failures, {"cone": probe["rows"]})


def _end_type(name: str) -> str:
    for t in END_TYPES:
        if t.lower() == str(name).lower():
            return t
    raise ConfigError(f"unknown end type {name!r}; expected one of {', '.join(END_TYPES)}")


def task_hitchin_thorpe(model_spec, p, seed, tol):
    d = {"end_type": _end_type(p.get("type", p.get("end_type", ""))), "chi": p.get("chi"), "tau": p.get("tau")}
    for src, dst in (("euler", "euler_number"), ("euler_number", "euler_number"), ("gamma", "gamma_order"),
                     ("gamma_order", "gamma_order"), ("eta", "eta_ale"), ("eta_ale", "eta_ale"),
                     ("monodromy", "monodromy")):
        if p.get(src) is not None:
            d[dst] = p[src]
    for k in ("chi", "tau"):
        if d[k] is None:
            raise ConfigError(f"hitchin-thorpe needs --{k}")
    rep = hitchin_thorpe(EndDescriptor.from_dict(d))
    res = rep.to_dict()
    res["eta"], res["eta_exact"] = float(rep.eta), str(rep.eta)
    res["lambda"], res["lambda_exact"] = float(rep.lam), str(rep.lam)
    res["slack"], res["slack_exact"] = float(rep.slack), str(rep.slack)
    del res["slack_value"]
    failures = [] if rep.slack >= 0 else [{"property": "Hitchin-Thorpe inequality", "slack": str(rep.slack)}]
    return Outcome(res, failures)


TASK_FUNCS = {
    "curvature-decay": task_curvature_decay,
    "loops": task_loops,
    "slide": task_slide,
    "short-basis": task_short_basis,
    "tangent-cone": task_tangent_cone,
    "hitchin-thorpe": task_hitchin_thorpe,
}
MODEL_TASKS = ("curvature-decay", "loops", "slide")


def _run_task(task: str, model_spec: dict, params: dict, seed: int, tol) -> Outcome:
    if task not in TASK_FUNCS:
        raise ConfigError(f"unknown task {task!r}; expected one of {', '.join(TASKS)}")
    if task in MODEL_TASKS and not model_spec.get("name"):
        raise ConfigError(f"{task} needs a model (--model or a [model] table)")
    return TASK_FUNCS[task](model_spec, params, seed, tol)


def _error_code(exc: BaseException) -> int:
    if isinstance(exc, ConfigError):
        return 2
    if isinstance(exc, DomainError):
        return 3
    return 1


# ---------------------------------------------------------------------------
# argument parsing


def _common(p: argparse.ArgumentParser):
    p.add_argument("--model", help=f"model name ({', '.join(MODEL_NAMES)})")
    p.add_argument("--n", type=int, help="dimension parameter of the model")
    p.add_argument("--m", type=float, help="mass parameter")
    p.add_argument("--theta", help="rotation parameter (fraction, float or 'golden')")
    p.add_argument("--a", type=int, help="Euclidean factor dimension of a flat torus model")
    p.add_argument("--lattice", help="torus lattice, rows separated by ';'")
    p.add_argument("--centers", help="multi-Taub-NUT centres on the z axis, comma separated")
    p.add_argument("--config", type=Path, help="TOML scenario file")
    p.add_argument("--out", type=Path, help="directory for JSON and CSV reports")
    p.add_argument("--seed", type=int, help="seed for every randomised step (default 7)")
    p.add_argument("--tol", type=float, help="task tolerance override")
    p.add_argument("--no-timestamp", action="store_true", help="omit the generation time for byte-stable output")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="tale", description="Loops, holonomy and ends of Ricci-flat manifolds.")
    ap.add_argument("--version", action="version", version=f"tale {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("curvature-decay", help="log-log decay slope of |Rm| along a ray")
    _common(p)
    p.add_argument("--range", help="radii r0:r1")
    p.add_argument("--samples", type=int)
    p.add_argument("--exponential", action="store_true", default=None)
    p.add_argument("--method", choices=["analytic", "fd"])
    p.add_argument("--expected-slope", type=float, dest="expected_slope")

    p = sub.add_parser("loops", help="short geodesic loops at a radial point")
    _common(p)
    p.add_argument("--radius", type=float)
    p.add_argument("--rho", type=float, help="length cut-off")
    p.add_argument("--strategy", choices=["deck", "shooting"])

    p = sub.add_parser("slide", help="slide loops along a radial ray")
    _common(p)
    p.add_argument("--words", help="deck words, e.g. '1' or '1,0;0,1'")
    p.add_argument("--r0", type=float)
    p.add_argument("--r1", type=float)
    p.add_argument("--samples", type=int)
    p.add_argument("--spacing", choices=["linear", "log"])
    p.add_argument("--torus", action="store_true", default=None, help="fit the flat torus at infinity")

    p = sub.add_parser("short-basis", help="short basis of a translational subset")
    _common(p)
    p.add_argument("--generators", help="lattice generators, rows separated by ';'")
    p.add_argument("--rho", help="subset radius")
    p.add_argument("--rho-bar", type=float, dest="rho_bar", help="target final radius (sets rho)")
    p.add_argument("--slab", choices=["upper", "lower"])
    p.add_argument("--perturbed", action="store_true", default=None)

    p = sub.add_parser("tangent-cone", help="chord distances on circles in the screw quotient")
    _common(p)
    p.add_argument("--radii")
    p.add_argument("--samples", type=int)
    p.add_argument("--bound", type=float)

    p = sub.add_parser("hitchin-thorpe", help="Hitchin-Thorpe slack of an end descriptor")
    _common(p)
    p.add_argument("--type", help=f"end type ({', '.join(END_TYPES)})")
    p.add_argument("--chi", type=int)
    p.add_argument("--tau", type=int)
    p.add_argument("--euler", type=int)
    p.add_argument("--gamma", type=int)
    p.add_argument("--eta")
    p.add_argument("--monodromy")

    p = sub.add_parser("verify-all", help="built-in acceptance suite, or every scenario of --config")
    _common(p)
    p.add_argument("--only", help="comma separated criterion ids of the built-in suite")
    return ap


MODEL_FLAGS = ("n", "m", "theta", "a", "lattice", "centers")
NON_PARAM = set(MODEL_FLAGS) | {"model", "config", "out", "seed", "tol", "no_timestamp", "command", "only"}


def _load_config(path: Path | None) -> dict:
    if path is None:
        return {}
    try:
        with open(path, "rb") as fh:
            return tomllib.load(fh)
    except FileNotFoundError as exc:
        raise ConfigError(f"config file {path} not found") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from exc


def _merge(args, cfg: dict) -> tuple[dict, dict]:
    params = dict(cfg.get("params", {}))
    if args.command not in MODEL_TASKS:
        # theta is a task parameter here, not a model one
        if args.theta is not None:
            params["theta"] = args.theta
        args.theta = None
    model = dict(cfg.get("model", {}))
    if args.model:
        if model.get("name") and model["name"] != args.model:
            model = {}
        model["name"] = args.model
    for k in MODEL_FLAGS:
        v = getattr(args, k, None)
        if v is not None:
            model[k] = v
    for k, v in vars(args).items():
        if k not in NON_PARAM and v is not None:
            params[k] = v
    return model, params


def _write(out: Path | None, stem: str, report: dict, tables: dict) -> None:
    if out is None:
        return
    out.mkdir(parents=True, exist_ok=True)
    (out / f"{stem}.json").write_text(dumps(report), encoding="utf-8")
    for name, rows in tables.items():
        if not rows:
            continue
        with open(out / f"{stem}_{name}.csv", "w", newline="", encoding="utf-8") as fh:
            w = csv.DictWriter(fh, fieldnames=list(rows[0]))
            w.writeheader()
            for row in rows:
                w.writerow(jsonable(row))


def _header(command: str, seed: int, no_timestamp: bool) -> dict:
    h = {"schema_version": SCHEMA_VERSION, "command": command, "seed": seed, "version": __version__}
    if not no_timestamp:
        h["generated_at"] = _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")
    return h


def _run_scenarios(cfg: dict, args, seed: int) -> tuple[dict, int, dict]:
    results, codes, tables = [], set(), {}
    for i, sc in enumerate(cfg.get("scenario", [])):
        name = str(sc.get("name", f"scenario{i + 1}"))
        task = sc.get("task")
        s_seed = int(sc.get("seed", seed))
        entry: dict = {"name": name, "task": task, "seed": s_seed}
        try:
            if task == "verify-all":
                raise ConfigError("verify-all cannot be nested inside a scenario")
            o = _run_task(task, dict(sc.get("model", {})), dict(sc.get("params", {})), s_seed, args.tol)
            entry.update(result=o.result, failures=o.failures, passed=not o.failures)
            for k, rows in o.tables.items():
                tables[f"{name}_{k}"] = rows
            if o.failures:
                codes.add(1)
        except TaleError as exc:
            entry.update(error=f"{type(exc).__name__}: {exc}", passed=False, failures=[{"error": str(exc)}])
            codes.add(_error_code(exc))
        results.append(entry)
    code = next((c for c in (2, 3, 1) if c in codes), 0)
    failures = [r["name"] for r in results if not r["passed"]]
    return {"scenarios": results, "failures": failures, "passed": not failures}, code, tables


def run(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    command = args.command
    seed = 7 if args.seed is None else args.seed
    report = _header(command, seed, args.no_timestamp)
    tables: dict = {}
    code = 0
    try:
        cfg = _load_config(args.config)
        if args.seed is None and "seed" in cfg:
            seed = report["seed"] = int(cfg["seed"])
        if command == "verify-all":
            if args.config is not None:
                body, code, tables = _run_scenarios(cfg, args, seed)
            else:
                only = [int(v) for v in args.only.split(",")] if args.only else None
                rows = run_suite(seed, only)
                failures = [r["id"] for r in rows if not r["passed"]]
                body = {"criteria": rows, "failures": failures, "passed": not failures}
                code = 1 if failures else 0
            report.update(body)
        else:
            if "scenario" in cfg:
                raise ConfigError("[[scenario]] files are run with verify-all")
            if cfg.get("task", command) != command:
                raise ConfigError(f"config task {cfg['task']!r} does not match subcommand {command!r}")
            model, params = _merge(args, cfg)
            o = _run_task(command, model, params, seed, args.tol)
            report.update(result=o.result, failures=o.failures, passed=not o.failures)
            tables = o.tables
            code = 1 if o.failures else 0
    except TaleError as exc:
        code = _error_code(exc)
        report.update(error=f"{type(exc).__name__}: {exc}", passed=False, failures=[{"error": str(exc)}])
        print(f"tale: {type(exc).__name__}: {exc}", file=sys.stderr)
    report["exit_code"] = code
    _write(args.out, command, report, tables)
    sys.stdout.write(dumps(report))
    return code


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()

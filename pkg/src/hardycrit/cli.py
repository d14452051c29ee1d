"""Command-line runner: ``hardycrit <subcommand> --config <path> [--out DIR] [--workers N]``.

Each subcommand reads one YAML config, runs its experiment and writes
``summary.json`` (resolved config, versions, result, status and a separate
``metadata`` block holding the only non-deterministic data) and
``trace.csv`` with fixed columns. Exit codes: 0 success, 2 config error,
3 hypothesis violated or obstruction found, 4 non-convergence or a failed
numerical check.
"""

import argparse
import csv
import json
import math
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from .config import EXPERIMENTS, build_problem, load_config
from .errors import ConfigError, CouplingOutOfRange, HypothesisViolated, NotRadial

EXIT_OK, EXIT_CONFIG, EXIT_HYPOTHESIS, EXIT_NONCONVERGENCE = 0, 2, 3, 4
STATUS_LABELS = {0: "ok", 2: "config-error", 3: "hypothesis-violated", 4: "non-convergence"}
MODULES = ("quadrature", "fields", "coefficients", "energy", "thresholds", "obstructions",
           "solver", "localization", "cli")
OUT_ENV = "HARDYCRIT_OUT"


@dataclass
class Outcome:
    result: dict
    columns: tuple
    rows: list
    code: int = EXIT_OK
    fields: dict = field(default_factory=dict)


# ---------------------------------------------------------------- serialization

def jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, (set, frozenset)):
        return sorted(jsonable(v) for v in obj)
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else ("nan" if math.isnan(x) else ("inf" if x > 0 else "-inf"))
    if isinstance(obj, np.ndarray):
        return jsonable(obj.tolist())
    if hasattr(obj, "value") and isinstance(getattr(obj, "value"), str):
        return obj.value
    return obj


def _cell(v):
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    if isinstance(v, (list, tuple)):
        return ";".join(_cell(x) for x in v)
    return str(v)


def write_csv(path, columns, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(columns)
        for row in rows:
            w.writerow([_cell(row.get(c)) for c in columns])


def summary_bytes(summary):
    """Canonical JSON encoding of a summary."""
    return (json.dumps(jsonable(summary), sort_keys=True, indent=2) + "\n").encode("utf-8")


def _pmap(fn, items, workers):
    items = list(items)
    if workers > 1 and len(items) > 1:
        with ProcessPoolExecutor(max_workers=min(workers, len(items))) as ex:
            return list(ex.map(fn, items))
    return [fn(x) for x in items]


def _lam(cfg):
    from .fields import lambda_N
    return lambda_N(cfg.N)


def _check(cfg, name, default):
    return float(cfg.checks.get(name, default))


# ---------------------------------------------------------------- subcommands

def _groundstate_point(args):
    from .energy import mountain_pass_level, sobolev_quotient_QA
    from .fields import Field, ground_state
    from .solver import residual
    from .thresholds import best_sobolev

    cfg, A, mu = args
    spec = build_problem(cfg, A)
    lam, N = spec.Lambda, cfg.N
    u = Field.single(ground_state(N, A, mu))
    S = best_sobolev(N)
    q = sobolev_quotient_QA(A, u, N, spec.grid, spec.angular_order)
    q_exp = S * (1 - A / lam) ** ((N - 1) / N)
    level = mountain_pass_level(spec, u)
    level_exp = S ** (N / 2) / N * (1 - A / lam) ** ((N - 1) / 2)
    return {"A": A, "mu": mu, "quotient": q, "expected": q_exp, "quotient_rel_err": q / q_exp - 1,
            "residual": residual(spec, u), "level": level, "level_expected": level_exp,
            "level_rel_err": level / level_exp - 1}


def run_verify_groundstate(cfg, workers):
    if cfg.k["preset"] != "constant_one" or cfg.h["preset"] != "zero":
        raise ConfigError("problem: verify-groundstate needs h = zero and k = constant_one")
    lam = _lam(cfg)
    As = [f * lam for f in cfg.sweep["A_over_Lambda"]] if "A_over_Lambda" in cfg.sweep else [cfg.A]
    for A in As:
        if not 0 <= A < lam:
            raise CouplingOutOfRange(f"need 0 <= A < Lambda_N, got {A}")
    mus = cfg.sweep.get("mu", [0.1, 1.0, 10.0])
    mus = mus if isinstance(mus, list) else [mus]
    rows = _pmap(_groundstate_point, [(cfg, A, mu) for A in As for mu in mus], workers)
    tol_r, tol_q = _check(cfg, "residual", 1e-6), _check(cfg, "quotient", 1e-4)
    ok = all(r["residual"] <= tol_r and abs(r["quotient_rel_err"]) <= tol_q for r in rows)
    cols = ("A", "mu", "quotient", "expected", "quotient_rel_err", "residual", "level",
            "level_expected", "level_rel_err")
    return Outcome({"points": rows, "tolerances": {"residual": tol_r, "quotient": tol_q},
                    "passed": ok}, cols, rows, EXIT_OK if ok else EXIT_NONCONVERGENCE)


def run_hardy(cfg, workers):
    from .energy import hardy_quotient
    from .fields import Field, ground_state, random_bubble_sum
    from .quadrature import build_grid

    lam = _lam(cfg)
    g = cfg.grid
    grid = build_grid(cfg.N, g["r_min"], g["r_max"], g["M"])
    rows = []
    fracs = cfg.sweep.get("A_over_Lambda", [0.5, 0.9, 0.99])
    for f in (fracs if isinstance(fracs, list) else [fracs]):
        q = hardy_quotient(Field.single(ground_state(cfg.N, f * lam)), cfg.N, grid, g["angular_order"])
        rows.append({"kind": "ground_state", "param": f, "quotient": q, "ratio": q / lam})
    rng = np.random.default_rng(int(cfg.sweep.get("seed", 0)))
    for i in range(int(cfg.sweep.get("random", 20))):
        u = random_bubble_sum(cfg.N, rng)
        q = hardy_quotient(u, cfg.N, grid, g["angular_order"])
        rows.append({"kind": "random", "param": i, "quotient": q, "ratio": q / lam})
    floor = min(r["quotient"] for r in rows)
    ok = floor >= lam - _check(cfg, "floor", 1e-9)
    return Outcome({"Lambda_N": lam, "min_quotient": floor, "floor_holds": ok, "points": rows},
                   ("kind", "param", "quotient", "ratio"), rows,
                   EXIT_OK if ok else EXIT_NONCONVERGENCE)


def run_thresholds(cfg, workers):
    from .localization import maxima_category
    from .thresholds import threshold_report

    spec = build_problem(cfg)
    lams = cfg.sweep.get("lambda", [cfg.A])
    rows = []
    for lam in (lams if isinstance(lams, list) else [lams]):
        rep = threshold_report(cfg.N, lam, spec.h, spec.k).to_dict()
        rows.append({"lambda": lam, **{n: (rep[n] or {}).get("value") for n in
                                       ("cstar", "tilde_c", "tilde_c1", "hat_c")},
                     "b": rep["b"], "eps0": rep["eps0"], "positivity_gate": rep["positivity_gate"]})
    result = {"report": threshold_report(cfg.N, cfg.A, spec.h, spec.k).to_dict(), "sweep": rows}
    if "delta" in cfg.sweep:
        ds = cfg.sweep["delta"]
        result["category"] = [maxima_category(spec.k, d) for d in (ds if isinstance(ds, list) else [ds])]
    cols = ("lambda", "cstar", "tilde_c", "tilde_c1", "hat_c", "b", "eps0", "positivity_gate")
    return Outcome(result, cols, rows)


def run_pohozaev_audit(cfg, workers):
    from .obstructions import Verdict, nonexistence_audit

    spec = build_problem(cfg)
    v = nonexistence_audit(spec, delta=float(cfg.sweep.get("delta", 0.1)))
    rows = [{"test": c.get("test"), "outcome": json.dumps(jsonable(c), sort_keys=True)} for c in v.checks]
    code = EXIT_OK if v.verdict == Verdict.NONE else EXIT_HYPOTHESIS
    fields = {"witness": v.witness_field.to_dict()} if v.witness_field is not None else {}
    return Outcome(v.to_dict(), ("test", "outcome"), rows, code, fields)


def _init_field(cfg, spec):
    from .fields import Field, ground_state, talenti

    init = dict(cfg.init)
    kind = init.get("profile", "ground_state")
    mu = float(init.get("mu", 1.0))
    amp = float(init.get("amplitude", 1.0))
    if kind == "ground_state":
        B = float(init.get("A", spec.A if 0 <= spec.A < spec.Lambda else 0.0))
        try:
            return Field.single(ground_state(cfg.N, B, mu), amplitude=amp)
        except CouplingOutOfRange as exc:
            raise ConfigError(f"init.A: {exc}") from None
    if kind == "talenti":
        return Field.single(talenti(cfg.N, mu), amplitude=amp)
    if kind == "zero":
        return Field.zero(cfg.N)
    raise ConfigError(f"init.profile: unknown profile {kind!r} (ground_state, talenti, zero)")


def _options(cfg):
    from .solver import SolverOptions
    return SolverOptions(**cfg.solver)


def run_solve(cfg, workers):
    from .solver import TRACE_COLUMNS, solve_radial

    spec = build_problem(cfg)
    r = solve_radial(spec, _init_field(cfg, spec), _options(cfg))
    res = r.to_dict()
    res["hypotheses"] = spec.hypotheses()
    code = EXIT_OK if r.converged else EXIT_NONCONVERGENCE
    fields = {"solution": r.field.to_dict()} if cfg.output.get("fields") else {}
    return Outcome(res, TRACE_COLUMNS, r.trace, code, fields)


def _multiplicity_point(args):
    from .solver import multiplicity_run

    cfg, lam = args
    spec = build_problem(cfg, lam)
    return multiplicity_run(spec, _options(cfg))


def _result_rows(lam, results):
    rows = []
    for j, r in enumerate(results):
        others = [t for i, t in enumerate(r.localization) if i != j]
        rows.append({"lambda": lam, "j": j, "J": r.J, "residual": r.residual, "mu": r.info["mu"],
                     "center_offset": r.info["center_offset"], "T_j": r.localization[j],
                     "T_min_other": min(others) if others else None, "converged": r.converged,
                     "below_threshold": r.below_threshold})
    return rows


MULT_COLUMNS = ("lambda", "j", "J", "residual", "mu", "center_offset", "T_j", "T_min_other",
                "converged", "below_threshold")


def _lambdas(cfg):
    lams = cfg.sweep.get("lambda", [cfg.A])
    return lams if isinstance(lams, list) else [lams]


def run_multiplicity(cfg, workers):
    lams = _lambdas(cfg)
    runs = _pmap(_multiplicity_point, [(cfg, lam) for lam in lams], workers)
    rows, points, fields = [], [], {}
    for lam, results in zip(lams, runs):
        rows += _result_rows(lam, results)
        points.append({"lambda": lam, "results": [r.to_dict() for r in results],
                       "separation": results[0].info["separation"] if results else None})
        if cfg.output.get("fields"):
            for j, r in enumerate(results):
                fields[f"lambda{lam:.6g}_peak{j}"] = r.field.to_dict()
    ok = all(row["converged"] for row in rows)
    # largest swept coupling at which every peak carries both certificates
    certified = [lam for lam, results in zip(lams, runs)
                 if results and all(r.converged and r.below_threshold for r in results)]
    return Outcome({"points": points, "largest_certified_lambda": max(certified) if certified else None},
                   MULT_COLUMNS, rows,
                   EXIT_OK if ok else EXIT_NONCONVERGENCE, fields)


def run_concentration(cfg, workers):
    from .localization import PeakFrame, concentration_verify, tail_masses

    if "lambda" not in cfg.sweep or not isinstance(cfg.sweep["lambda"], list):
        raise ConfigError("sweep.lambda: concentration needs a list of couplings")
    lams = sorted(cfg.sweep["lambda"], reverse=True)
    runs = _pmap(_multiplicity_point, [(cfg, lam) for lam in lams], workers)
    spec = build_problem(cfg, lams[-1])
    frame = PeakFrame.from_k(spec.k)
    report = concentration_verify(list(zip(lams, runs)), frame, spec,
                                  tolerance=_check(cfg, "dirichlet", 0.05),
                                  fraction_target=_check(cfg, "fraction", 0.9))
    radii = cfg.sweep.get("radii", [4.0, 8.0, 16.0, 32.0])
    tails = []
    for lam, results in zip(lams, runs):
        for j, r in enumerate(results):
            tails.append({"lambda": lam, "j": j,
                          **tail_masses(r.field, build_problem(cfg, lam), radii, frame).to_dict()})
    rows = []
    for pk in report["peaks"]:
        for row in pk["rows"]:
            rows.append({"j": pk["j"], **row})
    ok = all(r.converged for results in runs for r in results)
    cols = ("lambda", "j", "fraction", "dirichlet", "critical", "dirichlet_rel_err", "critical_rel_err")
    return Outcome({"verify": report, "tails": tails,
                    "results": [[r.to_dict() for r in results] for results in runs]},
                   cols, rows, EXIT_OK if ok else EXIT_NONCONVERGENCE)


def run_hypotheses(cfg, workers):
    from .localization import maxima_category

    spec = build_problem(cfg)
    res = {"h": spec.h_report.to_dict(), "k": spec.k_report.to_dict()}
    rows = [{"hypothesis": name, "passed": e["passed"]} for name, e in res["h"].items()]
    check_k = not spec.k.is_constant
    if check_k:
        rows += [{"hypothesis": name, "passed": e["passed"]} for name, e in res["k"].items()]
    if "delta" in cfg.sweep:
        ds = cfg.sweep["delta"]
        res["category"] = [maxima_category(spec.k, d) for d in (ds if isinstance(ds, list) else [ds])]
    ok = spec.h_report.all_pass and (not check_k or spec.k_report.all_pass)
    return Outcome(res, ("hypothesis", "passed"), rows, EXIT_OK if ok else EXIT_HYPOTHESIS)


RUNNERS = {
    "verify-groundstate": run_verify_groundstate,
    "hardy": run_hardy,
    "thresholds": run_thresholds,
    "pohozaev-audit": run_pohozaev_audit,
    "solve": run_solve,
    "multiplicity": run_multiplicity,
    "concentration": run_concentration,
    "hypotheses": run_hypotheses,
}


# ---------------------------------------------------------------- driver

def run(cfg, out_dir, workers=None):
    """Execute ``cfg`` and write the report files; returns the exit status."""
    workers = workers or cfg.workers
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    started = datetime.now(timezone.utc).isoformat()
    t0 = time.perf_counter()
    try:
        outcome = RUNNERS[cfg.experiment](cfg, workers)
    except (HypothesisViolated, CouplingOutOfRange, NotRadial) as exc:
        outcome = Outcome({"error": type(exc).__name__, "message": str(exc),
                           "report": exc.report.to_dict() if getattr(exc, "report", None) else None},
                          ("error",), [], EXIT_HYPOTHESIS)
    summary = {
        "experiment": cfg.experiment,
        "config": cfg.to_dict(),
        "versions": {"hardycrit": __version__, "modules": {m: __version__ for m in MODULES},
                     "numpy": np.__version__, "scipy": scipy.__version__},
        "status": {"code": outcome.code, "label": STATUS_LABELS[outcome.code]},
        "result": outcome.result,
        "metadata": {"started": started, "elapsed_s": time.perf_counter() - t0,
                     "workers": workers, "python": sys.version.split()[0]},
    }
    (out / "summary.json").write_bytes(summary_bytes(summary))
    write_csv(out / "trace.csv", outcome.columns, outcome.rows)
    if outcome.fields:
        fdir = out / "fields"
        fdir.mkdir(exist_ok=True)
        for name, data in outcome.fields.items():
            (fdir / f"{name}.json").write_bytes(summary_bytes(data))
    return outcome.code


def comparable(summary):
    """The summary without its metadata block (what determinism is judged on)."""
    return {k: v for k, v in summary.items() if k != "metadata"}


def build_parser():
    p = argparse.ArgumentParser(prog="hardycrit", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"hardycrit {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    for name in EXPERIMENTS:
        s = sub.add_parser(name)
        s.add_argument("--config", required=True, help="YAML experiment config")
        s.add_argument("--out", default=None, help=f"output directory (or ${OUT_ENV})")
        s.add_argument("--workers", type=int, default=None, help="concurrent sweep points")
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config, args.command)
        if args.workers is not None and args.workers < 1:
            raise ConfigError("--workers: must be at least 1")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    out = args.out or os.environ.get(OUT_ENV) or cfg.output.get("dir", "out")
    try:
        code = run(cfg, out, args.workers)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    print(f"{cfg.experiment}: {STATUS_LABELS[code]} (exit {code}); report in {out}")
    return code


if __name__ == "__main__":
    sys.exit(main())

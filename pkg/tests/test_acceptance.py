"""The thirteen acceptance criteria at their stated tolerances.

Each test records one PASS/FAIL line (printed in the pytest terminal summary)
with the measured quantities and the elapsed time.
"""

import json
import math
import time
from pathlib import Path

import numpy as np
import pytest

import oracles as orc
from conftest import ACCEPTANCE_LINES, SWEEP, two_peak_spec
from hardycrit.cli import comparable, main
from hardycrit.coefficients import make_h_preset
from hardycrit.energy import (discretization, hardy_quotient, mountain_pass_level, nehari_scale,
                              sobolev_quotient_QA)
from hardycrit.fields import Field, ground_state, lambda_N, nu_of, random_bubble_sum, talenti
from hardycrit.localization import PeakFrame, concentration_verify, outside_dirichlet_check, t_j, xi_map
from hardycrit.obstructions import Verdict, nonexistence_audit, q_quotient
from hardycrit.problem import ProblemSpec
from hardycrit.solver import SolverOptions, residual, solve_radial
from hardycrit.thresholds import best_sobolev, eps0, eps0_cap, positivity_gate, tilde_c

DIMS = (3, 4, 5)
FRACS = (0.1, 0.5, 0.9)
MUS = (0.1, 1.0, 10.0)
CONFIGS = Path(__file__).resolve().parents[1] / "demos" / "configs"


def report(n, title, ok, detail, t0):
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {n}: {title} | {detail} | {time.perf_counter() - t0:.1f} s"
    print(line)
    ACCEPTANCE_LINES.append(line)
    assert ok, line


def test_c01_hardy_floor():
    t0 = time.perf_counter()
    rng = np.random.default_rng(2024)
    worst = math.inf
    for i in range(200):
        N = DIMS[i % 3]
        q = hardy_quotient(random_bubble_sum(N, rng))
        worst = min(worst, q - lambda_N(N))
    near = {N: hardy_quotient(Field.single(ground_state(N, 0.99 * lambda_N(N)))) / lambda_N(N) - 1
            for N in DIMS}
    ok = worst >= -1e-9 and all(abs(v) <= 0.10 for v in near.values())
    report(1, "Hardy floor", ok, f"min(quotient - Lambda_N) over 200 fields = {worst:.3e}; "
           f"A = 0.99 Lambda_N relative gap {', '.join(f'N={N}: {v:.4f}' for N, v in near.items())}", t0)


def test_c02_quotient_identity():
    t0 = time.perf_counter()
    worst, exps = 0.0, {}
    for N in DIMS:
        S = best_sobolev(N)
        logs = []
        for frac in FRACS:
            A = frac * lambda_N(N)
            for mu in MUS:
                q = sobolev_quotient_QA(A, Field.single(ground_state(N, A, mu)))
                worst = max(worst, abs(q / orc.groundstate_quotient(N, A) - 1))
            logs.append((math.log(1 - frac), math.log(q / S)))
        x, y = np.array(logs).T
        exps[N] = float(np.polyfit(x, y, 1)[0])
    ok = worst <= 1e-4
    report(2, "quotient identity", ok, f"max rel err {worst:.2e}; measured exponent "
           + ", ".join(f"N={N}: {e:.6f} (expected {(N - 1) / N:.6f})" for N, e in exps.items()), t0)


def test_c03_groundstate_residual():
    t0 = time.perf_counter()
    worst = 0.0
    for N in DIMS:
        for frac in FRACS:
            spec = ProblemSpec.make(N, frac * lambda_N(N))
            for mu in MUS:
                worst = max(worst, residual(spec, Field.single(ground_state(N, spec.A, mu))))
    report(3, "ground-state residual", worst <= 1e-6, f"max relative residual {worst:.2e}", t0)


def test_c04_gradient_check():
    t0 = time.perf_counter()
    worst = 0.0
    rng = np.random.default_rng(4)
    for N in DIMS:
        spec = ProblemSpec.make(N, 0.5 * lambda_N(N))
        disc = discretization(spec)
        e = np.eye(N)[0]
        u = 1.3 * Field.single(ground_state(N, spec.A)).values(spec.grid.nodes[:, None] * e)
        g = disc.gradient(u)
        for _ in range(20):
            v = rng.standard_normal(u.size) * u
            eps = 1e-5
            fd = (disc.change(u, eps * v) - disc.change(u, -eps * v)) / (2 * eps)
            worst = max(worst, abs(float(g @ (disc.P @ v)) - fd) / abs(fd))
    report(4, "Riesz gradient vs finite differences", worst <= 1e-5,
           f"max rel err {worst:.2e} over 20 directions x N in {{3,4,5}}", t0)


def test_c05_mountain_pass_level():
    t0 = time.perf_counter()
    worst = 0.0
    for N in DIMS:
        for frac in FRACS:
            spec = ProblemSpec.make(N, frac * lambda_N(N))
            for mu in MUS:
                m = mountain_pass_level(spec, Field.single(ground_state(N, spec.A, mu)))
                worst = max(worst, abs(m / orc.mountain_pass(N, spec.A) - 1))
    report(5, "mountain-pass level", worst <= 1e-3, f"max rel err {worst:.2e}", t0)


def test_c06_existence_run():
    t0 = time.perf_counter()
    h = make_h_preset("bump_near_zero", {"h0": 0.0, "c1": 0.2, "exponent": nu_of(0.1, 3),
                                         "delta": 0.2, "dip": 0.02}, 3)
    spec = ProblemSpec.make(3, 0.1, h)
    hyp = spec.h_report
    r = solve_radial(spec, Field.single(ground_state(3, 0.1)), SolverOptions(tolerance=1e-5))
    elapsed = time.perf_counter() - t0
    ok = (hyp.all_pass and r.converged and r.residual <= 1e-5
          and r.J < r.threshold["value"] and elapsed <= 300)
    report(6, "existence run", ok, f"(h0)-(h2) {'pass' if hyp.all_pass else 'fail'}; residual "
           f"{r.residual:.2e}; J = {r.J:.6f} < c* = {r.threshold['value']:.6f} (margin "
           f"{r.info['margin']:.4f}); {r.iterations} iterations", t0)


def test_c07_nonexistence_audits():
    t0 = time.perf_counter()
    lam = lambda_N(3)
    v1 = nonexistence_audit(ProblemSpec.make(3, 1.2 * lam, make_h_preset("constant", {"value": 0.01}, 3)))
    v2 = nonexistence_audit(ProblemSpec.make(3, 0.5 * lam, make_h_preset(
        "radial_power", {"amplitude": 0.05, "exponent": 1.0}, 3)))
    spec3 = ProblemSpec.make(3, 1.2 * lam, make_h_preset(
        "gaussian_bump", {"center": [5.0, 0, 0], "width": 1.0, "height": -1.5}, 3))
    v3 = nonexistence_audit(spec3)
    q3 = q_quotient(spec3, v3.witness_field) if v3.witness_field is not None else math.nan
    ok = (v1.verdict == Verdict.COUPLING and v2.verdict == Verdict.POHOZAEV and v2.witness_value > 0
          and v3.verdict == Verdict.NEGATIVE_I1 and q3 < 0)
    report(7, "nonexistence audits", ok, f"{v1.verdict.value}; {v2.verdict.value} witness "
           f"{v2.witness_value:.4f}; {v3.verdict.value} with stored witness Q = {q3:.4f}", t0)


def test_c08_t_j_limit():
    t0 = time.perf_counter()
    vals, estim = {}, True
    for N in (3, 4):
        e = np.eye(N)[0]
        frame = PeakFrame.from_points([2 * e, -2 * e])
        spec = ProblemSpec.make(N, 0.1 * lambda_N(N))
        seq = []
        for mu in (1e-1, 1e-2, 1e-3):
            for j in range(2):
                u = Field.single(talenti(N, mu), frame.maxima[j])
                u = u * nehari_scale(spec, u).t
                T = t_j(u, frame, j)
                if j == 0:
                    seq.append(T)
                rep = outside_dirichlet_check(u, frame, j)
                if rep["applies"]:
                    estim &= rep["holds"]
        vals[N] = seq
    dec = {N: all(b < a for a, b in zip(s, s[1:])) for N, s in vals.items()}
    ok = dec[4] and vals[4][-1] < 0.01 and estim
    report(8, "T_j limit", ok, "N=4: " + ", ".join(f"{v:.5f}" for v in vals[4])
           + " (decreasing, final < 0.01); N=3 for reference: " + ", ".join(f"{v:.5f}" for v in vals[3])
           + f"; Dirichlet mass >= 3x its part outside B_r0(a_j) whenever T_j <= delta: {estim}", t0)


@pytest.mark.slow
def test_c09_multiplicity(two_peak_sweep, m_peak_run):
    t0 = time.perf_counter()
    frac = SWEEP[0]
    res = two_peak_sweep(frac)
    gate = frac * lambda_N(3) <= eps0(3, two_peak_spec(frac).k)
    sets = res[0].info["separation"]["sets"]
    two_ok = (gate and len(res) == 2 and all(r.converged and r.J < r.threshold["value"] for r in res)
              and sets == [[0], [1]])
    spec3, res3 = m_peak_run
    Js = [r.J for r in res3]
    spread = (max(Js) - min(Js)) / max(Js)
    three_ok = len(res3) == 3 and all(r.converged for r in res3) and spread <= 1e-6
    elapsed = time.perf_counter() - t0
    report(9, "multiplicity", two_ok and three_ok and elapsed <= 600,
           f"two_peak at lambda = {frac} Lambda_N (eps0 = {eps0(3, two_peak_spec(frac).k):.4f}): "
           f"J = {res[0].J:.6f}, {res[1].J:.6f} < c~ = {res[0].threshold['value']:.6f}, sets {sets}; "
           f"m_peak(3): energy spread {spread:.1e}", t0)


@pytest.mark.slow
def test_c10_concentration(two_peak_sweep):
    t0 = time.perf_counter()
    sweep = [(f * lambda_N(3), two_peak_sweep(f)) for f in SWEEP]
    spec = two_peak_spec(SWEEP[-1])
    rep = concentration_verify(sweep, PeakFrame.from_k(spec.k), spec, tolerance=0.05, fraction_target=0.9)
    fr = {pk["j"]: [round(float(r["fraction"]), 4) for r in pk["rows"]] for pk in rep["peaks"]}
    err = max(abs(pk["rows"][-1]["dirichlet_rel_err"]) for pk in rep["peaks"])
    report(10, "concentration", rep["passed"], f"fractions in B_(r0/10)(a_j) {fr}; "
           f"Dirichlet total rel err at smallest lambda {err:.2e}", t0)


def test_c11_xi_map():
    t0 = time.perf_counter()
    frame = PeakFrame(3, ((0.0, 0.0, 0.0),), 1.0, 1 / 3, 2.0)
    x0 = np.array([1.0, 0.0, 0.0])
    d1 = float(np.linalg.norm(xi_map(Field.single(talenti(3, 1e-3), tuple(x0)), frame) - x0))
    d2 = float(np.linalg.norm(xi_map(Field.single(ground_state(3, 0.1)), frame)))
    report(11, "Xi map", d1 <= 1e-2 and d2 <= 1e-10, f"|Xi - x0| = {d1:.2e}; radial |Xi| = {d2:.1e}", t0)


def test_c12_threshold_algebra():
    t0 = time.perf_counter()
    k = two_peak_spec(0.1).k
    e0 = eps0(3, k)
    target = orc.tilde_c_sup(3, k.sup_norm)
    lams = np.linspace(1e-6, e0, 200)
    worst = max(abs(tilde_c(3, lam, k).value / target - 1) for lam in lams)
    gate = all(positivity_gate(3, lam) for lam in np.linspace(1e-9, eps0_cap(3) * (1 - 1e-12), 200))
    report(12, "threshold algebra", worst <= 1e-12 and gate,
           f"eps0 = {e0:.12f}; max rel deviation of c~ from (1/N)S^(N/2)||k||^(-(N-2)/2) {worst:.1e}; "
           f"positivity gate holds on [0, eps0_bar]: {gate}", t0)


@pytest.mark.slow
def test_c13_determinism(tmp_path):
    t0 = time.perf_counter()
    names = sorted(p.stem for p in CONFIGS.glob("*.yaml"))
    bad = []
    for name in names:
        text = (CONFIGS / f"{name}.yaml").read_text()
        tag = next(line.split(":", 1)[1].strip() for line in text.splitlines() if line.startswith("experiment"))
        outs = []
        for i, workers in enumerate(("1", "3")):
            out = tmp_path / f"{name}_{i}"
            main([tag, "--config", str(CONFIGS / f"{name}.yaml"), "--out", str(out), "--workers", workers])
            s = json.loads((out / "summary.json").read_text())
            outs.append(json.dumps(comparable(s), sort_keys=True, indent=2).encode())
        if outs[0] != outs[1]:
            bad.append(name)
    report(13, "determinism", not bad, f"{len(names)} configs run twice (workers 1 and 3); "
           f"differing summaries: {bad or 'none'}", t0)

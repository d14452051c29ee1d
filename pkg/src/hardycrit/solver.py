"""Constructive existence: Nehari descent for radial problems and a bubble
ansatz for solutions concentrating at a maximum of k.

The radial solver works on nodal values with the discrete energy of
:class:`~hardycrit.energy.RadialDiscretization`: each step takes the Riesz
(Dirichlet-preconditioned) gradient, applies the positivity projection
u -> |u| and rescales back onto the Nehari manifold. Armijo backtracking on
the projected step makes J monotone along accepted iterates.

The localized solver minimizes the mountain-pass level max_t J(t u) over
Talenti bubbles u of scale mu centered at c near a peak a_j; the optimum is
then placed on the Nehari manifold.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize, minimize_scalar

from .energy import (EnergyBreakdown, _grid_radial, _nodal, discretization, energy,
                     grid_field, mountain_pass_level, nehari_scale)
from .errors import (HardyCritError, HypothesisViolated, InfeasibleInit, InvalidParams,
                     NotRadial, CouplingOutOfRange, TrustRegionViolation)
from .fields import Field, GroundState, Talenti, sample_on_grid
from .localization import PeakFrame, all_t, separation_check
from .thresholds import cstar, eps0, tilde_c, tilde_c1


@dataclass(frozen=True)
class SolverOptions:
    max_iterations: int = 2000
    tolerance: float = 1e-5
    step: float = 1.0
    backstep: float = 0.5
    armijo: float = 1e-4
    positivity: bool = True
    delta: float = None
    trace: bool = False
    fd_step: float = 1e-4

    def __post_init__(self):
        if not self.tolerance > 0:
            raise InvalidParams(f"tolerance must be positive, got {self.tolerance}")
        if not 0 < self.backstep < 1:
            raise InvalidParams(f"backstep factor must lie in (0, 1), got {self.backstep}")
        if not self.step > 0 or not 0 < self.armijo < 1:
            raise InvalidParams("need step > 0 and 0 < armijo < 1")
        if self.max_iterations < 1:
            raise InvalidParams("max_iterations must be at least 1")

    def to_dict(self):
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


@dataclass
class SolveResult:
    field: Field
    energy: EnergyBreakdown
    residual: float
    iterations: int
    converged: bool
    localization: list = field(default_factory=list)
    below_threshold: bool = False
    threshold: dict = None
    trace: list = field(default_factory=list)
    info: dict = field(default_factory=dict)

    @property
    def J(self):
        return self.energy.J

    def to_dict(self, include_field=False):
        out = {"energy": self.energy.to_dict(), "residual": self.residual,
               "iterations": self.iterations, "converged": self.converged,
               "localization": list(self.localization), "below_threshold": self.below_threshold,
               "threshold": self.threshold, "info": self.info}
        if include_field:
            out["field"] = self.field.to_dict()
        return out


TRACE_COLUMNS = ("iteration", "J", "residual", "t", "mu", "center_offset", "T")


# ---------------------------------------------------------------- thresholds

def applicable_threshold(spec):
    """The compactness threshold that a solution energy is compared with.

    For constant k = kappa the h-perturbed threshold c* scales by
    kappa^{-(N-2)/2}; for variable k and h = 0 it is c~_1 (radial k) or c~.
    """
    N, A, h, k = spec.N, spec.A, spec.h, spec.k
    try:
        if k.is_constant:
            if k.background <= 0:
                return None
            th = cstar(N, A, h)
            f = k.background ** (-(N - 2) / 2.0)
            return {"name": "cstar", "value": th.value * f, "branch": th.branch}
        if h.is_constant and h.background == 0:
            th = tilde_c1(N, A, k) if k.radial_flag else tilde_c(N, A, k)
            return {"name": "tilde_c1" if k.radial_flag else "tilde_c",
                    "value": th.value, "branch": th.branch}
    except CouplingOutOfRange:
        return None
    return None


def _flag(J, th):
    return bool(th is not None and math.isfinite(th["value"]) and J < th["value"])


# ---------------------------------------------------------------- radial solver

def _initial_nodal(spec, init):
    if init.is_zero:
        raise InfeasibleInit("initial field is zero")
    if _grid_radial(init, spec.grid):
        return np.array(_nodal(init), dtype=float)
    if not init.is_radial():
        raise NotRadial("initial field must be radial about the origin")
    return np.array(sample_on_grid(init, spec.grid).values, dtype=float)


def _project(disc, u, positivity):
    """|u| rescaled onto the Nehari manifold; None if Q or K is not positive."""
    if positivity:
        u = np.abs(u)
    D, H, K = disc.dirichlet(u), disc.hardy(u), disc.nonlinear(u)
    Q = D - H
    if not (Q > 0 and K > 0):
        return None, None
    t = (Q / K) ** ((disc.N - 2) / 4.0)
    return t * u, t


def solve_radial(spec, init, opts=None):
    """Minimize J on the Nehari manifold over radial nodal fields."""
    opts = opts or SolverOptions()
    if not spec.is_radial:
        raise NotRadial("solve_radial needs radial h and k")
    rep = spec.h_report
    if not rep.all_pass:
        raise HypothesisViolated(f"h hypotheses fail: {rep.failed()}", rep)
    u0 = _initial_nodal(spec, init)
    disc = discretization(spec)
    if disc.dirichlet(u0) - disc.hardy(u0) <= 0:
        raise InfeasibleInit("Q(init) is not positive")
    u, t = _project(disc, u0, opts.positivity)
    if u is None:
        raise InfeasibleInit("initial field cannot be scaled onto the Nehari manifold")

    J = disc.J(u)
    dJ = disc.dJ(u)
    g = disc.riesz(dJ)
    gnorm2 = max(float(g @ dJ), 0.0)
    res = math.sqrt(gnorm2 / disc.dirichlet(u))
    step = opts.step
    trace = [_radial_row(0, J, res, t)]
    monotone = True
    it = 0
    stalled = False
    while res > opts.tolerance and it < opts.max_iterations:
        it += 1
        s = step
        accepted = False
        for _ in range(60):
            cand, tc = _project(disc, u - s * g, opts.positivity)
            if cand is not None:
                change = disc.change(u, cand - u)
                if change <= -opts.armijo * s * gnorm2:
                    accepted = True
                    break
            s *= opts.backstep
        if not accepted:
            stalled = True
            break
        dJc = disc.dJ(cand)
        gc = disc.riesz(dJc)
        du = cand - u
        # Barzilai-Borwein step in the Dirichlet metric for the next trial
        curv = float(du @ (dJc - dJ))
        step = float(np.clip((du @ (disc.P @ du)) / curv, 1e-3, 1e3)) if curv > 0 else opts.step
        monotone &= change <= 0
        u, t, J, dJ, g = cand, tc, J + change, dJc, gc
        gnorm2 = max(float(g @ dJ), 0.0)
        res = math.sqrt(gnorm2 / disc.dirichlet(u))
        if opts.trace:
            trace.append(_radial_row(it, J, res, t))
    if opts.trace and trace[-1]["iteration"] != it:
        trace.append(_radial_row(it, J, res, t))
    e = disc.breakdown(u)
    converged = res <= opts.tolerance and abs(e.nehari_residual) <= opts.tolerance * e.dirichlet
    th = applicable_threshold(spec)
    info = {"monotone": bool(monotone), "stalled": stalled, "final_step": step,
            "margin": (th["value"] - e.J) if th else None}
    return SolveResult(grid_field(spec.grid, u), e, res, it, bool(converged), [],
                       _flag(e.J, th), th, trace if opts.trace else [], info)


def _radial_row(it, J, res, t):
    return {"iteration": it, "J": J, "residual": res, "t": t, "mu": None,
            "center_offset": None, "T": None}


def nearest_ground_state(u, spec):
    """(mu, max relative distance) to the closest w_mu at the problem coupling."""
    grid = spec.grid
    vals = _nodal(u) if _grid_radial(u, grid) else sample_on_grid(u, grid).values
    rho = grid.nodes
    a = 0.5 * (spec.N - 2)
    mu0 = float(rho[int(np.argmax(rho ** a * np.abs(vals)))])

    def dist(logmu):
        w = GroundState(spec.N, spec.A, math.exp(logmu)).value(rho)
        return float(np.max(np.abs(vals - w) / w))

    r = minimize_scalar(dist, bracket=(math.log(mu0) - 0.1, math.log(mu0) + 0.1),
                        options={"xtol": 1e-10})
    return math.exp(r.x), float(r.fun)


# ---------------------------------------------------------------- bubble ansatz

def _bubble(N, mu, c):
    return Field.single(Talenti(N, mu), tuple(float(x) for x in c))


def _level(spec, x, a):
    u = _bubble(spec.N, math.exp(x[0]), np.asarray(a) + x[1:])
    try:
        return mountain_pass_level(spec, u)
    except HardyCritError:
        return math.inf


def _fd_grad(spec, x, a, h):
    g = np.zeros_like(x)
    for i in range(len(x)):
        e = np.zeros_like(x)
        e[i] = h
        g[i] = (_level(spec, x + e, a) - _level(spec, x - e, a)) / (2 * h)
    return g


def ansatz_params(u):
    """(mu, center) of a single-bubble field."""
    if len(u.terms) != 1 or not isinstance(u.terms[0].profile, Talenti):
        raise NotRadial("expected a single Talenti bubble")
    t = u.terms[0]
    return t.profile.r, np.asarray(t.center, dtype=float)


def ansatz_residual(spec, u, h=1e-4):
    """Relative norm of the gradient of max_t J(t u) in (log mu, center)."""
    mu, c = ansatz_params(u)
    x = np.concatenate([[math.log(mu)], np.zeros(spec.N)])
    m = _level(spec, x, c)
    return float(np.linalg.norm(_fd_grad(spec, x, c, h)) / abs(m))


def residual(spec, u):
    """Dirichlet-norm residual of J'(u) (radial fields) or the reduced ansatz gradient."""
    if u.is_zero:
        return 0.0
    if spec.is_radial and (_grid_radial(u, spec.grid) or u.is_radial()):
        vals = _initial_nodal(spec, u)
        return float(discretization(spec).residual(vals))
    return ansatz_residual(spec, u)


def _check_k(spec):
    rep = spec.k_report
    bad = [name for name in ("K0", "K1", "K2") if not rep[name].passed]
    if bad:
        raise HypothesisViolated(f"k hypotheses fail: {bad}", rep)
    if not 0 < spec.A < spec.Lambda:
        raise CouplingOutOfRange(f"need 0 < lambda < Lambda_N, got {spec.A}")


def _initial_scale(k, j):
    width = k.params.get("width", 0.5)
    return 0.1 * float(width)


def solve_localized(spec, j, opts=None, frame=None):
    """Minimize the mountain-pass level of a bubble concentrating near peak a_j."""
    opts = opts or SolverOptions()
    _check_k(spec)
    frame = frame or PeakFrame.from_k(spec.k)
    if not (isinstance(j, (int, np.integer)) and 0 <= j < frame.m):
        raise HypothesisViolated(f"peak index {j} out of range 0..{frame.m - 1}", spec.k_report)
    delta = opts.delta if opts.delta is not None else frame.delta
    N = spec.N
    a = np.asarray(frame.maxima[j])
    box = 0.5 * frame.r0
    bounds = [(math.log(1e-6), math.log(frame.r0))] + [(-box, box)] * N
    x0 = np.concatenate([[math.log(_initial_scale(spec.k, j))], np.zeros(N)])
    trace = []

    def fun(x):
        m = _level(spec, x, a)
        return m, _fd_grad(spec, x, a, opts.fd_step)

    def callback(xk):
        if opts.trace:
            m = _level(spec, xk, a)
            u = _bubble(N, math.exp(xk[0]), a + xk[1:])
            trace.append({"iteration": len(trace) + 1, "J": m,
                          "residual": float(np.linalg.norm(_fd_grad(spec, xk, a, opts.fd_step)) / m),
                          "t": None, "mu": math.exp(xk[0]),
                          "center_offset": float(np.linalg.norm(xk[1:])),
                          "T": all_t(u, frame, spec.grid, spec.angular_order)})

    res = minimize(fun, x0, jac=True, method="L-BFGS-B", bounds=bounds, callback=callback,
                   options={"maxiter": opts.max_iterations, "ftol": 1e-15, "gtol": 1e-12})
    x = res.x
    mu, c = math.exp(x[0]), a + x[1:]
    u = _bubble(N, mu, c)
    ns = nehari_scale(spec, u)
    sol = u * ns.t
    e = ns.energy
    grad = _fd_grad(spec, x, a, opts.fd_step)
    # components pinned at a bound do not count towards stationarity
    free = np.array([not (abs(x[i] - lo) < 1e-12 and grad[i] > 0 or abs(x[i] - hi) < 1e-12 and grad[i] < 0)
                     for i, (lo, hi) in enumerate(bounds)])
    rel = float(np.linalg.norm(grad[free]) / abs(e.J))
    T = all_t(sol, frame, spec.grid, spec.angular_order)
    th = tilde_c(N, spec.A, spec.k)
    threshold = {"name": "tilde_c", "value": th.value, "branch": th.branch}
    others_ok = all(T[i] > delta for i in range(frame.m) if i != j)
    interior = bool(free[0])
    converged = rel <= opts.tolerance and T[j] < delta
    info = {"peak": j, "center": list(map(float, c)), "mu": mu, "t": ns.t,
            "center_offset": float(np.linalg.norm(c - a)), "delta": delta,
            "T_j_below_delta": T[j] < delta, "others_above_delta": others_ok,
            "scale_interior": interior, "optimizer": {"nit": int(res.nit), "message": str(res.message)},
            "margin": th.value - e.J}
    result = SolveResult(sol, e, rel, int(res.nit), bool(converged), T,
                         bool(e.J < th.value), threshold, trace, info)
    if not T[j] < delta:
        raise TrustRegionViolation(f"minimizer reached T_j = {T[j]:.4g} >= delta = {delta:.4g}", result)
    return result


def multiplicity_run(spec, opts=None):
    """One localized solve per maximum of k, with a separation check.

    Results are flagged ``below_threshold`` only when lambda does not exceed
    eps0 and the solve certifies J < c~ with T_j < delta; a trust-region
    contact is reported in the result instead of raised.
    """
    opts = opts or SolverOptions()
    _check_k(spec)
    frame = PeakFrame.from_k(spec.k)
    e0 = eps0(spec.N, spec.k)
    gate = spec.A <= e0
    results = []
    for j in range(frame.m):
        try:
            r = solve_localized(spec, j, opts, frame)
        except TrustRegionViolation as exc:
            r = exc.result
            r.info["trust_region_violation"] = True
        r.info["eps0"] = e0
        r.info["lambda_gate"] = gate
        r.below_threshold = bool(gate and r.below_threshold and r.info["T_j_below_delta"])
        results.append(r)
    sep = separation_check([r.field for r in results], frame, t_values=[r.localization for r in results])
    for r in results:
        r.info["separation"] = sep.to_dict()
    return results

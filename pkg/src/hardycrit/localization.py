"""Concentration diagnostics: T_j, the barycenter map, tail and ball masses.

All quantities are Dirichlet- or L^{2*}-weighted averages of simple weights
(distance to a peak capped at 1, ball indicators, the truncated identity),
each radial about one point, so they go through the same multi-center
quadrature as the energy.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .coefficients import WeightTerm
from .energy import inverse_square_terms, power_integral, quadratic_integral
from .errors import InvalidParams, ZeroField
from .fields import critical_exponent
from .quadrature import DEFAULT_ANGULAR_ORDER, build_grid


@dataclass(frozen=True)
class PeakFrame:
    """Maxima a_1..a_m with disjointness radius r0, delta = r0/3 and truncation radius R0."""

    N: int
    maxima: tuple
    r0: float
    delta: float
    R0: float

    @staticmethod
    def from_points(maxima, R0=None):
        pts = [tuple(float(c) for c in a) for a in maxima]
        if not pts:
            raise InvalidParams("a peak frame needs at least one maximum")
        N = len(pts[0])
        arr = np.asarray(pts)
        if len(pts) > 1:
            d = np.linalg.norm(arr[:, None, :] - arr[None, :, :], axis=-1)
            dmin = float(np.min(d[np.triu_indices(len(pts), 1)]))
            if dmin <= 0:
                raise InvalidParams("maxima must be distinct")
            r0 = min(1.0, 0.5 * dmin)
        else:
            r0 = 1.0
        reach = float(np.max(np.linalg.norm(arr, axis=1)))
        if R0 is None:
            R0 = 2.0
            while not reach < R0 - 1:
                R0 *= 2
        elif not reach < R0 - 1:
            raise InvalidParams(f"all maxima must lie in the ball of radius R0 - 1 = {R0 - 1}")
        return PeakFrame(N, tuple(pts), r0, r0 / 3.0, float(R0))

    @staticmethod
    def from_k(k):
        """Frame for a preset with finitely many maxima; R0 from its (K3) check."""
        from .coefficients import _check_k3

        if k.maxima_kind != "finite" or not k.maxima:
            raise InvalidParams(f"preset {k.tag!r} has no finite maxima set")
        k3 = _check_k3(k)
        return PeakFrame.from_points(k.maxima, k3.witness["R0"] if k3.passed else None)

    @property
    def m(self):
        return len(self.maxima)

    def psi(self, j):
        """psi_j(x) = min(1, |x - a_j|) as a quadrature weight."""
        a = np.asarray(self.maxima[j])
        return WeightTerm(lambda X: np.minimum(1.0, np.linalg.norm(X - a, axis=-1)),
                          anchors=(self.maxima[j],), kinks=((self.maxima[j], 1.0),))

    def to_dict(self):
        return {"N": self.N, "maxima": [list(a) for a in self.maxima], "r0": self.r0,
                "delta": self.delta, "R0": self.R0,
                "psi": [{"center": list(a), "cap": 1.0} for a in self.maxima],
                "xi": {"kind": "radial truncation", "radius": self.R0}}


def ball_weight(center, R, outside=False):
    c = np.asarray(center, dtype=float)
    if outside:
        f = (lambda X: (np.linalg.norm(X - c, axis=-1) > R).astype(float))
    else:
        f = (lambda X: (np.linalg.norm(X - c, axis=-1) <= R).astype(float))
    return WeightTerm(f, anchors=(tuple(c),), kinks=((tuple(c), float(R)),))


def _setup(u, grid):
    if u.is_zero:
        raise ZeroField("the field is zero")
    return grid if grid is not None else build_grid(u.N)


def _dirichlet(u, grid, ao, weight=None):
    return quadratic_integral(u, "grad", None if weight is None else [weight], grid, ao)


def t_j(u, frame, j, grid=None, angular_order=DEFAULT_ANGULAR_ORDER, D=None):
    """T_j(u) = int psi_j |grad u|^2 / int |grad u|^2."""
    grid = _setup(u, grid)
    if not 0 <= j < frame.m:
        raise InvalidParams(f"peak index {j} out of range 0..{frame.m - 1}")
    D = D if D is not None else _dirichlet(u, grid, angular_order)
    if D <= 0:
        raise ZeroField("the field has zero Dirichlet energy")
    val = _dirichlet(u, grid, angular_order, frame.psi(j)) / D
    return float(min(max(val, 0.0), 1.0))


def all_t(u, frame, grid=None, angular_order=DEFAULT_ANGULAR_ORDER):
    grid = _setup(u, grid)
    D = _dirichlet(u, grid, angular_order)
    return [t_j(u, frame, j, grid, angular_order, D) for j in range(frame.m)]


def outside_dirichlet_check(u, frame, j, grid=None, angular_order=DEFAULT_ANGULAR_ORDER):
    """int |grad u|^2 versus 3 int_{|x - a_j| > r0} |grad u|^2, with T_j."""
    grid = _setup(u, grid)
    D = _dirichlet(u, grid, angular_order)
    out = _dirichlet(u, grid, angular_order, ball_weight(frame.maxima[j], frame.r0, outside=True))
    T = t_j(u, frame, j, grid, angular_order, D)
    return {"T_j": T, "delta": frame.delta, "applies": T <= frame.delta,
            "dirichlet": D, "outside": out, "holds": D >= 3 * out}


@dataclass
class SeparationReport:
    sets: list
    single_claims: bool
    distinct: bool
    delta: float

    def to_dict(self):
        return {"sets": [sorted(s) for s in self.sets], "single_claims": self.single_claims,
                "distinct": self.distinct, "delta": self.delta}


def separation_check(fields, frame, grid=None, angular_order=DEFAULT_ANGULAR_ORDER, t_values=None):
    """For each field the set {j : T_j <= delta}; claims must be singletons and pairwise distinct."""
    sets = []
    for i, u in enumerate(fields):
        ts = t_values[i] if t_values is not None else all_t(u, frame, grid, angular_order)
        sets.append({j for j, t in enumerate(ts) if t <= frame.delta})
    single = all(len(s) <= 1 for s in sets)
    claimed = [frozenset(s) for s in sets if s]
    distinct = len(claimed) == len(sets) and len(set(claimed)) == len(claimed)
    return SeparationReport(sets, single, distinct, frame.delta)


def _span_basis(points, N):
    P = np.asarray([p for p in points], dtype=float).reshape(-1, N)
    if P.size == 0:
        return np.zeros((0, N))
    scale = max(1.0, float(np.max(np.abs(P))))
    _, s, vt = np.linalg.svd(P)
    rank = int(np.sum(s > 1e-12 * scale))
    return vt[:rank]


def xi_map(u, frame, grid=None, angular_order=DEFAULT_ANGULAR_ORDER):
    """Xi(u) = int xi |grad u|^2 / int |grad u|^2 with xi the identity truncated at R0.

    By rotation symmetry Xi lies in the span of the field's centers, so only the
    components along an orthonormal basis of that span are integrated.
    """
    grid = _setup(u, grid)
    N, R0 = u.N, frame.R0
    out = np.zeros(N)
    basis = _span_basis(u.centers, N)
    if len(basis) == 0:
        return out
    D = _dirichlet(u, grid, angular_order)
    origin = (0.0,) * N
    for e in basis:
        def f(X, e=e):
            r = np.linalg.norm(X, axis=-1)
            proj = np.einsum("...i,i->...", X, e)
            return np.where(r <= R0, proj, R0 * proj / np.maximum(r, 1e-300))
        w = WeightTerm(f, anchors=(origin,), kinks=((origin, R0),))
        out += _dirichlet(u, grid, angular_order, w) / D * e
    return out


@dataclass
class ConcentrationReport:
    radii: list
    mu_R: list
    nu_R: list
    gamma_R: list
    totals: dict
    tail_exponents: dict
    peak_balls: list = field(default_factory=list)
    origin_ball: dict = field(default_factory=dict)

    def rows(self):
        return [(R, m, n, g) for R, m, n, g in zip(self.radii, self.mu_R, self.nu_R, self.gamma_R)]

    def to_dict(self):
        return {"radii": self.radii, "mu_R": self.mu_R, "nu_R": self.nu_R, "gamma_R": self.gamma_R,
                "totals": self.totals, "tail_exponents": self.tail_exponents,
                "peak_balls": self.peak_balls, "origin_ball": self.origin_ball}


def _fit_exponent(radii, vals):
    """Log-log slope over the last three positive samples (None if unavailable)."""
    pts = [(math.log(r), math.log(v)) for r, v in zip(radii, vals) if v > 0]
    if len(pts) < 2:
        return None
    x, y = np.array(pts[-3:]).T
    return float(np.polyfit(x, y, 1)[0])


def _masses(u, spec, weight, grid, ao):
    """(Dirichlet, critical, Hardy) masses of u against one indicator weight."""
    p = critical_exponent(u.N)
    return (quadratic_integral(u, "grad", [weight], grid, ao),
            power_integral(u, p, [weight], grid, ao),
            quadratic_integral(u, "value", inverse_square_terms([weight], u.N), grid, ao))


def tail_masses(u, spec, radii, frame=None):
    """Tail masses outside |x| = R for each R, plus peak and origin ball masses."""
    grid, ao = _setup(u, spec.grid), spec.angular_order
    radii = [float(R) for R in radii]
    if not radii or min(radii) <= 0:
        raise InvalidParams("radii must be a nonempty list of positive numbers")
    origin = (0.0,) * u.N
    mu, nu, ga = [], [], []
    for R in radii:
        m, n, g = _masses(u, spec, ball_weight(origin, R, outside=True), grid, ao)
        mu.append(m)
        nu.append(n)
        ga.append(g)
    p = critical_exponent(u.N)
    totals = {"dirichlet": quadratic_integral(u, "grad", None, grid, ao),
              "critical": power_integral(u, p, None, grid, ao),
              "hardy": quadratic_integral(u, "value", inverse_square_terms(
                  [WeightTerm(lambda X: np.ones(np.shape(X)[:-1]))], u.N), grid, ao)}
    if frame is None and spec.k.maxima_kind == "finite" and spec.k.maxima:
        frame = PeakFrame.from_k(spec.k)
    peaks = []
    r_ball = frame.r0 if frame is not None else 1.0
    if frame is not None:
        for j, a in enumerate(frame.maxima):
            m, n, g = _masses(u, spec, ball_weight(a, frame.r0), grid, ao)
            peaks.append({"j": j, "center": list(a), "radius": frame.r0,
                          "dirichlet": m, "critical": n, "hardy": g})
    m, n, g = _masses(u, spec, ball_weight(origin, r_ball), grid, ao)
    origin_ball = {"radius": r_ball, "dirichlet": m, "critical": n, "hardy": g}
    exps = {"mu": _fit_exponent(radii, mu), "nu": _fit_exponent(radii, nu),
            "gamma": _fit_exponent(radii, ga)}
    return ConcentrationReport(radii, mu, nu, ga, totals, exps, peaks, origin_ball)


def concentration_limits(N, k_sup, S=None):
    """(S^{N/2} ||k||^{-(N-2)/2}, S^{N/2} ||k||^{-N/2}): Dirichlet and critical mass limits."""
    from .thresholds import best_sobolev

    S = S if S is not None else best_sobolev(N)
    return S ** (N / 2.0) * k_sup ** (-(N - 2) / 2.0), S ** (N / 2.0) * k_sup ** (-N / 2.0)


def concentration_verify(sweep, frame, spec, radius_factor=0.1, tolerance=0.05,
                         fraction_target=0.9):
    """Check Dirac concentration at each peak along a decreasing coupling sweep.

    ``sweep`` is a list of (lambda, results) with results indexed by peak. For
    each peak the Dirichlet fraction in B_{r0/10}(a_j) must increase along the
    sweep and exceed ``fraction_target`` at the end; the total Dirichlet and
    critical masses are compared with their limits at the smallest coupling.
    """
    sweep = sorted(sweep, key=lambda item: -item[0])
    grid, ao = spec.grid, spec.angular_order
    p = critical_exponent(spec.N)
    D_lim, C_lim = concentration_limits(spec.N, spec.k.sup_norm)
    r = radius_factor * frame.r0
    per_peak = []
    for j in range(frame.m):
        rows = []
        for lam, results in sweep:
            if j >= len(results) or results[j] is None:
                continue
            u = results[j].field
            D = quadratic_integral(u, "grad", None, grid, ao)
            C = power_integral(u, p, None, grid, ao)
            inner = quadratic_integral(u, "grad", [ball_weight(frame.maxima[j], r)], grid, ao)
            rows.append({"lambda": lam, "fraction": inner / D, "dirichlet": D, "critical": C,
                         "dirichlet_rel_err": D / D_lim - 1, "critical_rel_err": C / C_lim - 1})
        fr = [row["fraction"] for row in rows]
        errs = [abs(row["dirichlet_rel_err"]) for row in rows]
        increasing = all(b > a for a, b in zip(fr, fr[1:]))
        approaching = all(b <= a for a, b in zip(errs, errs[1:]))
        final_ok = bool(rows) and fr[-1] > fraction_target
        total_ok = bool(rows) and errs[-1] <= tolerance
        per_peak.append({"j": j, "center": list(frame.maxima[j]), "rows": rows,
                         "fraction_increasing": increasing, "fraction_final_ok": final_ok,
                         "dirichlet_monotone": approaching, "dirichlet_within_tol": total_ok,
                         "passed": increasing and final_ok and total_ok})
    return {"radius": r, "dirichlet_limit": D_lim, "critical_limit": C_lim,
            "tolerance": tolerance, "fraction_target": fraction_target, "peaks": per_peak,
            "passed": all(pk["passed"] for pk in per_peak)}


def category_count(points, delta):
    """Number of delta-separated clusters (single linkage at distance < delta)."""
    P = np.asarray(points, dtype=float)
    if P.ndim == 1:
        P = P[:, None]
    n = len(P)
    parent = list(range(n))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(n):
        for j in range(i + 1, n):
            if np.linalg.norm(P[i] - P[j]) < delta:
                parent[find(i)] = find(j)
    return len({find(i) for i in range(n)})


def maxima_category(k, delta):
    """m(delta) for a preset: separated maxima points, or separated maximal spheres."""
    if k.maxima_kind == "finite":
        m = category_count(k.maxima, delta)
    elif k.maxima_kind == "infinite":
        m = category_count(np.asarray(k.maxima_radii)[:, None], delta)
    else:
        m = 0
    return {"delta": float(delta), "m": int(m), "kind": k.maxima_kind}

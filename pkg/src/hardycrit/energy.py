"""Variational quantities: J, Q, quotients, Nehari scaling, mountain-pass level.

Two evaluation paths exist. Closed-form fields (bubble sums) are integrated
with the multi-center quadrature, expanding quadratic terms pairwise.
Grid-sampled radial fields living on the problem grid use a consistent
discrete energy (:class:`RadialDiscretization`) whose exact gradient drives
the radial solver.
"""

import math
from dataclasses import asdict, dataclass

import numpy as np
import scipy.sparse as sp
from scipy.linalg import LinAlgError, solveh_banded

from .coefficients import WeightTerm
from .errors import (LinearSolveFailure, NonpositiveDenominator, NonpositiveForm,
                     NonpositiveNumerator, NotRadial, ZeroField)
from .fields import Field, GridSampled, critical_exponent, lambda_N
from .quadrature import DEFAULT_ANGULAR_ORDER, build_grid, integrate_centers, sphere_measure

TINY = 1e-300

ONE = WeightTerm(lambda X: np.ones(np.shape(X)[:-1]))


def _origin(N):
    return (0.0,) * N


def inverse_square_terms(terms, N):
    """Multiply each weight term by 1/|x|^2 (adds the origin as an anchor)."""
    out = []
    for t in terms:
        out.append(WeightTerm(
            lambda X, f=t.func: f(X) / np.einsum("...i,...i->...", X, X),
            anchors=(_origin(N),) + tuple(t.anchors), kinks=tuple(t.kinks)))
    return out


def _pair_kernel(ti, tj, kind):
    ci = np.asarray(ti.center)
    cj = np.asarray(tj.center)
    same = np.array_equal(ci, cj)

    def value(X):
        ri = np.linalg.norm(X - ci, axis=-1)
        rj = ri if same else np.linalg.norm(X - cj, axis=-1)
        return ti.profile.value(ri) * tj.profile.value(rj)

    def grad(X):
        di = X - ci
        ri = np.linalg.norm(di, axis=-1)
        if same:
            return ti.profile.deriv(ri) * tj.profile.deriv(ri)
        dj = X - cj
        rj = np.linalg.norm(dj, axis=-1)
        cos = np.einsum("...i,...i->...", di, dj) / np.maximum(ri * rj, TINY)
        return ti.profile.deriv(ri) * tj.profile.deriv(rj) * cos

    return grad if kind == "grad" else value


def quadratic_integral(u, kind="grad", terms=None, grid=None, angular_order=DEFAULT_ANGULAR_ORDER):
    """int W |grad u|^2 (kind="grad") or int W u^2 (kind="value"), W = sum of terms."""
    if u.is_zero:
        return 0.0
    grid = grid or build_grid(u.N)
    terms = terms if terms is not None else [ONE]
    total = 0.0
    T = [t for t in u.terms if t.amplitude != 0]
    for i, ti in enumerate(T):
        for j in range(i, len(T)):
            tj = T[j]
            kern = _pair_kernel(ti, tj, kind)
            fac = (1.0 if i == j else 2.0) * ti.amplitude * tj.amplitude
            for w in terms:
                f = (lambda X, kern=kern, w=w: w.func(X) * kern(X))
                anchors = (ti.center, tj.center) + tuple(w.anchors)
                total += fac * integrate_centers(grid, f, anchors, kinks=w.kinks,
                                                 angular_order=angular_order)
    return total


def power_integral(u, p, terms=None, grid=None, angular_order=DEFAULT_ANGULAR_ORDER):
    """int W |u|^p."""
    if u.is_zero:
        return 0.0
    grid = grid or build_grid(u.N)
    terms = terms if terms is not None else [ONE]
    centers = tuple(t.center for t in u.terms if t.amplitude != 0)
    total = 0.0
    for w in terms:
        f = (lambda X, w=w: w.func(X) * np.abs(u.values(X)) ** p)
        total += integrate_centers(grid, f, centers + tuple(w.anchors), kinks=w.kinks,
                                   angular_order=angular_order)
    return total


def dirichlet_integral(u, grid=None, angular_order=DEFAULT_ANGULAR_ORDER, terms=None):
    if _grid_radial(u, grid):
        return _disc_for_grid(grid).dirichlet(_nodal(u))
    return quadratic_integral(u, "grad", terms, grid, angular_order)


def hardy_integral(u, grid=None, angular_order=DEFAULT_ANGULAR_ORDER, terms=None):
    """int W u^2/|x|^2 (W = 1 by default)."""
    terms = inverse_square_terms(terms if terms is not None else [ONE], u.N)
    return quadratic_integral(u, "value", terms, grid, angular_order)


def critical_norm(u, grid=None, angular_order=DEFAULT_ANGULAR_ORDER):
    """||u||_{2*}."""
    p = critical_exponent(u.N)
    return power_integral(u, p, None, grid, angular_order) ** (1.0 / p)


@dataclass
class EnergyBreakdown:
    dirichlet: float
    hardy: float
    nonlinear: float
    J: float
    nehari_residual: float

    @staticmethod
    def from_terms(D, H, K, N):
        p = critical_exponent(N)
        return EnergyBreakdown(D, H, K, 0.5 * D - 0.5 * H - K / p, D - H - K)

    def to_dict(self):
        return asdict(self)


# ---------------------------------------------------------------- discrete radial energy

class RadialDiscretization:
    """Discrete J on nodal values u_i = u(rho_i) of a radial function.

    The grid is continued to all of s = log rho by geometric ghost values
    u_{-j} = u_0 r_in^j and u_{M-1+j} = u_{M-1} r_out^j, i.e. by the power laws
    rho^{-q} of the linearized equation at 0 and at infinity. On the infinite
    uniform grid the Dirichlet term uses fourth-order staggered differences
    and the Hardy and nonlinear terms the plain node sum; ghost contributions
    are geometric series summed in closed form and folded into the end
    weights. The Dirichlet form ``P`` is symmetric positive definite and
    serves as the preconditioner.
    """

    GHOSTS = 3
    STENCIL = (1 / 24, -27 / 24, 27 / 24, -1 / 24)

    def __init__(self, grid, A=0.0, h_values=None, k_values=None,
                 couplings=None, k_limits=None):
        N = grid.N
        self.grid = grid
        self.N = N
        hs = grid.step
        s0 = math.log(grid.nodes[0])
        rho = grid.nodes
        M = grid.M
        a = 0.5 * (N - 2)
        lam = lambda_N(N)
        p = critical_exponent(N)
        self.p = p
        omega = sphere_measure(N)
        h_values = np.zeros(M) if h_values is None else np.asarray(h_values, float)
        k_values = np.ones(M) if k_values is None else np.asarray(k_values, float)
        c0, cinf = couplings if couplings is not None else (A + h_values[0], A + h_values[-1])
        k0, kinf = k_limits if k_limits is not None else (k_values[0], k_values[-1])
        q_in = a * (1 - math.sqrt(1 - c0 / lam)) if c0 < lam else 0.0
        q_out = a * (1 + math.sqrt(1 - cinf / lam)) if cinf < lam else float(N - 2)
        self.q_in, self.q_out = q_in, q_out
        r_in = math.exp(q_in * hs)
        r_out = math.exp(-q_out * hs)
        G = self.GHOSTS
        c = self.STENCIL

        # extension matrix: extended index n + G for n in [-G, M-1+G]
        er, ec, ev = [], [], []
        for n in range(-G, M + G):
            if n < 0:
                er.append(n + G), ec.append(0), ev.append(r_in ** (-n))
            elif n >= M:
                er.append(n + G), ec.append(M - 1), ev.append(r_out ** (n - M + 1))
            else:
                er.append(n + G), ec.append(n), ev.append(1.0)
        E = sp.csr_matrix((ev, (er, ec)), shape=(M + 2 * G, M))
        cells = np.arange(-G + 1, M - 2 + G)
        br, bc, bv = [], [], []
        for row, k in enumerate(cells):
            for i, ci in enumerate(c):
                br.append(row), bc.append(k - 1 + i + G), bv.append(ci / hs)
        B = sp.csr_matrix((bv, (br, bc)), shape=(len(cells), M + 2 * G)) @ E
        mid = np.exp((N - 2) * (s0 + (cells + 0.5) * hs))
        P = (B.T @ sp.diags(omega * hs * mid) @ B).tocsr()

        # cells made only of ghosts, summed as geometric series
        K_out = M - 2 + G
        x_out = math.exp((N - 2) * hs) * r_out ** 2
        amp_out = sum(ci * r_out ** (i - 1) for i, ci in enumerate(c)) / hs
        first_out = math.exp((N - 2) * (s0 + (K_out + 0.5) * hs)) * r_out ** (2 * (K_out - (M - 1)))
        d_out = omega * hs * amp_out ** 2 * first_out / (1 - x_out) if x_out < 1 else 0.0
        K_in = -G
        x_in = math.exp(-(N - 2) * hs) * r_in ** 2
        amp_in = sum(ci * r_in ** (-(i - 1)) for i, ci in enumerate(c)) / hs
        first_in = math.exp((N - 2) * (s0 + (K_in + 0.5) * hs)) * r_in ** (-2 * K_in)
        d_in = omega * hs * amp_in ** 2 * first_in / (1 - x_in) if x_in < 1 else 0.0
        tails = np.zeros(M)
        tails[0], tails[-1] = d_in, d_out
        self.P = (P + sp.diags(tails)).tocsr()

        def geo(x):
            return x / (1 - x) if x < 1 else 0.0

        hard = omega * hs * rho ** (N - 2) * (A + h_values)
        nonl = omega * hs * rho ** N * k_values
        hard[0] += omega * hs * c0 * rho[0] ** (N - 2) * geo(math.exp(-(N - 2) * hs) * r_in ** 2)
        hard[-1] += omega * hs * cinf * rho[-1] ** (N - 2) * geo(math.exp((N - 2) * hs) * r_out ** 2)
        nonl[0] += omega * hs * k0 * rho[0] ** N * geo(math.exp(-N * hs) * r_in ** p)
        nonl[-1] += omega * hs * kinf * rho[-1] ** N * geo(math.exp(N * hs) * r_out ** p)
        self.hardy_w = hard
        self.nonlinear_w = nonl
        # upper banded storage for the Cholesky solve
        bw = 3
        ab = np.zeros((bw + 1, M))
        for d in range(bw + 1):
            ab[bw - d, d:] = self.P.diagonal(d)
        self._banded = ab

    @staticmethod
    def for_spec(spec):
        rho = spec.grid.nodes
        h_vals = spec.h.radial_values(rho)
        k_vals = spec.k.radial_values(rho)
        return RadialDiscretization(
            spec.grid, spec.A, h_vals, k_vals,
            couplings=(spec.A + spec.h.value_zero, spec.A + spec.h.value_inf),
            k_limits=(spec.k.value_zero, spec.k.value_inf))

    def dirichlet(self, u):
        return float(u @ (self.P @ u))

    def hardy(self, u):
        return float(np.dot(self.hardy_w, u * u))

    def nonlinear(self, u):
        return float(np.dot(self.nonlinear_w, np.abs(u) ** self.p))

    def breakdown(self, u):
        return EnergyBreakdown.from_terms(self.dirichlet(u), self.hardy(u), self.nonlinear(u), self.N)

    def J(self, u):
        return self.breakdown(u).J

    def change(self, u, v):
        """J(u + v) - J(u), evaluated from the increment without cancellation."""
        w = 2 * u + v
        dD = float(v @ (self.P @ w))
        dH = float(np.dot(self.hardy_w, v * w))
        au, aw = np.abs(u), np.abs(u + v)
        with np.errstate(divide="ignore", invalid="ignore"):
            rel = np.where(au > 0, (aw - au) / au, 0.0)
            dpow = np.where((au > 0) & (rel > -1),
                            au ** self.p * np.expm1(self.p * np.log1p(rel)),
                            aw ** self.p - au ** self.p)
        dK = float(np.dot(self.nonlinear_w, dpow))
        return 0.5 * dD - 0.5 * dH - dK / self.p

    def dJ(self, u):
        """Euclidean gradient of the discrete J with respect to the nodal values."""
        return self.P @ u - self.hardy_w * u - self.nonlinear_w * np.abs(u) ** (self.p - 2) * u

    def riesz(self, v):
        """Solve P g = v."""
        try:
            g = solveh_banded(self._banded, v, lower=False, check_finite=True)
        except (LinAlgError, ValueError) as exc:
            raise LinearSolveFailure(str(exc)) from exc
        if not np.all(np.isfinite(g)):
            raise LinearSolveFailure("non-finite Riesz representative")
        return g

    def gradient(self, u):
        """Riesz representative of J'(u) in the discrete Dirichlet inner product."""
        return self.riesz(self.dJ(u))

    def residual(self, u):
        """||J'(u)||_{D^{-1}} / ||u||_D (0 for u = 0)."""
        du = self.dJ(u)
        nu = self.dirichlet(u)
        if nu <= TINY:
            return 0.0
        g = self.riesz(du)
        return math.sqrt(max(float(g @ du), 0.0) / nu)


_DISC_CACHE = {}


def discretization(spec):
    key = id(spec)
    hit = _DISC_CACHE.get(key)
    if hit is None or hit[0] is not spec:
        if len(_DISC_CACHE) > 32:
            _DISC_CACHE.clear()
        hit = (spec, RadialDiscretization.for_spec(spec))
        _DISC_CACHE[key] = hit
    return hit[1]


def _disc_for_grid(grid):
    key = ("free",) + grid.key()
    hit = _DISC_CACHE.get(key)
    if hit is None:
        hit = (grid, RadialDiscretization(grid))
        _DISC_CACHE[key] = hit
    return hit[1]


def _grid_radial(u, grid):
    """True when u is one grid-sampled profile at the origin on ``grid``."""
    if grid is None or len(u.terms) != 1:
        return False
    t = u.terms[0]
    return (isinstance(t.profile, GridSampled) and t.profile.grid.same_as(grid)
            and all(c == 0 for c in t.center))


def _nodal(u):
    t = u.terms[0]
    return t.amplitude * t.profile.values


def grid_field(grid, values):
    return Field.single(GridSampled(grid, np.asarray(values, dtype=float)))


# ---------------------------------------------------------------- functionals

def _hardy_terms(spec):
    return inverse_square_terms(spec.h.weight_terms(shift=spec.A), spec.N)


def energy(spec, u):
    """Dirichlet, Hardy and nonlinear integrals of u and the value of J."""
    if u.is_zero:
        return EnergyBreakdown(0.0, 0.0, 0.0, 0.0, 0.0)
    if _grid_radial(u, spec.grid) and spec.is_radial:
        return discretization(spec).breakdown(_nodal(u))
    g, ao = spec.grid, spec.angular_order
    D = quadratic_integral(u, "grad", None, g, ao)
    H = quadratic_integral(u, "value", _hardy_terms(spec), g, ao) if _hardy_terms(spec) else 0.0
    K = power_integral(u, spec.p, spec.k.weight_terms(), g, ao) if spec.k.weight_terms() else 0.0
    return EnergyBreakdown.from_terms(D, H, K, spec.N)


def hardy_quotient(u, N=None, grid=None, angular_order=DEFAULT_ANGULAR_ORDER):
    """int |grad u|^2 / int u^2/|x|^2 (never below Lambda_N)."""
    if grid is None:
        grid = build_grid(N or u.N)
    D = dirichlet_integral(u, grid, angular_order)
    H = hardy_integral(u, grid, angular_order)
    if H <= TINY:
        raise ZeroField("Hardy denominator vanishes")
    return D / H


def sobolev_quotient_QA(A, u, N=None, grid=None, angular_order=DEFAULT_ANGULAR_ORDER):
    """Q_A(u) / ||u||_{2*}^2 with Q_A(u) = int |grad u|^2 - A int u^2/|x|^2."""
    if grid is None:
        grid = build_grid(N or u.N)
    norm = critical_norm(u, grid, angular_order)
    if norm ** 2 <= TINY:
        raise ZeroField("field has zero critical norm")
    D = dirichlet_integral(u, grid, angular_order)
    H = hardy_integral(u, grid, angular_order) if A != 0 else 0.0
    return (D - A * H) / norm ** 2


@dataclass
class NehariScaling:
    t: float
    energy: EnergyBreakdown

    def to_dict(self):
        return {"t": self.t, "energy": self.energy.to_dict()}


def _scaled_breakdown(e, t, N):
    p = critical_exponent(N)
    return EnergyBreakdown.from_terms(t * t * e.dirichlet, t * t * e.hardy,
                                      t ** p * e.nonlinear, N)


def nehari_scale(spec, u, base=None):
    """t > 0 with t u on the Nehari manifold, and the energy of t u."""
    e = base if base is not None else energy(spec, u)
    Q = e.dirichlet - e.hardy
    K = e.nonlinear
    if u.is_zero or Q <= TINY:
        raise NonpositiveNumerator(f"Q(u) = {Q} is not positive")
    if K <= TINY:
        raise NonpositiveDenominator(f"int k|u|^2* = {K} is not positive")
    t = (Q / K) ** ((spec.N - 2) / 4.0)
    return NehariScaling(t, _scaled_breakdown(e, t, spec.N))


def mountain_pass_level(spec, u, base=None):
    """max_{t>0} J(t u) = (1/N) (Q(u) / (int k|u|^2*)^{2/2*})^{N/2}."""
    e = base if base is not None else energy(spec, u)
    Q = e.dirichlet - e.hardy
    K = e.nonlinear
    if Q <= TINY:
        raise NonpositiveForm(f"Q(u) = {Q} is not positive")
    if K <= TINY:
        raise NonpositiveDenominator(f"int k|u|^2* = {K} is not positive")
    N = spec.N
    return (Q / K ** (2.0 / spec.p)) ** (N / 2.0) / N


def gradient_J(spec, u):
    """Riesz representative of J'(u) for a grid-sampled radial field."""
    if not spec.is_radial:
        raise NotRadial("the discrete gradient needs radial coefficients")
    if u.is_zero:
        return grid_field(spec.grid, np.zeros(spec.grid.M))
    if not _grid_radial(u, spec.grid):
        raise NotRadial("field must be a grid-sampled radial profile on the problem grid")
    g = discretization(spec).gradient(_nodal(u))
    return grid_field(spec.grid, g)

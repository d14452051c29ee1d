"""Quadrature over R^N for radial and multi-center integrands.

Radial integrals use the trapezoid rule in s = log(rho) on a geometric grid,
plus an analytic correction for the power-law tails beyond [r_min, r_max].

Integrands that depend only on the distances to a few "anchor" points are
reduced to low-dimensional integrals:

* one anchor: a 1-D radial integral;
* collinear anchors: space is split into the Voronoi slabs of the anchors and
  each slab is integrated in spherical coordinates about its own anchor, with
  composite Gauss-Legendre panels in s and Gauss-Legendre in the polar angle.
  Panel and angular breakpoints are placed at cell faces and at declared kink
  spheres, so piecewise-smooth weights (indicators, min(1, r)) stay accurate;
* coplanar anchors: a smooth partition of unity replaces the Voronoi split and
  the integral is three dimensional (rho, theta, phi). This path is slower and
  less accurate and ignores kinks.
"""

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import gammaln, log_softmax

from .errors import DimensionTooSmall, InvalidRange, NonFiniteIntegrand

DEFAULT_R_MIN = 1e-8
DEFAULT_R_MAX = 1e8
DEFAULT_M = 2000
DEFAULT_ANGULAR_ORDER = 64


def sphere_measure(N):
    """Surface measure of the unit sphere in R^N, 2 pi^{N/2} / Gamma(N/2)."""
    return math.exp(math.log(2.0) + 0.5 * N * math.log(math.pi) - gammaln(0.5 * N))


@dataclass(frozen=True, eq=False)
class RadialGrid:
    """Geometric nodes with weights for int_0^inf f(rho) rho^{N-1} d rho.

    ``weights[i] * nodes[i]**(N-1)`` is the trapezoid weight of node i for the
    measure rho^{N-1} d rho after the substitution s = log(rho).
    """

    N: int
    r_min: float
    r_max: float
    M: int
    nodes: np.ndarray
    weights: np.ndarray
    step: float

    @property
    def log_nodes(self):
        return np.log(self.nodes)

    def key(self):
        return (self.N, self.r_min, self.r_max, self.M)

    def same_as(self, other):
        return isinstance(other, RadialGrid) and self.key() == other.key()

    def refined(self, factor=2):
        return build_grid(self.N, self.r_min, self.r_max, factor * (self.M - 1) + 1)

    def with_dimension(self, N):
        return build_grid(N, self.r_min, self.r_max, self.M)

    def to_dict(self):
        return {"N": self.N, "r_min": self.r_min, "r_max": self.r_max, "M": self.M}


def build_grid(N, r_min=DEFAULT_R_MIN, r_max=DEFAULT_R_MAX, M=DEFAULT_M):
    """Geometric radial grid between r_min and r_max with M nodes."""
    if int(N) != N or N < 3:
        raise DimensionTooSmall(f"dimension must be an integer >= 3, got {N}")
    if not (0 < r_min < r_max) or not math.isfinite(r_max):
        raise InvalidRange(f"need 0 < r_min < r_max, got r_min={r_min}, r_max={r_max}")
    if int(M) != M or M < 16:
        raise InvalidRange(f"need at least 16 nodes, got M={M}")
    M = int(M)
    s = np.linspace(math.log(r_min), math.log(r_max), M)
    h = s[1] - s[0]
    rho = np.exp(s)
    rho[0], rho[-1] = r_min, r_max
    tw = np.full(M, h)
    tw[0] = tw[-1] = 0.5 * h
    return RadialGrid(int(N), float(r_min), float(r_max), M, rho, tw * rho, float(h))


def _tail(g_end, g_in, ds):
    """Integral beyond an end node assuming exponential decay in s.

    ``g_end`` is the s-integrand at the outermost node and ``g_in`` at the node
    a distance ``ds`` inward. Returns 0 where the data do not decay outward.
    """
    g_end = np.asarray(g_end, dtype=float)
    g_in = np.asarray(g_in, dtype=float)
    ok = (g_end * g_in > 0) & (np.abs(g_end) < np.abs(g_in))
    with np.errstate(divide="ignore", invalid="ignore"):
        alpha = np.log(g_in / g_end) / ds
        out = np.where(ok, g_end / alpha, 0.0)
    return out


def _check_finite(values):
    if not np.all(np.isfinite(values)):
        raise NonFiniteIntegrand("integrand is not finite at some quadrature node")


def radial_sum(grid, values, tails=True):
    """Apply the grid rule to nodal values of f (axis 0), without the sphere factor."""
    values = np.asarray(values, dtype=float)
    _check_finite(values)
    N = grid.N
    shape = (-1,) + (1,) * (values.ndim - 1)
    g = values * (grid.nodes ** N).reshape(shape)
    base = np.tensordot(grid.weights / grid.nodes, g, axes=(0, 0))
    if tails:
        base = base + _tail(g[0], g[1], grid.step) + _tail(g[-1], g[-2], grid.step)
    return base


def integrate_radial(grid, f, tails=True):
    """Integral of the radial function f(|x|) over R^N.

    ``f`` is a vectorized callable of rho or an array of nodal values. The
    base rule is linear in f; with ``tails`` the power-law decay observed at
    the two ends of the grid is extrapolated analytically.
    """
    values = f(grid.nodes) if callable(f) else f
    return sphere_measure(grid.N) * radial_sum(grid, values, tails=tails)


@lru_cache(maxsize=None)
def _leggauss(n):
    x, w = np.polynomial.legendre.leggauss(n)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def panel_rule(s_lo, s_hi, breaks=(), width=1.0, order=20):
    """Composite Gauss-Legendre rule on [s_lo, s_hi] with panels split at breaks."""
    pts = [b for b in breaks if s_lo < b < s_hi]
    edges = np.unique(np.concatenate(([s_lo], np.asarray(pts, dtype=float), [s_hi])))
    x, w = _leggauss(order)
    nodes, weights = [], []
    for a, b in zip(edges[:-1], edges[1:]):
        n = max(1, int(math.ceil((b - a) / width - 1e-9)))
        sub = np.linspace(a, b, n + 1)
        mid = 0.5 * (sub[:-1] + sub[1:])
        half = 0.5 * (sub[1:] - sub[:-1])
        nodes.append((mid[:, None] + half[:, None] * x).ravel())
        weights.append((half[:, None] * w).ravel())
    return np.concatenate(nodes), np.concatenate(weights)


def _panel_sum(s, ws, g, s_lo, s_hi, tails):
    total = np.dot(ws, g)
    if tails:
        lo = _tail(g[0], g[1], s[1] - s[0])
        hi = _tail(g[-1], g[-2], s[-1] - s[-2])
        # extrapolate from the outermost Gauss node to the panel end
        if lo != 0.0:
            alpha = math.log(g[1] / g[0]) / (s[1] - s[0])
            lo = g[0] * math.exp(-alpha * (s[0] - s_lo)) / alpha
        if hi != 0.0:
            alpha = math.log(g[-2] / g[-1]) / (s[-1] - s[-2])
            hi = g[-1] * math.exp(-alpha * (s_hi - s[-1])) / alpha
        total += lo + hi
    return total


def _dedupe(points, scale):
    tol = 1e-12 * (1.0 + scale)
    out = []
    for p in points:
        if not any(np.linalg.norm(p - q) <= tol for q in out):
            out.append(p)
    return out


def _orthonormal_completion(vectors, N):
    """Orthonormal basis of span(vectors) followed by one unit vector orthogonal to it."""
    basis = []
    for v in list(vectors) + list(np.eye(N)):
        w = np.array(v, dtype=float)
        for b in basis:
            w = w - np.dot(w, b) * b
        n = np.linalg.norm(w)
        if n > 1e-8:
            basis.append(w / n)
    return basis


def _affine_frame(points, N):
    """Return (origin, directions) spanning the affine hull of points."""
    p0 = points[0]
    rel = [p - p0 for p in points[1:]]
    scale = max([np.linalg.norm(r) for r in rel] + [1.0])
    dirs = []
    for r in sorted(rel, key=lambda v: -np.linalg.norm(v)):
        w = r.copy()
        for d in dirs:
            w = w - np.dot(w, d) * d
        n = np.linalg.norm(w)
        if n > 1e-10 * scale:
            dirs.append(w / n)
    return p0, dirs


@dataclass(frozen=True)
class QuadratureOptions:
    """Resolution of the multi-center engine."""

    angular_order: int = DEFAULT_ANGULAR_ORDER
    panel_order: int = 20
    panel_width: float = 1.0
    partition_beta: float = 4.0


def integrate_centers(grid, func, anchors, kinks=(), angular_order=DEFAULT_ANGULAR_ORDER,
                      tails=True, options=None):
    """Integral over R^N of ``func``, a function of the distances to ``anchors``.

    Parameters
    ----------
    grid : RadialGrid
        Supplies N and the radial range [r_min, r_max] about every anchor.
    func : callable
        Maps points of shape (..., N) to values of shape (...). It is only
        evaluated at representative points, so it must be invariant under the
        rotations that fix all anchors.
    anchors : sequence of points
        Centers of all singularities and non-smooth features of ``func``.
    kinks : sequence of (center, radius)
        Spheres across which ``func`` is not smooth; centers are added to the
        anchors.
    """
    N = grid.N
    opts = options or QuadratureOptions(angular_order=angular_order)
    pts = [np.asarray(a, dtype=float).reshape(N) for a in anchors]
    kinks = [(np.asarray(c, dtype=float).reshape(N), float(r)) for c, r in kinks]
    pts += [c for c, _ in kinks]
    if not pts:
        pts = [np.zeros(N)]
    scale = max(np.linalg.norm(p) for p in pts)
    pts = _dedupe(pts, scale)
    p0, dirs = _affine_frame(pts, N)
    if len(dirs) == 0:
        return _integrate_single(grid, func, p0, kinks, tails, opts)
    if len(dirs) == 1:
        return _integrate_collinear(grid, func, pts, dirs[0], kinks, tails, opts)
    if len(dirs) == 2 and N >= 3:
        return _integrate_planar(grid, func, pts, dirs, tails, opts)
    raise NotImplementedError("integrand anchors must lie in a common plane")


def _integrate_single(grid, func, p, kinks, tails, opts):
    N = grid.N
    e = np.zeros(N)
    e[0] = 1.0
    radii = [r for _, r in kinks if grid.r_min < r < grid.r_max]
    if not radii:
        vals = func(p + grid.nodes[:, None] * e)
        return integrate_radial(grid, vals, tails=tails)
    s_lo, s_hi = math.log(grid.r_min), math.log(grid.r_max)
    s, ws = panel_rule(s_lo, s_hi, np.log(radii), opts.panel_width, opts.panel_order)
    rho = np.exp(s)
    vals = np.asarray(func(p + rho[:, None] * e), dtype=float)
    _check_finite(vals)
    g = vals * rho ** N
    return sphere_measure(N) * _panel_sum(s, ws, g, s_lo, s_hi, tails)


def _integrate_collinear(grid, func, pts, axis, kinks, tails, opts):
    N = grid.N
    p0 = pts[0]
    z = np.array([np.dot(p - p0, axis) for p in pts])
    order = np.argsort(z)
    z = z[order]
    pts = [pts[i] for i in order]
    faces = 0.5 * (z[:-1] + z[1:])
    nhat = _orthonormal_completion([axis], N)[1]
    kz = []
    for c, R in kinks:
        off = c - p0 - np.dot(c - p0, axis) * axis
        if np.linalg.norm(off) > 1e-9 * (1.0 + np.linalg.norm(c)):
            raise ValueError("kink centers must lie on the anchor axis")
        kz.append((np.dot(c - p0, axis), R))
    s_lo, s_hi = math.log(grid.r_min), math.log(grid.r_max)
    xg, wg = _leggauss(opts.angular_order)
    omega = sphere_measure(N - 1)
    total = 0.0
    for idx, (zp, p) in enumerate(zip(z, pts)):
        lo_face = faces[idx - 1] - zp if idx > 0 else None
        hi_face = faces[idx] - zp if idx < len(faces) else None
        breaks = [abs(f) for f in (lo_face, hi_face) if f is not None]
        rel = []
        for zq, R in kz:
            d = zq - zp
            if abs(d) < 1e-12 * (1.0 + abs(zq)):
                breaks.append(R)
            else:
                breaks.extend([abs(abs(d) - R), abs(d) + R])
                rel.append((d, R))
        breaks = [b for b in breaks if b > 0]
        s, ws = panel_rule(s_lo, s_hi, np.log(breaks) if breaks else (),
                           opts.panel_width, opts.panel_order)
        rho = np.exp(s)
        cos_hi = np.ones_like(rho) if hi_face is None else np.clip(hi_face / rho, -1, 1)
        cos_lo = -np.ones_like(rho) if lo_face is None else np.clip(lo_face / rho, -1, 1)
        th_min = np.arccos(cos_hi)
        th_max = np.arccos(cos_lo)
        cuts = [th_min]
        for d, R in rel:
            c = np.clip((rho ** 2 + d ** 2 - R ** 2) / (2 * rho * d), -1, 1)
            cuts.append(np.clip(np.arccos(c), th_min, th_max))
        cuts.append(th_max)
        edges = np.sort(np.stack(cuts, axis=1), axis=1)
        mid = 0.5 * (edges[:, 1:] + edges[:, :-1])
        half = 0.5 * (edges[:, 1:] - edges[:, :-1])
        theta = mid[..., None] + half[..., None] * xg
        wt = half[..., None] * wg * np.sin(theta) ** (N - 2) * omega
        ct, st = np.cos(theta), np.sin(theta)
        X = p + rho[:, None, None, None] * (ct[..., None] * axis + st[..., None] * nhat)
        vals = np.asarray(func(X), dtype=float)
        _check_finite(vals)
        g = np.einsum("rkn,rkn->r", wt, vals) * rho ** N
        total += _panel_sum(s, ws, g, s_lo, s_hi, tails)
    return total


def _integrate_planar(grid, func, pts, dirs, tails, opts):
    N = grid.N
    e1, e2 = dirs
    nhat = _orthonormal_completion([e1, e2], N)[2]
    s_lo, s_hi = math.log(grid.r_min), math.log(grid.r_max)
    s, ws = panel_rule(s_lo, s_hi, (), opts.panel_width, opts.panel_order)
    rho = np.exp(s)
    n_t = opts.angular_order
    n_p = max(8, opts.angular_order // 2)
    xt, wt_ = _leggauss(n_t)
    xp, wp_ = _leggauss(n_p)
    theta = 0.5 * math.pi * (xt + 1)
    phi = 0.5 * math.pi * (xp + 1)
    wang = (0.5 * math.pi * wt_ * np.sin(theta) ** (N - 2))[:, None] * \
        (0.5 * math.pi * wp_ * np.sin(phi) ** (N - 3))[None, :]
    wang = wang * sphere_measure(N - 2)
    dirs_ang = (np.cos(theta)[:, None, None] * e1
                + (np.sin(theta)[:, None] * np.cos(phi)[None, :])[..., None] * e2
                + (np.sin(theta)[:, None] * np.sin(phi)[None, :])[..., None] * nhat)
    anchors = np.array(pts)
    total = 0.0
    for ip, p in enumerate(pts):
        X = p + rho[:, None, None, None] * dirs_ang
        dist = np.linalg.norm(X[..., None, :] - anchors, axis=-1)
        logw = log_softmax(-opts.partition_beta * np.log(np.maximum(dist, 1e-300)), axis=-1)
        part = np.exp(logw[..., ip])
        vals = np.asarray(func(X), dtype=float)
        _check_finite(vals)
        g = np.einsum("rtp,tp->r", part * vals, wang) * rho ** N
        total += _panel_sum(s, ws, g, s_lo, s_hi, tails)
    return total


def integrate_cross(grid, f, c1, g, c2, angular_order=DEFAULT_ANGULAR_ORDER):
    """Integral of f(|x - c1|) g(|x - c2|) over R^N."""
    c1 = np.asarray(c1, dtype=float)
    c2 = np.asarray(c2, dtype=float)

    def func(X):
        r1 = np.linalg.norm(X - c1, axis=-1)
        r2 = np.linalg.norm(X - c2, axis=-1)
        return f(r1) * g(r2)

    return integrate_centers(grid, func, [c1, c2], angular_order=angular_order)

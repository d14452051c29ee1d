"""Preset coefficient functions h and k and the hypothesis checkers.

Every preset is a constant background plus a finite sum of atoms, each atom
radial about its own center. Integrals of a preset against bubble fields
therefore only involve distances to a handful of points, which is what the
multi-center quadrature needs.
"""

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.optimize import minimize_scalar
from scipy.special import expit

from .errors import CouplingOutOfRange, InvalidParams, NotRadial, ThetaOutOfRange
from .fields import critical_exponent, ground_state, lambda_N, nu_of
from .quadrature import build_grid, integrate_centers


def smoothstep(t):
    """C^2 quintic step, 0 for t <= 0 and 1 for t >= 1."""
    t = np.clip(t, 0.0, 1.0)
    return t ** 3 * (t * (6 * t - 15) + 10)


def smoothstep_deriv(t):
    inside = (t > 0) & (t < 1)
    t = np.clip(t, 0.0, 1.0)
    return np.where(inside, 30 * t ** 2 * (1 - t) ** 2, 0.0)


# ---------------------------------------------------------------- atoms

class Atom:
    """Radial function f(r) about ``center``; r = |x - center|."""

    kink_radii = ()
    differentiable = True

    def value(self, r):
        raise NotImplementedError

    def deriv(self, r):
        raise NotImplementedError

    def to_dict(self):
        d = {k: v for k, v in self.__dict__.items()}
        d["atom"] = type(self).__name__
        return d


@dataclass(frozen=True)
class GaussianAtom(Atom):
    center: tuple
    height: float
    width: float

    def value(self, r):
        return self.height * np.exp(-(np.asarray(r) / self.width) ** 2)

    def deriv(self, r):
        r = np.asarray(r)
        return -2 * r / self.width ** 2 * self.value(r)


@dataclass(frozen=True)
class FlatTopAtom(Atom):
    """height * (1 - (r/width)^theta)_+^2: a peak whose deficit is 2 height (r/width)^theta."""

    center: tuple
    height: float
    width: float
    theta: float

    @property
    def kink_radii(self):
        return (self.width,)

    def value(self, r):
        t = (np.asarray(r, dtype=float) / self.width) ** self.theta
        return self.height * np.clip(1 - t, 0.0, None) ** 2

    def deriv(self, r):
        r = np.asarray(r, dtype=float)
        t = (r / self.width) ** self.theta
        with np.errstate(divide="ignore", invalid="ignore"):
            d = -2 * self.height * (1 - t) * self.theta * t / r
        return np.where((r > 0) & (t < 1), d, 0.0)


@dataclass(frozen=True)
class NearZeroAtom(Atom):
    """c1 r^p (1 - S) - dip S, with S a smooth step from delta to 2 delta."""

    center: tuple
    c1: float
    exponent: float
    delta: float
    dip: float = 0.0

    @property
    def kink_radii(self):
        return (self.delta, 2 * self.delta)

    def value(self, r):
        r = np.asarray(r, dtype=float)
        S = smoothstep(r / self.delta - 1)
        return self.c1 * r ** self.exponent * (1 - S) - self.dip * S

    def deriv(self, r):
        r = np.asarray(r, dtype=float)
        S = smoothstep(r / self.delta - 1)
        dS = smoothstep_deriv(r / self.delta - 1) / self.delta
        with np.errstate(divide="ignore", invalid="ignore"):
            pw = np.where(r > 0, self.c1 * self.exponent * r ** (self.exponent - 1), 0.0)
        return pw * (1 - S) - (self.c1 * r ** self.exponent + self.dip) * dS


@dataclass(frozen=True)
class InfinityAtom(Atom):
    """c2 r^{-p} S - dip (1 - S), with S a smooth step from R to 2R."""

    center: tuple
    c2: float
    exponent: float
    R: float
    dip: float = 0.0

    @property
    def kink_radii(self):
        return (self.R, 2 * self.R)

    def value(self, r):
        r = np.asarray(r, dtype=float)
        S = smoothstep(r / self.R - 1)
        with np.errstate(divide="ignore"):
            pw = np.where(S > 0, self.c2 * np.maximum(r, self.R) ** (-self.exponent), 0.0)
        return pw * S - self.dip * (1 - S)

    def deriv(self, r):
        r = np.asarray(r, dtype=float)
        S = smoothstep(r / self.R - 1)
        dS = smoothstep_deriv(r / self.R - 1) / self.R
        rr = np.maximum(r, self.R)
        pw = self.c2 * rr ** (-self.exponent)
        dpw = -self.exponent * pw / rr
        return np.where(S > 0, dpw * S, 0.0) + (pw + self.dip) * dS


@dataclass(frozen=True)
class HillAtom(Atom):
    """amplitude * r^p / (scale^p + r^p): radially nondecreasing for p >= 0."""

    center: tuple
    amplitude: float
    exponent: float
    scale: float = 1.0

    def value(self, r):
        r = np.asarray(r, dtype=float)
        with np.errstate(divide="ignore"):
            z = self.exponent * (np.log(r) - math.log(self.scale))
        return self.amplitude * expit(z) if self.exponent != 0 else self.amplitude * 0.5 + 0 * r

    def deriv(self, r):
        r = np.asarray(r, dtype=float)
        if self.exponent == 0:
            return 0 * r
        with np.errstate(divide="ignore", invalid="ignore"):
            z = self.exponent * (np.log(r) - math.log(self.scale))
            q = expit(z)
            return np.where(r > 0, self.amplitude * self.exponent * q * (1 - q) / r, 0.0)


@dataclass(frozen=True)
class K1Atom(Atom):
    """eta(r) (1 - |sin(1/(r - 1/2))|^theta) for r <= 1, then k(1)/r^2.

    eta is the quintic smooth step on [0, 1/2]. The maxima (value 1) sit on
    the spheres r_n = 1/2 + 1/(n pi), accumulating at r = 1/2.
    """

    center: tuple
    theta: float
    differentiable = False

    @property
    def kink_radii(self):
        return (0.5, 1.0)

    def _inner(self, r):
        eta = smoothstep(2 * r)
        with np.errstate(divide="ignore", invalid="ignore"):
            osc = 1 - np.abs(np.sin(1.0 / (r - 0.5))) ** self.theta
        return np.where(r == 0.5, 1.0, eta * osc)

    def value(self, r):
        r = np.asarray(r, dtype=float)
        edge = float(self._inner(np.array(1.0)))
        with np.errstate(divide="ignore"):
            return np.where(r <= 1.0, self._inner(np.minimum(r, 1.0)), edge / np.maximum(r, 1.0) ** 2)

    def deriv(self, r):
        raise NotImplementedError("the oscillating example is not differentiable at r = 1/2")


ATOM_TYPES = {c.__name__: c for c in
              (GaussianAtom, FlatTopAtom, NearZeroAtom, InfinityAtom, HillAtom, K1Atom)}


# ---------------------------------------------------------------- profiles

@dataclass(frozen=True)
class WeightTerm:
    """One additive piece of a weight function with its quadrature anchors."""

    func: object
    anchors: tuple = ()
    kinks: tuple = ()


@dataclass(frozen=True)
class CoefficientProfile:
    """A preset coefficient: background + sum of radial atoms.

    ``value_zero`` and ``value_inf`` are the values at 0 and at infinity
    (declared by the preset), ``max_value``/``min_value`` its extreme values,
    ``maxima`` the points where the maximum is attained when there are finitely
    many, and ``maxima_radii`` the radii of maximal spheres for the
    oscillating example (``maxima_kind == "infinite"``).
    """

    tag: str
    params: dict
    N: int
    background: float
    atoms: tuple
    value_zero: float
    value_inf: float
    max_value: float
    min_value: float
    maxima: tuple = ()
    maxima_kind: str = "none"
    maxima_radii: tuple = ()
    theta: float = None
    differentiable: bool = True

    # -- pointwise data
    @property
    def sup_norm(self):
        return max(abs(self.max_value), abs(self.min_value))

    @property
    def limsup_at_infinity(self):
        return self.value_inf

    @property
    def value_at_zero(self):
        return self.value_zero

    @property
    def radial_flag(self):
        return all(np.allclose(a.center, 0.0) for a in self.atoms)

    @property
    def is_constant(self):
        return len(self.atoms) == 0

    def value_at(self, X):
        X = np.asarray(X, dtype=float)
        out = np.full(X.shape[:-1], float(self.background))
        for a in self.atoms:
            out = out + a.value(np.linalg.norm(X - np.asarray(a.center), axis=-1))
        return out

    def radial_values(self, r):
        """Values along the first coordinate axis (the profile of a radial preset)."""
        r = np.asarray(r, dtype=float)
        X = np.zeros(r.shape + (self.N,))
        X[..., 0] = r
        return self.value_at(X)

    def pohozaev_density(self, X):
        """<grad coeff(x), x>."""
        if not self.differentiable:
            from .errors import NondifferentiablePreset
            raise NondifferentiablePreset(f"preset {self.tag!r} is not differentiable")
        X = np.asarray(X, dtype=float)
        out = np.zeros(X.shape[:-1])
        for a in self.atoms:
            d = X - np.asarray(a.center)
            r = np.linalg.norm(d, axis=-1)
            with np.errstate(divide="ignore", invalid="ignore"):
                fac = np.where(r > 0, a.deriv(r) / r, 0.0)
            out = out + fac * np.einsum("...i,...i->...", d, X)
        return out

    def weight_terms(self, shift=0.0):
        """Additive decomposition of (coeff + shift) for quadrature."""
        terms = []
        b = self.background + shift
        if b != 0:
            terms.append(WeightTerm(lambda X, b=b: np.full(np.shape(X)[:-1], b)))
        for a in self.atoms:
            c = np.asarray(a.center)
            terms.append(WeightTerm(
                lambda X, a=a, c=c: a.value(np.linalg.norm(X - c, axis=-1)),
                anchors=(tuple(a.center),),
                kinks=tuple((tuple(a.center), R) for R in a.kink_radii)))
        return terms

    def pohozaev_terms(self):
        if not self.differentiable:
            from .errors import NondifferentiablePreset
            raise NondifferentiablePreset(f"preset {self.tag!r} is not differentiable")
        terms = []
        for a in self.atoms:
            c = np.asarray(a.center)

            def f(X, a=a, c=c):
                d = X - c
                r = np.linalg.norm(d, axis=-1)
                with np.errstate(divide="ignore", invalid="ignore"):
                    fac = np.where(r > 0, a.deriv(r) / r, 0.0)
                return fac * np.einsum("...i,...i->...", d, X)

            terms.append(WeightTerm(f, anchors=(tuple(a.center), tuple(np.zeros(self.N))),
                                    kinks=tuple((tuple(a.center), R) for R in a.kink_radii)))
        return terms

    # -- algebra used by invariance tests
    def shifted(self, c):
        return replace(self, tag=self.tag, background=self.background + c,
                       value_zero=self.value_zero + c, value_inf=self.value_inf + c,
                       max_value=self.max_value + c, min_value=self.min_value + c,
                       params=dict(self.params, shift=self.params.get("shift", 0.0) + c))

    def times(self, c):
        if not c > 0:
            raise InvalidParams("only positive multiples are supported")
        atoms = tuple(_scale_atom(a, c) for a in self.atoms)
        return replace(self, background=self.background * c, atoms=atoms,
                       value_zero=self.value_zero * c, value_inf=self.value_inf * c,
                       max_value=self.max_value * c, min_value=self.min_value * c,
                       params=dict(self.params, factor=self.params.get("factor", 1.0) * c))

    def positive_part_values(self):
        """(k_+(0), k_+(inf), ||k_+||_inf)."""
        return max(self.value_zero, 0.0), max(self.value_inf, 0.0), max(self.max_value, 0.0)

    def to_dict(self):
        return {"tag": self.tag, "params": _jsonable(self.params), "N": self.N,
                "value_at_zero": self.value_zero, "limit_at_infinity": self.value_inf,
                "sup_norm": self.sup_norm, "max_value": self.max_value,
                "maxima": [list(a) for a in self.maxima], "maxima_kind": self.maxima_kind,
                "maxima_radii": list(self.maxima_radii)}


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, np.ndarray)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    return obj


class _Scaled(Atom):
    def __init__(self, atom, c):
        self.atom, self.c = atom, c
        self.center = atom.center
        self.kink_radii = atom.kink_radii
        self.differentiable = atom.differentiable

    def value(self, r):
        return self.c * self.atom.value(r)

    def deriv(self, r):
        return self.c * self.atom.deriv(r)


def _scale_atom(a, c):
    return _Scaled(a, c)


def _point(x, N, name):
    p = np.zeros(N)
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if x.size > N:
        if np.any(x[N:] != 0):
            raise InvalidParams(f"{name} has more than {N} nonzero coordinates")
        x = x[:N]
    p[: x.size] = x
    return tuple(float(v) for v in p)


def _radial_extrema(atom, background, r_hi=1e6):
    """Max and min of background + atom(r) over r >= 0 by sampling and refinement."""
    r = np.concatenate(([0.0], np.geomspace(1e-9, r_hi, 4001), np.linspace(0, 10, 4001)))
    r = np.unique(r)
    v = background + atom.value(r)
    out = []
    for sign in (1.0, -1.0):
        i = int(np.argmax(sign * v))
        best = sign * v[i]
        lo, hi = r[max(i - 1, 0)], r[min(i + 1, len(r) - 1)]
        if hi > lo:
            res = minimize_scalar(lambda s: -sign * (background + float(atom.value(s))),
                                  bounds=(lo, hi), method="bounded", options={"xatol": 1e-14})
            best = max(best, -res.fun)
        out.append(sign * best)
    return out[0], out[1]


def _check_theta(theta, N):
    if not (2 < theta < N):
        raise ThetaOutOfRange(f"need 2 < theta < N = {N}, got theta={theta}")


def _require(params, *names):
    missing = [n for n in names if n not in params]
    if missing:
        raise InvalidParams(f"missing parameters: {', '.join(missing)}")


H_TAGS = ("constant", "zero", "bump_near_zero", "bump_at_infinity", "radial_power", "gaussian_bump")
K_TAGS = ("constant_one", "constant", "two_peak", "m_peak", "k1_example", "sign_changing",
          "bump_near_zero", "gaussian_bump")


def _constant(tag, params, N, c):
    return CoefficientProfile(tag, dict(params), N, float(c), (), float(c), float(c), float(c), float(c))


def _single_atom(tag, params, N, background, atom, value_inf, differentiable=True):
    mx, mn = _radial_extrema(atom, background)
    v0 = float(background + atom.value(np.array(0.0)))
    mx = max(mx, v0, value_inf)
    mn = min(mn, v0, value_inf)
    return CoefficientProfile(tag, dict(params), N, float(background), (atom,), v0,
                              float(value_inf), float(mx), float(mn), differentiable=differentiable)


def _near_zero(tag, params, N):
    _require(params, "c1", "exponent", "delta")
    base = float(params.get("h0", params.get("k0", params.get("value_at_zero", 0.0))))
    c1, p, delta = float(params["c1"]), float(params["exponent"]), float(params["delta"])
    dip = float(params.get("dip", 0.0))
    if not (p > 0 and delta > 0 and dip >= 0):
        raise InvalidParams("need exponent > 0, delta > 0, dip >= 0")
    atom = NearZeroAtom(_point(0, N, "center"), c1, p, delta, dip)
    return _single_atom(tag, params, N, base, atom, base - dip)


def make_h_preset(tag, params=None, N=3):
    """Build an h coefficient from a preset tag and named parameters.

    Tags: ``zero``; ``constant(value)``;
    ``bump_near_zero(h0, c1, exponent, delta, dip=0)`` equal to
    h0 + c1 |x|^exponent near 0, smoothly capped to h0 - dip beyond 2 delta;
    ``bump_at_infinity(h_inf, c2, exponent, R, dip=0)`` equal to
    h_inf + c2 |x|^{-exponent} beyond 2R and h_inf - dip inside R;
    ``radial_power(amplitude, exponent, scale=1)`` the increasing profile
    amplitude |x|^p/(scale^p + |x|^p) (constant amplitude/2 when p = 0);
    ``gaussian_bump(center, width, height, background=0)``.
    """
    params = dict(params or {})
    lambda_N(N)
    if tag == "zero":
        return _constant(tag, params, N, 0.0)
    if tag == "constant":
        _require(params, "value")
        return _constant(tag, params, N, float(params["value"]))
    if tag == "bump_near_zero":
        return _near_zero(tag, params, N)
    if tag == "bump_at_infinity":
        _require(params, "c2", "exponent", "R")
        base = float(params.get("h_inf", 0.0))
        c2, p, R = float(params["c2"]), float(params["exponent"]), float(params["R"])
        dip = float(params.get("dip", 0.0))
        if not (p > 0 and R > 0 and dip >= 0):
            raise InvalidParams("need exponent > 0, R > 0, dip >= 0")
        atom = InfinityAtom(_point(0, N, "center"), c2, p, R, dip)
        return _single_atom(tag, params, N, base, atom, base)
    if tag == "radial_power":
        _require(params, "amplitude", "exponent")
        amp, p = float(params["amplitude"]), float(params["exponent"])
        scale = float(params.get("scale", 1.0))
        if p < 0 or scale <= 0:
            raise InvalidParams("need exponent >= 0 and scale > 0")
        atom = HillAtom(_point(0, N, "center"), amp, p, scale)
        if p == 0:
            return _constant(tag, params, N, 0.5 * amp)
        return CoefficientProfile(tag, dict(params), N, 0.0, (atom,), 0.0, amp,
                                  max(amp, 0.0), min(amp, 0.0))
    if tag == "gaussian_bump":
        return _gaussian(tag, params, N)
    raise InvalidParams(f"unknown h preset {tag!r}; available: {', '.join(H_TAGS)}")


def _gaussian(tag, params, N):
    _require(params, "width", "height")
    width, height = float(params["width"]), float(params["height"])
    bg = float(params.get("background", 0.0))
    if width <= 0:
        raise InvalidParams("width must be positive")
    c = _point(params.get("center", 0.0), N, "center")
    atom = GaussianAtom(c, height, width)
    v0 = float(bg + atom.value(np.linalg.norm(c)))
    mx, mn = max(bg, bg + height), min(bg, bg + height)
    maxima = (c,) if height > 0 else ()
    return CoefficientProfile(tag, dict(params), N, bg, (atom,), v0, bg, mx, mn,
                              maxima=maxima, maxima_kind="finite" if maxima else "none")


def _peaks(tag, params, N, centers, theta, width, height, bg, extra_atoms=(), min_value=None):
    _check_theta(theta, N)
    if width <= 0 or height <= 0:
        raise InvalidParams("width and height must be positive")
    if bg < 0:
        raise InvalidParams("background must be nonnegative")
    pts = [np.asarray(c) for c in centers]
    for i in range(len(pts)):
        for j in range(i):
            if np.linalg.norm(pts[i] - pts[j]) <= 2 * width:
                raise InvalidParams("peak supports overlap; reduce width")
    atoms = tuple(FlatTopAtom(c, height, width, theta) for c in centers) + tuple(extra_atoms)
    prof = CoefficientProfile(tag, dict(params), N, bg, atoms, 0.0, bg, bg + height,
                              bg if min_value is None else min_value,
                              maxima=tuple(centers), maxima_kind="finite", theta=theta)
    v0 = float(prof.value_at(np.zeros(N)))
    return replace(prof, value_zero=v0)


def make_k_preset(tag, params=None, N=3):
    """Build a k coefficient from a preset tag and named parameters.

    Tags: ``constant_one``; ``constant(value)``;
    ``two_peak(a1, a2, theta, width=0.5, height=1, background=0)`` with flat
    tops height*(1 - (r/width)^theta)^2 at a1 and a2;
    ``m_peak(m, radius=2, theta, width=0.5, height=1, background=0)`` with m
    peaks on a circle in the (x1, x2) plane;
    ``k1_example(theta)`` the oscillating radial example with infinitely many
    maximal spheres; ``sign_changing(a1, a2, theta, width, height, depth,
    hole_width)`` two peaks minus a compact dip at the origin;
    ``bump_near_zero(k0, c1, exponent, delta, dip=0)``; ``gaussian_bump``.
    """
    params = dict(params or {})
    lambda_N(N)
    if tag == "constant_one":
        return _constant(tag, params, N, 1.0)
    if tag == "constant":
        _require(params, "value")
        return _constant(tag, params, N, float(params["value"]))
    if tag in ("two_peak", "sign_changing"):
        _require(params, "a1", "a2", "theta")
        a1, a2 = _point(params["a1"], N, "a1"), _point(params["a2"], N, "a2")
        theta = float(params["theta"])
        width = float(params.get("width", 0.5))
        height = float(params.get("height", 1.0))
        if tag == "two_peak":
            bg = float(params.get("background", 0.0))
            return _peaks(tag, params, N, (a1, a2), theta, width, height, bg)
        depth = float(params.get("depth", 0.5 * height))
        hole = float(params.get("hole_width", 0.5))
        if not (0 < depth <= height) or hole <= 0:
            raise InvalidParams("need 0 < depth <= height and hole_width > 0")
        for a in (a1, a2):
            if np.linalg.norm(a) <= hole + width:
                raise InvalidParams("dip at the origin overlaps a peak")
        dip = FlatTopAtom(_point(0, N, "center"), -depth, hole, 2.0)
        return _peaks(tag, params, N, (a1, a2), theta, width, height, 0.0,
                      extra_atoms=(dip,), min_value=-depth)
    if tag == "m_peak":
        _require(params, "m", "theta")
        m = int(params["m"])
        if m < 1:
            raise InvalidParams("m must be at least 1")
        radius = float(params.get("radius", 2.0))
        centers = []
        for j in range(m):
            ang = 2 * math.pi * j / m
            centers.append(_point([radius * math.cos(ang), radius * math.sin(ang)], N, "peak"))
        return _peaks(tag, params, N, tuple(centers), float(params["theta"]),
                      float(params.get("width", 0.5)), float(params.get("height", 1.0)),
                      float(params.get("background", 0.0)))
    if tag == "k1_example":
        theta = float(params.get("theta", 2.5))
        if theta <= 0:
            raise InvalidParams("theta must be positive")
        atom = K1Atom(_point(0, N, "center"), theta)
        n_max = int(params.get("listed_maxima", 50))
        radii = tuple(0.5 + 1.0 / (n * math.pi) for n in range(1, n_max + 1))
        return CoefficientProfile(tag, dict(params), N, 0.0, (atom,), 0.0, 0.0, 1.0, 0.0,
                                  maxima=(), maxima_kind="infinite", maxima_radii=radii,
                                  differentiable=False)
    if tag == "bump_near_zero":
        return _near_zero(tag, params, N)
    if tag == "gaussian_bump":
        return _gaussian(tag, params, N)
    raise InvalidParams(f"unknown k preset {tag!r}; available: {', '.join(K_TAGS)}")


# ---------------------------------------------------------------- hypotheses

@dataclass
class HypothesisEntry:
    passed: bool
    witness: dict = field(default_factory=dict)

    def to_dict(self):
        return {"passed": bool(self.passed), "witness": _jsonable(self.witness)}


@dataclass
class HypothesisReport:
    entries: dict

    def __getitem__(self, name):
        return self.entries[name]

    @property
    def all_pass(self):
        return all(e.passed for e in self.entries.values())

    def failed(self):
        return [k for k, e in self.entries.items() if not e.passed]

    def to_dict(self):
        return {k: e.to_dict() for k, e in self.entries.items()}


def probe_points(N, n=2000, r_min=1e-4, r_max=1e4, seed=0):
    """Deterministic probe points: log-uniform radii, uniform directions."""
    rng = np.random.default_rng(seed)
    r = np.exp(rng.uniform(math.log(r_min), math.log(r_max), n))
    d = rng.standard_normal((n, N))
    d /= np.linalg.norm(d, axis=1, keepdims=True)
    return r[:, None] * d


def _probe_set(coeff, n=2000):
    pts = [probe_points(coeff.N, n), np.zeros((1, coeff.N))]
    for a in coeff.atoms:
        c = np.asarray(a.center)
        pts.append(c[None, :])
        pts.append(c + probe_points(coeff.N, 200, 1e-4, 10.0, seed=1))
    for a in coeff.maxima:
        pts.append(np.asarray(a)[None, :])
    return np.concatenate(pts)


def check_h_hypotheses(h, A, N):
    """Report on (h0) A + h(0) > 0, (h1) boundedness, (h2) A + ||h|| <= Lambda_N - c0."""
    lam = lambda_N(N)
    entries = {}
    a0 = A + h.value_zero
    entries["h0"] = HypothesisEntry(a0 > 0, {"A_plus_h0": a0, "point": [0.0] * N})
    pts = _probe_set(h)
    vals = h.value_at(pts)
    finite = bool(np.all(np.isfinite(vals)))
    worst = int(np.argmax(np.abs(np.where(np.isfinite(vals), vals, np.inf))))
    bounded = finite and float(np.max(np.abs(vals))) <= h.sup_norm + 1e-12
    w1 = {"sup_norm": h.sup_norm, "max_abs_sampled": float(np.max(np.abs(vals))) if finite else math.inf,
          "probes": int(len(pts))}
    if not bounded:
        w1["point"] = pts[worst].tolist()
    entries["h1"] = HypothesisEntry(bounded, w1)
    c0 = lam - A - h.sup_norm
    entries["h2"] = HypothesisEntry(c0 > 0, {"c0": c0, "Lambda_N": lam, "A": A, "sup_norm": h.sup_norm})
    return HypothesisReport(entries)


SHELL_POWERS = tuple(range(4, 13))


def k2_slope(k, a, n_dirs=16, seed=0):
    """Least-squares log-log slope of k(a) - k(x) on the shells |x - a| = 2^-p."""
    N = k.N
    rng = np.random.default_rng(seed)
    d = rng.standard_normal((n_dirs, N))
    d /= np.linalg.norm(d, axis=1, keepdims=True)
    ka = float(k.value_at(np.asarray(a)))
    r = np.array([2.0 ** -p for p in SHELL_POWERS])
    pts = np.asarray(a) + r[:, None, None] * d[None, :, :]
    deficit = ka - k.value_at(pts)
    mean_def = deficit.mean(axis=1)
    if np.any(deficit <= 0):
        return None, r, mean_def
    slope = np.polyfit(np.log(r), np.log(mean_def), 1)[0]
    return float(slope), r, mean_def


def check_k_hypotheses(k, N):
    """Report on (K0)-(K3) with witnesses."""
    entries = {}
    top = max(k.value_zero, k.value_inf)
    entries["K0"] = HypothesisEntry(k.sup_norm > top, {
        "sup_norm": k.sup_norm, "k0": k.value_zero, "k_inf": k.value_inf})
    finite = k.maxima_kind == "finite" and len(k.maxima) > 0
    entries["K1"] = HypothesisEntry(finite, {
        "kind": k.maxima_kind, "count": len(k.maxima) if finite else None,
        "maxima": [list(a) for a in k.maxima],
        "first_maximal_radii": list(k.maxima_radii[:5])})
    if finite:
        slopes, ok, bad = [], True, None
        for a in k.maxima:
            s, r, dfc = k2_slope(k, a)
            slopes.append(s)
            if s is None:
                ok, bad = False, {"peak": list(a), "reason": "nonpositive deficit on a shell"}
                break
        theta = k.theta
        if ok:
            smin = min(slopes)
            if theta is None:
                theta = min(smin, N - 1e-9)
                ok = smin > 2
            else:
                ok = (2 < theta < N) and smin >= theta - 0.05
        w = {"theta": theta, "slopes": slopes, "shells": [2.0 ** -p for p in SHELL_POWERS]}
        if bad:
            w.update(bad)
        entries["K2"] = HypothesisEntry(ok, w)
    else:
        entries["K2"] = HypothesisEntry(False, {"reason": "maxima set is not finite"})
    entries["K3"] = _check_k3(k)
    return HypothesisReport(entries)


def _check_k3(k):
    N = k.N
    if k.maxima_kind == "finite":
        reach = max([np.linalg.norm(a) for a in k.maxima] + [0.0])
    elif k.maxima_kind == "infinite":
        reach = max(k.maxima_radii)
    else:
        reach = 0.0
    dirs = probe_points(N, 256, 1.0, 1.0, seed=2)
    for a in k.atoms:
        c = np.asarray(a.center)
        if np.linalg.norm(c) > 0:
            dirs = np.concatenate([dirs, (c / np.linalg.norm(c))[None, :]])
    R0 = 2.0
    while R0 <= 2.0 ** 12:
        if reach < R0 - 1:
            radii = R0 * 2.0 ** (np.arange(0, 80) / 4.0)
            pts = radii[:, None, None] * dirs[None, :, :]
            tail = max(float(np.max(np.abs(k.value_at(pts)))), abs(k.value_inf))
            d0 = k.sup_norm - tail
            if d0 > 0:
                return HypothesisEntry(True, {"R0": R0, "d0": d0, "tail_sup": tail})
        R0 *= 2
    return HypothesisEntry(False, {"reason": "no R0 <= 4096 with a positive gap", "reach": reach})


# ---------------------------------------------------------------- existence integrals

def condition_H_integral(h, A, N, mu, grid=None, angular_order=64, normalized=False):
    """int (h - H) w_mu^2/|x|^2 dx, w_mu the ground state at coupling A + H.

    With ``normalized=True`` the value is divided by mu^{nu (N-2)}, nu the
    exponent of A + H. For h - H ~ c |x|^{nu (N-2)} near the origin this
    quantity grows without bound as mu -> 0 when the integral diverges, which
    is the actual existence condition; the raw value itself tends to 0.
    """
    H = max(h.value_zero, h.value_inf)
    lam = lambda_N(N)
    if not (0 < A + H < lam):
        raise CouplingOutOfRange(f"need 0 < A + H < Lambda_N, got A + H = {A + H}")
    w = ground_state(N, A + H, mu)
    grid = grid or build_grid(N)
    total = 0.0
    origin = tuple(np.zeros(N))
    for term in h.weight_terms(shift=-H):
        def f(X, term=term):
            r = np.linalg.norm(X, axis=-1)
            return term.func(X) * w.value(r) ** 2 / r ** 2
        total += integrate_centers(grid, f, (origin,) + term.anchors, kinks=term.kinks,
                                   angular_order=angular_order)
    if normalized:
        total /= mu ** (nu_of(A + H, N) * (N - 2))
    return total


def condition_k_integral(k, lam, N, mu, grid=None, angular_order=64):
    """int (k - max(k(0), k(inf))) w_mu^{2*} dx, w_mu the ground state at coupling lam."""
    if not (0 < lam < lambda_N(N)):
        raise CouplingOutOfRange(f"need 0 < lambda < Lambda_N, got {lam}")
    if not k.radial_flag:
        raise NotRadial("condition_k_integral needs a radial k")
    top = max(k.value_zero, k.value_inf)
    w = ground_state(N, lam, mu)
    p = critical_exponent(N)
    grid = grid or build_grid(N)
    total = 0.0
    for term in k.weight_terms(shift=-top):
        def f(X, term=term):
            return term.func(X) * w.value(np.linalg.norm(X, axis=-1)) ** p
        total += integrate_centers(grid, f, ((0.0,) * N,) + term.anchors, kinks=term.kinks,
                                   angular_order=angular_order)
    return total

"""Closed-form solution families and the bubble-sum field representation.

A :class:`Field` is a finite sum ``sum_i t_i * phi_i(|x - c_i|)`` of radial
profiles about centers. Profiles are the ground states of the unperturbed
Hardy-Sobolev problem, the normalized Talenti bubbles, or grid-sampled radial
functions produced by the radial solver.
"""

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.interpolate import PchipInterpolator
from scipy.special import expit

from .errors import CouplingOutOfRange, DimensionTooSmall, NonpositiveScale, SingularEvaluation
from .quadrature import RadialGrid, build_grid, integrate_radial


def lambda_N(N):
    """Optimal Hardy constant (N-2)^2/4."""
    if int(N) != N or N < 3:
        raise DimensionTooSmall(f"dimension must be an integer >= 3, got {N}")
    return (N - 2) ** 2 / 4.0


def critical_exponent(N):
    return 2.0 * N / (N - 2.0)


def nu_of(A, N):
    """nu_A = sqrt(1 - A/Lambda_N)."""
    return math.sqrt(1.0 - A / lambda_N(N))


class RadialProfile:
    """Radial function phi(rho) with its first two derivatives."""

    family = "abstract"
    singular = False

    def value(self, r):
        raise NotImplementedError

    def deriv(self, r):
        raise NotImplementedError

    def scaled(self, mu):
        """Profile of mu^{-(N-2)/2} phi(rho/mu)."""
        raise NotImplementedError

    def to_dict(self):
        raise NotImplementedError


@dataclass(frozen=True)
class GroundState(RadialProfile):
    """w_mu(rho) = mu^{-(N-2)/2} w(rho/mu) for the coupling A in [0, Lambda_N).

    w(rho) = (N(N-2) nu^2)^{(N-2)/4} / (rho^{1-nu} (1 + rho^{2 nu}))^{(N-2)/2}.
    A = 0 gives the Aubin-Talenti instanton (not normalized).
    """

    N: int
    A: float
    mu: float = 1.0
    family = "GroundState"

    @property
    def nu(self):
        return nu_of(self.A, self.N)

    @property
    def singular(self):
        return self.A > 0

    def _parts(self, r):
        N, nu = self.N, self.nu
        a = 0.5 * (N - 2)
        y = np.asarray(r, dtype=float) / self.mu
        with np.errstate(divide="ignore"):
            ly = np.log(y)
        logK = 0.25 * (N - 2) * math.log(N * (N - 2) * nu * nu)
        logw = logK - a * (1 - nu) * ly - a * np.logaddexp(0.0, 2 * nu * ly)
        q = expit(2 * nu * ly)
        return a, nu, y, logw, q

    def value(self, r):
        a, nu, y, logw, q = self._parts(r)
        return self.mu ** (-a) * np.exp(logw)

    def deriv(self, r):
        a, nu, y, logw, q = self._parts(r)
        B = (1 - nu) + 2 * nu * q
        with np.errstate(divide="ignore", invalid="ignore"):
            return -self.mu ** (-a - 1) * np.exp(logw) * a * B / y

    def second_deriv(self, r):
        a, nu, y, logw, q = self._parts(r)
        B = (1 - nu) + 2 * nu * q
        with np.errstate(divide="ignore", invalid="ignore"):
            L = -a * B / y
            dL = a * (B - 4 * nu * nu * q * (1 - q)) / y ** 2
            return self.mu ** (-a - 2) * np.exp(logw) * (L * L + dL)

    def scaled(self, mu):
        return GroundState(self.N, self.A, self.mu * mu)

    def to_dict(self):
        return {"family": self.family, "N": self.N, "A": self.A, "mu": self.mu}


@lru_cache(maxsize=None)
def talenti_constant(N, r):
    """C_r with || C_r (r^2 + |x|^2)^{-(N-2)/2} ||_{2*} = 1, by quadrature."""
    grid = build_grid(N)
    a = 0.5 * (N - 2)
    p = critical_exponent(N)
    # integrate in y = x / r to keep the integrand on the grid's center
    mass = integrate_radial(grid, lambda y: (1.0 + y * y) ** (-a * p))
    # int (r^2+|x|^2)^{-N} dx = r^{-N} * mass
    return (r ** N / mass) ** (1.0 / p)


@dataclass(frozen=True)
class Talenti(RadialProfile):
    """u_r(rho) = C_r / (r^2 + rho^2)^{(N-2)/2}, normalized in L^{2*}."""

    N: int
    r: float = 1.0
    family = "Talenti"

    @property
    def C(self):
        return talenti_constant(self.N, self.r)

    def value(self, rho):
        a = 0.5 * (self.N - 2)
        rho = np.asarray(rho, dtype=float)
        return self.C * (self.r ** 2 + rho ** 2) ** (-a)

    def deriv(self, rho):
        a = 0.5 * (self.N - 2)
        rho = np.asarray(rho, dtype=float)
        return -2 * a * rho * self.C * (self.r ** 2 + rho ** 2) ** (-a - 1)

    def second_deriv(self, rho):
        a = 0.5 * (self.N - 2)
        rho = np.asarray(rho, dtype=float)
        s = self.r ** 2 + rho ** 2
        return -2 * a * self.C * (s ** (-a - 1) - 2 * (a + 1) * rho ** 2 * s ** (-a - 2))

    def scaled(self, mu):
        return Talenti(self.N, self.r * mu)

    def to_dict(self):
        return {"family": self.family, "N": self.N, "r": self.r}


@dataclass(frozen=True, eq=False)
class GridSampled(RadialProfile):
    """Radial function known at the nodes of a RadialGrid.

    Interpolation is monotone cubic in log(rho); outside the grid the profile
    is continued linearly in log-log coordinates (power-law tails).
    """

    grid: RadialGrid
    values: np.ndarray
    family = "GridSampled"

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def N(self):
        return self.grid.N

    def _interp(self):
        cache = self.__dict__.get("_pchip")
        if cache is None:
            cache = PchipInterpolator(np.log(self.grid.nodes), self.values, extrapolate=False)
            object.__setattr__(self, "_pchip", cache)
        return cache

    def _end_slopes(self):
        s = np.log(self.grid.nodes)
        v = self.values

        def slope(i, j):
            if v[i] > 0 and v[j] > 0:
                return (math.log(v[j]) - math.log(v[i])) / (s[j] - s[i])
            return None

        return slope(0, 1), slope(-2, -1)

    def value(self, r):
        r = np.asarray(r, dtype=float)
        s = np.log(np.maximum(r, 1e-300))
        out = np.asarray(self._interp()(s), dtype=float)
        s0, s1 = math.log(self.grid.r_min), math.log(self.grid.r_max)
        k0, k1 = self._end_slopes()
        lo = s < s0
        hi = s > s1
        if np.any(lo):
            out = np.where(lo, self.values[0] * np.exp(k0 * (s - s0)) if k0 is not None
                           else self.values[0], out)
        if np.any(hi):
            out = np.where(hi, self.values[-1] * np.exp(k1 * (s - s1)) if k1 is not None
                           else self.values[-1], out)
        return out

    def deriv(self, r):
        r = np.asarray(r, dtype=float)
        s = np.log(np.maximum(r, 1e-300))
        out = np.asarray(self._interp().derivative()(s), dtype=float)
        s0, s1 = math.log(self.grid.r_min), math.log(self.grid.r_max)
        k0, k1 = self._end_slopes()
        val = self.value(r)
        out = np.where(s < s0, (k0 or 0.0) * val, out)
        out = np.where(s > s1, (k1 or 0.0) * val, out)
        return out / r

    @property
    def singular(self):
        k0, _ = self._end_slopes()
        return k0 is not None and k0 < 0

    def scaled(self, mu):
        a = 0.5 * (self.N - 2)
        grid = build_grid(self.N, self.grid.r_min * mu, self.grid.r_max * mu, self.grid.M)
        return GridSampled(grid, self.values * mu ** (-a))

    def to_dict(self):
        return {"family": self.family, "grid": self.grid.to_dict(),
                "values": [float(x) for x in self.values]}


@dataclass(frozen=True)
class Term:
    amplitude: float
    profile: RadialProfile
    center: tuple

    def distance(self, X):
        return np.linalg.norm(np.asarray(X, dtype=float) - np.asarray(self.center), axis=-1)


@dataclass(frozen=True)
class Field:
    """Finite superposition of radial profiles about centers."""

    N: int
    terms: tuple = field(default_factory=tuple)

    @staticmethod
    def zero(N):
        return Field(N, ())

    @staticmethod
    def single(profile, center=None, amplitude=1.0):
        N = profile.N
        c = tuple(float(x) for x in (np.zeros(N) if center is None else center))
        if len(c) != N:
            raise ValueError(f"center must have {N} coordinates")
        return Field(N, (Term(float(amplitude), profile, c),))

    @property
    def is_zero(self):
        return all(t.amplitude == 0 for t in self.terms)

    @property
    def centers(self):
        out = []
        for t in self.terms:
            if t.center not in out:
                out.append(t.center)
        return out

    def __add__(self, other):
        if self.N != other.N:
            raise ValueError("fields live in different dimensions")
        return Field(self.N, self.terms + other.terms)

    def __mul__(self, c):
        return Field(self.N, tuple(Term(c * t.amplitude, t.profile, t.center) for t in self.terms))

    __rmul__ = __mul__

    def is_radial(self):
        return all(np.allclose(t.center, 0.0) for t in self.terms)

    def values(self, X):
        """u at points X of shape (..., N)."""
        X = np.asarray(X, dtype=float)
        out = np.zeros(X.shape[:-1])
        for t in self.terms:
            out = out + t.amplitude * t.profile.value(t.distance(X))
        return out

    def gradient(self, X):
        X = np.asarray(X, dtype=float)
        out = np.zeros(X.shape)
        for t in self.terms:
            d = X - np.asarray(t.center)
            r = np.linalg.norm(d, axis=-1)
            with np.errstate(invalid="ignore", divide="ignore"):
                fac = np.where(r > 0, t.amplitude * t.profile.deriv(r) / r, 0.0)
            out = out + fac[..., None] * d
        return out

    def to_dict(self):
        return {"N": self.N, "terms": [
            {"amplitude": t.amplitude, "center": list(t.center), "profile": t.profile.to_dict()}
            for t in self.terms]}


def profile_from_dict(d):
    fam = d["family"]
    if fam == "GroundState":
        return GroundState(int(d["N"]), float(d["A"]), float(d["mu"]))
    if fam == "Talenti":
        return Talenti(int(d["N"]), float(d["r"]))
    if fam == "GridSampled":
        g = d["grid"]
        return GridSampled(build_grid(g["N"], g["r_min"], g["r_max"], g["M"]), np.array(d["values"]))
    raise ValueError(f"unknown profile family {fam!r}")


def field_from_dict(d):
    terms = tuple(Term(float(t["amplitude"]), profile_from_dict(t["profile"]),
                       tuple(float(x) for x in t["center"])) for t in d["terms"])
    return Field(int(d["N"]), terms)


def ground_state(N, A, mu=1.0):
    """Ground state w_mu of -Lap w = A w/|x|^2 + w^{2*-1}, for 0 <= A < Lambda_N.

    A = 0 is accepted as the limiting member (the Aubin-Talenti instanton).
    """
    lam = lambda_N(N)
    if not (0 <= A < lam):
        raise CouplingOutOfRange(f"need 0 <= A < Lambda_N = {lam}, got A={A}")
    if not mu > 0:
        raise NonpositiveScale(f"scale must be positive, got {mu}")
    return GroundState(int(N), float(A), float(mu))


def talenti(N, r=1.0):
    """Normalized Talenti bubble u_r (center it with :meth:`Field.single`)."""
    lambda_N(N)
    if not r > 0:
        raise NonpositiveScale(f"scale must be positive, got {r}")
    return Talenti(int(N), float(r))


def bubble(profile, center=None, amplitude=1.0):
    return Field.single(profile, center, amplitude)


def scale_field(u, mu):
    """mu^{-(N-2)/2} u(x/mu); centers move to mu * c."""
    if not mu > 0:
        raise NonpositiveScale(f"scale must be positive, got {mu}")
    if mu == 1:
        return u
    return Field(u.N, tuple(
        Term(t.amplitude, t.profile.scaled(mu), tuple(mu * c for c in t.center))
        for t in u.terms))


def evaluate(u, x):
    """Pointwise value of u at a single point x."""
    x = np.asarray(x, dtype=float)
    for t in u.terms:
        if t.profile.singular and t.amplitude != 0 and t.distance(x) == 0:
            raise SingularEvaluation(f"profile {t.profile.family} is singular at {t.center}")
    return float(u.values(x))


def sample_on_grid(u, grid):
    """Nodal values of a field radial about the origin, as a GridSampled profile."""
    if not u.is_radial():
        from .errors import NotRadial
        raise NotRadial("field is not radial about the origin")
    e = np.zeros(u.N)
    e[0] = 1.0
    return GridSampled(grid, u.values(grid.nodes[:, None] * e))


def random_bubble_sum(N, rng, max_terms=3, max_coupling=0.9, spread=3.0):
    """Random superposition of ground states and Talenti bubbles.

    Centers lie on one random line through the origin so that every integral
    keeps a rotational symmetry about that line.
    """
    lam = lambda_N(N)
    e = rng.standard_normal(N)
    e /= np.linalg.norm(e)
    terms = ()
    for _ in range(int(rng.integers(1, max_terms + 1))):
        mu = math.exp(rng.uniform(math.log(0.1), math.log(10.0)))
        if rng.random() < 0.5:
            prof = GroundState(int(N), float(rng.uniform(0.0, max_coupling) * lam), mu)
        else:
            prof = Talenti(int(N), mu)
        c = tuple(float(x) for x in rng.uniform(-spread, spread) * e)
        amp = float(rng.choice([-1.0, 1.0]) * rng.uniform(0.2, 1.0))
        terms += (Term(amp, prof, c),)
    return Field(int(N), terms)

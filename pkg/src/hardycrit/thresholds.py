"""Explicit constants and Palais-Smale energy thresholds.

Every threshold is (1/N) S^{N/2} times a minimum over a few branches. The
functions return a :class:`Threshold` carrying the value, the name of the
branch that attains the minimum and all branch values, so reports can say
which mechanism (concentration at a maximum of k, at the origin, or at
infinity) limits compactness.
"""

import math
from dataclasses import dataclass, field
from functools import lru_cache

from scipy.optimize import bisect

from .errors import CouplingOutOfRange, HypothesisViolated
from .fields import Field, Talenti, lambda_N
from .quadrature import build_grid

INF = math.inf


@lru_cache(maxsize=None)
def best_sobolev(N, r=1.0, M=None):
    """Best Sobolev constant S, as the Dirichlet / L^{2*} quotient of a Talenti bubble."""
    from .energy import sobolev_quotient_QA

    grid = build_grid(N) if M is None else build_grid(N, M=M)
    return float(sobolev_quotient_QA(0.0, Field.single(Talenti(int(N), float(r))), N, grid))


@dataclass
class Threshold:
    value: float
    branch: str
    branches: dict = field(default_factory=dict)

    def __float__(self):
        return float(self.value)

    def to_dict(self):
        return {"value": _num(self.value), "branch": self.branch,
                "branches": {k: _num(v) for k, v in self.branches.items()}}


def _num(x):
    return float(x) if math.isfinite(x) else ("inf" if x > 0 else "-inf")


def _prefactor(N):
    return best_sobolev(N) ** (N / 2.0) / N


def _pick(N, branches):
    name = min(branches, key=lambda k: branches[k])
    pre = float(_prefactor(N))
    return Threshold(pre * branches[name], name, {k: pre * v for k, v in branches.items()})


def _kpow(kval, N):
    """k^{-(N-2)/2}, +inf for k <= 0 (the branch does not constrain)."""
    return kval ** (-(N - 2) / 2.0) if kval > 0 else INF


def _check_coupling(N, lam):
    if not (0 < lam < lambda_N(N)):
        raise CouplingOutOfRange(f"need 0 < lambda < Lambda_N = {lambda_N(N)}, got {lam}")


def cstar(N, A, h):
    """c* for the h-perturbed problem: branches "0" and "inf"."""
    lam = lambda_N(N)
    c0, cinf = A + h.value_zero, A + h.value_inf
    if not (c0 < lam and cinf < lam):
        raise CouplingOutOfRange("need A + h(0) < Lambda_N and A + h(inf) < Lambda_N")
    e = (N - 1) / 2.0
    return _pick(N, {"0": (1 - c0 / lam) ** e, "inf": (1 - cinf / lam) ** e})


def _k_branches(N, lam, kmax, k0, kinf, with_sup=True):
    e = (N - 1) / 2.0
    f = (1 - lam / lambda_N(N)) ** e
    out = {}
    if with_sup:
        out["sup"] = _kpow(kmax, N)
    out["0"] = _kpow(k0, N) * f if k0 > 0 else INF
    out["inf"] = _kpow(kinf, N) * f if kinf > 0 else INF
    return out


def tilde_c(N, lam, k):
    """c~(lambda) = (1/N) S^{N/2} min{||k||^{-(N-2)/2}, k(0)^{..}(1-lam/Lambda)^{..}, k(inf)^{..}(..)}."""
    _check_coupling(N, lam)
    return _pick(N, _k_branches(N, lam, k.sup_norm, k.value_zero, k.value_inf))


def tilde_c1(N, lam, k):
    """Improved radial threshold: the ||k|| branch is dropped."""
    _check_coupling(N, lam)
    return _pick(N, _k_branches(N, lam, k.sup_norm, k.value_zero, k.value_inf, with_sup=False))


def hat_c(N, lam, k):
    """Threshold for sign-changing k, built from the positive part k_+."""
    _check_coupling(N, lam)
    p0, pinf, pmax = k.positive_part_values()
    return _pick(N, _k_branches(N, lam, pmax, p0, pinf))


def b_of(N, lam, k):
    """b(lambda) = min over {k(0), k(inf)} branches; +inf if both vanish."""
    br = _k_branches(N, lam, k.sup_norm, k.value_zero, k.value_inf, with_sup=False)
    return min(br.values())


def eps0_cap(N):
    """Lambda_N (1 - 2^{-2/(N-1)}): above it 2(1 - lambda/Lambda_N)^{(N-1)/2} <= 1."""
    return lambda_N(N) * (1 - 2.0 ** (-2.0 / (N - 1)))


def positivity_gate(N, lam):
    """True when 2 (1 - lambda/Lambda_N)^{(N-1)/2} > 1."""
    return 2 * (1 - lam / lambda_N(N)) ** ((N - 1) / 2.0) > 1


def eps0(N, k, tol=1e-14):
    """Largest lambda below the positivity cap with ||k||^{-(N-2)/2} <= b(lambda).

    The cap itself makes 2(1 - lambda/Lambda_N)^{(N-1)/2} equal to 1, so it is
    pulled in by a relative 1e-12 to keep the gate strict.
    """
    from .coefficients import check_k_hypotheses

    rep = check_k_hypotheses(k, N)
    if not rep["K0"].passed:
        raise HypothesisViolated("(K0) fails: ||k|| <= max(k(0), k(inf))", rep)
    cap = eps0_cap(N) * (1 - 1e-12)
    target = _kpow(k.sup_norm, N)

    def gap(lam):
        return b_of(N, lam, k) - target

    if gap(cap) >= 0:
        return cap
    # gap is decreasing in lambda and positive at 0 by (K0)
    return bisect(gap, 0.0, cap, xtol=tol * lambda_N(N), rtol=1e-15)


@dataclass
class ThresholdReport:
    N: int
    lam: float
    Lambda_N: float
    S: float
    cstar: Threshold = None
    tilde_c: Threshold = None
    tilde_c1: Threshold = None
    hat_c: Threshold = None
    b: float = None
    eps0: float = None
    positivity_gate: bool = None

    def to_dict(self):
        out = {"N": self.N, "lambda": self.lam, "Lambda_N": self.Lambda_N, "S": self.S}
        for name in ("cstar", "tilde_c", "tilde_c1", "hat_c"):
            v = getattr(self, name)
            out[name] = v.to_dict() if v is not None else None
        out["b"] = _num(self.b) if self.b is not None else None
        out["eps0"] = self.eps0
        out["positivity_gate"] = self.positivity_gate
        return out


def threshold_report(N, lam, h=None, k=None):
    """Collect every threshold that is defined for the given data."""
    rep = ThresholdReport(N, lam, lambda_N(N), float(best_sobolev(N)))
    if h is not None:
        try:
            rep.cstar = cstar(N, lam, h)
        except CouplingOutOfRange:
            pass
    if k is not None and 0 < lam < lambda_N(N):
        rep.tilde_c = tilde_c(N, lam, k)
        if k.radial_flag:
            rep.tilde_c1 = tilde_c1(N, lam, k)
        rep.hat_c = hat_c(N, lam, k)
        rep.b = b_of(N, lam, k)
        try:
            rep.eps0 = eps0(N, k)
        except HypothesisViolated:
            rep.eps0 = None
        rep.positivity_gate = positivity_gate(N, lam)
    return rep

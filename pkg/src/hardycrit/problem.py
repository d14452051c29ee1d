"""Problem data: dimension, coupling, coefficients and quadrature resolution."""

from dataclasses import dataclass
from functools import cached_property

from .coefficients import (CoefficientProfile, check_h_hypotheses, check_k_hypotheses,
                           make_h_preset, make_k_preset)
from .fields import critical_exponent, lambda_N
from .quadrature import DEFAULT_ANGULAR_ORDER, RadialGrid, build_grid


@dataclass(frozen=True, eq=False)
class ProblemSpec:
    """-Lap u = (A + h)/|x|^2 u + k |u|^{2*-2} u on R^N.

    ``A`` doubles as the coupling lambda of the k-perturbed problem (h = 0).
    """

    N: int
    A: float
    h: CoefficientProfile
    k: CoefficientProfile
    grid: RadialGrid
    angular_order: int = DEFAULT_ANGULAR_ORDER

    @staticmethod
    def make(N, A, h=None, k=None, grid=None, angular_order=DEFAULT_ANGULAR_ORDER):
        lambda_N(N)
        h = h if h is not None else make_h_preset("zero", {}, N)
        k = k if k is not None else make_k_preset("constant_one", {}, N)
        grid = grid if grid is not None else build_grid(N)
        if grid.N != N or h.N != N or k.N != N:
            raise ValueError("grid and coefficients must share the problem dimension")
        return ProblemSpec(int(N), float(A), h, k, grid, int(angular_order))

    @property
    def lam(self):
        return self.A

    @property
    def Lambda(self):
        return lambda_N(self.N)

    @property
    def p(self):
        return critical_exponent(self.N)

    @property
    def is_radial(self):
        return self.h.radial_flag and self.k.radial_flag

    def with_coupling(self, A):
        return ProblemSpec(self.N, float(A), self.h, self.k, self.grid, self.angular_order)

    def with_k(self, k):
        return ProblemSpec(self.N, self.A, self.h, k, self.grid, self.angular_order)

    @cached_property
    def h_report(self):
        return check_h_hypotheses(self.h, self.A, self.N)

    @cached_property
    def k_report(self):
        return check_k_hypotheses(self.k, self.N)

    def hypotheses(self):
        return {"h": self.h_report.to_dict(), "k": self.k_report.to_dict()}

    def to_dict(self):
        return {"N": self.N, "A": self.A, "h": self.h.to_dict(), "k": self.k.to_dict(),
                "grid": self.grid.to_dict(), "angular_order": self.angular_order}

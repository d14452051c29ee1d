import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from hardycrit.coefficients import make_h_preset, make_k_preset  # noqa: E402
from hardycrit.fields import lambda_N  # noqa: E402
from hardycrit.problem import ProblemSpec  # noqa: E402
from hardycrit.quadrature import build_grid  # noqa: E402
from hardycrit.solver import multiplicity_run  # noqa: E402

TWO_PEAK = {"a1": [2.0, 0.0, 0.0], "a2": [-2.0, 0.0, 0.0], "theta": 2.5, "width": 0.3}
M_PEAK = {"m": 3, "theta": 2.5, "width": 0.3}
SWEEP = (0.2, 0.1, 0.05)


def two_peak_spec(frac, N=3):
    k = make_k_preset("two_peak", TWO_PEAK, N)
    return ProblemSpec.make(N, frac * lambda_N(N), make_h_preset("zero", {}, N), k, build_grid(N))


@pytest.fixture(scope="session")
def grids():
    return {N: build_grid(N) for N in (3, 4, 5)}


@pytest.fixture(scope="session")
def two_peak_sweep():
    """multiplicity_run on the two-peak preset at lambda = frac * Lambda_3 (cached per session)."""
    cache = {}

    def get(frac):
        if frac not in cache:
            cache[frac] = multiplicity_run(two_peak_spec(frac))
        return cache[frac]

    return get


@pytest.fixture(scope="session")
def m_peak_run():
    N = 3
    k = make_k_preset("m_peak", M_PEAK, N)
    spec = ProblemSpec.make(N, 0.1 * lambda_N(N), make_h_preset("zero", {}, N), k, build_grid(N))
    return spec, multiplicity_run(spec)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split("criterion")[1].split(":")[0])):
            terminalreporter.write_line(line)

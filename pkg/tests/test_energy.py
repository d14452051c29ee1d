import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import oracles as orc
from hardycrit.coefficients import make_h_preset, make_k_preset
from hardycrit.energy import (discretization, energy, gradient_J, grid_field, hardy_quotient,
                              mountain_pass_level, nehari_scale, sobolev_quotient_QA)
from hardycrit.errors import NonpositiveForm, NotRadial, ZeroField
from hardycrit.fields import Field, ground_state, lambda_N, random_bubble_sum, talenti
from hardycrit.problem import ProblemSpec
from hardycrit.thresholds import best_sobolev


def spec_for(N, frac, h=None, k=None):
    return ProblemSpec.make(N, frac * lambda_N(N), h, k)


@pytest.mark.parametrize("N", [3, 4, 5])
def test_best_sobolev_closed_form(N):
    assert best_sobolev(N) == pytest.approx(orc.best_sobolev(N), rel=1e-11)


@pytest.mark.parametrize("N", [3, 4, 5])
@pytest.mark.parametrize("frac", [0.1, 0.5, 0.9])
def test_groundstate_energy_closed_form(N, frac):
    """J(w_mu) = (1/N) S^{N/2} (1 - A/Lambda)^{(N-1)/2} on the discrete and quadrature routes."""
    spec = spec_for(N, frac)
    w = Field.single(ground_state(N, spec.A, 1.0))
    exact = orc.mountain_pass(N, spec.A)
    quad_J = energy(spec.with_k(make_k_preset("constant", {"value": 1.0}, N)), w * 1.0)
    # slow tails near Lambda_N limit the default grid to a few 1e-7
    assert quad_J.J == pytest.approx(exact, rel=1e-6)
    disc = discretization(spec)
    e = disc.breakdown(disc_nodal(spec, w))
    assert e.J == pytest.approx(exact, rel=1e-6)


def disc_nodal(spec, u):
    return u.values(spec.grid.nodes[:, None] * np.eye(spec.N)[0])


def test_change_is_exact_difference():
    spec = spec_for(3, 0.5)
    disc = discretization(spec)
    rng = np.random.default_rng(3)
    u = 1.3 * disc_nodal(spec, Field.single(ground_state(3, spec.A)))
    J0 = disc.J(u)
    for scale in (1e-1, 1e-4, 1e-8):
        v = scale * rng.standard_normal(u.size) * u
        # the direct difference carries the round-off of two J evaluations
        assert disc.change(u, v) == pytest.approx(disc.J(u + v) - J0, rel=1e-9, abs=1e-12 * J0)


@pytest.mark.parametrize("N", [3, 4, 5])
def test_riesz_gradient_matches_finite_differences(N):
    spec = spec_for(N, 0.5)
    disc = discretization(spec)
    u = 1.3 * disc_nodal(spec, Field.single(ground_state(N, spec.A)))
    g = disc.gradient(u)
    rng = np.random.default_rng(N)
    for _ in range(20):
        v = rng.standard_normal(u.size) * u
        eps = 1e-5
        fd = (disc.change(u, eps * v) - disc.change(u, -eps * v)) / (2 * eps)
        # <g, v>_P = dJ . v
        assert float(g @ (disc.P @ v)) == pytest.approx(fd, rel=1e-5)


def test_groundstate_is_discrete_critical_point():
    spec = spec_for(3, 0.5)
    disc = discretization(spec)
    u = disc_nodal(spec, Field.single(ground_state(3, spec.A)))
    assert disc.residual(u) < 1e-6
    assert disc.residual(1.3 * u) > 1e-2


def test_nehari_scaling_and_mountain_pass():
    spec = spec_for(4, 0.3)
    u = Field.single(talenti(4, 0.5), amplitude=2.0)
    ns = nehari_scale(spec, u)
    assert ns.energy.nehari_residual == pytest.approx(0.0, abs=1e-10 * ns.energy.dirichlet)
    assert mountain_pass_level(spec, u) == pytest.approx(ns.energy.J, rel=1e-12)
    # the ray maximum dominates nearby points on the ray
    for t in (0.9, 1.1):
        assert energy(spec, u * (ns.t * t)).J < ns.energy.J


def test_mountain_pass_rejects_nonpositive_form():
    spec = ProblemSpec.make(3, 0.2, make_h_preset("constant", {"value": 0.2}, 3))
    u = Field.single(talenti(3))
    with pytest.raises(NonpositiveForm):
        mountain_pass_level(spec, u)


@settings(max_examples=12, deadline=None)
@given(st.integers(3, 5), st.integers(0, 10 ** 6))
def test_hardy_inequality_on_random_fields(N, seed):
    u = random_bubble_sum(N, np.random.default_rng(seed))
    assert hardy_quotient(u) >= lambda_N(N) - 1e-9


@pytest.mark.parametrize("N", [3, 4])
def test_sobolev_quotient_of_ground_state(N):
    for frac in (0.1, 0.9):
        A = frac * lambda_N(N)
        q = sobolev_quotient_QA(A, Field.single(ground_state(N, A, 3.0)))
        assert q == pytest.approx(orc.groundstate_quotient(N, A), rel=1e-6)


def test_errors():
    spec = spec_for(3, 0.5)
    with pytest.raises(ZeroField):
        sobolev_quotient_QA(0.1, Field.zero(3))
    with pytest.raises(ZeroField):
        hardy_quotient(Field.zero(3))
    k = make_k_preset("two_peak", {"a1": [2, 0, 0], "a2": [-2, 0, 0], "theta": 2.5}, 3)
    with pytest.raises(NotRadial):
        gradient_J(spec.with_k(k), Field.single(talenti(3)))
    g = gradient_J(spec, grid_field(spec.grid, disc_nodal(spec, Field.single(ground_state(3, spec.A)))))
    assert g.N == 3

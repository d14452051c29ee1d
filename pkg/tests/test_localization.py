import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import oracles as orc
from hardycrit.coefficients import make_k_preset
from hardycrit.energy import dirichlet_integral, power_integral
from hardycrit.errors import InvalidParams, ZeroField
from hardycrit.fields import Field, critical_exponent, ground_state, scale_field, talenti
from hardycrit.localization import (PeakFrame, all_t, category_count, concentration_limits,
                                    outside_dirichlet_check, maxima_category, separation_check, t_j,
                                    tail_masses, xi_map)
from hardycrit.problem import ProblemSpec
from conftest import TWO_PEAK


# Xi depends only on the truncation radius R0
XI_FRAME = PeakFrame(3, ((0.0, 0.0, 0.0),), 1.0, 1 / 3, 2.0)


def frame(N=3):
    e = np.eye(N)[0]
    return PeakFrame.from_points([2 * e, -2 * e])


def test_frame_geometry():
    f = frame()
    assert f.r0 == 1.0 and f.delta == pytest.approx(1 / 3) and f.R0 == 4.0
    close = PeakFrame.from_points([(0.5, 0, 0), (-0.5, 0, 0)])
    assert close.r0 == 0.5 and close.R0 == 2.0
    assert PeakFrame.from_k(make_k_preset("two_peak", TWO_PEAK, 3)).maxima == f.maxima
    with pytest.raises(InvalidParams):
        PeakFrame.from_points([(1, 0, 0), (1, 0, 0)])
    with pytest.raises(InvalidParams):
        PeakFrame.from_points([(3, 0, 0)], R0=2.0)


@pytest.mark.parametrize("N", [3, 4])
@pytest.mark.parametrize("mu", [1e-1, 1e-2, 1e-3])
def test_t_j_matches_radial_reference(N, mu):
    f = frame(N)
    u = Field.single(talenti(N, mu), f.maxima[0])
    assert t_j(u, f, 0) == pytest.approx(orc.FROZEN["t_bubble"][(N, mu)], rel=1e-9)


def test_t_j_far_bubble_is_one():
    f = frame()
    assert t_j(Field.single(talenti(3, 1e-3), f.maxima[1]), f, 0) >= 0.99


@settings(max_examples=10, deadline=None)
@given(st.floats(1e-3, 1e2), st.floats(-3, 3))
def test_t_j_in_unit_interval(mu, x):
    f = frame()
    u = Field.single(talenti(3, mu), (x, 0.5, 0.0))
    for t in all_t(u, f):
        assert 0.0 <= t <= 1.0


def test_outside_dirichlet_bound_when_localized():
    f = frame()
    for mu in (1e-2, 1e-3):
        rep = outside_dirichlet_check(Field.single(talenti(3, mu), f.maxima[0]), f, 0)
        assert rep["applies"] and rep["holds"]


def test_separation_sets():
    f = frame()
    fields = [Field.single(talenti(3, 1e-3), a) for a in f.maxima]
    rep = separation_check(fields, f)
    assert rep.sets == [{0}, {1}] and rep.single_claims and rep.distinct
    diffuse = separation_check([Field.single(talenti(3, 10.0))], f)
    assert diffuse.sets == [set()] and not diffuse.distinct


def test_xi_map():
    f = XI_FRAME
    xi = xi_map(Field.single(talenti(3, 1e-3), (1.0, 0.0, 0.0)), f)
    assert xi[0] == pytest.approx(orc.FROZEN["xi_bubble"][1e-3], rel=1e-8)
    assert abs(xi[1]) < 1e-15 and abs(xi[2]) < 1e-15
    assert np.linalg.norm(xi_map(Field.single(ground_state(3, 0.1)), f)) <= 1e-10
    far = xi_map(Field.single(talenti(3, 1e-3), (0.0, 5.0, 0.0)), f)
    assert far[1] == pytest.approx(2.0, rel=2e-3)
    with pytest.raises(ZeroField):
        xi_map(Field.zero(3), f)


@settings(max_examples=10, deadline=None)
@given(st.floats(-6, 6), st.floats(-6, 6), st.floats(1e-2, 10))
def test_xi_in_closed_ball(x, y, mu):
    f = XI_FRAME
    assert np.linalg.norm(xi_map(Field.single(talenti(3, mu), (x, y, 0.0)), f)) <= 2.0 + 1e-9


def test_tail_masses_decrease_and_are_bounded():
    k = make_k_preset("two_peak", TWO_PEAK, 3)
    spec = ProblemSpec.make(3, 0.05, None, k)
    u = Field.single(talenti(3, 1.0))
    rep = tail_masses(u, spec, [1, 2, 4, 8, 16, 32])
    for seq, total in ((rep.mu_R, "dirichlet"), (rep.nu_R, "critical"), (rep.gamma_R, "hardy")):
        assert all(b < a for a, b in zip(seq, seq[1:]))
        assert all(0 <= v <= rep.totals[total] for v in seq)
    # Dirichlet tail of a bubble decays like R^{-(N-2)} = R^{-1}
    assert rep.tail_exponents["mu"] == pytest.approx(-1.0, abs=0.02)
    balls = sum(p["dirichlet"] for p in rep.peak_balls)
    assert balls <= rep.totals["dirichlet"]


def test_escaping_sequence_keeps_outer_mass():
    spec = ProblemSpec.make(3, 0.05)
    u = Field.single(talenti(3, 1.0))
    total = power_integral(u, critical_exponent(3))
    for mu in (1e2, 1e3):
        nu = tail_masses(scale_field(u, mu), spec, [4.0]).nu_R[0]
        assert nu == pytest.approx(total, rel=1e-3)


def test_hardy_ball_inequality_on_concentrating_ground_states():
    """Lambda_N gamma_0 <= mu_0 on balls at the origin along w_mu, mu -> 0."""
    spec = ProblemSpec.make(3, 0.1)
    lam = 0.25
    for mu in (1e-2, 1e-3, 1e-4):
        rep = tail_masses(Field.single(ground_state(3, 0.1, mu)), spec, [1.0])
        ball = rep.origin_ball
        assert lam * ball["hardy"] <= ball["dirichlet"]


def test_concentration_limits_formula():
    D, C = concentration_limits(3, 1.0)
    assert D == pytest.approx(3 * orc.tilde_c_sup(3, 1.0), rel=1e-12)
    assert C == pytest.approx(D, rel=1e-12)
    D2, C2 = concentration_limits(4, 2.0)
    assert D2 == pytest.approx(orc.best_sobolev(4) ** 2 / 2.0, rel=1e-10)
    assert C2 == pytest.approx(orc.best_sobolev(4) ** 2 / 4.0, rel=1e-10)


def test_category_counts():
    assert category_count([(0, 0), (1, 0), (5, 0)], 2.0) == 2
    assert category_count([(0, 0), (1, 0), (5, 0)], 0.5) == 3
    k1 = make_k_preset("k1_example", {"theta": 2.5}, 3)
    coarse = maxima_category(k1, 0.05)["m"]
    fine = maxima_category(k1, 1e-4)["m"]
    assert coarse < fine <= 50
    assert maxima_category(make_k_preset("two_peak", TWO_PEAK, 3), 0.1)["m"] == 2

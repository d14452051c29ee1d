import numpy as np
import pytest

import oracles as orc
from hardycrit.coefficients import make_h_preset, make_k_preset
from hardycrit.errors import NondifferentiablePreset, ZeroField
from hardycrit.fields import Field, lambda_N, talenti
from hardycrit.obstructions import (Verdict, estimate_I1, nonexistence_audit, pohozaev_integral,
                                    q_quotient)
from hardycrit.problem import ProblemSpec

LAM3 = lambda_N(3)


def spec(A, h_tag="zero", h_params=None):
    return ProblemSpec.make(3, A, make_h_preset(h_tag, h_params or {}, 3))


def test_coupling_with_nonnegative_h():
    v = nonexistence_audit(spec(1.2 * LAM3, "constant", {"value": 0.01}))
    assert v.verdict == Verdict.COUPLING
    assert v.witness_value == pytest.approx(0.2 * LAM3)
    assert v.witness["condition"].startswith("A > Lambda_N and h >= 0")


def test_coupling_with_small_negative_h():
    h = {"center": [3.0, 0, 0], "width": 1.0, "height": -0.1}
    v = nonexistence_audit(spec(1.1 * LAM3, "gaussian_bump", h))
    assert v.verdict == Verdict.COUPLING
    assert v.witness["ratio"] >= 1


def test_pohozaev_obstruction_matches_independent_integral():
    v = nonexistence_audit(spec(0.5 * LAM3, "radial_power", {"amplitude": 0.05, "exponent": 1.0}))
    assert v.verdict == Verdict.POHOZAEV
    assert v.witness["sign"] == 1
    assert v.witness_value == pytest.approx(orc.FROZEN["pohozaev_radial_power"], rel=1e-8)
    assert v.witness_field is not None


def test_negative_I1_with_witness():
    h = {"center": [5.0, 0, 0], "width": 1.0, "height": -1.5}
    s = spec(1.2 * LAM3, "gaussian_bump", h)
    v = nonexistence_audit(s)
    assert v.verdict == Verdict.NEGATIVE_I1
    assert v.witness_value < 0
    # the stored field itself certifies the bound
    assert q_quotient(s, v.witness_field) == pytest.approx(v.witness_value, rel=1e-10)
    assert q_quotient(s, v.witness_field) < 0


def test_no_obstruction_for_subcritical_coupling():
    v = nonexistence_audit(spec(0.5 * LAM3))
    assert v.verdict == Verdict.NONE
    assert [c["test"] for c in v.checks] == ["coupling", "pohozaev_sign", "nonnegative_near_origin", "I1"]


def test_I1_estimate_attains_groundstate_quotient():
    A = 0.5 * LAM3
    est = estimate_I1(spec(A))
    assert est.upper_bound == pytest.approx(orc.groundstate_quotient(3, A), rel=1e-6)
    ub, neg = est
    assert not neg


def test_errors():
    h = make_h_preset("radial_power", {"amplitude": 0.05, "exponent": 1.0}, 3)
    with pytest.raises(ZeroField):
        pohozaev_integral(h, Field.zero(3), 3)
    k1 = make_k_preset("k1_example", {"theta": 2.5}, 3)
    with pytest.raises(NondifferentiablePreset):
        pohozaev_integral(k1, Field.single(talenti(3)), 3)
    assert pohozaev_integral(make_h_preset("zero", {}, 3), Field.single(talenti(3)), 3) == 0.0

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from inflowns.gas import DomainError, EndState, GasModel, characteristic_speed
from inflowns.rarefaction import (BurgersData, RarefactionEvaluator, burgers_derivatives,
                                  burgers_eval, burgers_initial, burgers_lp_norms,
                                  characteristic_foot, distance_to_inviscid,
                                  exact_rarefaction, lambda1_inverse, profile_eval,
                                  profile_lp_norms, profile_table, verify_burgers_bounds,
                                  verify_lp_bounds)

DATA = BurgersData(-2.0, -0.5, q=10, eps=0.1)


def test_burgers_data_validation():
    with pytest.raises(ValueError):
        BurgersData(1.0, 0.0)
    with pytest.raises(ValueError):
        BurgersData(-2.0, -1.0, q=9)
    with pytest.raises(ValueError):
        BurgersData(-2.0, -1.0, eps=1.5)
    assert DATA.C_q == pytest.approx(1.0 / math.factorial(10))


def test_initial_data_limits():
    assert np.all(burgers_initial(np.array([-5.0, -1e-9, 0.0]), DATA) == -2.0)
    assert burgers_initial(1e6, DATA) == -0.5
    z = 0.01
    expected = -2.0 + DATA.C_q * 1.5 * z ** 11 / 11 * (1 - 11 * z / 12)
    assert burgers_initial(z / DATA.eps, DATA) == pytest.approx(expected, rel=1e-9)


def test_time_zero_is_identity():
    x = np.linspace(-10, 400, 50)
    assert np.array_equal(burgers_eval(0.0, x, DATA), burgers_initial(x, DATA))


def test_left_constant_region():
    t = 7.0
    x = np.linspace(-100, DATA.w_minus * t, 30)
    assert np.all(burgers_eval(t, x, DATA) == DATA.w_minus)


def test_fan_monotone_against_forward_table():
    t = 5.0
    x0 = np.linspace(0.0, DATA.x_far, 20001)
    x_fwd = x0 + burgers_initial(x0, DATA) * t
    xs = np.sort(np.random.default_rng(1).uniform(-20, 600, 100))
    w = burgers_eval(t, xs, DATA)
    assert np.all(np.diff(w) >= 0.0)
    ref = np.interp(xs, x_fwd, burgers_initial(x0, DATA), left=DATA.w_minus, right=DATA.w_plus)
    assert np.max(np.abs(w - ref)) < 1e-6


@settings(max_examples=100, deadline=None)
@given(st.floats(0.0, 500.0), st.floats(-1000.0, 1000.0), st.floats(0.01, 1.0))
def test_foot_solves_characteristic_equation(t, x, eps):
    data = BurgersData(-3.0, -0.2, 10, eps)
    x0 = float(characteristic_foot(t, np.array([x]), data)[0])
    w = data.initial(x0)
    assert x0 + w * t == pytest.approx(x, abs=1e-9 * (1 + abs(x)))
    w_eval = float(burgers_eval(t, np.array([x]), data)[0])
    assert data.w_minus <= w_eval <= data.w_plus


def test_derivatives_match_finite_differences():
    t, h = 20.0, 1e-4
    x = np.linspace(-30.0, 200.0, 41)
    w, wx, wxx = burgers_derivatives(t, x, DATA)
    wp, wm = burgers_eval(t, x + h, DATA), burgers_eval(t, x - h, DATA)
    assert np.allclose(wx, (wp - wm) / (2 * h), atol=1e-8)
    assert np.allclose(wxx, (wp - 2 * w + wm) / h ** 2, atol=1e-5)
    assert np.all(wx >= 0.0)


def test_lambda1_inverse_values():
    assert lambda1_inverse(-0.5, GasModel(1.0)) == pytest.approx(2.0, rel=1e-15)
    assert lambda1_inverse(-math.sqrt(3), GasModel(3.0)) == pytest.approx(1.0, rel=1e-15)
    with pytest.raises(DomainError):
        lambda1_inverse(0.0, GasModel(1.0))


def test_exact_rarefaction_branches():
    gas = GasModel(1.0)
    minus, plus = EndState(1.0, 2.0), EndState(math.e, 3.0)
    assert exact_rarefaction(-5.0, minus, plus, gas) == (1.0, 2.0)
    assert exact_rarefaction(0.0, minus, plus, gas) == (math.e, 3.0)
    v, u = exact_rarefaction(-0.5, minus, plus, gas)
    assert v == pytest.approx(2.0, rel=1e-14) and u == pytest.approx(2.0 + math.log(2.0), rel=1e-14)
    for edge in (characteristic_speed(1, 1.0, gas), characteristic_speed(1, math.e, gas)):
        a = np.array(exact_rarefaction(edge - 1e-13, minus, plus, gas))
        b = np.array(exact_rarefaction(edge + 1e-13, minus, plus, gas))
        assert np.max(np.abs(a - b)) < 1e-10


def test_evaluator_rejects_subsonic_inflow(gas2):
    with pytest.raises(DomainError):
        RarefactionEvaluator.build(EndState(1.0, 0.5), EndState(1.5, 0.75), gas2)


def test_boundary_value_exact(rarefaction_ev):
    for t in (0.0, 0.3, 10.0, 500.0):
        V, U = profile_eval(t, 0.0, rarefaction_ev)
        assert (V, U) == (1.0, 3.0)


def test_far_field(rarefaction_ev):
    V, U = profile_eval(4.0, 5000.0, rarefaction_ev)
    assert V == pytest.approx(2.0, rel=1e-14)
    assert U == pytest.approx(1.0 + 2.0 * math.sqrt(2.0), rel=1e-14)


def test_background_solves_transport_system(rarefaction_ev):
    """V_t - s V_xi - U_xi = 0 checked by centred time differences."""
    ev, h = rarefaction_ev, 1e-4
    xi = np.linspace(0.0, 150.0, 301)
    d = ev.derivatives(10.0, xi)
    Vp, _ = profile_eval(10.0 + h, xi, ev)
    Vm, _ = profile_eval(10.0 - h, xi, ev)
    res = (Vp - Vm) / (2 * h) - ev.s_minus * d.V_xi - d.U_xi
    assert np.max(np.abs(res)) < 1e-7


def test_distance_to_inviscid_decreases(rarefaction_ev):
    xi = np.linspace(0.0, 3000.0, 30001)
    dist = [distance_to_inviscid(t, xi, rarefaction_ev) for t in (50, 100, 200, 400)]
    assert all(b < a for a, b in zip(dist, dist[1:]))


def test_burgers_l1_equals_total_variation():
    for t in (0.0, 10.0, 100.0):
        l1, _ = burgers_lp_norms(DATA, t, 1.0)
        assert l1 == pytest.approx(DATA.delta_r, rel=1e-9)


def test_burgers_sup_decay_exponent():
    # strong wave: gamma = 2 from v = 0.2 to v = 2, unsmoothed scale eps = 1
    gas = GasModel(2.0)
    data = BurgersData(characteristic_speed(1, 0.2, gas), characteristic_speed(1, 2.0, gas), 10, 1.0)
    rep = verify_burgers_bounds(data, np.geomspace(10, 100, 8), [math.inf])
    assert rep.exponents[math.inf] == pytest.approx(-1.0, abs=0.05)


def test_profile_lp_report(rarefaction_ev):
    rep = verify_lp_bounds(rarefaction_ev, [10.0, 20.0, 40.0], [2.0, math.inf])
    for key, c in rep.constants.items():
        assert np.isfinite(c) and c > 0.0
    assert set(profile_lp_norms(rarefaction_ev, 5.0, 2.0)) == {
        "V_xi", "U_xi", "V_xixi", "U_xixi", "Uxi_over_V_xi"}
    with pytest.raises(ValueError):
        verify_lp_bounds(rarefaction_ev, [], [2.0])


def test_profile_table(rarefaction_ev):
    xi = np.linspace(0, 50, 11)
    table = profile_table(rarefaction_ev, 3.0, xi)
    assert table.shape == (11, 5) and table[0, 1] == 1.0

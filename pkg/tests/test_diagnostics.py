import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from inflowns.diagnostics import (CSV_COLUMNS, FRAME_FIELDS, cumulative_trapz, discriminant,
                                  energy_audit, f_factor, frame, gradient, kanel_bracket,
                                  kanel_inverse, kanel_psi, left_derivative, phi_potential,
                                  phi_quadratic_bounds, pressure_curvature_range, tilde_phi,
                                  trapz, weighted_tail_margin)
from inflowns.gas import DomainError, GasModel, pressure, pressure_prime
from inflowns.solver import Grid, SolverState

gammas = st.sampled_from([1.0, 1.2, 1.4, 5 / 3, 2.0, 3.0])
pos = st.floats(0.05, 20.0)


def phi_by_quadrature(v, V, gas):
    integral, _ = quad(lambda e: pressure(e, gas), V, v, epsabs=1e-14, epsrel=1e-13)
    return pressure(V, gas) * (v - V) - integral


def test_phi_examples(gas1, gas2):
    assert phi_potential(3.0, 3.0, gas2) == 0.0
    assert phi_potential(2.0, 1.0, gas1) == pytest.approx(1.0 - math.log(2.0), rel=1e-14)
    assert phi_potential(2.0, 1.0, gas2) == pytest.approx(0.5, rel=1e-14)
    with pytest.raises(DomainError):
        phi_potential(0.0, 1.0, gas1)


@pytest.mark.parametrize("gamma", [1.0, 1.4, 2.0, 3.0])
@pytest.mark.parametrize("v,V", [(2.0, 1.0), (0.3, 1.7), (5.0, 0.8), (1.001, 1.0)])
def test_phi_matches_quadrature(gamma, v, V):
    gas = GasModel(gamma)
    assert phi_potential(v, V, gas) == pytest.approx(phi_by_quadrature(v, V, gas), abs=1e-10)


def test_tilde_phi_examples(gas1, gas2):
    assert tilde_phi(1.0, gas2) == 0.0
    assert tilde_phi(2.0, gas2) == pytest.approx(0.5, rel=1e-14)
    assert tilde_phi(math.e, gas1) == pytest.approx(math.e - 2.0, rel=1e-14)
    with pytest.raises(DomainError):
        tilde_phi(-1.0, gas1)


@settings(max_examples=300, deadline=None)
@given(gammas, pos, pos)
def test_scaling_identity(gamma, v, V):
    gas = GasModel(gamma)
    lhs = phi_potential(v, V, gas)
    rhs = V ** (1 - gamma) * tilde_phi(v / V, gas)
    assert lhs == pytest.approx(rhs, rel=1e-10, abs=1e-14)
    assert lhs >= 0.0


def test_kanel_psi_examples(gas1, gas2):
    assert kanel_psi(1.0, gas2) == 0.0
    assert kanel_psi(0.5, gas2) < 0.0 < kanel_psi(2.0, gas2)
    for gas in (gas1, gas2):
        big = 1e12
        assert kanel_psi(big, gas) / math.sqrt(big) == pytest.approx(2.0, rel=1e-4)


@pytest.mark.parametrize("vt", [0.01, 0.3, 1.5, 40.0])
def test_kanel_psi_matches_direct_quadrature(vt, gas2):
    direct, _ = quad(lambda e: math.sqrt(tilde_phi(e, gas2)) / e, 1.0, vt,
                     epsabs=1e-13, epsrel=1e-13, limit=200)
    assert kanel_psi(vt, gas2) == pytest.approx(direct, abs=1e-10)


@pytest.mark.parametrize("gamma", [1.4, 2.0, 3.0])
def test_kanel_psi_small_volume_exponent(gamma):
    gas = GasModel(gamma)
    vt = np.geomspace(1e-60, 1e-40, 6)
    psi = np.array([kanel_psi(x, gas) for x in vt])
    slope = np.polyfit(np.log(vt), np.log(-psi), 1)[0]
    assert slope == pytest.approx((1 - gamma) / 2, abs=0.02)
    limit = psi * vt ** ((gamma - 1) / 2)
    assert np.all(limit < 0.0)
    expected = -2.0 / (gamma - 1.0) ** 1.5
    assert limit[0] == pytest.approx(expected, rel=1e-3)


@settings(max_examples=60, deadline=None)
@given(gammas, st.floats(1e-4, 1e4))
def test_kanel_inverse_roundtrip(gamma, vt):
    gas = GasModel(gamma)
    assert kanel_inverse(kanel_psi(vt, gas), gas) == pytest.approx(vt, rel=1e-9)


def test_kanel_psi_strictly_increasing(gas2):
    vals = [kanel_psi(x, gas2) for x in np.geomspace(1e-3, 1e3, 50)]
    assert np.all(np.diff(vals) > 0.0)


def test_kanel_bracket(gas1, gas2):
    assert kanel_bracket(0.0, (0.9, 1.6), gas2) == (0.9, 1.6)
    lo, hi = kanel_bracket(kanel_psi(4.0, gas2), (1.0, 1.0), gas2)
    assert hi == pytest.approx(4.0, rel=1e-12)
    assert kanel_psi(lo, gas2) == pytest.approx(-kanel_psi(4.0, gas2), rel=1e-10)
    # gamma = 1 lower branch is finite and positive even for huge psi_sup
    lo, hi = kanel_bracket(1000.0, (1.0, 1.0), gas1)
    assert kanel_psi(lo, gas1) == pytest.approx(-1000.0, rel=1e-10)
    assert math.log(lo) == pytest.approx(-(1500.0 ** (2 / 3)), rel=0.02)
    lo, hi = kanel_bracket(1e5, (1.0, 1.0), gas1)
    assert 0.0 <= lo < 1e-300 and hi > 1.0
    with pytest.raises(ValueError):
        kanel_bracket(-1.0, (1.0, 1.0), gas1)


def test_f_factor_examples(gas1):
    assert f_factor(2.0, 1.0, gas1) == pytest.approx(0.5, rel=1e-14)
    assert 1.0 * 2.0 * f_factor(2.0, 1.0, gas1) == pytest.approx(1.0, rel=1e-14)
    for gamma in (1.0, 1.4, 2.0):
        gas = GasModel(gamma)
        V = 1.7
        assert f_factor(V, V, gas) == pytest.approx(gamma * (gamma + 1) * V ** (-gamma - 2) / 2, rel=1e-15)


@pytest.mark.parametrize("gamma", [1.0, 1.4, 2.0, 3.0])
@pytest.mark.parametrize("x", [-0.9, -1e-2, -2e-3, -1e-3, -1e-6, 1e-8, 1e-4, 1e-3, 3e-3, 0.5, 10.0])
def test_f_factor_against_integral_form(gamma, x):
    """f = int_0^1 (1 - s) p''(V + s phi) ds, an oracle without cancellation."""
    gas = GasModel(gamma)
    V = 1.3
    v = V * (1.0 + x)
    oracle, _ = quad(lambda s: (1 - s) * gamma * (gamma + 1) * (V + s * (v - V)) ** (-gamma - 2),
                     0.0, 1.0, epsabs=0.0, epsrel=1e-13)
    assert f_factor(v, V, gas) == pytest.approx(oracle, rel=1e-10)


@settings(max_examples=500, deadline=None)
@given(gammas, pos, pos)
def test_f_factor_lower_bound(gamma, v, V):
    gas = GasModel(gamma)
    assert V * v * f_factor(v, V, gas) >= gamma * V ** (-gamma) - 1e-12


@settings(max_examples=300, deadline=None)
@given(pos, pos)
def test_f_factor_equality_case_gamma_one(v, V):
    gas = GasModel(1.0)
    assert V * v * f_factor(v, V, gas) == pytest.approx(1.0 / V, rel=1e-10)


def test_f_factor_defines_quadratic_remainder(gas2):
    v, V = 2.4, 1.1
    lhs = pressure(v, gas2) - pressure(V, gas2) - pressure_prime(V, gas2) * (v - V)
    assert f_factor(v, V, gas2) * (v - V) ** 2 == pytest.approx(lhs, rel=1e-13)


def test_discriminant(gas2, bl_plus_profile, gas1):
    assert discriminant(0.0, 1.3, 1.2, gas2) == -4.0
    p = bl_plus_profile
    D = discriminant(p.U_xi, p.V, p.V, gas1)
    assert np.max(D) <= 1.0 / gas1.gamma - 4.0 + 1e-10


def test_discrete_calculus():
    x = np.linspace(0.0, 2.0, 201)
    dx = x[1] - x[0]
    assert trapz(x ** 2, dx) == pytest.approx(8 / 3, rel=1e-4)
    assert np.allclose(gradient(x ** 2, dx), 2 * x, atol=1e-12)
    assert left_derivative(x ** 2 + 3 * x, dx) == pytest.approx(3.0, abs=1e-12)
    t = np.linspace(0, 1, 11)
    assert cumulative_trapz(np.ones(11), t)[-1] == pytest.approx(1.0)
    assert cumulative_trapz([5.0], [0.0])[0] == 0.0


def test_weighted_tail_margin_nonnegative():
    xi = np.linspace(0.0, 30.0, 3001)
    phi = xi * np.exp(-xi)
    assert weighted_tail_margin(phi, xi[1] - xi[0]) >= -1e-10


def test_quadratic_bounds_bracketed_by_curvature(gas2):
    V = np.full(50, 1.0)
    v = np.linspace(0.6, 1.8, 50)
    lo, hi = phi_quadratic_bounds(v, V, gas2)
    c_lo, c_hi = pressure_curvature_range(0.6, 1.8, gas2)
    assert c_lo <= lo <= hi <= c_hi


class _Flat:
    """Constant background used to exercise a diagnostics frame by hand."""

    s_minus = -0.5

    def __init__(self, V, U):
        self.V, self.U = V, U

    def fields(self, t, xi):
        z = np.zeros_like(xi)
        return self.V + z, self.U + z, z, z.copy()


def test_frame_on_known_perturbation(gas2):
    grid = Grid(2000, 40.0)
    xi = grid.nodes
    bg = _Flat(1.0, 0.5)
    phi = 0.1 * xi ** 2 * np.exp(-xi)
    psi = 0.05 * np.sin(xi) * np.exp(-xi / 4)
    state = SolverState(2.5, 1.0 + phi, 0.5 + psi, grid, bg)
    fr = frame(state, bg, gas2)
    assert fr.t == 2.5
    assert fr.sup_diff == pytest.approx(max(np.abs(phi).max(), np.abs(psi).max()))
    l2, _ = quad(lambda x: (0.1 * x * x * math.exp(-x)) ** 2 + (0.05 * math.sin(x) * math.exp(-x / 4)) ** 2,
                 0, 40, limit=200)
    assert fr.l2_phi_psi == pytest.approx(math.sqrt(l2), rel=1e-5)
    assert fr.boundary_trace == pytest.approx(0.05 ** 2, rel=1e-3)
    assert fr.compat_residual == pytest.approx(0.05, rel=1e-3)
    assert fr.energy_phi > 0.0 and fr.dissipation > 0.0
    assert fr.cs_margin >= -1e-8 * fr.cs_scale
    assert fr.kanel_lo <= fr.v_min and fr.v_max <= fr.kanel_hi
    assert set(FRAME_FIELDS) >= set(CSV_COLUMNS) - {"dissipation_cum"}
    with pytest.raises(ValueError):
        frame(SolverState(0.0, np.ones(5), np.ones(5), grid, bg), bg, gas2)


def test_energy_audit():
    from inflowns.diagnostics import DiagnosticsFrame

    def fr(t, E, d):
        return DiagnosticsFrame(t, 0, 0, E, 0, d, 0, 0, 1, 1, 1, 1, 0, 1)

    good = energy_audit([fr(0, 1.0, 1.0), fr(1, 1.5, 0.5), fr(2, 0.5, 0.0)], 3.0, smoothing_eps=0.1)
    assert good.passed and good.energy_ratio == 1.5
    assert good.dissipation_total == pytest.approx(1.0)
    assert good.rarefaction_constant == pytest.approx(1.5 / (1.0 + 0.1 ** (2 / 9)))
    bad = energy_audit([fr(0, 1.0, 0.0), fr(1, 4.0, 0.0)], 3.0)
    assert not bad.passed
    zero = energy_audit([fr(0, 0.0, 0.0), fr(1, 0.0, 0.0)])
    assert zero.passed and math.isnan(zero.energy_ratio)
    with pytest.raises(ValueError):
        energy_audit([fr(0, 1.0, 0.0)])

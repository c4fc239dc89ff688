"""Stationary boundary-layer profiles of the inflow problem.

The profile solves ``-s V' - U' = 0`` and ``-s U' + p(V)' = mu (U'/V)'`` on
``xi > 0`` with ``(V, U)(0) = (v_-, u_-)`` and ``(V, U)(inf) = (v_+, u_+)``.
The first equation puts the profile on the line ``U = (u_-/v_-) V``; one
integration of the second from infinity leaves the scalar ODE

    dV/dxi = (v_- / (mu u_-)) * V * F(V),
    F(V)   = s**2 (V - v_+) + p(V) - p(v_+).

We integrate it for the deviation ``y = V - v_+`` so that the relative
error control of the Runge-Kutta pair stays meaningful deep in the tail,
which is what the decay fits look at.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp
from scipy.interpolate import CubicHermiteSpline

from .gas import (
    AsymptoticCase,
    CaseKind,
    EndState,
    GasModel,
    boundary_speed,
    classify_asymptotic,
    pressure_prime,
    sonic_point,
)

DEGENERATE_RTOL = 1e-8
TAIL_STOP = 1e-12


class ProfileError(ValueError):
    pass


class FitError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class BoundaryLayerProfile:
    """Sampled profile on the integrator's accepted steps.

    ``truncated`` is set when ``xi_max`` was hit before ``|V - v_+|`` fell
    below ``max(tol, 1e-8 * delta)``; algebraic (degenerate) tails usually
    end this way.
    """

    xi: np.ndarray
    V: np.ndarray
    U: np.ndarray
    V_xi: np.ndarray
    U_xi: np.ndarray
    V_xixi: np.ndarray
    U_xixi: np.ndarray
    minus: EndState
    plus: EndState
    gas: GasModel
    case: CaseKind
    degenerate: bool
    delta: float
    s_minus: float
    truncated: bool
    tol: float

    @property
    def stationary(self) -> bool:
        return True

    @property
    def far_state(self) -> EndState:
        return self.plus

    def fields(self, t, xi):
        """Background ``(V, U, V_xi, U_xi)`` at the points ``xi`` (t is ignored)."""
        prof = self.resample(xi)
        return prof.V, prof.U, prof.V_xi, prof.U_xi

    def resample(self, xi) -> "BoundaryLayerProfile":
        """Cubic Hermite resampling onto ``xi``; derivatives come from the ODE.

        Beyond the last integrated point the profile is held at its last value.
        """
        xi = np.asarray(xi, dtype=float)
        if self.delta == 0.0:
            return _constant_profile(xi, self.minus, self.gas, self.tol)
        y = self.V - self.plus.v
        dy = self.V_xi
        spline = CubicHermiteSpline(self.xi, y, dy, extrapolate=False)
        inside = xi <= self.xi[-1]
        y_new = np.where(inside, spline(np.where(inside, xi, self.xi[-1])), y[-1])
        y_new = np.where(xi <= 0.0, y[0], y_new)
        V, U, V_xi, U_xi, V_xixi, U_xixi = _assemble(
            y_new, self.minus, self.plus, self.gas)
        at_zero = xi == 0.0
        V[at_zero] = self.minus.v
        U[at_zero] = self.minus.u
        return BoundaryLayerProfile(
            xi, V, U, V_xi, U_xi, V_xixi, U_xixi, self.minus, self.plus,
            self.gas, self.case, self.degenerate, self.delta, self.s_minus,
            self.truncated, self.tol)


def _pressure_jump(y, v_plus, gas):
    """``p(v_+ + y) - p(v_+)`` without cancellation for small ``y``."""
    return v_plus ** -gas.gamma * np.expm1(-gas.gamma * np.log1p(y / v_plus))


def _assemble(y, minus, plus, gas):
    s = boundary_speed(minus)
    V = plus.v + y
    F = s * s * y + _pressure_jump(y, plus.v, gas)
    U = (minus.u / minus.v) * V
    U_xi = V * F / gas.mu
    V_xi = (minus.v / minus.u) * U_xi
    dF = s * s + pressure_prime(V, gas)
    U_xixi = (F + V * dF) * V_xi / gas.mu
    V_xixi = (minus.v / minus.u) * U_xixi
    return V, U, V_xi, U_xi, V_xixi, U_xixi


def _constant_profile(xi, state, gas, tol):
    z = np.zeros_like(xi)
    return BoundaryLayerProfile(
        xi, np.full_like(xi, state.v), np.full_like(xi, state.u), z, z.copy(),
        z.copy(), z.copy(), state, state, gas, CaseKind.BL_PLUS, False, 0.0,
        boundary_speed(state), False, tol)


def is_degenerate(minus: EndState, plus: EndState, gas: GasModel) -> bool:
    v_star = sonic_point(minus, gas).v
    return abs(plus.v - v_star) <= DEGENERATE_RTOL * v_star


def solve_profile(minus: EndState, plus: EndState, gas: GasModel,
                  xi_max: float | None = None, tol: float = 1e-10,
                  case: AsymptoticCase | None = None) -> BoundaryLayerProfile:
    """Integrate the boundary-layer ODE from ``V(0) = v_-`` toward ``v_+``.

    Parameters
    ----------
    xi_max : float, optional
        Integration horizon.  Defaults to ``1e4 / delta``; nondegenerate
        profiles stop much earlier, once ``|V - v_+| <= 1e-12 |v_+ - v_-|``.
    tol : float
        Relative local error tolerance of the Dormand-Prince 5(4) pair.
    """
    if case is None:
        case = classify_asymptotic(minus, plus, gas)
    if not case.is_boundary_layer:
        raise ProfileError(f"end states do not define a boundary layer ({case.kind.value})")
    if case.delta == 0.0:
        return _constant_profile(np.array([0.0]), minus, gas, tol)

    degenerate = case.kind is CaseKind.BL_PLUS and is_degenerate(minus, plus, gas)
    if xi_max is None:
        xi_max = 1e4 / case.delta
    if not xi_max > 0.0:
        raise ProfileError("xi_max must be positive")

    s = boundary_speed(minus)
    k = minus.v / (gas.mu * minus.u)
    y0 = minus.v - plus.v
    stop = TAIL_STOP * abs(y0)

    def rhs(_, y):
        F = s * s * y + _pressure_jump(y, plus.v, gas)
        return k * (plus.v + y) * F

    def reached_tail(_, y):
        return abs(y[0]) - stop

    reached_tail.terminal = True

    sol = solve_ivp(rhs, (0.0, xi_max), [y0], method="RK45", rtol=tol,
                    atol=1e-6 * stop, events=reached_tail)
    if sol.status < 0:
        raise ProfileError(f"profile integration failed: {sol.message}")
    xi = sol.t
    y = sol.y[0].copy()
    V, U, V_xi, U_xi, V_xixi, U_xixi = _assemble(y, minus, plus, gas)
    V[0], U[0] = minus.v, minus.u
    truncated = abs(y[-1]) > max(tol, 1e-8 * case.delta)
    return BoundaryLayerProfile(
        xi, V, U, V_xi, U_xi, V_xixi, U_xixi, minus, plus, gas, case.kind,
        degenerate, case.delta, s, truncated, tol)


def linearized_rate(profile: BoundaryLayerProfile) -> float:
    """Exponential rate of the ODE linearized at ``V = v_+``."""
    minus, plus, gas = profile.minus, profile.plus, profile.gas
    s = profile.s_minus
    return (minus.v * plus.v / (gas.mu * minus.u)) * abs(s * s + float(pressure_prime(plus.v, gas)))


@dataclass(frozen=True)
class DecayFit:
    kind: str  # "exponential" or "algebraic"
    rate: float  # decay rate (exponential) or fitted exponent (algebraic)
    intercept: float
    rms_residual: float
    n_points: int
    xi_window: tuple[float, float]


def fit_decay(profile: BoundaryLayerProfile, min_points: int = 8) -> DecayFit:
    """Least-squares decay law of ``|V - v_+|`` over the profile tail.

    Exponential profiles are fitted on the samples with ``|V - v_+|`` below
    1e-3 of the full amplitude (linear regime); the returned ``rate`` is the
    positive rate ``c`` of ``exp(-c xi)``.  Degenerate profiles fit
    ``log|V - v_+|`` against ``log(1 + delta xi)`` for ``delta xi >= 10``;
    ``rate`` is then the (negative) exponent.
    """
    if profile.delta == 0.0:
        raise FitError("decay fit is undefined for a constant profile")
    if profile.truncated and not profile.degenerate:
        raise FitError("profile was truncated before reaching its tail")
    dev = np.abs(profile.V - profile.plus.v)
    amp = abs(profile.minus.v - profile.plus.v)
    if profile.degenerate:
        kind = "algebraic"
        x = np.log1p(profile.delta * profile.xi)
        mask = (profile.delta * profile.xi >= 10.0) & (dev > 0.0)
    else:
        kind = "exponential"
        x = profile.xi
        mask = (dev <= 1e-3 * amp) & (dev > 0.0)
    if np.count_nonzero(mask) < min_points:
        raise FitError(f"only {np.count_nonzero(mask)} tail samples, need {min_points}")
    xs, ys = x[mask], np.log(dev[mask])
    slope, intercept = np.polyfit(xs, ys, 1)
    resid = ys - (slope * xs + intercept)
    rate = -slope if kind == "exponential" else slope
    return DecayFit(kind, float(rate), float(intercept),
                    float(np.sqrt(np.mean(resid ** 2))), int(mask.sum()),
                    (float(profile.xi[mask][0]), float(profile.xi[mask][-1])))


@dataclass(frozen=True)
class ProfileCheck:
    residual: float
    line_residual: float
    derivative_constant: float
    violations: int


def verify_profile(profile: BoundaryLayerProfile, gas: GasModel | None = None) -> ProfileCheck:
    """Residual, derivative-domination constant and monotonicity count.

    ``derivative_constant`` is the smallest C with
    ``max(|V_xi|, |V_xixi|, |U_xixi|) <= C |U_xi|`` on the grid.
    """
    gas = gas or profile.gas
    V, U, V_xi, U_xi, U_xixi = profile.V, profile.U, profile.V_xi, profile.U_xi, profile.U_xixi
    s = profile.s_minus
    visc = U_xixi / V - U_xi * V_xi / V ** 2
    res = -s * U_xi + pressure_prime(V, gas) * V_xi - gas.mu * visc
    line = np.abs(U - (profile.minus.u / profile.minus.v) * V)

    if profile.delta == 0.0:
        return ProfileCheck(float(np.max(np.abs(res))), float(line.max()), 0.0, 0)

    nz = U_xi != 0.0
    num = np.maximum.reduce([np.abs(V_xi), np.abs(profile.V_xixi), np.abs(U_xixi)])
    C = float(np.max(num[nz] / np.abs(U_xi[nz]))) if nz.any() else math.inf

    sign = math.copysign(1.0, profile.plus.u - profile.minus.u)
    violations = int(np.count_nonzero(sign * V_xi <= 0.0))
    violations += int(np.count_nonzero(sign * np.diff(V) < 0.0))
    return ProfileCheck(float(np.max(np.abs(res))), float(line.max()), C, violations)


def profile_table(profile: BoundaryLayerProfile) -> np.ndarray:
    """Columns xi, V, U, U_xi for CSV export."""
    return np.column_stack([profile.xi, profile.V, profile.U, profile.U_xi])

"""Gas law, characteristic speeds and phase-plane classification.

The gas is isentropic with ``p(v) = v**-gamma`` in Lagrangian variables
(specific volume ``v``, velocity ``u``).  Every function here is pure and
works on plain floats; most also accept numpy arrays.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

TRANSONIC_TOL = 1e-9


class DomainError(ValueError):
    """Argument outside the physical domain (e.g. nonpositive volume)."""


@dataclass(frozen=True)
class GasModel:
    gamma: float = 1.4
    mu: float = 1.0

    def __post_init__(self):
        if not self.gamma >= 1.0:
            raise DomainError(f"gamma must be >= 1, got {self.gamma}")
        if not self.mu > 0.0:
            raise DomainError(f"mu must be positive, got {self.mu}")


@dataclass(frozen=True)
class EndState:
    v: float
    u: float

    def __post_init__(self):
        if not self.v > 0.0:
            raise DomainError(f"specific volume must be positive, got {self.v}")

    @property
    def rho(self) -> float:
        return 1.0 / self.v


class PhaseRegion(enum.Enum):
    SUBSONIC = "Subsonic"
    TRANSONIC = "Transonic"
    SUPERSONIC = "Supersonic"
    OUT_OF_DOMAIN = "OutOfDomain"


class CaseKind(enum.Enum):
    BL_PLUS = "BLplus"
    BL_MINUS = "BLminus"
    RAREFACTION_1 = "Rarefaction1"
    RAREFACTION_2 = "Rarefaction2"
    UNSUPPORTED = "Unsupported"


@dataclass(frozen=True)
class AsymptoticCase:
    kind: CaseKind
    delta: float

    @property
    def is_boundary_layer(self) -> bool:
        return self.kind in (CaseKind.BL_PLUS, CaseKind.BL_MINUS)


def _check_positive(v):
    if np.any(np.asarray(v) <= 0.0):
        raise DomainError("specific volume must be positive")


def pressure(v, gas: GasModel):
    _check_positive(v)
    return np.power(v, -gas.gamma)


def pressure_prime(v, gas: GasModel):
    _check_positive(v)
    return -gas.gamma * np.power(v, -gas.gamma - 1.0)


def pressure_second(v, gas: GasModel):
    _check_positive(v)
    return gas.gamma * (gas.gamma + 1.0) * np.power(v, -gas.gamma - 2.0)


def sound_speed(v, gas: GasModel):
    """Eulerian sound speed ``c(v) = v*sqrt(-p'(v))``."""
    _check_positive(v)
    return math.sqrt(gas.gamma) * np.power(v, -(gas.gamma - 1.0) / 2.0)


def characteristic_speed(i: int, v, gas: GasModel):
    """Lagrangian characteristic speed lambda_i(v); lambda_2 = -lambda_1."""
    if i not in (1, 2):
        raise ValueError(f"characteristic family must be 1 or 2, got {i!r}")
    _check_positive(v)
    lam1 = -math.sqrt(gas.gamma) * np.power(v, -(gas.gamma + 1.0) / 2.0)
    return lam1 if i == 1 else -lam1


def boundary_speed(minus: EndState) -> float:
    """Speed ``s_- = -u_-/v_-`` of the boundary ``x = s_- t``."""
    return -minus.u / minus.v


def classify_state(s: EndState, gas: GasModel, tol: float = TRANSONIC_TOL) -> PhaseRegion:
    if s.v <= 0.0 or s.u <= 0.0:
        return PhaseRegion.OUT_OF_DOMAIN
    gap = abs(s.u) - float(sound_speed(s.v, gas))
    if abs(gap) <= tol:
        return PhaseRegion.TRANSONIC
    return PhaseRegion.SUBSONIC if gap < 0.0 else PhaseRegion.SUPERSONIC


def sonic_point(minus: EndState, gas: GasModel) -> EndState:
    """Intersection ``(v*, u*)`` of the line ``u/v = u_-/v_-`` with the sonic curve."""
    if minus.u <= 0.0:
        raise DomainError("sonic point needs u_- > 0")
    ratio = minus.u / minus.v
    v_star = (math.sqrt(gas.gamma) / ratio) ** (2.0 / (gas.gamma + 1.0))
    return EndState(v_star, ratio * v_star)


def rarefaction_curve_u(v, minus: EndState, i: int, gas: GasModel):
    """Velocity on the i-rarefaction integral curve through ``minus``.

    ``u = u_- - int_{v_-}^{v} lambda_i(s) ds`` in closed form; gamma = 1
    uses the logarithmic antiderivative.
    """
    if i not in (1, 2):
        raise ValueError(f"characteristic family must be 1 or 2, got {i!r}")
    _check_positive(v)
    g = gas.gamma
    if g == 1.0:
        integral = np.log(np.asarray(v, dtype=float) / minus.v)
    else:
        # v_-**a - v**a written with expm1 so gamma -> 1 does not cancel
        a = (1.0 - g) / 2.0
        ratio = np.log(np.asarray(v, dtype=float) / minus.v)
        integral = (2.0 * math.sqrt(g) / (g - 1.0)) * (-(minus.v ** a) * np.expm1(a * ratio))
    # -int lambda_1 = +integral; lambda_2 = -lambda_1 flips the sign
    out = minus.u + integral if i == 1 else minus.u - integral
    if np.ndim(out) == 0:
        return float(out)
    return out


def classify_asymptotic(minus: EndState, plus: EndState, gas: GasModel,
                        tol: float = 1e-9) -> AsymptoticCase:
    """Decide which wave the inflow problem tends to for the given end states.

    Boundary layers need a subsonic ``minus`` and ``plus`` on the line
    through ``minus``; rarefactions need a supersonic ``minus`` and ``plus``
    on an R_i curve with ``u_+ > u_-``.  Anything else is Unsupported.
    """
    delta = abs(plus.u - minus.u)
    if minus.u <= 0.0 or plus.u <= 0.0:
        return AsymptoticCase(CaseKind.UNSUPPORTED, delta)
    if minus == plus:
        return AsymptoticCase(CaseKind.BL_PLUS, 0.0)

    region = classify_state(minus, gas)
    if region is PhaseRegion.SUBSONIC:
        on_line = abs(plus.u * minus.v - minus.u * plus.v) <= tol * abs(minus.u * plus.v)
        if on_line:
            v_star = sonic_point(minus, gas).v
            if minus.v < plus.v <= v_star * (1.0 + tol):
                return AsymptoticCase(CaseKind.BL_PLUS, delta)
            if 0.0 < plus.v < minus.v:
                return AsymptoticCase(CaseKind.BL_MINUS, delta)
    elif region is PhaseRegion.SUPERSONIC and plus.u > minus.u:
        scale = tol * max(1.0, abs(plus.u))
        for i, kind in ((1, CaseKind.RAREFACTION_1), (2, CaseKind.RAREFACTION_2)):
            if abs(plus.u - rarefaction_curve_u(plus.v, minus, i, gas)) <= scale:
                return AsymptoticCase(kind, delta)
    return AsymptoticCase(CaseKind.UNSUPPORTED, delta)


def eulerian_to_lagrangian(rho: float, u: float) -> EndState:
    if not rho > 0.0:
        raise DomainError(f"density must be positive, got {rho}")
    return EndState(1.0 / rho, u)


def lagrangian_to_eulerian(s: EndState) -> tuple[float, float]:
    return 1.0 / s.v, s.u

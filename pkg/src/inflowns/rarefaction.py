"""Smooth 1-rarefaction background built from an exactly solvable Burgers flow.

The Burgers data rises from ``w_-`` to ``w_+`` through a regularized
incomplete gamma function,

    w0(x) = w_-                                    (x < 0)
    w0(x) = w_- + delta_r * P(q + 1, eps * x)      (x >= 0),

and is solved by characteristics.  The background in the moving frame is
``V = lambda_1^{-1}(w(1 + t, xi + s t))`` with ``U`` read off the
1-rarefaction curve through ``(v_-, u_-)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import simpson
from scipy.optimize import minimize_scalar

from .gas import (
    CaseKind,
    DomainError,
    EndState,
    GasModel,
    PhaseRegion,
    boundary_speed,
    characteristic_speed,
    classify_asymptotic,
    classify_state,
    rarefaction_curve_u,
)
from .special import gammainc_lower


class RootBracketError(RuntimeError):
    pass


@dataclass(frozen=True)
class BurgersData:
    w_minus: float
    w_plus: float
    q: float = 10
    eps: float = 0.1

    def __post_init__(self):
        if not self.w_minus < self.w_plus:
            raise ValueError("need w_- < w_+")
        if not (self.q >= 10 and float(self.q).is_integer()):
            raise ValueError("q must be an integer >= 10")
        if not 0.0 < self.eps <= 1.0:
            raise ValueError("eps must lie in (0, 1]")

    @property
    def delta_r(self) -> float:
        return self.w_plus - self.w_minus

    @property
    def C_q(self) -> float:
        # normalized so that w0(+inf) = w_+
        return 1.0 / math.gamma(self.q + 1)

    def _density(self, z):
        """``z**q exp(-z) / Gamma(q+1)`` evaluated in log space."""
        with np.errstate(divide="ignore"):
            logd = self.q * np.log(z) - z - math.lgamma(self.q + 1)
        return np.where(z > 0.0, np.exp(logd), 0.0)

    def initial(self, x):
        x = np.asarray(x, dtype=float)
        z = self.eps * np.maximum(x, 0.0)
        # w_- + delta_r * 1.0 can round one ulp past w_+; keep w0 inside [w_-, w_+]
        return np.minimum(self.w_minus + self.delta_r * gammainc_lower(self.q + 1, z), self.w_plus)

    def initial_slope(self, x):
        x = np.asarray(x, dtype=float)
        z = self.eps * np.maximum(x, 0.0)
        return self.delta_r * self.eps * self._density(z)

    def initial_curvature(self, x):
        # d/dz of the density is (q - z) z**(q-1) exp(-z) / Gamma(q+1)
        x = np.asarray(x, dtype=float)
        z = self.eps * np.maximum(x, 0.0)
        with np.errstate(divide="ignore"):
            logd = (self.q - 1.0) * np.log(z) - z - math.lgamma(self.q + 1)
        dens = np.where(z > 0.0, np.exp(logd), 0.0)
        return self.delta_r * self.eps ** 2 * dens * (self.q - z)

    @property
    def x_far(self) -> float:
        """Beyond this point ``w0`` equals ``w_+`` to double precision."""
        return (2.0 * self.q + 80.0) / self.eps


def burgers_initial(x, data: BurgersData):
    return data.initial(x)


def characteristic_foot(t: float, x, data: BurgersData, tol: float = 1e-13):
    """Foot ``x0`` of the characteristic through ``(t, x)``.

    Solves ``x0 + w0(x0) t = x`` by safeguarded Newton inside the bracket
    ``[max(0, x - w_+ t), x - w_- t]``; the residual is strictly increasing
    in ``x0`` so the root is unique.
    """
    if t < 0.0:
        raise ValueError("t must be nonnegative")
    x = np.asarray(x, dtype=float)
    if t == 0.0:
        return x.copy()
    if x.ndim == 0:
        return characteristic_foot(t, x.reshape(1), data, tol)[0]
    x0 = x - data.w_minus * t
    active = x > data.w_minus * t
    if not active.any():
        return x0
    xa = x[active]
    lo = np.maximum(0.0, xa - data.w_plus * t)
    hi = xa - data.w_minus * t

    def resid(r):
        return r + data.initial(r) * t - xa

    g_lo, g_hi = resid(lo), resid(hi)
    slack = 1e-12 * (1.0 + np.abs(xa))
    if np.any(g_lo > slack) or np.any(g_hi < -slack):
        raise RootBracketError("characteristic root not bracketed")
    r = 0.5 * (lo + hi)
    scale = 1.0 + np.abs(xa)
    g_prev = np.full_like(xa, np.inf)
    for _ in range(200):
        g = resid(r)
        lo = np.where(g <= 0.0, r, lo)
        hi = np.where(g >= 0.0, r, hi)
        dg = 1.0 + t * data.initial_slope(r)
        newton = r - g / dg
        # bisect when Newton leaves the bracket or fails to halve the residual
        ok = (newton > lo) & (newton < hi) & (np.abs(g) <= 0.5 * g_prev)
        g_prev = np.abs(g)
        r_new = np.where(ok, newton, 0.5 * (lo + hi))
        done = (np.abs(r_new - r) <= tol * scale) | (hi - lo <= tol * scale)
        r = r_new
        if done.all():
            break
    else:
        raise RootBracketError("characteristic root did not converge")
    x0[active] = r
    return x0


def burgers_eval(t: float, x, data: BurgersData):
    """Solution ``w(t, x)`` of the smooth Burgers problem."""
    w, _, _ = burgers_derivatives(t, x, data)
    return w


def burgers_derivatives(t: float, x, data: BurgersData):
    """``(w, w_x, w_xx)`` through the characteristic map.

    With ``a = w0'(x0)``: ``w_x = a / (1 + t a)`` and
    ``w_xx = w0''(x0) / (1 + t a)**3``.
    """
    x0 = characteristic_foot(t, x, data)
    w = data.initial(x0)
    a = data.initial_slope(x0)
    jac = 1.0 + t * a
    w_x = a / jac
    w_xx = data.initial_curvature(x0) / jac ** 3
    const = np.asarray(x0) < 0.0
    w = np.where(const, data.w_minus, w)
    return w, w_x, w_xx


def lambda1_inverse(w, gas: GasModel):
    """Specific volume with ``lambda_1(v) = w`` (``w < 0``)."""
    w = np.asarray(w, dtype=float)
    if np.any(w >= 0.0):
        raise DomainError("lambda_1 inverse needs w < 0")
    out = (math.sqrt(gas.gamma) / -w) ** (2.0 / (gas.gamma + 1.0))
    return float(out) if out.ndim == 0 else out


def exact_rarefaction(s, minus: EndState, plus: EndState, gas: GasModel):
    """Inviscid centred 1-rarefaction ``(v^r, u^r)`` at ``s = x/t``."""
    w_m = characteristic_speed(1, minus.v, gas)
    w_p = characteristic_speed(1, plus.v, gas)
    s = np.asarray(s, dtype=float)
    w = np.clip(s, w_m, w_p)
    v = np.asarray(lambda1_inverse(w, gas), dtype=float)
    u = np.asarray(rarefaction_curve_u(v, minus, 1, gas), dtype=float)
    left, right = s <= w_m, s >= w_p
    v = np.where(left, minus.v, np.where(right, plus.v, v))
    u = np.where(left, minus.u, np.where(right, plus.u, u))
    if v.ndim == 0:
        return float(v), float(u)
    return v, u


@dataclass(frozen=True)
class ProfileDerivatives:
    V: np.ndarray
    U: np.ndarray
    V_xi: np.ndarray
    U_xi: np.ndarray
    V_xixi: np.ndarray
    U_xixi: np.ndarray

    @property
    def Uxi_over_V_xi(self):
        return self.U_xixi / self.V - self.U_xi * self.V_xi / self.V ** 2


@dataclass(frozen=True)
class RarefactionEvaluator:
    burgers: BurgersData
    minus: EndState
    plus: EndState
    gas: GasModel
    s_minus: float = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "s_minus", boundary_speed(self.minus))
        if classify_state(self.minus, self.gas) is not PhaseRegion.SUPERSONIC:
            raise DomainError("rarefaction background needs a supersonic inflow state")

    @classmethod
    def build(cls, minus: EndState, plus: EndState, gas: GasModel,
              q: int = 10, eps: float = 0.1, tol: float = 1e-9) -> "RarefactionEvaluator":
        case = classify_asymptotic(minus, plus, gas, tol)
        if case.kind is not CaseKind.RAREFACTION_1:
            raise DomainError(f"end states do not span a 1-rarefaction ({case.kind.value})")
        data = BurgersData(characteristic_speed(1, minus.v, gas),
                           characteristic_speed(1, plus.v, gas), q, eps)
        return cls(data, minus, plus, gas)

    stationary = False

    @property
    def far_state(self) -> EndState:
        return self.plus

    @property
    def delta(self) -> float:
        return abs(self.plus.u - self.minus.u)

    def derivatives(self, t: float, xi) -> ProfileDerivatives:
        xi = np.asarray(xi, dtype=float)
        x = xi + self.s_minus * t
        w, w_x, w_xx = burgers_derivatives(1.0 + t, x, self.burgers)
        gamma = self.gas.gamma
        V = np.asarray(lambda1_inverse(w, self.gas), dtype=float)
        U = np.asarray(rarefaction_curve_u(V, self.minus, 1, self.gas), dtype=float)
        a = 2.0 / (gamma + 1.0)
        dv = a * V / -w
        d2v = a * (a + 1.0) * V / w ** 2
        V_xi = dv * w_x
        V_xixi = d2v * w_x ** 2 + dv * w_xx
        U_xi = -w * V_xi
        U_xixi = -w_x * V_xi - w * V_xixi
        # left constant state: reproduce (v_-, u_-) bit for bit
        const = w == self.burgers.w_minus
        V = np.where(const, self.minus.v, V)
        U = np.where(const, self.minus.u, U)
        return ProfileDerivatives(V, U, V_xi, U_xi, V_xixi, U_xixi)

    def fields(self, t: float, xi):
        d = self.derivatives(t, xi)
        return d.V, d.U, d.V_xi, d.U_xi

    def constant_time(self) -> float:
        """Time after which ``xi = 0`` lies in the left constant region."""
        w_m = self.burgers.w_minus
        return w_m / (self.s_minus - w_m)


def profile_eval(t: float, xi, ev: RarefactionEvaluator):
    """Background ``(V, U)(t, xi)`` in the moving frame."""
    d = ev.derivatives(t, xi)
    if d.V.ndim == 0:
        return float(d.V), float(d.U)
    return d.V, d.U


def distance_to_inviscid(t: float, xi, ev: RarefactionEvaluator) -> float:
    """``sup_xi max(|V - v^r|, |U - u^r|)`` against the centred fan at ``(xi + s t)/t``."""
    V, U = profile_eval(t, xi, ev)
    vr, ur = exact_rarefaction((np.asarray(xi) + ev.s_minus * t) / t, ev.minus, ev.plus, ev.gas)
    return float(np.max(np.maximum(np.abs(V - vr), np.abs(U - ur))))


# -- L^p bounds ---------------------------------------------------------------

def _foot_grid(data: BurgersData, lo: float, n: int) -> np.ndarray:
    return np.linspace(max(lo, 0.0), data.x_far, n)


def _lp(values: np.ndarray, jac: np.ndarray, x0: np.ndarray, p: float) -> float:
    if math.isinf(p):
        return float(np.max(np.abs(values)))
    return float(simpson(np.abs(values) ** p * jac, x=x0) ** (1.0 / p))


def _refined_sup(fun, x0: np.ndarray) -> float:
    vals = np.abs(fun(x0))
    k = int(np.argmax(vals))
    a, b = x0[max(k - 1, 0)], x0[min(k + 1, len(x0) - 1)]
    if b <= a:
        return float(vals[k])
    res = minimize_scalar(lambda r: -abs(float(fun(np.array([r]))[0])),
                          bounds=(a, b), method="bounded",
                          options={"xatol": 1e-12 * (1.0 + abs(a))})
    return max(float(vals[k]), -float(res.fun))


def burgers_lp_norms(data: BurgersData, t: float, p: float, n: int = 20001):
    """``(||w_x(t)||_p, ||w_xx(t)||_p)`` on the real line.

    Integrals are taken in the characteristic coordinate ``x0`` where the
    integrand is smooth: ``dx = (1 + t w0'(x0)) dx0``.
    """
    x0 = _foot_grid(data, 0.0, n)
    a = data.initial_slope(x0)
    jac = 1.0 + t * a
    w_x = a / jac
    w_xx = data.initial_curvature(x0) / jac ** 3
    if math.isinf(p):
        def fx(r):
            s = data.initial_slope(r)
            return s / (1.0 + t * s)

        def fxx(r):
            s = data.initial_slope(r)
            return data.initial_curvature(r) / (1.0 + t * s) ** 3

        return _refined_sup(fx, x0), _refined_sup(fxx, x0)
    return _lp(w_x, jac, x0, p), _lp(w_xx, jac, x0, p)


def profile_lp_norms(ev: RarefactionEvaluator, t: float, p: float, n: int = 20001) -> dict:
    """L^p norms over ``xi >= 0`` of the background derivatives at time ``t``."""
    data = ev.burgers
    T = 1.0 + t
    x_b = ev.s_minus * t
    x0_b = float(characteristic_foot(T, np.array([x_b]), data)[0])
    x0 = _foot_grid(data, x0_b, n)
    x = x0 + data.initial(x0) * T
    xi = x - ev.s_minus * t
    d = ev.derivatives(t, xi)
    jac = 1.0 + T * data.initial_slope(x0)
    quantities = {
        "V_xi": d.V_xi, "U_xi": d.U_xi, "V_xixi": d.V_xixi,
        "U_xixi": d.U_xixi, "Uxi_over_V_xi": d.Uxi_over_V_xi,
    }
    return {name: _lp(val, jac, x0, p) for name, val in quantities.items()}


@dataclass
class LpReport:
    times: list
    p_values: list
    norms: dict  # (quantity, p) -> list over times
    constants: dict  # (bound, p) -> smallest admissible C
    exponents: dict  # (quantity, p) -> fitted log-log exponent in (1 + t)


def _inv(p: float) -> float:
    return 0.0 if math.isinf(p) else 1.0 / p


def verify_lp_bounds(ev: RarefactionEvaluator, times, p_values) -> LpReport:
    """Measure the derivative bounds of the smooth rarefaction background.

    First-order bound: ``||(V_xi, U_xi)||_p <= C min{eps^(1-1/p), (1+t)^(-1+1/p)}``;
    second-order bound: ``||(V_xixi, U_xixi, (U_xi/V)_xi)||_p <= C min{eps^(2-1/p), (1+t)^(-1+1/q)}``.
    """
    times = list(times)
    if not times:
        raise ValueError("times must be nonempty")
    eps, q = ev.burgers.eps, ev.burgers.q
    norms: dict = {}
    constants: dict = {}
    exponents: dict = {}
    for p in p_values:
        ip = _inv(p)
        rows = [profile_lp_norms(ev, t, p) for t in times]
        for name in rows[0]:
            norms[(name, p)] = [r[name] for r in rows]
        c1 = c2 = 0.0
        for t, r in zip(times, rows):
            b1 = min(eps ** (1.0 - ip), (1.0 + t) ** (-1.0 + ip))
            b2 = min(eps ** (2.0 - ip), (1.0 + t) ** (-1.0 + 1.0 / q))
            c1 = max(c1, max(r["V_xi"], r["U_xi"]) / b1)
            c2 = max(c2, max(r["V_xixi"], r["U_xixi"], r["Uxi_over_V_xi"]) / b2)
        constants[("first", p)] = c1
        constants[("second", p)] = c2
        if len(times) >= 2:
            lt = np.log1p(np.asarray(times, dtype=float))
            for name in rows[0]:
                vals = np.asarray(norms[(name, p)])
                if np.all(vals > 0.0):
                    exponents[(name, p)] = float(np.polyfit(lt, np.log(vals), 1)[0])
    return LpReport(times, list(p_values), norms, constants, exponents)


@dataclass
class BurgersReport:
    times: list
    p_values: list
    wx: dict  # p -> list of ||w_x(t)||_p
    wxx: dict
    constants: dict  # p -> smallest C in ||w_x|| <= C min{delta_r eps^(1-1/p), delta_r^(1/p) t^(-1+1/p)}
    exponents: dict  # p -> log-log slope of ||w_x|| in t (t > 0 samples only)


def verify_burgers_bounds(data: BurgersData, times, p_values) -> BurgersReport:
    times = list(times)
    if not times:
        raise ValueError("times must be nonempty")
    wx, wxx, constants, exponents = {}, {}, {}, {}
    dr, eps = data.delta_r, data.eps
    for p in p_values:
        ip = _inv(p)
        pairs = [burgers_lp_norms(data, t, p) for t in times]
        wx[p] = [a for a, _ in pairs]
        wxx[p] = [b for _, b in pairs]
        c = 0.0
        for t, nx in zip(times, wx[p]):
            bound = dr * eps ** (1.0 - ip)
            if t > 0.0:
                bound = min(bound, dr ** ip * t ** (-1.0 + ip))
            c = max(c, nx / bound)
        constants[p] = c
        pos = [(t, n) for t, n in zip(times, wx[p]) if t > 0.0]
        if len(pos) >= 2:
            ts, ns = np.array(pos).T
            exponents[p] = float(np.polyfit(np.log(ts), np.log(ns), 1)[0])
    return BurgersReport(times, list(p_values), wx, wxx, constants, exponents)


def profile_table(ev: RarefactionEvaluator, t: float, xi) -> np.ndarray:
    """Columns xi, V, U, V_xi, U_xi for CSV export."""
    d = ev.derivatives(t, xi)
    return np.column_stack([np.asarray(xi, dtype=float), d.V, d.U, d.V_xi, d.U_xi])

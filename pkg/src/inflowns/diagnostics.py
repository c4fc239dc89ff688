"""Energy functionals, the Kanel density bracket and per-snapshot diagnostics."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, fields

import numpy as np
from scipy.integrate import quad
from scipy.optimize import brentq

from .gas import DomainError, GasModel, pressure_second


def _positive(*arrays):
    for a in arrays:
        if np.any(np.asarray(a) <= 0.0):
            raise DomainError("arguments must be positive")


def _log_ratio(r):
    """``log(r)`` using ``log1p(r - 1)`` near 1, where it is more accurate."""
    near = np.abs(r - 1.0) < 0.5
    with np.errstate(divide="ignore"):
        return np.where(near, np.log1p(np.where(near, r - 1.0, 0.0)), np.log(r))


def _tilde(r, g):
    x = r - 1.0
    lr = _log_ratio(r)
    if g == 1.0:
        return x - lr
    return x + np.expm1((1.0 - g) * lr) / (g - 1.0)


def phi_potential(v, V, gas: GasModel):
    """``p(V)(v - V) - int_V^v p``; nonnegative and zero only at ``v = V``."""
    _positive(v, V)
    v = np.asarray(v, dtype=float)
    V = np.asarray(V, dtype=float)
    g = gas.gamma
    out = np.maximum(V ** (1.0 - g) * _tilde(v / V, g), 0.0)
    return float(out) if out.ndim == 0 else out


def tilde_phi(vt, gas: GasModel):
    """Dimensionless potential with ``Phi(v, V) = V**(1-gamma) * tilde_phi(v/V)``."""
    _positive(vt)
    vt = np.asarray(vt, dtype=float)
    out = np.maximum(_tilde(vt, gas.gamma), 0.0)
    return float(out) if out.ndim == 0 else out


def kanel_psi(vt: float, gas: GasModel) -> float:
    """Kanel's function ``int_1^vt sqrt(tilde_phi(eta)) / eta d eta``.

    Integrated in ``s = log(eta)``, where the integrand is
    ``sqrt(tilde_phi(exp(s)))`` and stays tame at both ends.
    """
    if not vt > 0.0:
        raise DomainError("kanel_psi needs vt > 0")
    if vt == 1.0:
        return 0.0
    top = math.log(vt)
    val, _ = quad(lambda s: math.sqrt(tilde_phi(math.exp(s), gas)), 0.0, top,
                  epsabs=1e-12, epsrel=1e-12, limit=200)
    return val


_S_FLOOR = -700.0


def kanel_inverse(target: float, gas: GasModel) -> float:
    """Solve ``kanel_psi(vt) = target`` by bracketing in ``log(vt)``.

    Below ``vt = exp(-700)`` (only reachable for gamma = 1) the small-``vt``
    asymptotic ``Psi ~ -(2/3) |log vt|**1.5`` is inverted in closed form.
    """
    if target == 0.0:
        return 1.0

    def f(s):
        return kanel_psi(math.exp(s), gas) - target

    if target > 0.0:
        hi = 1.0
        while f(hi) < 0.0:
            hi *= 2.0
        return math.exp(brentq(f, 0.0, hi, xtol=1e-14, rtol=1e-14))
    lo = -1.0
    while f(lo) > 0.0:
        lo *= 2.0
        if lo < _S_FLOOR:
            if f(_S_FLOOR) > 0.0:
                return math.exp(-(1.5 * -target) ** (2.0 / 3.0))
            lo = _S_FLOOR
            break
    return math.exp(brentq(f, lo, 0.0, xtol=1e-14, rtol=1e-14))


def kanel_bracket(psi_sup: float, V_range, gas: GasModel) -> tuple[float, float]:
    """Two-sided bound on ``v`` implied by ``sup |Psi(v/V)| <= psi_sup``."""
    if psi_sup < 0.0:
        raise ValueError("psi_sup must be nonnegative")
    V_min, V_max = V_range
    if psi_sup == 0.0:
        return float(V_min), float(V_max)
    return kanel_inverse(-psi_sup, gas) * V_min, kanel_inverse(psi_sup, gas) * V_max


F_SERIES_CUTOFF = 1e-3


def f_factor(v, V, gas: GasModel):
    """Quotient ``f`` in ``p(v) - p(V) - p'(V)(v - V) = f(v, V) (v - V)**2``.

    With ``x = v/V - 1`` the numerator is ``V**-gamma ((1+x)**-gamma - 1 + gamma x)``.
    For ``|x| > 1e-3`` the quotient is evaluated directly (``expm1``/``log1p``);
    closer to the diagonal the binomial series
    ``sum_{k>=2} binom(-gamma, k) x**(k-2)`` is summed to ``k = 9``, whose
    leading term is the limit ``gamma (gamma+1) V**(-gamma-2) / 2``.
    """
    _positive(v, V)
    v = np.asarray(v, dtype=float)
    V = np.asarray(V, dtype=float)
    g = gas.gamma
    x = (v - V) / V
    small = np.abs(x) <= F_SERIES_CUTOFF
    xs = np.where(small, 1.0, x)
    num = np.expm1(-g * np.log1p(xs)) + g * xs
    direct = num / xs ** 2
    series = np.zeros_like(x)
    coef = 1.0
    for k in range(1, 10):
        coef *= -(g + k - 1.0) / k  # binom(-gamma, k)
        if k >= 2:
            series = series + coef * x ** (k - 2)
    out = V ** (-g - 2.0) * np.where(small, series, direct)
    return float(out) if out.ndim == 0 else out


def discriminant(U_xi, v, V, gas: GasModel):
    """Discriminant of the quadratic form in the basic energy estimate."""
    return gas.mu * np.asarray(U_xi) / (np.asarray(V) ** 2 * np.asarray(v) * f_factor(v, V, gas)) - 4.0


# -- discrete calculus ---------------------------------------------------------

def trapz(y, dx: float) -> float:
    y = np.asarray(y)
    return float(dx * (y.sum() - 0.5 * (y[0] + y[-1])))


def gradient(y, dx: float) -> np.ndarray:
    """Central differences inside, one-sided second order at both ends."""
    return np.gradient(y, dx, edge_order=2)


def left_derivative(y, dx: float) -> float:
    return float((-3.0 * y[0] + 4.0 * y[1] - y[2]) / (2.0 * dx))


@dataclass(frozen=True)
class DiagnosticsFrame:
    t: float
    sup_diff: float
    l2_phi_psi: float
    energy_phi: float
    vtilde_grad: float
    dissipation: float
    boundary_trace: float
    compat_residual: float
    v_min: float
    v_max: float
    kanel_lo: float
    kanel_hi: float
    cs_margin: float
    cs_scale: float

    def as_dict(self) -> dict:
        return asdict(self)


CSV_COLUMNS = ("t", "sup_diff", "l2_phi_psi", "energy_phi", "vtilde_grad",
               "dissipation_cum", "boundary_trace", "compat_residual", "v_min",
               "v_max", "kanel_lo", "kanel_hi", "cs_margin")


def sup_pair(a, b) -> float:
    return float(np.max(np.maximum(np.abs(a), np.abs(b))))


def frame(state, background, gas: GasModel, bg_fields=None) -> DiagnosticsFrame:
    """Assemble every diagnostic of one snapshot.

    ``bg_fields`` may carry ``(V, U, V_xi, U_xi)`` already sampled on the
    state's grid; otherwise the background is evaluated here.
    """
    xi = state.grid.nodes
    if bg_fields is None:
        bg_fields = background.fields(state.t, xi)
    V, U, V_xi, _ = bg_fields
    if np.shape(V) != np.shape(state.v):
        raise ValueError("state and background grids differ")
    dx = state.grid.dx
    v, u = state.v, state.u
    phi, psi = v - V, u - U
    phi_xi = gradient(phi, dx)
    psi_xi = gradient(psi, dx)

    energy = trapz(phi_potential(v, V, gas) + 0.5 * psi ** 2, dx)
    log_grad = phi_xi / v - V_xi * phi / (v * V)
    vt = v / V
    tphi = tilde_phi(vt, gas)
    norm_tphi = math.sqrt(trapz(tphi, dx))
    norm_grad = math.sqrt(trapz(log_grad ** 2, dx))
    bound = norm_tphi * norm_grad
    psi_peak = max(abs(kanel_psi(float(vt.max()), gas)), abs(kanel_psi(float(vt.min()), gas)))
    lo, hi = kanel_bracket(bound, (float(V.min()), float(V.max())), gas)

    s = background.s_minus
    trace = left_derivative(psi, dx)
    compat = abs(s * left_derivative(phi, dx) + trace)
    return DiagnosticsFrame(
        t=float(state.t),
        sup_diff=sup_pair(phi, psi),
        l2_phi_psi=math.sqrt(trapz(phi ** 2 + psi ** 2, dx)),
        energy_phi=energy,
        vtilde_grad=norm_grad,
        dissipation=trapz(psi_xi ** 2 / v, dx),
        boundary_trace=trace ** 2,
        compat_residual=compat,
        v_min=float(v.min()),
        v_max=float(v.max()),
        kanel_lo=lo,
        kanel_hi=hi,
        cs_margin=bound - psi_peak,
        cs_scale=1.0 + bound,
    )


def cs_tolerance(fr: DiagnosticsFrame) -> float:
    return 1e-8 * fr.cs_scale


def weighted_tail_margin(phi, dx: float) -> float:
    """``min_xi (xi ||phi_xi||^2 - phi(xi)^2)``, the line-integral Cauchy-Schwarz check."""
    phi = np.asarray(phi)
    xi = dx * np.arange(len(phi))
    grad = gradient(phi, dx)
    norm2 = trapz(grad ** 2, dx)
    return float(np.min(xi * norm2 - phi ** 2))


def cumulative_trapz(y, t) -> np.ndarray:
    y = np.asarray(y, dtype=float)
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(y)
    if len(y) > 1:
        out[1:] = np.cumsum(0.5 * (y[1:] + y[:-1]) * np.diff(t))
    return out


@dataclass(frozen=True)
class EnergyAudit:
    energy_ratio: float  # sup_t E(t) / E(0); nan when E(0) == 0
    dissipation_total: float
    dissipation_monotone: bool
    boundary_integral: float
    rarefaction_constant: float | None
    flags: tuple

    @property
    def passed(self) -> bool:
        return not self.flags


def energy_audit(frames, energy_growth_factor: float = 3.0,
                 smoothing_eps: float | None = None) -> EnergyAudit:
    """Empirical constants of the basic energy estimate along a trajectory.

    With ``smoothing_eps`` (rarefaction runs) the constant ``C`` of
    ``E(t) <= C (E(0) + eps**(2/9) sup v_max**(1/2))`` is also reported.
    """
    frames = list(frames)
    if len(frames) < 2:
        raise ValueError("energy audit needs at least two frames")
    t = np.array([f.t for f in frames])
    E = np.array([f.energy_phi for f in frames])
    diss = cumulative_trapz([f.dissipation for f in frames], t)
    bnd = cumulative_trapz([f.boundary_trace for f in frames], t)
    flags = []
    if E[0] > 0.0:
        ratio = float(E.max() / E[0])
        if ratio > energy_growth_factor:
            flags.append(f"energy grew by {ratio:.3g} > {energy_growth_factor}")
    else:
        ratio = math.nan
        if E.max() > 0.0:
            flags.append("energy appeared from a zero initial perturbation")
    monotone = bool(np.all(np.diff(diss) >= 0.0))
    if not monotone:
        flags.append("cumulative dissipation is not monotone")
    rw = None
    if smoothing_eps is not None:
        M = max(f.v_max for f in frames)
        denom = E[0] + smoothing_eps ** (2.0 / 9.0) * math.sqrt(M)
        rw = float(E.max() / denom)
    return EnergyAudit(ratio, float(diss[-1]), monotone, float(bnd.max()), rw, tuple(flags))


def phi_quadratic_bounds(v, V, gas: GasModel) -> tuple[float, float]:
    """Observed constants ``(c_lo, c_hi)`` with ``c_lo phi**2 <= Phi <= c_hi phi**2``.

    ``Phi = int_0^1 int_0^1 theta p''(...) phi**2``, so both constants lie
    between ``p''(max v)/2`` and ``p''(min v)/2``.
    """
    v = np.asarray(v, dtype=float)
    V = np.asarray(V, dtype=float)
    phi = v - V
    nz = phi != 0.0
    ratio = phi_potential(v[nz], V[nz], gas) / phi[nz] ** 2
    return float(ratio.min()), float(ratio.max())


def pressure_curvature_range(v_lo: float, v_hi: float, gas: GasModel) -> tuple[float, float]:
    return 0.5 * float(pressure_second(v_hi, gas)), 0.5 * float(pressure_second(v_lo, gas))


FRAME_FIELDS = tuple(f.name for f in fields(DiagnosticsFrame))

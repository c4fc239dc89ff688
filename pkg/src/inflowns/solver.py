"""Explicit finite-difference solver for the inflow problem in the moving frame.

The unknowns are the primitive fields ``(v, u)`` on ``xi_j = j dx``, advanced by

    v_t = (s v + u)_xi,
    u_t = (s u - p(v) + mu u_xi / v)_xi,

with conservative central fluxes, interface volume ``(v_j + v_{j+1})/2`` in
the viscous flux, and the explicit midpoint rule in time.  The inner time
loop is compiled with numba and always lands exactly on the requested
output time.

Boundary treatment: ``(v, u) = (v_-, u_-)`` at ``xi = 0``.  At ``xi = L`` the
velocity is held at ``u_+``; the volume is either held at ``v_+`` or, by
default, advanced with the one-sided (upwind) form of its transport
equation, since ``-s > 0`` makes ``xi = L`` an outflow point for ``v``.
"""
from __future__ import annotations

import math
import time as _time
import warnings
from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .conditions import PerturbationSpec
from .diagnostics import DiagnosticsFrame, frame, trapz
from .gas import GasModel

__all__ = [
    "Grid", "SolverState", "PerturbationSpec", "InitialReport", "Trajectory",
    "PositivityError", "StepSizeError", "make_initial", "step", "run",
    "time_step", "rhs", "OK", "POSITIVITY", "UNDERFLOW",
]

OK, POSITIVITY, UNDERFLOW = 0, 1, 2
DT_FLOOR = 1e-14
ADEQUACY_TOL = 1e-6


class PositivityError(RuntimeError):
    def __init__(self, t, index, xi):
        super().__init__(f"specific volume became nonpositive at t={t:.6g}, xi={xi:.6g} (node {index})")
        self.t, self.index, self.xi = t, index, xi


class StepSizeError(RuntimeError):
    pass


@dataclass(frozen=True)
class Grid:
    n: int
    L: float

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 16:
            raise ValueError(f"grid needs an integer n >= 16, got {self.n}")
        if not self.L > 0.0:
            raise ValueError(f"domain length must be positive, got {self.L}")

    @property
    def dx(self) -> float:
        return self.L / self.n

    @property
    def nodes(self) -> np.ndarray:
        return self.dx * np.arange(self.n + 1)

    def refined(self) -> "Grid":
        return Grid(2 * self.n, self.L)


@dataclass
class SolverState:
    t: float
    v: np.ndarray
    u: np.ndarray
    grid: Grid
    background: object = field(repr=False)
    steps: int = 0

    def copy(self) -> "SolverState":
        return SolverState(self.t, self.v.copy(), self.u.copy(), self.grid,
                           self.background, self.steps)


# -- compiled kernels ----------------------------------------------------------

@njit(cache=True)
def _rhs(v, u, dv, du, dx, s, mu, gamma, upwind, outflow):
    n = v.size - 1
    fv = np.empty(n)
    fu = np.empty(n)
    for i in range(n):
        vm = 0.5 * (v[i] + v[i + 1])
        um = 0.5 * (u[i] + u[i + 1])
        if upwind:
            cv = s * v[i]
            cu = s * u[i]
        else:
            cv = s * vm
            cu = s * um
        pm = 0.5 * (v[i] ** -gamma + v[i + 1] ** -gamma)
        fv[i] = cv + um
        fu[i] = cu - pm + mu * (u[i + 1] - u[i]) / (dx * vm)
    dv[0] = 0.0
    du[0] = 0.0
    for j in range(1, n):
        dv[j] = (fv[j] - fv[j - 1]) / dx
        du[j] = (fu[j] - fu[j - 1]) / dx
    du[n] = 0.0
    if outflow:
        dv[n] = (s * (v[n] - v[n - 1]) + (u[n] - u[n - 1])) / dx
    else:
        dv[n] = 0.0


@njit(cache=True)
def _time_step(v, dx, s, mu, gamma, cfl):
    vmin = v[0]
    speed = 0.0
    root = math.sqrt(gamma)
    for j in range(v.size):
        x = v[j]
        if x < vmin:
            vmin = x
        c = root * x ** (-(gamma - 1.0) / 2.0)
        lam = root * x ** (-(gamma + 1.0) / 2.0)
        w = c if c > lam else lam
        if w > speed:
            speed = w
    hyper = dx / (abs(s) + speed)
    visc = dx * dx * vmin / (2.0 * mu)
    return cfl * (hyper if hyper < visc else visc)


@njit(cache=True)
def _first_nonpositive(v):
    for j in range(v.size):
        if not v[j] > 0.0:
            return j
    return -1


@njit(cache=True)
def _advance(v, u, t, t_out, dx, s, mu, gamma, cfl, upwind, outflow):
    """Advance in place to ``t_out``; returns ``(t, steps, status, node)``."""
    n1 = v.size
    dv = np.empty(n1)
    du = np.empty(n1)
    vh = np.empty(n1)
    uh = np.empty(n1)
    steps = 0
    while t < t_out:
        dt = _time_step(v, dx, s, mu, gamma, cfl)
        if not dt > DT_FLOOR * max(1.0, t):
            return t, steps, UNDERFLOW, -1
        last = t + dt >= t_out
        if last:
            dt = t_out - t
        _rhs(v, u, dv, du, dx, s, mu, gamma, upwind, outflow)
        for j in range(n1):
            vh[j] = v[j] + 0.5 * dt * dv[j]
            uh[j] = u[j] + 0.5 * dt * du[j]
        bad = _first_nonpositive(vh)
        if bad >= 0:
            return t, steps, POSITIVITY, bad
        _rhs(vh, uh, dv, du, dx, s, mu, gamma, upwind, outflow)
        for j in range(n1):
            v[j] += dt * dv[j]
            u[j] += dt * du[j]
        steps += 1
        t = t_out if last else t + dt
        bad = _first_nonpositive(v)
        if bad >= 0:
            return t, steps, POSITIVITY, bad
    return t, steps, OK, -1


# -- Python interface ----------------------------------------------------------

def rhs(v, u, dx, s, gas: GasModel, upwind=False, outflow=True):
    """Semi-discrete right-hand side ``(dv/dt, du/dt)``."""
    v = np.ascontiguousarray(v, dtype=float)
    u = np.ascontiguousarray(u, dtype=float)
    dv = np.empty_like(v)
    du = np.empty_like(u)
    _rhs(v, u, dv, du, dx, s, gas.mu, gas.gamma, upwind, outflow)
    return dv, du


def time_step(v, dx, s, gas: GasModel, cfl=0.4) -> float:
    """``cfl * min(dx / (|s| + max_j max(c_j, lambda_j)), dx**2 min v / (2 mu))``."""
    return _time_step(np.ascontiguousarray(v, dtype=float), dx, s, gas.mu, gas.gamma, cfl)


@dataclass(frozen=True)
class InitialReport:
    l2: float  # discrete ||(phi0, psi0)||
    h1_seminorm: float  # discrete ||(phi0_xi, psi0_xi)||
    l2_analytic: float
    h1_analytic: float
    v_min: float
    v_max: float
    support_inside: bool

    @property
    def l2_ratio(self) -> float:
        return self.l2 / self.l2_analytic if self.l2_analytic else math.nan


def _pin_boundaries(state: SolverState):
    minus = state.background.minus
    state.v[0], state.u[0] = minus.v, minus.u
    state.u[-1] = state.background.far_state.u


def make_initial(background, spec: PerturbationSpec | None, grid: Grid,
                 gas: GasModel | None = None) -> tuple[SolverState, InitialReport]:
    """Background at ``t = 0`` plus the scaled perturbation, sampled on the grid."""
    xi = grid.nodes
    V, U, _, _ = background.fields(0.0, xi)
    V = np.array(V, dtype=float)
    U = np.array(U, dtype=float)
    if spec is None or spec.is_zero:
        phi = np.zeros_like(xi)
        psi = np.zeros_like(xi)
        dphi = np.zeros_like(xi)
        dpsi = np.zeros_like(xi)
        l2a = h1a = 0.0
        inside = True
    else:
        phi, psi = spec.phi0(xi), spec.psi0(xi)
        dphi, dpsi = spec.phi0_xi(xi), spec.psi0_xi(xi)
        norms = spec.analytic_norms()
        l2a = math.hypot(norms["phi0"], norms["psi0"])
        h1a = math.hypot(norms["phi0_xi"], norms["psi0_xi"])
        inside = spec.support_end() <= 0.9 * grid.L
    v = V + phi
    u = U + psi
    bad = np.flatnonzero(~(v > 0.0))
    if bad.size:
        j = int(bad[0])
        raise PositivityError(0.0, j, float(xi[j]))
    state = SolverState(0.0, v, u, grid, background)
    _pin_boundaries(state)
    report = InitialReport(
        math.sqrt(trapz(phi ** 2 + psi ** 2, grid.dx)),
        math.sqrt(trapz(dphi ** 2 + dpsi ** 2, grid.dx)),
        l2a, h1a, float(v.min()), float(v.max()), inside)
    return state, report


def _check_status(state, status, node):
    if status == POSITIVITY:
        raise PositivityError(state.t, node, node * state.grid.dx)
    if status == UNDERFLOW:
        raise StepSizeError(f"time step underflow at t={state.t:.6g}")


def advance(state: SolverState, gas: GasModel, t_out: float, cfl: float = 0.4,
            upwind: bool = False, outflow: bool = True) -> SolverState:
    """Advance ``state`` in place to exactly ``t_out``."""
    s = state.background.s_minus
    if not s < 0.0:
        raise ValueError("inflow problems need s_- < 0")
    t, steps, status, node = _advance(state.v, state.u, float(state.t), float(t_out),
                                      state.grid.dx, s, gas.mu, gas.gamma, cfl,
                                      upwind, outflow)
    state.t = t
    state.steps += steps
    _check_status(state, status, node)
    return state


def step(state: SolverState, gas: GasModel, cfl: float = 0.4, upwind: bool = False,
         outflow: bool = True) -> SolverState:
    """Return a new state one stable time step later."""
    new = state.copy()
    dt = time_step(new.v, new.grid.dx, new.background.s_minus, gas, cfl)
    return advance(new, gas, new.t + dt, cfl, upwind, outflow)


@dataclass
class Trajectory:
    states: list
    frames: list
    warnings: list
    partial: bool
    wall_time: float

    @property
    def times(self) -> np.ndarray:
        return np.array([f.t for f in self.frames])

    @property
    def sup_series(self) -> np.ndarray:
        return np.array([f.sup_diff for f in self.frames])


def output_times(t_end: float, every: float) -> np.ndarray:
    if t_end < 0.0:
        raise ValueError("t_end must be nonnegative")
    if t_end == 0.0:
        return np.array([0.0])
    if not every > 0.0:
        raise ValueError("output interval must be positive")
    k = int(math.floor(t_end / every + 1e-9))
    times = every * np.arange(k + 1)
    if t_end - times[-1] > 1e-9 * every:
        times = np.append(times, t_end)
    else:
        times[-1] = t_end
    return times


def adequacy_gap(state: SolverState) -> float:
    """Deviation from the far state at ``xi = 0.9 L``."""
    j = int(round(0.9 * state.grid.n))
    far = state.background.far_state
    return max(abs(state.v[j] - far.v), abs(state.u[j] - far.u))


def run(state: SolverState, gas: GasModel, t_end: float, every: float,
        cfl: float = 0.4, upwind: bool = False, outflow: bool = True,
        wall_budget: float | None = None, keep_states: bool = True,
        on_output=None) -> Trajectory:
    """Step to ``t_end`` emitting a snapshot and a diagnostics frame per output time.

    ``on_output(state, frame, bg_fields)`` is called for every snapshot.
    Exceeding ``wall_budget`` seconds stops the run with ``partial=True``.
    """
    bg = state.background
    xi = state.grid.nodes
    static = bg.fields(0.0, xi) if getattr(bg, "stationary", False) else None
    started = _time.perf_counter()
    states, frames, notes = [], [], []
    partial = False
    warned = False
    for k, t_out in enumerate(output_times(t_end, every)):
        if k > 0:
            advance(state, gas, t_out, cfl, upwind, outflow)
        fields_now = static if static is not None else bg.fields(state.t, xi)
        fr = frame(state, bg, gas, fields_now)
        frames.append(fr)
        if keep_states:
            states.append(state.copy())
        if on_output is not None:
            on_output(state, fr, fields_now)
        gap = adequacy_gap(state)
        if gap > ADEQUACY_TOL and not warned:
            msg = f"domain may be too short: deviation {gap:.3g} at xi=0.9L, t={state.t:.6g}"
            warnings.warn(msg, RuntimeWarning, stacklevel=2)
            notes.append(msg)
            warned = True
        if wall_budget is not None and _time.perf_counter() - started > wall_budget and t_out < t_end:
            partial = True
            notes.append(f"wall budget of {wall_budget:g} s exceeded at t={state.t:.6g}")
            break
    return Trajectory(states, frames, notes, partial, _time.perf_counter() - started)


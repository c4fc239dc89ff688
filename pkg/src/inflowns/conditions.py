"""Admissible-index systems, sampled verification of their sufficient regions,
and the scaled perturbation family built from named shapes.

Every clause is evaluated literally in double precision, strict or non-strict
exactly as the inequality is stated, with no tolerance band.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.integrate import quad


@dataclass(frozen=True)
class IndexParams:
    alpha: float
    beta: float = 0.0
    l: float = 0.0
    l0: float = 0.0
    gamma: float = 2.0

    def __post_init__(self):
        if not self.l >= 0.0:
            raise ValueError(f"l must be nonnegative, got {self.l}")
        if not self.gamma >= 1.0:
            raise ValueError(f"gamma must be >= 1, got {self.gamma}")

    @property
    def theta(self) -> float:
        return self.alpha - self.beta - (self.gamma + 3.0) * self.l / 2.0


@dataclass(frozen=True)
class CheckResult:
    passed: bool
    violated: tuple[str, ...]
    clauses: tuple[tuple[str, bool, str], ...] = field(default=(), repr=False)

    def table(self) -> str:
        width = max((len(name) for name, _, _ in self.clauses), default=4)
        rows = [f"{name:<{width}}  {'ok' if ok else 'VIOLATED'}  {text}"
                for name, ok, text in self.clauses]
        return "\n".join(rows)


def _collect(clauses) -> CheckResult:
    clauses = tuple((name, bool(ok), text) for name, ok, text in clauses)
    violated = tuple(name for name, ok, _ in clauses if not ok)
    return CheckResult(not violated, violated, clauses)


def check_bl_plus(p: IndexParams) -> CheckResult:
    """Index system for the increasing boundary layer."""
    a, b, l, g = p.alpha, p.beta, p.l, p.gamma
    m3 = min(2 * (g - 1) / (g + 1) * a - (3 * g * g + 4 * g + 1) / (2 * g + 2) * l,
             3 * (g - 1) / (g * g + 1) * a - (g * g + 6 * g + 1) / (2 * (g * g + 1)) * g * l)
    m4 = min(a - (g + 2) * l, 2 * a / g - (g * g + 5 * g + 2) / (2 * g) * l)
    return _collect([
        ("1a", a > (g + 2) / 2 * l, "alpha > (gamma+2) l/2"),
        ("1b", a + b > (g + 1) * l, "alpha+beta > (gamma+1) l"),
        ("1c", b >= (g - 1) / 2 * l, "beta >= (gamma-1) l/2"),
        ("2", a - b <= (g + 3) / 2 * l, "alpha-beta <= (gamma+3) l/2"),
        ("3", b - a < m3, f"beta-alpha < {m3:.6g}"),
        ("4", b - a < m4, f"beta-alpha < {m4:.6g}"),
    ])


def check_bl_minus(p: IndexParams) -> CheckResult:
    """Index system for the decreasing boundary layer."""
    a, b, l, g = p.alpha, p.beta, p.l, p.gamma
    den = 2 * g * g + 6 * g - 2
    m3 = min(a - (g + 2) * l,
             (g - 1) * (1 - 4 * a) / den - (g ** 3 + 4 * g * g + 8 * g - 1) / den * l)
    return _collect([
        ("1a", a > (g + 2) / 2 * l, "alpha > (gamma+2) l/2"),
        ("1b", g * l < a + b, "gamma l < alpha+beta"),
        ("1c", a + b < 0.5 - (g + 5) / 2 * l, "alpha+beta < 1/2 - (gamma+5) l/2"),
        ("2", a - b <= (g + 3) / 2 * l, "alpha-beta <= (gamma+3) l/2"),
        ("3", b - a < m3, f"beta-alpha < {m3:.6g}"),
    ])


def r_bound(gamma: float) -> float:
    g = gamma
    return min((g - 1) / (6 * g * g - 6 * g + 2), 2 * (g - 1) / (3 * g * g + 3 * g + 9))


def check_r(p: IndexParams) -> CheckResult:
    """Index system for the supersonic rarefaction wave."""
    a, l, l0, g = p.alpha, p.l, p.l0, p.gamma
    lhs = 4 * a + 2 * (g + 1) * l
    return _collect([
        ("1", l <= 1 / (8 * g - 2), "l <= 1/(8 gamma - 2)"),
        ("2", l0 > 2 * a + (g + 1) * l, "l0 > 2 alpha + (gamma+1) l"),
        ("3", lhs >= max(l, (g - 1) * l), "4 alpha + 2(gamma+1) l >= max(l, (gamma-1) l)"),
        ("4", lhs < r_bound(g), f"4 alpha + 2(gamma+1) l < {r_bound(g):.6g}"),
    ])


# -- sampled verification ------------------------------------------------------

MARGIN = 1e-9


@dataclass(frozen=True)
class RemarkReport:
    remark: int
    gamma: float
    samples: int
    counterexamples: int
    witnesses: tuple[IndexParams, ...]
    empty_region: bool

    @property
    def passed(self) -> bool:
        return self.counterexamples == 0


def _uniform(rng, lo, hi):
    """Uniform draw strictly inside ``(lo, hi)`` shrunk by ``MARGIN``."""
    lo = np.asarray(lo) + MARGIN
    hi = np.asarray(hi) - MARGIN
    return lo + (hi - lo) * rng.random(np.shape(lo))


def _remark1(gamma, n, rng):
    g = gamma
    k = min(1.0, 2.0 / g, 2 * (g - 1) / (g + 1), 3 * (g - 1) / (g * g + 1))
    if k <= 0.0:
        return None
    a = _uniform(rng, np.zeros(n), np.ones(n))
    b = _uniform(rng, a, a * (1 + k))
    return [IndexParams(x, y, 0.0, 0.0, g) for x, y in zip(a, b)], check_bl_plus


def _remark2(gamma, n, rng):
    g = gamma
    if g == 1.0:
        return None
    den = 2 * g * g + 6 * g - 2
    out = []
    # alpha + beta < 1/2 with beta >= alpha forces alpha < 1/4; rejection on the sum
    while len(out) < n:
        a = _uniform(rng, 0.0, 0.25)
        hi = min(a + min(a, (g - 1) * (1 - 4 * a) / den), 0.5 - a)
        if hi - a <= 2 * MARGIN:
            continue
        b = float(_uniform(rng, a, hi))
        out.append(IndexParams(float(a), b, 0.0, 0.0, g))
    return out, check_bl_minus


def _remark4(gamma, n, rng):
    g = gamma
    top = r_bound(g) / 4.0
    if top <= 0.0:
        return None
    a = _uniform(rng, np.zeros(n), np.full(n, top))
    l0 = _uniform(rng, 2 * a, 2 * a + 1.0)
    return [IndexParams(x, 0.0, 0.0, y, g) for x, y in zip(a, l0)], check_r


_REMARKS = {1: _remark1, 2: _remark2, 4: _remark4}


def verify_remark(remark: int, gamma: float, samples: int = 10_000,
                  seed: int = 0) -> RemarkReport:
    """Draw points from a remark's sufficient region and run its checker.

    ``remark=1`` and ``remark=2`` select the sufficient regions of the
    increasing and decreasing boundary layers; ``remark=4`` selects the one
    of the rarefaction wave.  A region that is empty for the
    given ``gamma`` is reported with ``empty_region=True`` and no samples.
    """
    if remark not in _REMARKS:
        raise ValueError(f"remark must be one of {sorted(_REMARKS)}, got {remark}")
    if samples < 1:
        raise ValueError("samples must be >= 1")
    rng = np.random.default_rng(seed)
    drawn = _REMARKS[remark](float(gamma), samples, rng)
    if drawn is None:
        return RemarkReport(remark, gamma, 0, 0, (), True)
    points, checker = drawn
    bad = tuple(pt for pt in points if not checker(pt).passed)
    return RemarkReport(remark, gamma, len(points), len(bad), bad[:10], False)


# -- perturbation shapes -------------------------------------------------------

class CompatibilityError(ValueError):
    """Shape does not vanish at the boundary."""


@dataclass(frozen=True)
class Shape:
    name: str
    f: Callable
    df: Callable
    norm: float  # L2 norm on the half-line
    dnorm: float  # L2 norm of the derivative


def _bump(x):
    r = (np.asarray(x, dtype=float) - 5.0) / 4.0
    inside = np.abs(r) < 1.0
    rr = np.where(inside, r, 0.0)
    return np.where(inside, np.exp(1.0 - 1.0 / (1.0 - rr * rr)), 0.0)


def _bump_prime(x):
    r = (np.asarray(x, dtype=float) - 5.0) / 4.0
    inside = np.abs(r) < 1.0
    rr = np.where(inside, r, 0.0)
    q = 1.0 - rr * rr
    return np.where(inside, np.exp(1.0 - 1.0 / q) * (-2.0 * rr / q ** 2) / 4.0, 0.0)


def _tanh_tail(x):
    x = np.asarray(x, dtype=float)
    return np.tanh(x) * np.exp(-x / 3.0)


def _tanh_tail_prime(x):
    x = np.asarray(x, dtype=float)
    th = np.tanh(x)
    return (1.0 - th * th - th / 3.0) * np.exp(-x / 3.0)


def _sine_packet(x):
    x = np.asarray(x, dtype=float)
    return np.sin(x) * np.exp(-x / 2.0)


def _sine_packet_prime(x):
    x = np.asarray(x, dtype=float)
    return (np.cos(x) - 0.5 * np.sin(x)) * np.exp(-x / 2.0)


def _zero(x):
    return np.zeros_like(np.asarray(x, dtype=float))


def _l2(fn, lo=0.0, hi=np.inf, points=None):
    val, _ = quad(lambda s: float(fn(s)) ** 2, lo, hi, epsabs=1e-14, epsrel=1e-13,
                  limit=400, points=points)
    return math.sqrt(val)


def _make_shapes():
    # the bump lives on [1, 9]; integrate over its support only
    return {
        "bump": Shape("bump", _bump, _bump_prime, _l2(_bump, 1.0, 9.0, [5.0]),
                      _l2(_bump_prime, 1.0, 9.0, [5.0])),
        "tanh-tail": Shape("tanh-tail", _tanh_tail, _tanh_tail_prime,
                           _l2(_tanh_tail), _l2(_tanh_tail_prime)),
        # int_0^inf sin^2 e^-x = 2/5 and (cos - sin/2)^2 e^-x integrates to 1/2
        "sine-packet": Shape("sine-packet", _sine_packet, _sine_packet_prime,
                             math.sqrt(0.4), math.sqrt(0.5)),
        "zero": Shape("zero", _zero, _zero, 0.0, 0.0),
    }


SHAPES = _make_shapes()


def get_shape(name: str) -> Shape:
    try:
        shape = SHAPES[name]
    except KeyError:
        raise ValueError(f"unknown shape {name!r}; choose from {sorted(SHAPES)}") from None
    if abs(float(shape.f(0.0))) > 1e-14:
        raise CompatibilityError(f"shape {name!r} does not vanish at 0")
    return shape


@dataclass(frozen=True)
class PerturbationSpec:
    """``phi0(xi) = eps**((a+b)/2) f(eps**(b-a) xi)`` and likewise ``psi0`` with ``g``."""

    f: Shape
    g: Shape
    params: IndexParams
    eps: float

    def __post_init__(self):
        if not self.eps > 0.0:
            raise ValueError("eps must be positive")
        for s in (self.f, self.g):
            if abs(float(s.f(0.0))) > 1e-14:
                raise CompatibilityError(f"shape {s.name!r} does not vanish at 0")

    @property
    def amplitude(self) -> float:
        return self.eps ** ((self.params.alpha + self.params.beta) / 2.0)

    @property
    def stretch(self) -> float:
        return self.eps ** (self.params.beta - self.params.alpha)

    @property
    def is_zero(self) -> bool:
        return self.f.name == "zero" and self.g.name == "zero"

    def phi0(self, xi):
        return self.amplitude * self.f.f(self.stretch * np.asarray(xi, dtype=float))

    def psi0(self, xi):
        return self.amplitude * self.g.f(self.stretch * np.asarray(xi, dtype=float))

    def phi0_xi(self, xi):
        return self.amplitude * self.stretch * self.f.df(self.stretch * np.asarray(xi, dtype=float))

    def psi0_xi(self, xi):
        return self.amplitude * self.stretch * self.g.df(self.stretch * np.asarray(xi, dtype=float))

    def analytic_norms(self) -> dict:
        """Half-line norms from the change of variables ``x -> eps**(b-a) x``."""
        a, b = self.params.alpha, self.params.beta
        return {
            "phi0": self.eps ** a * self.f.norm,
            "psi0": self.eps ** a * self.g.norm,
            "phi0_xi": self.eps ** b * self.f.dnorm,
            "psi0_xi": self.eps ** b * self.g.dnorm,
        }

    def support_end(self, tail: float = 1e-16) -> float:
        """Point beyond which both shapes are below ``tail`` (in shape units)."""
        reach = {"bump": 9.0, "zero": 0.0,
                 "tanh-tail": 3.0 * math.log(1.0 / tail),
                 "sine-packet": 2.0 * math.log(1.0 / tail)}
        return max(reach[self.f.name], reach[self.g.name]) / self.stretch


def build_perturbation(f: str, g: str, p: IndexParams, eps: float) -> PerturbationSpec:
    return PerturbationSpec(get_shape(f), get_shape(g), p, eps)


# worked examples used by the unit tests and the CLI self-check
WORKED_EXAMPLES = (
    ("bl_plus", IndexParams(0.5, 0.55, 0.0, 0.0, 2.0), True),
    ("bl_plus", IndexParams(0.5, 0.9, 0.0, 0.0, 2.0), False),
    ("bl_minus", IndexParams(0.1, 0.12, 0.0, 0.0, 2.0), True),
    ("bl_minus", IndexParams(0.1, 0.2, 0.0, 0.0, 2.0), False),
    ("r", IndexParams(0.01, 0.0, 0.0, 0.1, 2.0), True),
    ("r", IndexParams(0.02, 0.0, 0.0, 0.01, 2.0), False),
)

CHECKERS = {"bl_plus": check_bl_plus, "bl_minus": check_bl_minus, "r": check_r}

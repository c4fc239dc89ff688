"""Flat ``key = value`` run configuration with validation.

Lines are ``dotted.key = value``; ``#`` starts a comment.  Parsing collects
every problem (unknown keys, bad values, missing keys, inconsistent
scenario) and raises them together in one :class:`ConfigError`.
"""
from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass

from scipy.special import gammaincinv

from .gas import (CaseKind, EndState, GasModel, PhaseRegion,
                  characteristic_speed, classify_asymptotic, classify_state)

SCENARIOS = ("bl", "rarefaction", "profile-only", "classify", "check-indices")
SHAPE_NAMES = ("zero", "bump", "tanh-tail", "sine-packet")
INDEX_SYSTEMS = ("auto", "bl_plus", "bl_minus", "r")


class ConfigError(ValueError):
    def __init__(self, problems):
        self.problems = list(problems)
        super().__init__("invalid configuration:\n" + "\n".join(f"  - {p}" for p in self.problems))


@dataclass(frozen=True)
class RunConfig:
    scenario: str
    gamma: float
    mu: float = 1.0
    v_minus: float | None = None
    u_minus: float | None = None
    v_plus: float | None = None
    u_plus: float | None = None
    grid_n: int = 800
    grid_length: float = 60.0
    t_end: float = 50.0
    cfl: float = 0.4
    output_every: float = 1.0
    output_fields_every: int = 10
    shape_f: str = "zero"
    shape_g: str = "zero"
    alpha: float = 0.0
    beta: float = 0.0
    l: float = 0.0
    l0: float = 0.0
    eps: float = 1.0
    rarefaction_q: int = 10
    eps_smooth: float = 0.1
    sup_decay_ratio: float | None = None
    energy_growth_factor: float = 3.0
    steady_drift_tol: float = 1e-3
    upwind: bool = False
    outflow: bool = True
    wall_budget: float | None = None
    index_system: str = "auto"
    index_samples: int = 10_000
    seed: int = 0

    @property
    def gas(self) -> GasModel:
        return GasModel(self.gamma, self.mu)

    @property
    def minus(self) -> EndState:
        return EndState(self.v_minus, self.u_minus)

    @property
    def plus(self) -> EndState:
        return EndState(self.v_plus, self.u_plus)

    @property
    def has_states(self) -> bool:
        return None not in (self.v_minus, self.u_minus, self.v_plus, self.u_plus)

    def replace(self, **changes) -> "RunConfig":
        return dataclasses.replace(self, **changes)

    def to_text(self) -> str:
        """Canonical text; parsing it gives back an equal config."""
        lines = []
        for key, attr in KEYS.items():
            value = getattr(self, attr)
            if value is None:
                continue
            lines.append(f"{key} = {format_value(value)}")
        return "\n".join(lines) + "\n"


# config key -> (attribute, type)
_SPEC = {
    "scenario": ("scenario", str),
    "gamma": ("gamma", float),
    "mu": ("mu", float),
    "v_minus": ("v_minus", float),
    "u_minus": ("u_minus", float),
    "v_plus": ("v_plus", float),
    "u_plus": ("u_plus", float),
    "grid.n": ("grid_n", int),
    "grid.length": ("grid_length", float),
    "time.t_end": ("t_end", float),
    "time.cfl": ("cfl", float),
    "time.wall_budget": ("wall_budget", float),
    "output.every": ("output_every", float),
    "output.fields_every": ("output_fields_every", int),
    "perturbation.shape_f": ("shape_f", str),
    "perturbation.shape_g": ("shape_g", str),
    "perturbation.alpha": ("alpha", float),
    "perturbation.beta": ("beta", float),
    "perturbation.l": ("l", float),
    "perturbation.l0": ("l0", float),
    "perturbation.eps": ("eps", float),
    "rarefaction.q": ("rarefaction_q", int),
    "rarefaction.eps_smooth": ("eps_smooth", float),
    "thresholds.sup_decay_ratio": ("sup_decay_ratio", float),
    "thresholds.energy_growth_factor": ("energy_growth_factor", float),
    "thresholds.steady_drift": ("steady_drift_tol", float),
    "solver.upwind": ("upwind", bool),
    "solver.outflow": ("outflow", bool),
    "indices.system": ("index_system", str),
    "indices.samples": ("index_samples", int),
    "seed": ("seed", int),
}
KEYS = {k: attr for k, (attr, _) in _SPEC.items()}
_ATTR_TO_KEY = {attr: k for k, attr in KEYS.items()}


def format_value(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _convert(raw: str, kind):
    if kind is bool:
        low = raw.lower()
        if low in ("true", "yes", "1", "on"):
            return True
        if low in ("false", "no", "0", "off"):
            return False
        raise ValueError(f"expected a boolean, got {raw!r}")
    if kind is int:
        value = float(raw)
        if not value.is_integer():
            raise ValueError(f"expected an integer, got {raw!r}")
        return int(value)
    if kind is float:
        value = float(raw)
        if not math.isfinite(value):
            raise ValueError(f"expected a finite number, got {raw!r}")
        return value
    return raw


def parse_config(text: str, overrides: dict | None = None) -> RunConfig:
    """Parse, fill defaults, validate and cross-check a configuration text.

    ``overrides`` maps dotted keys to raw string values applied after the
    text (used by the command line and by sweeps).
    """
    problems = []
    values = {}
    seen = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            problems.append(f"line {lineno}: expected 'key = value', got {body!r}")
            continue
        key, raw = (part.strip() for part in body.split("=", 1))
        if key not in _SPEC:
            problems.append(f"line {lineno}: unknown key {key!r}")
            continue
        if key in seen:
            problems.append(f"line {lineno}: duplicate key {key!r} (first set on line {seen[key]})")
            continue
        seen[key] = lineno
        attr, kind = _SPEC[key]
        try:
            values[attr] = _convert(raw, kind)
        except ValueError as exc:
            problems.append(f"line {lineno}: {key}: {exc}")
    for key, raw in (overrides or {}).items():
        if key not in _SPEC:
            problems.append(f"override: unknown key {key!r}")
            continue
        attr, kind = _SPEC[key]
        try:
            values[attr] = _convert(str(raw), kind)
        except ValueError as exc:
            problems.append(f"override: {key}: {exc}")

    missing = [k for k in ("scenario", "gamma") if k not in values]
    problems.extend(f"missing required key {k!r}" for k in missing)
    if not missing:
        cfg = RunConfig(**values)
        problems.extend(validate(cfg))
    if problems:
        raise ConfigError(problems)
    return cfg


def rarefaction_min_length(cfg: RunConfig) -> float:
    """Shortest domain keeping the smoothed fan inside ``0.9 L`` up to ``t_end``."""
    gas = cfg.gas
    s = -cfg.u_minus / cfg.v_minus
    w_plus = float(characteristic_speed(1, cfg.v_plus, gas))
    tail = float(gammaincinv(cfg.rarefaction_q + 1, 1.0 - 1e-9)) / cfg.eps_smooth
    return ((w_plus - s) * cfg.t_end + max(w_plus, 0.0) + tail) / 0.9


def validate(cfg: RunConfig) -> list[str]:
    """Range checks plus scenario/end-state consistency; returns problems."""
    p = []
    key = _ATTR_TO_KEY
    if cfg.scenario not in SCENARIOS:
        p.append(f"scenario must be one of {', '.join(SCENARIOS)}, got {cfg.scenario!r}")
    if not cfg.gamma >= 1.0:
        p.append(f"gamma must be >= 1, got {cfg.gamma}")
    for attr in ("mu", "grid_length", "cfl", "output_every", "eps", "eps_smooth",
                 "energy_growth_factor", "steady_drift_tol"):
        if not getattr(cfg, attr) > 0.0:
            p.append(f"{key[attr]} must be positive, got {getattr(cfg, attr)}")
    if cfg.t_end < 0.0:
        p.append(f"time.t_end must be nonnegative, got {cfg.t_end}")
    if cfg.cfl > 1.0:
        p.append(f"time.cfl must be <= 1, got {cfg.cfl}")
    if cfg.grid_n < 16:
        p.append(f"grid.n must be >= 16, got {cfg.grid_n}")
    if cfg.output_fields_every < 0:
        p.append("output.fields_every must be >= 0")
    if cfg.wall_budget is not None and not cfg.wall_budget > 0.0:
        p.append("time.wall_budget must be positive")
    if cfg.sup_decay_ratio is not None and not cfg.sup_decay_ratio > 0.0:
        p.append("thresholds.sup_decay_ratio must be positive")
    for attr in ("shape_f", "shape_g"):
        if getattr(cfg, attr) not in SHAPE_NAMES:
            p.append(f"{key[attr]} must be one of {', '.join(SHAPE_NAMES)}")
    if cfg.l < 0.0:
        p.append(f"perturbation.l must be nonnegative, got {cfg.l}")
    if cfg.rarefaction_q < 10:
        p.append(f"rarefaction.q must be an integer >= 10, got {cfg.rarefaction_q}")
    if cfg.eps_smooth > 1.0:
        p.append("rarefaction.eps_smooth must lie in (0, 1]")
    if cfg.index_system not in INDEX_SYSTEMS:
        p.append(f"indices.system must be one of {', '.join(INDEX_SYSTEMS)}")
    if cfg.index_samples < 1:
        p.append("indices.samples must be >= 1")
    if p:
        return p

    states_needed = cfg.scenario != "check-indices" or cfg.index_system == "auto"
    if not cfg.has_states:
        if states_needed:
            missing = [k for k in ("v_minus", "u_minus", "v_plus", "u_plus")
                       if getattr(cfg, k) is None]
            p.append(f"scenario {cfg.scenario!r} needs {', '.join(missing)}")
        return p
    for attr in ("v_minus", "v_plus"):
        if not getattr(cfg, attr) > 0.0:
            p.append(f"{attr} must be positive, got {getattr(cfg, attr)}")
    if p:
        return p

    gas = cfg.gas
    case = classify_asymptotic(cfg.minus, cfg.plus, gas)
    region = classify_state(cfg.minus, gas)
    if cfg.scenario in ("bl", "profile-only") and not case.is_boundary_layer:
        p.append(f"scenario {cfg.scenario!r} needs a subsonic inflow state with the far state on "
                 f"its boundary-layer line; minus is {region.value}, classification {case.kind.value}")
    if cfg.scenario == "rarefaction":
        if region is not PhaseRegion.SUPERSONIC:
            p.append(f"scenario 'rarefaction' needs a supersonic inflow state (minus is {region.value})")
        elif case.kind is not CaseKind.RAREFACTION_1:
            p.append(f"scenario 'rarefaction' needs the far state on the 1-rarefaction curve "
                     f"with u_+ > u_- (classification {case.kind.value})")
        else:
            need = rarefaction_min_length(cfg)
            if cfg.grid_length < need:
                p.append(f"grid.length = {cfg.grid_length:g} is too short for the rarefaction fan "
                         f"up to t_end = {cfg.t_end:g}; need at least {need:.6g}")
    if cfg.scenario in ("bl", "rarefaction") and cfg.u_minus <= 0.0:
        p.append("inflow problems need u_minus > 0")
    return p


def load_config(path, overrides: dict | None = None) -> tuple[RunConfig, str]:
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    return parse_config(text, overrides), text


__all__ = ["ConfigError", "RunConfig", "parse_config", "load_config", "validate",
           "rarefaction_min_length", "SCENARIOS", "KEYS", "format_value"]

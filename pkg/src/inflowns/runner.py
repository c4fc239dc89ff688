"""Scenario orchestration: background, solve, diagnostics, artifacts."""
from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import boundary_layer as bl
from .conditions import CHECKERS, IndexParams, build_perturbation, verify_remark
from .config import RunConfig, parse_config
from .diagnostics import CSV_COLUMNS, cs_tolerance, cumulative_trapz, energy_audit
from .gas import CaseKind, classify_asymptotic, classify_state, sonic_point
from .rarefaction import RarefactionEvaluator
from .solver import Grid, PositivityError, StepSizeError, make_initial, run

FIELD_COLUMNS = ("xi", "v", "u", "V", "U", "phi", "psi")
EXIT_OK, EXIT_THRESHOLD, EXIT_ABORT = 0, 1, 2

_SYSTEM_FOR_CASE = {
    CaseKind.BL_PLUS: "bl_plus",
    CaseKind.BL_MINUS: "bl_minus",
    CaseKind.RAREFACTION_1: "r",
}
_REMARK_FOR_SYSTEM = {"bl_plus": 1, "bl_minus": 2, "r": 4}


def fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".17g")
    if value is None:
        return "none"
    if isinstance(value, (tuple, list)):
        return ",".join(str(v) for v in value) if value else "none"
    return str(value)


def write_csv(path: Path, columns, data) -> None:
    data = np.asarray(data, dtype=float)
    if data.ndim == 1:
        data = data.reshape(1, -1)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(columns) + "\n")
        for row in data:
            fh.write(",".join(format(float(x), ".17g") for x in row) + "\n")


def write_summary(path: Path, items: dict) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for key, value in items.items():
            fh.write(f"{key}={fmt(value)}\n")


def diagnostics_table(frames) -> np.ndarray:
    t = np.array([f.t for f in frames])
    cum = cumulative_trapz([f.dissipation for f in frames], t)
    rows = []
    for f, d in zip(frames, cum):
        row = f.as_dict()
        row["dissipation_cum"] = d
        rows.append([row[c] for c in CSV_COLUMNS])
    return np.array(rows, dtype=float).reshape(len(rows), len(CSV_COLUMNS))


def build_background(cfg: RunConfig):
    if cfg.scenario == "rarefaction":
        return RarefactionEvaluator.build(cfg.minus, cfg.plus, cfg.gas,
                                          q=cfg.rarefaction_q, eps=cfg.eps_smooth)
    return bl.solve_profile(cfg.minus, cfg.plus, cfg.gas)


def index_params(cfg: RunConfig) -> IndexParams:
    return IndexParams(cfg.alpha, cfg.beta, cfg.l, cfg.l0, cfg.gamma)


def build_spec(cfg: RunConfig):
    if cfg.shape_f == "zero" and cfg.shape_g == "zero":
        return None
    return build_perturbation(cfg.shape_f, cfg.shape_g, index_params(cfg), cfg.eps)


def index_system(cfg: RunConfig) -> str | None:
    if cfg.index_system != "auto":
        return cfg.index_system
    if not cfg.has_states:
        return None
    return _SYSTEM_FOR_CASE.get(classify_asymptotic(cfg.minus, cfg.plus, cfg.gas).kind)


def classification_items(cfg: RunConfig) -> dict:
    case = classify_asymptotic(cfg.minus, cfg.plus, cfg.gas)
    items = {
        "classification": case.kind.value,
        "minus_region": classify_state(cfg.minus, cfg.gas).value,
        "plus_region": classify_state(cfg.plus, cfg.gas).value,
        "delta": case.delta,
        "s_minus": -cfg.u_minus / cfg.v_minus,
    }
    if cfg.u_minus > 0.0:
        star = sonic_point(cfg.minus, cfg.gas)
        items["v_star"], items["u_star"] = star.v, star.u
    if case.is_boundary_layer and case.delta > 0.0:
        items["degenerate"] = bl.is_degenerate(cfg.minus, cfg.plus, cfg.gas)
    return items


def index_items(cfg: RunConfig) -> dict:
    system = index_system(cfg)
    if system is None:
        return {"index_system": "none"}
    result = CHECKERS[system](index_params(cfg))
    return {"index_system": system, "index_verdict": "pass" if result.passed else "fail",
            "index_violated": result.violated, "theta": index_params(cfg).theta}


def _fit_items(profile) -> dict:
    if profile.delta == 0.0:
        return {"fit_kind": "none"}
    try:
        fit = bl.fit_decay(profile)
    except bl.FitError as exc:
        return {"fit_kind": "none", "fit_error": str(exc)}
    out = {"fit_kind": fit.kind, "fit_rate": fit.rate}
    if fit.kind == "exponential":
        out["linearized_rate"] = bl.linearized_rate(profile)
    return out


@dataclass
class RunResult:
    exit_code: int
    summary: dict
    out_dir: Path | None
    frames: list = field(default_factory=list)


def _frame_checks(frames) -> tuple[bool, bool]:
    cs_ok = all(f.cs_margin >= -cs_tolerance(f) for f in frames)
    bracket_ok = all(f.kanel_lo <= f.v_min and f.v_max <= f.kanel_hi for f in frames)
    return cs_ok, bracket_ok


def _simulate(cfg: RunConfig, out: Path | None, summary: dict) -> tuple[int, list]:
    background = build_background(cfg)
    grid = Grid(cfg.grid_n, cfg.grid_length)
    spec = build_spec(cfg)
    try:
        state, init = make_initial(background, spec, grid, cfg.gas)
    except PositivityError as exc:
        summary["error"] = f"initial state rejected: {exc}"
        return EXIT_ABORT, []
    summary.update({
        "initial_l2": init.l2, "initial_l2_analytic": init.l2_analytic,
        "initial_h1": init.h1_seminorm, "initial_h1_analytic": init.h1_analytic,
        "initial_v_min": init.v_min, "initial_v_max": init.v_max,
    })
    if isinstance(background, bl.BoundaryLayerProfile):
        summary.update(_fit_items(background))
    if out is not None:
        V, U, _, U_xi = background.fields(0.0, grid.nodes)
        write_csv(out / "profile.csv", ("xi", "V", "U", "U_xi"),
                  np.column_stack([grid.nodes, V, U, U_xi]))

    frames = []

    def on_output(st, fr, bg_fields):
        k = len(frames)
        frames.append(fr)
        if out is None or cfg.output_fields_every == 0 or k % cfg.output_fields_every:
            return
        _write_fields(out, st, bg_fields)

    error = None
    try:
        traj = run(state, cfg.gas, cfg.t_end, cfg.output_every, cfg.cfl, cfg.upwind,
                   cfg.outflow, cfg.wall_budget, keep_states=False, on_output=on_output)
        partial = traj.partial
        summary["warnings"] = len(traj.warnings)
    except (PositivityError, StepSizeError) as exc:
        error = str(exc)
        partial = True
    if out is not None and state.t > 0.0 and cfg.output_fields_every:
        _write_fields(out, state, background.fields(state.t, grid.nodes))
    summary["steps"] = state.steps
    summary["t_reached"] = state.t
    summary["partial"] = partial
    if out is not None and frames:
        write_csv(out / "diagnostics.csv", CSV_COLUMNS, diagnostics_table(frames))
    if error is not None:
        summary["error"] = error
        return EXIT_ABORT, frames

    sup0, sup1 = frames[0].sup_diff, frames[-1].sup_diff
    summary["initial_sup"] = sup0
    summary["final_sup"] = sup1
    checks = {}
    if spec is not None and sup0 > 0.0:
        ratio = sup1 / sup0
        summary["sup_ratio"] = ratio
        if cfg.sup_decay_ratio is not None:
            checks["sup_decay"] = ratio <= cfg.sup_decay_ratio
    else:
        # no perturbation: the background itself is the reference solution
        summary["steady_drift"] = sup1
        checks["steady_drift"] = sup1 <= cfg.steady_drift_tol
    if spec is None:
        summary["energy_constant"] = math.nan
    elif len(frames) >= 2:
        audit = energy_audit(frames, cfg.energy_growth_factor,
                             cfg.eps_smooth if cfg.scenario == "rarefaction" else None)
        summary["energy_constant"] = audit.energy_ratio
        summary["dissipation_total"] = audit.dissipation_total
        summary["dissipation_monotone"] = audit.dissipation_monotone
        summary["boundary_trace_integral"] = audit.boundary_integral
        if audit.rarefaction_constant is not None:
            summary["energy_constant_rarefaction"] = audit.rarefaction_constant
        checks["energy"] = audit.passed
    cs_ok, bracket_ok = _frame_checks(frames)
    checks["cs_margin"] = cs_ok
    checks["kanel_bracket"] = bracket_ok
    checks["complete"] = not partial
    for name, ok in checks.items():
        summary[f"check_{name}"] = "pass" if ok else "fail"
    return (EXIT_OK if all(checks.values()) else EXIT_THRESHOLD), frames


def _write_fields(out: Path, st, bg_fields):
    V, U = bg_fields[0], bg_fields[1]
    xi = st.grid.nodes
    write_csv(out / f"fields_{st.steps:09d}.csv", FIELD_COLUMNS,
              np.column_stack([xi, st.v, st.u, V, U, st.v - V, st.u - U]))


def run_scenario(cfg: RunConfig, out_dir=None) -> RunResult:
    """Run the configured scenario and write its artifact directory.

    The exit code is 0 only when every configured threshold passes, 1 when
    some threshold fails and 2 when the solver aborted.
    """
    out = None
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "config.echo").write_text(cfg.to_text(), encoding="utf-8")

    summary: dict = {"scenario": cfg.scenario}
    code = EXIT_OK
    frames: list = []
    if cfg.has_states:
        summary.update(classification_items(cfg))
    if cfg.scenario != "classify":
        summary.update(index_items(cfg))

    if cfg.scenario == "check-indices":
        if summary.get("index_system", "none") == "none":
            code = EXIT_THRESHOLD
        else:
            remark = verify_remark(_REMARK_FOR_SYSTEM[summary["index_system"]], cfg.gamma,
                                   cfg.index_samples, cfg.seed)
            summary.update({"remark": remark.remark, "remark_samples": remark.samples,
                            "remark_counterexamples": remark.counterexamples,
                            "remark_empty_region": remark.empty_region})
            code = EXIT_OK if summary["index_verdict"] == "pass" else EXIT_THRESHOLD
    elif cfg.scenario == "profile-only":
        profile = bl.solve_profile(cfg.minus, cfg.plus, cfg.gas)
        check = bl.verify_profile(profile)
        summary.update(_fit_items(profile))
        summary.update({"profile_points": len(profile.xi), "profile_truncated": profile.truncated,
                        "profile_residual": check.residual,
                        "derivative_constant": check.derivative_constant,
                        "monotonicity_violations": check.violations})
        if out is not None:
            write_csv(out / "profile.csv", ("xi", "V", "U", "U_xi"), bl.profile_table(profile))
    elif cfg.scenario in ("bl", "rarefaction"):
        code, frames = _simulate(cfg, out, summary)
    summary["exit_code"] = code
    if out is not None:
        write_summary(out / "summary.txt", summary)
    return RunResult(code, summary, out, frames)


# -- refinement ----------------------------------------------------------------

REFINED_QUANTITIES = ("sup_diff", "l2_phi_psi", "energy_phi", "vtilde_grad", "dissipation")


@dataclass(frozen=True)
class RefinementReport:
    grid_sizes: tuple[int, ...]
    values: dict  # quantity -> final-time values per level
    orders: dict  # quantity -> Richardson orders, one per consecutive triple
    error_orders: tuple[float, ...]  # log2 of successive sup_diff ratios (zero perturbation)


def _richardson(values) -> tuple[float, ...]:
    out = []
    for a, b, c in zip(values, values[1:], values[2:]):
        d1, d2 = abs(a - b), abs(b - c)
        out.append(math.log2(d1 / d2) if d1 > 0.0 and d2 > 0.0 else math.nan)
    return tuple(out)


def refinement_study(cfg: RunConfig, levels: int = 3) -> RefinementReport:
    """Rerun ``cfg`` with ``dx`` halved per level and report observed orders."""
    if int(levels) != levels or levels < 3:
        raise ValueError("a refinement study needs at least 3 levels")
    if cfg.scenario not in ("bl", "rarefaction"):
        raise ValueError("refinement needs a bl or rarefaction scenario")
    sizes = tuple(cfg.grid_n * 2 ** k for k in range(levels))
    values = {q: [] for q in REFINED_QUANTITIES}
    for n in sizes:
        sub = cfg.replace(grid_n=n, output_every=max(cfg.t_end, 1e-300))
        result = run_scenario(sub, None)
        if result.exit_code == EXIT_ABORT:
            raise RuntimeError(f"refinement level n={n} aborted: {result.summary.get('error')}")
        last = result.frames[-1]
        for q in REFINED_QUANTITIES:
            values[q].append(getattr(last, q))
    orders = {q: _richardson(v) for q, v in values.items()}
    errors = ()
    if build_spec(cfg) is None:
        s = values["sup_diff"]
        errors = tuple(math.log2(a / b) if b > 0.0 else math.nan for a, b in zip(s, s[1:]))
    return RefinementReport(sizes, {q: tuple(v) for q, v in values.items()}, orders, errors)


# -- sweeps --------------------------------------------------------------------

def parse_sweep(text: str) -> list[dict]:
    """One run per nonblank line: ``key=value`` pairs separated by commas."""
    runs = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        overrides = {}
        for item in body.split(","):
            if "=" not in item:
                raise ValueError(f"sweep line {lineno}: expected key=value, got {item.strip()!r}")
            k, v = (x.strip() for x in item.split("=", 1))
            overrides[k] = v
        runs.append(overrides)
    return runs


def _sweep_one(args):
    base_text, overrides, out = args
    cfg = parse_config(base_text, overrides)
    res = run_scenario(cfg, out)
    return res.exit_code, res.summary.get("final_sup"), res.summary.get("sup_ratio")


def sweep(base_text: str, runs: list[dict], out_dir, jobs: int = 1) -> list[tuple]:
    """Run every override set in its own directory; results keep input order."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for overrides in runs:  # fail fast on bad overrides before spending time
        parse_config(base_text, overrides)
    tasks = [(base_text, o, out / f"run_{i:03d}") for i, o in enumerate(runs)]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=min(jobs, os.cpu_count() or 1)) as pool:
            results = list(pool.map(_sweep_one, tasks))
    else:
        results = [_sweep_one(t) for t in tasks]
    with open(out / "sweep.csv", "w", encoding="utf-8", newline="\n") as fh:
        fh.write("run,exit_code,final_sup,sup_ratio\n")
        for i, (code, final, ratio) in enumerate(results):
            fh.write(f"{i},{code},{fmt(final)},{fmt(ratio)}\n")
    return results

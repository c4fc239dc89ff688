"""Command line entry point: ``inflowns <subcommand> --config PATH``."""
from __future__ import annotations

import argparse
import csv
import sys
from pathlib import Path

from .conditions import CHECKERS, verify_remark
from .config import ConfigError, parse_config
from .runner import (EXIT_ABORT, EXIT_OK, EXIT_THRESHOLD, _REMARK_FOR_SYSTEM, fmt,
                     index_params, index_system, parse_sweep, refinement_study,
                     run_scenario, sweep)


def _overrides(args, scenario=None) -> dict:
    out = {}
    for item in args.set or ():
        if "=" not in item:
            raise SystemExit(f"--set expects key=value, got {item!r}")
        k, v = item.split("=", 1)
        out[k.strip()] = v.strip()
    if scenario is not None:
        out["scenario"] = scenario
    if args.seed is not None:
        out["seed"] = str(args.seed)
    if args.upwind:
        out["solver.upwind"] = "true"
    return out


def _load(args, scenario=None):
    if args.config is None:
        raise SystemExit("--config is required for this subcommand")
    text = Path(args.config).read_text(encoding="utf-8")
    return parse_config(text, _overrides(args, scenario)), text


def _print_items(items: dict):
    for k, v in items.items():
        print(f"{k}={fmt(v)}")


def cmd_run(args, scenario=None) -> int:
    cfg, _ = _load(args, scenario)
    if args.command == "simulate" and cfg.scenario not in ("bl", "rarefaction"):
        raise SystemExit("simulate needs scenario = bl or rarefaction")
    result = run_scenario(cfg, args.out)
    _print_items(result.summary)
    return result.exit_code


def cmd_check_indices(args) -> int:
    cfg, _ = _load(args, "check-indices")
    system = index_system(cfg)
    if system is None:
        print("no index system applies; set indices.system or give end states of a supported case")
        return EXIT_THRESHOLD
    result = CHECKERS[system](index_params(cfg))
    print(result.table())
    remark = verify_remark(_REMARK_FOR_SYSTEM[system], cfg.gamma, cfg.index_samples, cfg.seed)
    _print_items({"index_system": system, "index_verdict": "pass" if result.passed else "fail",
                  "index_violated": result.violated, "theta": index_params(cfg).theta,
                  "remark": remark.remark, "remark_samples": remark.samples,
                  "remark_counterexamples": remark.counterexamples,
                  "remark_empty_region": remark.empty_region})
    if args.out:
        run_scenario(cfg, args.out)
    return EXIT_OK if result.passed else EXIT_THRESHOLD


def cmd_diagnose(args) -> int:
    """Audit the diagnostics.csv of an existing run directory."""
    if args.out is None:
        raise SystemExit("diagnose needs --out pointing at a run directory")
    path = Path(args.out) / "diagnostics.csv"
    with open(path, encoding="utf-8") as fh:
        rows = [{k: float(v) for k, v in row.items()} for row in csv.DictReader(fh)]
    if not rows:
        raise SystemExit(f"{path} has no frames")
    growth = 3.0
    echo = Path(args.out) / "config.echo"
    if echo.exists():
        growth = parse_config(echo.read_text(encoding="utf-8")).energy_growth_factor
    E0 = rows[0]["energy_phi"]
    Emax = max(r["energy_phi"] for r in rows)
    ratio = Emax / E0 if E0 > 0.0 else float("nan")
    cum = [r["dissipation_cum"] for r in rows]
    monotone = all(b >= a for a, b in zip(cum, cum[1:]))
    # the frame scale (1 + bound) is not stored; 1e-8 is the strictest tolerance it allows
    cs_ok = all(r["cs_margin"] >= -1e-8 for r in rows)
    bracket = all(r["kanel_lo"] <= r["v_min"] and r["v_max"] <= r["kanel_hi"] for r in rows)
    energy_ok = (E0 == 0.0 and Emax == 0.0) or (E0 > 0.0 and ratio <= growth)
    items = {"frames": len(rows), "t_final": rows[-1]["t"], "final_sup": rows[-1]["sup_diff"],
             "energy_constant": ratio, "dissipation_total": cum[-1],
             "dissipation_monotone": monotone, "cs_margin_min": min(r["cs_margin"] for r in rows),
             "check_energy": "pass" if energy_ok else "fail",
             "check_cs_margin": "pass" if cs_ok else "fail",
             "check_kanel_bracket": "pass" if bracket else "fail"}
    _print_items(items)
    return EXIT_OK if (energy_ok and monotone and cs_ok and bracket) else EXIT_THRESHOLD


def cmd_refine(args) -> int:
    cfg, _ = _load(args)
    report = refinement_study(cfg, args.levels)
    print("quantity," + ",".join(f"n={n}" for n in report.grid_sizes) + ",orders")
    for q, vals in report.values.items():
        orders = " ".join(f"{o:.3f}" for o in report.orders[q])
        print(f"{q}," + ",".join(fmt(v) for v in vals) + f",{orders}")
    if report.error_orders:
        print("error_orders=" + " ".join(f"{o:.3f}" for o in report.error_orders))
    return EXIT_OK


def cmd_sweep(args) -> int:
    if args.sweep is None or args.out is None:
        raise SystemExit("sweep needs --sweep FILE and --out DIR")
    base = Path(args.config).read_text(encoding="utf-8")
    runs = parse_sweep(Path(args.sweep).read_text(encoding="utf-8"))
    extra = _overrides(args)
    runs = [{**extra, **r} for r in runs]
    results = sweep(base, runs, args.out, args.jobs)
    for i, (code, final, ratio) in enumerate(results):
        print(f"run_{i:03d} exit_code={code} final_sup={fmt(final)} sup_ratio={fmt(ratio)}")
    return EXIT_OK if all(r[0] == EXIT_OK for r in results) else EXIT_THRESHOLD


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="run configuration file (key = value lines)")
    common.add_argument("--out", help="artifact directory")
    common.add_argument("--jobs", type=int, default=1, help="parallel runs for sweep")
    common.add_argument("--seed", type=int, help="seed for sampled index verification")
    common.add_argument("--upwind", action="store_true", help="first-order upwind convection")
    common.add_argument("--set", action="append", metavar="KEY=VALUE",
                        help="override one configuration key (repeatable)")

    parser = argparse.ArgumentParser(prog="inflowns", description=(
        "Boundary layers, rarefaction waves and their stability for the "
        "isentropic Navier-Stokes inflow problem."))
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("profile", parents=[common], help="integrate and fit a boundary-layer profile")
    sub.add_parser("simulate", parents=[common], help="run a perturbed bl or rarefaction scenario")
    sub.add_parser("diagnose", parents=[common], help="audit diagnostics.csv of a run directory")
    sub.add_parser("classify", parents=[common], help="classify the end states")
    sub.add_parser("check-indices", parents=[common], help="evaluate the index conditions")
    p = sub.add_parser("refine", parents=[common], help="grid refinement study")
    p.add_argument("--levels", type=int, default=3)
    p = sub.add_parser("sweep", parents=[common], help="run a batch of config overrides")
    p.add_argument("--sweep", help="file with one comma-separated override set per line")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "profile":
            return cmd_run(args, "profile-only")
        if args.command == "simulate":
            return cmd_run(args)
        if args.command == "classify":
            return cmd_run(args, "classify")
        if args.command == "check-indices":
            return cmd_check_indices(args)
        if args.command == "diagnose":
            return cmd_diagnose(args)
        if args.command == "refine":
            return cmd_refine(args)
        return cmd_sweep(args)
    except ConfigError as exc:
        print(exc, file=sys.stderr)
        return EXIT_ABORT
    except (ValueError, RuntimeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ABORT


if __name__ == "__main__":
    sys.exit(main())

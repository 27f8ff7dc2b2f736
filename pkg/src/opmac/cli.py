"""Command-line front end.

    opmac solve --interference 0.01 --lambda 0.001 --theta 1 --d 2 --beta-db -110
    opmac sweep --preset fig4a --out results/
    opmac simulate --preset fig3 --replications 5
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import os
import sys
from pathlib import Path

from .config import PRESETS, ConfigError, RunConfig, demo_inputs, emit, parse_config
from .demo import two_pair_demo
from .opportunity import empty_ball_radius, opportunistic_probability
from .optimizer import SolverError, Variant, closed_form_p, quadratic_coefficients, solve_optimal_p
from .simulator import MeasureMode
from .sweeps import sweep_optimizer, sweep_throughput

OUT_ENV = "OPMAC_OUT_DIR"
SIM_COLUMNS = ["scheme", "mean_link_throughput", "pf_utility", "ci_halfwidth", "replications"]
OPT_COLUMNS = ["p_solver_eq5", "p_solver_eq6", "p_solver_arccot", "p_closed_form", "abs_err"]
_VARIANT_COLUMNS = {"p_solver_eq5": Variant.NUMERIC_INTEGRAL.value,
                    "p_solver_eq6": Variant.PAPER_EQ6.value,
                    "p_solver_arccot": Variant.DERIVED_ARCCOT.value}

log = logging.getLogger("opmac")


def fmt(x) -> str:
    if isinstance(x, str):
        return x
    if x is None:
        return ""
    if isinstance(x, (int,)) and not isinstance(x, bool):
        return str(x)
    return f"{float(x):.10g}"


def _config_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON config file")
    p.add_argument("--preset", choices=sorted(PRESETS))
    p.add_argument("--seed", type=int)
    p.add_argument("--out", help=f"output directory (default ${OUT_ENV} or ./results)")
    p.add_argument("--name", help="output file stem (default: preset or subcommand)")
    p.add_argument("--replications", type=int)
    p.add_argument("--lambda", dest="lambda_", type=float, metavar="LAMBDA")
    p.add_argument("--alpha", type=float)
    g = p.add_mutually_exclusive_group()
    g.add_argument("--theta", type=float)
    g.add_argument("--theta-db", type=float)
    p.add_argument("--d", type=float)
    g = p.add_mutually_exclusive_group()
    g.add_argument("--beta", type=float)
    g.add_argument("--beta-db", type=float)
    p.add_argument("--duplex", choices=["FULL", "HALF"])
    p.add_argument("--interference", type=float, help="measured interference (linear)")
    p.add_argument("--slots", type=int)
    p.add_argument("--warmup", type=int)
    p.add_argument("--window", type=float)
    p.add_argument("--workers", type=int)
    p.add_argument("--schemes", help="comma-separated scheme labels, e.g. MAX_TX,RANDOM_TX/SOLVER")
    p.add_argument("--sweep-axis")
    p.add_argument("--sweep-values", help="comma-separated grid values")
    p.add_argument("--measure-mode", choices=[m.value for m in MeasureMode])


def _overrides(args) -> dict:
    o = {"lambda": args.lambda_, "alpha": args.alpha, "theta": args.theta, "theta_db": args.theta_db,
         "d": args.d, "beta": args.beta, "beta_db": args.beta_db, "duplex": args.duplex,
         "interference": args.interference, "slots": args.slots, "warmup": args.warmup,
         "window": args.window, "workers": args.workers, "seed": args.seed,
         "replications": args.replications, "sweep_axis": args.sweep_axis,
         "measure_mode": args.measure_mode}
    if args.schemes:
        o["schemes"] = [s.strip() for s in args.schemes.split(",") if s.strip()]
    if args.sweep_values:
        o["sweep_values"] = [float(v) for v in args.sweep_values.split(",")]
    if args.out:
        o["out_dir"] = args.out
    return o


def load(args) -> RunConfig:
    return parse_config(args.config, preset=args.preset, overrides=_overrides(args))


def _out_dir(cfg: RunConfig) -> Path:
    d = Path(cfg.out_dir or os.environ.get(OUT_ENV) or "results")
    d.mkdir(parents=True, exist_ok=True)
    return d


def _write_sidecar(path: Path, command: str, cfg: RunConfig, status: str, extra: dict | None = None) -> None:
    doc = {"command": command, "config": emit(cfg), "seed": cfg.seed, "status": status}
    if extra:
        doc["results"] = extra
    path.write_text(json.dumps(doc, indent=2, sort_keys=True, allow_nan=True) + "\n")


def _emit_single(record: dict) -> None:
    print(json.dumps(record, sort_keys=True, allow_nan=True))


def cmd_solve(args) -> int:
    cfg = load(args)
    params = cfg.params
    I = cfg.interference
    variants = list(Variant) if params.alpha == 4 else [Variant.NUMERIC_INTEGRAL]
    rec = {"interference": I, "ball_radius": empty_ball_radius(I, params)}
    for v in variants:
        r = solve_optimal_p(I, params, v)
        rec[v.value] = {"p_star": r.p_star, "residual": r.residual, "clamped": r.clamped}
    _emit_single(rec)
    return 0


def cmd_approx(args) -> int:
    cfg = load(args)
    params = cfg.params
    co = quadratic_coefficients(cfg.interference, params)
    rec = {"interference": cfg.interference, "c1": co.c1, "c2": co.c2, "c3": co.c3,
           "regime": co.regime.value, "x": co.x, "p_closed_form": closed_form_p(cfg.interference, params)}
    _emit_single(rec)
    return 0


def cmd_op(args) -> int:
    cfg = load(args)
    params = cfg.params
    I = max(cfg.interference, cfg.interference_floor)
    rec = {"interference": I, "ball_radius": empty_ball_radius(I, params),
           "op": opportunistic_probability(I, params, False),
           "op_full_duplex": opportunistic_probability(I, params, True)}
    _emit_single(rec)
    return 0


def write_simulation_csv(path: Path, axis: str, points) -> bool:
    ok = True
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([axis] + SIM_COLUMNS)
        for pt in points:
            if pt.error is not None:
                ok = False
                w.writerow([fmt(pt.value), "FAILED", "", "", "", pt.error])
                continue
            for rep in pt.reports:
                w.writerow([fmt(pt.value), rep.scheme, fmt(rep.mean_link_throughput), fmt(rep.pf_utility),
                            fmt(rep.ci_halfwidth), fmt(rep.replications)])
    return ok


def write_optimizer_csv(path: Path, axis: str, points) -> bool:
    ok = True
    with_op = axis == "interference"
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([axis] + (["op"] if with_op else []) + OPT_COLUMNS)
        for pt in points:
            if pt.error is not None:
                ok = False
                w.writerow([fmt(pt.value), "FAILED", pt.error])
                continue
            s = pt.solver
            row = [fmt(pt.value)] + ([fmt(s["op"])] if with_op else [])
            row += [fmt(s.get(_VARIANT_COLUMNS[c], math.nan)) for c in OPT_COLUMNS[:3]]
            row += [fmt(s["closed_form"]), fmt(s["abs_err"])]
            w.writerow(row)
    return ok


def _simulation_extra(points) -> dict:
    out = {}
    for pt in points:
        out[fmt(pt.value)] = {r.scheme: {"mean_pair_throughput": r.mean_pair_throughput,
                                         "pair_ci_halfwidth": r.pair_ci_halfwidth,
                                         "pf_ci_halfwidth": r.pf_ci_halfwidth,
                                         "eps_log": r.eps_log} for r in pt.reports}
    return out


def run_sweep(cfg: RunConfig, name: str, command: str) -> int:
    out = _out_dir(cfg)
    csv_path, json_path = out / f"{name}.csv", out / f"{name}.json"
    grid = cfg.grid()
    if cfg.sweep_kind == "optimizer":
        points = sweep_optimizer(cfg.sweep_axis, grid, cfg.params, cfg.interference)
        ok = write_optimizer_csv(csv_path, cfg.sweep_axis, points)
        extra = None
    else:
        if cfg.sweep_axis == "interference":
            raise ConfigError("sweep_axis: 'interference' is only valid for optimizer sweeps")
        points = sweep_throughput(cfg.sweep_axis, grid, cfg.params, cfg.scheme_configs(),
                                  slots=cfg.slots, warmup=cfg.warmup, replications=cfg.replications,
                                  seed=cfg.seed, window_side=cfg.window, target_nodes=cfg.target_nodes,
                                  mode=MeasureMode(cfg.measure_mode), workers=cfg.workers)
        ok = write_simulation_csv(csv_path, cfg.sweep_axis, points)
        extra = _simulation_extra(points)
    _write_sidecar(json_path, command, cfg, "ok" if ok else "failed", extra)
    print(f"wrote {csv_path} and {json_path}")
    if not ok:
        print("some grid points failed; see FAILED rows", file=sys.stderr)
    return 0 if ok else 3


def cmd_simulate(args) -> int:
    cfg = load(args)
    if cfg.sweep_kind != "simulation":
        raise ConfigError("simulate needs sweep_kind 'simulation'; use 'sweep' for optimizer presets")
    return run_sweep(cfg, args.name or args.preset or "simulate", "simulate")


def cmd_sweep(args) -> int:
    cfg = load(args)
    return run_sweep(cfg, args.name or args.preset or "sweep", "sweep")


def cmd_demo(args) -> int:
    if args.preset:
        gains, ext, ops = demo_inputs(args.preset)
    else:
        gains, ext, ops = ({"h11": 0.04, "h22": 0.04, "h12": 0.05, "h21": 0.05}, 0.01, (0.8, 0.5))
    if args.gains:
        gains = dict(zip(("h11", "h22", "h12", "h21"), args.gains))
    if args.external is not None:
        ext = args.external
    if args.ops:
        ops = tuple(args.ops)
    rows = two_pair_demo(gains, ext, ops)
    cols = ["mode", "sir1", "sir2", "sir_sum", "resource1", "resource2", "resource_sum"]
    print("  ".join(f"{c:>12}" for c in cols))
    for r in rows:
        d = r.as_dict()
        print("  ".join(f"{d[c]:>12}" if isinstance(d[c], str) else f"{d[c]:>12.4f}" for c in cols))
    out = Path(args.out or os.environ.get(OUT_ENV) or "results")
    out.mkdir(parents=True, exist_ok=True)
    stem = args.name or args.preset or "demo"
    with (out / f"{stem}.csv").open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(cols)
        for r in rows:
            d = r.as_dict()
            w.writerow([fmt(d[c]) for c in cols])
    (out / f"{stem}.json").write_text(json.dumps(
        {"command": "demo", "gains": gains, "external_interference": ext, "op_values": list(ops)},
        indent=2, sort_keys=True) + "\n")
    return 0


def cmd_preset(args) -> int:
    for name in sorted(PRESETS):
        print(f"{name}: {json.dumps(PRESETS[name], sort_keys=True)}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="opmac", description="Opportunistic random access toolkit")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fn, help_ in [("solve", cmd_solve, "optimal transmission probability (all variants)"),
                            ("approx", cmd_approx, "closed-form approximation (alpha = 4)"),
                            ("op", cmd_op, "opportunistic probability for a measured interference"),
                            ("simulate", cmd_simulate, "Monte Carlo throughput of access schemes"),
                            ("sweep", cmd_sweep, "parameter sweep (simulation or optimizer)")]:
        p = sub.add_parser(name, help=help_)
        _config_flags(p)
        p.set_defaults(func=fn)
    p = sub.add_parser("demo", help="two-pair SIR operating points")
    p.add_argument("--preset", choices=["fig1a", "fig1b"])
    p.add_argument("--gains", type=float, nargs=4, metavar=("H11", "H22", "H12", "H21"))
    p.add_argument("--external", type=float, help="constant background interference")
    p.add_argument("--ops", type=float, nargs=2, metavar=("OP1", "OP2"))
    p.add_argument("--out")
    p.add_argument("--name")
    p.set_defaults(func=cmd_demo)
    p = sub.add_parser("preset", help="preset utilities")
    p.add_argument("action", choices=["list"])
    p.set_defaults(func=cmd_preset)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ConfigError, SolverError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

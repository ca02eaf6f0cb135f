"""Command-line frontend: run named experiments from a JSON config.

Subcommands: walk, green, isums, degeneracy, pressure, ancona, llt, report.
Every report embeds the config hash and the package version; identical
config and version produce identical output files.
"""

import argparse
import csv
import json
import math
import sys
import time
from pathlib import Path

from . import __version__
from .audit import ancona_audit, llt_fit, ratio_report
from .config import load_config
from .errors import BudgetError, ConfigError, DivergenceError, FreewalkError
from .green import GreenEvaluator, spectral_radius
from .parabolic import degeneracy_test
from .thermo import pressure, sphere_identity_check
from .walks import detect_period, is_radial, return_probabilities


def _out_dir(args):
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _report_header(cfg, args, started):
    return {
        "tool_version": __version__,
        "config": cfg.name,
        "config_hash": cfg.hash(),
        "seed": args.seed if args.seed is not None else cfg.seed,
        "wall_clock_s": round(time.time() - started, 3),
    }


def _write_json(path, payload):
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
    print(path)


def _write_csv(path, rows):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        for row in rows:
            writer.writerow(row)
    print(path)


def _horizon(cfg, args):
    return args.budget if args.budget else cfg.horizon


def cmd_walk(cfg, args):
    started = time.time()
    horizon = _horizon(cfg, args)
    method = args.method
    if method == "auto":
        method = "radial" if is_radial(cfg.measure) else "exact"
    elif method == "radial" and not is_radial(cfg.measure):
        print(
            "error: the radial engine was requested but the measure is not "
            "radial (its step distribution is not a function of distance)",
            file=sys.stderr,
        )
        return 2
    seq = return_probabilities(cfg.measure, horizon, method=method)
    out = _out_dir(args)
    rows = [["n", "p_n"]]
    if seq.values is not None:
        for n, v in enumerate(seq.values):
            rows.append([n, str(v)])
    else:
        for n, lv in enumerate(seq.log_values):
            rows.append([n, math.exp(lv) if lv > -math.inf else 0.0])
    _write_csv(out / f"{cfg.name}_walk.csv", rows)
    meta = _report_header(cfg, args, started)
    meta.update({"horizon": horizon, "method": seq.method,
                 "period": detect_period(seq).period})
    _write_json(out / f"{cfg.name}_walk_meta.json", meta)
    return 0


def _evaluator(cfg, args):
    # the walk horizon governs return-probability runs only; Green series
    # use the evaluator's own defaults (the generic table is exact
    # convolution, whose cost grows exponentially in its horizon)
    return GreenEvaluator(cfg.measure)


def cmd_green(cfg, args):
    started = time.time()
    ev = _evaluator(cfg, args)
    r_hat = ev.R_hat
    grid = cfg.resolve_r_grid(r_hat)
    rows = [["r", "G(e,e|r)", "tail", "method"]]
    for r in grid:
        g = ev.green((), (), r)
        rows.append([r, g.value, g.tail, g.method])
    out = _out_dir(args)
    _write_csv(out / f"{cfg.name}_green.csv", rows)
    meta = _report_header(cfg, args, started)
    est = ev.radius_estimate
    meta.update(
        {
            "R_hat": r_hat,
            "rho_hat": est.rho_hat,
            "rho_lower_bound": est.rho_lower,
            "uncertainty": est.uncertainty(),
        }
    )
    _write_json(out / f"{cfg.name}_green_meta.json", meta)
    return 0


def cmd_isums(cfg, args):
    started = time.time()
    ev = _evaluator(cfg, args)
    grid = cfg.resolve_r_grid(ev.R_hat)
    report = ratio_report(ev, grid, sphere_stop_tol=1e-7)
    out = _out_dir(args)
    _write_csv(out / f"{cfg.name}_isums.csv", report.to_csv_rows())
    meta = _report_header(cfg, args, started)
    meta.update(json.loads(report.to_json()))
    _write_json(out / f"{cfg.name}_isums_meta.json", meta)
    return 0


def cmd_degeneracy(cfg, args):
    started = time.time()
    ev = _evaluator(cfg, args)
    ladder = (
        (cfg.kernel_len // 2, max(cfg.kernel_ball - 2, 3)),
        (3 * cfg.kernel_len // 4, max(cfg.kernel_ball - 1, 3)),
        (cfg.kernel_len, cfg.kernel_ball),
    )
    if args.budget and args.budget < cfg.kernel_len:
        ladder = ((args.budget, max(cfg.kernel_ball - 2, 3)),)
    report = degeneracy_test(cfg.measure, ev.R_hat, ladder=ladder)
    if report.verdict == "inconclusive":
        print("warning: degeneracy ladder did not stabilize", file=sys.stderr)
    payload = _report_header(cfg, args, started)
    payload.update(json.loads(report.to_json()))
    _write_json(_out_dir(args) / f"{cfg.name}_degeneracy.json", payload)
    return 0


def cmd_pressure(cfg, args):
    started = time.time()
    ev = _evaluator(cfg, args)
    grid = cfg.resolve_r_grid(ev.R_hat) or [ev.R_hat]
    ladder = ((cfg.cap, cfg.depth - 1), (cfg.cap, cfg.depth))
    results = []
    for r in grid:
        est = pressure(ev, r, ladder=ladder)
        results.append(json.loads(est.to_json()))
    payload = _report_header(cfg, args, started)
    payload.update({"R_hat": ev.R_hat, "estimates": results})
    _write_json(_out_dir(args) / f"{cfg.name}_pressure.json", payload)
    return 0


def cmd_ancona(cfg, args):
    started = time.time()
    ev = _evaluator(cfg, args)
    grid = cfg.resolve_r_grid(ev.R_hat) or [0.9 * ev.R_hat]
    seed = args.seed if args.seed is not None else cfg.seed
    n_triples = min(args.budget, 200) if args.budget else 200
    results = []
    for r in grid:
        rep = ancona_audit(ev, r, n_triples=n_triples, seed=seed)
        results.append(json.loads(rep.to_json()))
    payload = _report_header(cfg, args, started)
    payload.update({"reports": results})
    _write_json(_out_dir(args) / f"{cfg.name}_ancona.json", payload)
    return 0


def cmd_llt(cfg, args):
    started = time.time()
    horizon = _horizon(cfg, args)
    method = "radial" if is_radial(cfg.measure) else "exact"
    seq = return_probabilities(cfg.measure, horizon, method=method)
    est = spectral_radius(seq)
    period = detect_period(seq).period
    window = (max(horizon // 10, 50 * period), horizon)
    try:
        fit = llt_fit(seq.log_values, period, window, 1.0 / est.rho_hat)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 5
    payload = _report_header(cfg, args, started)
    payload.update(
        {
            "alpha": fit.alpha,
            "alpha_fixed_R": fit.alpha_fixed,
            "alpha_ratio": fit.alpha_ratio,
            "fitted_log_R": fit.log_r,
            "R_hat_used": fit.r_hat_used,
            "window": list(fit.window),
            "window_halves": list(fit.window_halves),
            "residual_rms": fit.residual_rms,
            "consistent": fit.consistent(),
        }
    )
    _write_json(_out_dir(args) / f"{cfg.name}_llt.json", payload)
    return 0


def cmd_report(cfg, args):
    """Run the full battery and write one combined JSON."""
    rc = 0
    for sub in (cmd_walk, cmd_green, cmd_isums, cmd_degeneracy, cmd_pressure,
                cmd_ancona, cmd_llt):
        rc = max(rc, sub(cfg, args))
    started = time.time()
    ev = _evaluator(cfg, args)
    ident = sphere_identity_check(ev, 0.9 * ev.R_hat, cfg.cap, 4, cfg.depth)
    payload = _report_header(cfg, args, started)
    payload.update(
        {
            "sphere_identity": [
                {"n": n, "transfer": a, "direct": b, "rel_err": e}
                for n, a, b, e in ident
            ]
        }
    )
    _write_json(_out_dir(args) / f"{cfg.name}_report.json", payload)
    return rc


COMMANDS = {
    "walk": cmd_walk,
    "green": cmd_green,
    "isums": cmd_isums,
    "degeneracy": cmd_degeneracy,
    "pressure": cmd_pressure,
    "ancona": cmd_ancona,
    "llt": cmd_llt,
    "report": cmd_report,
}


def build_parser():
    parser = argparse.ArgumentParser(
        prog="freewalk",
        description="random-walk experiments on free products",
    )
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--config", required=True, help="JSON experiment config")
    parser.add_argument("--out", default="out", help="output directory")
    parser.add_argument(
        "--budget",
        type=int,
        default=None,
        help="override the dominant size knob of the subcommand",
    )
    parser.add_argument("--threads", type=int, default=1,
                        help="reserved; computations run deterministically")
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument(
        "--method",
        choices=["auto", "exact", "radial"],
        default="auto",
        help="return-probability engine for the walk subcommand",
    )
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    try:
        return COMMANDS[args.command](cfg, args)
    except (BudgetError, DivergenceError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except FreewalkError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())

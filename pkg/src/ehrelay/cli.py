"""Command-line entry point: ``ehrelay {curve,validate,solve-power,simulate}``."""

import argparse
import csv
import io
import math
import sys

import numpy as np

from .config import HARVEST_PROCESSES, MODES, ConfigError, load_config
from .primary import InfeasibleConstraintError, solve_power_budget
from .simulator import relay_transmit_power, run_secondary_sim, run_sweep
from .validation import FAIL, LOW, run_validation

CURVE_COLUMNS = (
    "theta_p",
    "p_st",
    "p_sr",
    "p_effective",
    "omega",
    "eta",
    "p_sout_analytical",
    "p_sout_simulated",
    "ci_halfwidth",
    "n_active_mean",
    "status",
)

ROW_ERRORS = ("infeasible", "zero-power")

# CLI flag -> SystemConfig field
_FLAG_FIELDS = {
    "theta_min": "theta_min",
    "theta_max": "theta_max",
    "theta_steps": "theta_steps",
    "h_av": "h_av",
    "relays": "relays",
    "mf": "m_f",
    "mint": "m_int",
    "mode": "mode",
    "slots": "slots",
    "trials": "trials",
    "seed": "seed",
    "workers": "workers",
    "harvest": "harvest",
}


def fmt(value):
    if isinstance(value, str):
        return value
    if isinstance(value, bool):
        return str(value).lower()
    if isinstance(value, int):
        return str(value)
    if math.isnan(value):
        return "nan"
    return format(value, ".12g")


def _write_table(out, config, command, columns, rows):
    out.write(f"# ehrelay {command}\n")
    out.write(f"# seed={config.seed}\n")
    out.write(f"# config_sha256={config.digest()}\n")
    out.write(f"# mode={config.mode} harvest={config.harvest} relays={config.relays} "
              f"h_av={fmt(config.h_av)} m_f={config.m_f} m_int={config.m_int}\n")
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([fmt(v) for v in row])


def _emit(args, text):
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def cmd_curve(config, args):
    rows = run_sweep(config)
    buf = io.StringIO()
    _write_table(buf, config, "curve", CURVE_COLUMNS,
                 [[getattr(r, c) for c in CURVE_COLUMNS] for r in rows])
    _emit(args, buf.getvalue())
    return 1 if any(r.status in ROW_ERRORS for r in rows) else 0


def cmd_solve_power(config, args):
    columns = ("theta_p", "p_st", "p_sr", "p_effective", "st_saturated", "sr_saturated", "status")
    rows = []
    failed = False
    for theta in config.theta_grid:
        try:
            b = solve_power_budget(config.links, config.p_pt_watts, config.n0_watts,
                                   config.theta_p, theta, config.energy, config.p_upper_bracket)
        except InfeasibleConstraintError:
            failed = True
            rows.append([theta, math.nan, math.nan, math.nan, False, False, "infeasible"])
            continue
        rows.append([theta, b.p_st, b.p_sr, b.effective_p_sr, b.st_saturated, b.sr_saturated, "ok"])
    buf = io.StringIO()
    _write_table(buf, config, "solve-power", columns, rows)
    _emit(args, buf.getvalue())
    return 1 if failed else 0


def cmd_simulate(config, args):
    if config.slots < 1:
        raise ConfigError("slots", "simulate needs at least one slot")
    columns = ("theta_p", "p_tx", "p_sout_simulated", "ci_halfwidth", "activity_mean",
               "n_active_mean", "transmissions", "status")
    rows = []
    failed = False
    seeds = np.random.SeedSequence(config.seed).spawn(len(config.theta_grid))
    for theta, ss in zip(config.theta_grid, seeds):
        try:
            b = solve_power_budget(config.links, config.p_pt_watts, config.n0_watts,
                                   config.theta_p, theta, config.energy, config.p_upper_bracket)
        except InfeasibleConstraintError:
            failed = True
            rows.append([theta] + [math.nan] * 4 + [math.nan, 0, "infeasible"])
            continue
        p_tx = relay_transmit_power(b, config.mode)
        if not p_tx > 0:
            failed = True
            rows.append([theta, p_tx] + [math.nan] * 4 + [0, "zero-power"])
            continue
        sim = run_secondary_sim(config, b, config.slots, ss, p_tx=p_tx)
        rows.append([theta, p_tx, sim.estimate.probability, sim.estimate.half_width_95,
                     float(sim.activity.mean()), sim.n_active_mean, sim.transmissions, "ok"])
    buf = io.StringIO()
    _write_table(buf, config, "simulate", columns, rows)
    _emit(args, buf.getvalue())
    return 1 if failed else 0


def cmd_validate(config, args):
    results = run_validation(config, independent_draws=args.independent_draws)
    lines = [f"# ehrelay validate seed={config.seed} config_sha256={config.digest()}"]
    lines += [r.line() for r in results]
    statuses = [r.status for r in results]
    if FAIL in statuses:
        code, summary = 1, "FAILED"
    elif LOW in statuses:
        code, summary = 2, "INSUFFICIENT PRECISION (increase --trials/--slots)"
    else:
        code, summary = 0, "ALL CHECKS PASSED"
    lines.append(summary)
    _emit(args, "\n".join(lines) + "\n")
    return code


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="INI configuration file")
    common.add_argument("--theta-min", type=float, help="smallest primary outage cap")
    common.add_argument("--theta-max", type=float, help="largest primary outage cap")
    common.add_argument("--theta-steps", type=int, help="number of caps in the sweep")
    common.add_argument("--h-av", type=float, help="mean harvesting rate (J/s)")
    common.add_argument("--relays", type=int, help="number of relays M")
    common.add_argument("--mf", type=int, help="fading parameter of forward links")
    common.add_argument("--mint", type=int, help="fading parameter of interference links")
    common.add_argument("--mode", choices=MODES, help="relay power rule")
    common.add_argument("--harvest", choices=HARVEST_PROCESSES, help="harvesting process")
    common.add_argument("--slots", type=int, help="simulated slots per point (0 skips simulation)")
    common.add_argument("--trials", type=int, help="Monte Carlo trials for oracle checks")
    common.add_argument("--seed", type=int, help="64-bit master seed")
    common.add_argument("--workers", type=int, help="parallel processes for the sweep")
    common.add_argument("--out", help="write output to this file instead of stdout")

    parser = argparse.ArgumentParser(
        prog="ehrelay",
        description="Outage of energy-harvesting cognitive relays under a primary outage constraint.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("curve", parents=[common], help="secondary outage vs primary outage cap (CSV)")
    v = sub.add_parser("validate", parents=[common], help="run the oracle checks")
    v.add_argument("--independent-draws", action="store_true",
                   help="use the (wrong) independent-interference Monte Carlo")
    sub.add_parser("solve-power", parents=[common], help="maximum secondary powers (CSV)")
    sub.add_parser("simulate", parents=[common], help="network simulation only (CSV)")
    return parser


_COMMANDS = {
    "curve": cmd_curve,
    "validate": cmd_validate,
    "solve-power": cmd_solve_power,
    "simulate": cmd_simulate,
}


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    overrides = {field: getattr(args, flag) for flag, field in _FLAG_FIELDS.items()}
    try:
        config = load_config(args.config, overrides)
        return _COMMANDS[args.command](config, args)
    except (ConfigError, OSError) as exc:
        print(f"ehrelay: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

"""Command-line front end.

Subcommands: ``solve`` (one configuration), ``sweep`` (risk-threshold
sweep), ``priority`` (block shutoff priority ordering), ``compare``
(controllability regimes side by side), ``blocks`` (the load-block table),
and ``gen-case`` (seeded random fixture files).

Report-producing commands write CSV (and ``solve`` also JSON) into the
output directory and render a PNG figure next to each delimited file
unless ``--no-plots`` is given.

Exit codes: 0 optimal, 1 input error, 2 problem not solvable as posed.
"""

import argparse
import sys
from pathlib import Path

from . import data as bundled
from .analysis import (
    compare,
    load_case,
    make_instance,
    priority,
    sweep,
    threshold_grid,
)
from .blocks import TopologyError
from .hazards import HazardDataError
from .model import NetworkDataError
from .mpsfile import export_milp
from .problem import Objective, Regime
from .report import (
    write_blocks_csv,
    write_compare_csv,
    write_priority_csv,
    write_solution_json,
    write_summary_csv,
    write_sweep_csv,
)
from .solver import SolverLimitError, solve

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_UNSOLVABLE = 2


class InputError(ValueError):
    pass


def _add_case_args(p):
    p.add_argument("--case", help="bundled case name (%s)" % ", ".join(bundled.CASES))
    p.add_argument("--network", help="network JSON file")
    p.add_argument("--risk", help="component risk CSV (id,value)")
    p.add_argument("--svi", help="per-load vulnerability CSV (id,value)")


def _add_solve_args(p, with_threshold=True):
    p.add_argument(
        "--objective",
        choices=[o.value for o in Objective],
        default="vl",
        help="shed metric: lo=kW, vo=vulnerability, vl=vulnerability-weighted",
    )
    p.add_argument(
        "--controllability",
        choices=[r.value for r in Regime],
        default="networking",
    )
    if with_threshold:
        p.add_argument("--threshold", type=float, default=0.5,
                       help="accepted fraction of total wildfire risk, 0..1")
    p.add_argument("--no-switch-risk", action="store_true",
                   help="exclude closed-switch risk from the budget accounting")


def _add_out_args(p):
    p.add_argument("--out", default="out", help="output directory (default: ./out)")
    p.add_argument("--no-plots", action="store_true", help="skip PNG figure rendering")


def _load(args):
    if args.case:
        if args.network or args.risk or args.svi:
            raise InputError("--case and explicit file paths are mutually exclusive")
        return load_case(*bundled.case_files(args.case))
    if not args.network:
        raise InputError("either --case or --network is required")
    return load_case(args.network, args.risk, args.svi)


def _check_threshold(value):
    if not 0.0 <= value <= 1.0:
        raise InputError(f"--threshold must be in [0, 1], got {value}")
    return value


def _outdir(args):
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_solve(args):
    case = _load(args)
    inst = make_instance(
        case,
        args.objective,
        args.controllability,
        _check_threshold(args.threshold),
        include_switch_risk=not args.no_switch_risk,
    )
    report = solve(inst)
    out = _outdir(args)
    write_solution_json(out / "solution.json", inst, report)
    write_summary_csv(out / "summary.csv", inst, report)
    if args.export_mps:
        summary = export_milp(inst, args.export_mps)
        print(
            f"MPS written to {summary.path}: {summary.n_cols} columns "
            f"({summary.n_binaries} binary), {summary.n_rows} rows"
        )
    if not args.no_plots:
        from .plots import solution_figure

        solution_figure(out / "solution.png", case.bg, report.configuration)
    cfg = report.configuration
    print(
        f"optimal: shed={report.objective_value:.6g} "
        f"served={100 * report.served_fraction():.2f}% "
        f"risk={100 * cfg.risk_fraction:.2f}% "
        f"blocks_on={sorted(cfg.energized_blocks)} closed={list(cfg.closed_switches)}"
    )
    if inst.control.regime is Regime.STATIC:
        print("static controllability: exactly 1 admissible topology evaluated")
    return EXIT_OK if report.optimal else EXIT_UNSOLVABLE


def cmd_sweep(args):
    case = _load(args)
    grid = threshold_grid(args.sweep_from, args.sweep_to, args.step)
    result = sweep(
        case,
        args.objective,
        args.controllability,
        grid,
        include_switch_risk=not args.no_switch_risk,
    )
    out = _outdir(args)
    write_sweep_csv(out / "sweep.csv", result)
    if not args.no_plots:
        from .plots import sweep_figure

        sweep_figure(out / "sweep.png", result)
    print(
        f"{len(result.rows)} thresholds solved, "
        f"{result.distinct_solutions} distinct solutions"
    )
    return EXIT_OK


def cmd_priority(args):
    case = _load(args)
    grid = threshold_grid(args.sweep_from, args.sweep_to, args.step)
    table = priority(
        case,
        grid,
        regime=Regime(args.controllability),
        include_switch_risk=not args.no_switch_risk,
    )
    out = _outdir(args)
    write_priority_csv(out / "priority.csv", table)
    if not args.no_plots:
        from .plots import priority_figure

        priority_figure(out / "priority.png", table)
    for obj in Objective:
        order = sorted(table.block_ids, key=lambda b: table.ranks[obj][b])
        print(f"{obj.value}: " + " > ".join(f"block {b}" for b in order))
    return EXIT_OK


def cmd_compare(args):
    case = _load(args)
    regimes = [r.strip() for r in args.regimes.split(",") if r.strip()]
    for r in regimes:
        if r not in {x.value for x in Regime}:
            raise InputError(f"unknown controllability regime {r!r}")
    rows = compare(
        case,
        regimes,
        args.objective,
        _check_threshold(args.threshold),
        include_switch_risk=not args.no_switch_risk,
        substation_off=args.substation_off,
    )
    out = _outdir(args)
    write_compare_csv(out / "compare.csv", rows)
    if not args.no_plots:
        from .plots import compare_figure

        compare_figure(out / "compare.png", rows, args.objective)
    for r in rows:
        print(
            f"{r.regime.value}: on={r.blocks_on}/{r.total_blocks} "
            f"closed={r.switches_closed} risk={r.risk_pct:.2f}% served={r.served_pct:.2f}%"
        )
    return EXIT_OK


def cmd_blocks(args):
    case = _load(args)
    write_blocks_csv(sys.stdout, case.bg)
    return EXIT_OK


def cmd_gen_case(args):
    from .synth import write_case

    net = write_case(Path(args.dest), args.seed, max_blocks=args.blocks, max_switches=args.switches)
    print(
        f"wrote case to {args.dest}: {len(net.buses)} buses, "
        f"{len(net.switches)} switches, {len(net.loads)} loads"
    )
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(
        prog="gridshed",
        description="Configure networked microgrids to cap wildfire-ignition "
        "risk while minimizing (equity-weighted) load shed.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="solve one configuration problem")
    _add_case_args(p)
    _add_solve_args(p)
    p.add_argument("--export-mps", help="also write the MILP as an MPS file")
    _add_out_args(p)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("sweep", help="sweep the accepted risk threshold")
    _add_case_args(p)
    _add_solve_args(p, with_threshold=False)
    p.add_argument("--from", dest="sweep_from", type=float, default=0.0)
    p.add_argument("--to", dest="sweep_to", type=float, default=1.0)
    p.add_argument("--step", type=float, default=0.001)
    _add_out_args(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("priority", help="block shutoff priority under each objective")
    _add_case_args(p)
    p.add_argument(
        "--controllability", choices=[r.value for r in Regime], default="networking"
    )
    p.add_argument("--no-switch-risk", action="store_true")
    p.add_argument("--from", dest="sweep_from", type=float, default=0.0)
    p.add_argument("--to", dest="sweep_to", type=float, default=1.0)
    p.add_argument("--step", type=float, default=0.001)
    _add_out_args(p)
    p.set_defaults(func=cmd_priority)

    p = sub.add_parser("compare", help="compare controllability regimes")
    _add_case_args(p)
    _add_solve_args(p)
    p.add_argument(
        "--regimes",
        default="none,static,expanding,networking",
        help="comma-separated regime list",
    )
    p.add_argument(
        "--substation-off",
        action="store_true",
        help="widespread-shutoff scenario: substation feed forced open",
    )
    _add_out_args(p)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("blocks", help="print the load-block table as CSV")
    _add_case_args(p)
    p.set_defaults(func=cmd_blocks)

    p = sub.add_parser("gen-case", help="write a seeded random case")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--blocks", type=int, default=5)
    p.add_argument("--switches", type=int, default=4)
    p.add_argument("--dest", required=True)
    p.set_defaults(func=cmd_gen_case)

    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except SolverLimitError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_UNSOLVABLE
    except (
        InputError,
        NetworkDataError,
        HazardDataError,
        TopologyError,
        ValueError,
        KeyError,
        FileNotFoundError,
    ) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())

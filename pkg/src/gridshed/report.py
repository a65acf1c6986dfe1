"""File emission for solves and batch studies.

All delimited output is UTF-8 CSV with deterministic float formatting, so
identical inputs produce byte-identical files.  ``solution.json`` carries
the full configuration and dispatch; ``summary.csv`` is its one-row digest.
"""

import csv
import json

from .problem import Objective


def fnum(x):
    """Deterministic short float formatting for CSV cells."""
    return f"{x:.10g}"


def write_summary_csv(path, inst, report):
    cfg = report.configuration
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            [
                "objective",
                "controllability",
                "threshold",
                "shed_cost",
                "served_pct",
                "risk_pct",
                "blocks_on",
                "switches_closed",
                "mean_v_served",
                "mean_v_shed",
            ]
        )
        writer.writerow(
            [
                inst.objective.value,
                inst.control.regime.value,
                fnum(inst.policy.threshold),
                fnum(report.objective_value),
                fnum(100.0 * report.served_fraction()),
                fnum(100.0 * cfg.risk_fraction),
                len(cfg.energized_blocks),
                len(cfg.closed_switches),
                "" if report.vulnerability_served is None else fnum(report.vulnerability_served),
                "" if report.vulnerability_shed is None else fnum(report.vulnerability_shed),
            ]
        )


def _dispatch_obj(dispatch):
    if dispatch is None or not dispatch.feasible:
        return None

    def group(table):
        out = {}
        for (eid, ph), val in table.items():
            out.setdefault(eid, {})[ph] = round(val, 9)
        return {k: out[k] for k in sorted(out)}

    return {
        "sources_kw": group(dispatch.pg),
        "sources_kvar": group(dispatch.qg),
        "flows_kw": group(dispatch.flow_p),
        "flows_kvar": group(dispatch.flow_q),
        "squared_voltage_pu": group(dispatch.w),
    }


def solution_document(inst, report):
    cfg = report.configuration
    served = {
        obj.value: {
            "served": report.served[obj],
            "total": report.total[obj],
            "pct": 100.0 * report.served_fraction(obj),
        }
        for obj in Objective
    }
    return {
        "objective": inst.objective.value,
        "controllability": inst.control.regime.value,
        "threshold": inst.policy.threshold,
        "include_switch_risk": inst.policy.include_switch_risk,
        "substation_available": inst.substation_available,
        "status": "optimal" if report.optimal else "incomplete",
        "risk": {
            "value": cfg.risk,
            "fraction": cfg.risk_fraction,
            "total": inst.policy.r_total,
            "budget": inst.policy.budget,
        },
        "switches": dict(sorted(cfg.switch_states.items())),
        "inverters": dict(sorted(cfg.inverter_modes.items())),
        "energized_blocks": sorted(cfg.energized_blocks),
        "islands": [
            {
                "blocks": sorted(isl.block_ids),
                "closed_switches": list(isl.closed_switches),
                "forming_source": isl.forming_source,
            }
            for isl in cfg.islands
        ],
        "shed": {obj.value: cfg.shed[obj] for obj in Objective},
        "served": served,
        "vulnerability": {
            "served_mean": report.vulnerability_served,
            "shed_mean": report.vulnerability_shed,
        },
        "search": {
            "nodes": report.nodes,
            "leaves": report.leaves,
            "wall_time_s": report.wall_time_s,
            "optimal": report.optimal,
        },
        "dispatch": _dispatch_obj(cfg.dispatch),
    }


def write_solution_json(path, inst, report):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(solution_document(inst, report), fh, indent=2)
        fh.write("\n")


def write_sweep_csv(path, result):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["threshold", "shed_cost", "served_pct", "risk_pct", "config_hash"])
        for row in result.rows:
            writer.writerow(
                [
                    f"{row.threshold:.6g}",
                    fnum(row.shed_cost),
                    fnum(row.served_pct),
                    fnum(row.risk_pct),
                    row.config_hash,
                ]
            )


def write_priority_csv(path, table):
    cols = [Objective.LOAD_ONLY, Objective.VULNERABILITY_ONLY, Objective.VULNERABILITY_WEIGHTED]
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        header = ["block"]
        for obj in cols:
            header += [f"steps_{obj.value}", f"rank_{obj.value}", f"delta_{obj.value}"]
        writer.writerow(header)
        for b in table.block_ids:
            row = [b]
            for obj in cols:
                row += [table.counts[obj][b], table.ranks[obj][b], table.deltas[obj][b]]
            writer.writerow(row)


def write_compare_csv(path, rows):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            [
                "controllability",
                "blocks_on",
                "total_blocks",
                "switches_closed",
                "risk_pct",
                "served_pct",
                "mean_v_served",
                "mean_v_shed",
                "shed_cost",
            ]
        )
        for r in rows:
            writer.writerow(
                [
                    r.regime.value,
                    r.blocks_on,
                    r.total_blocks,
                    r.switches_closed,
                    fnum(r.risk_pct),
                    fnum(r.served_pct),
                    "" if r.mean_v_served is None else fnum(r.mean_v_served),
                    "" if r.mean_v_shed is None else fnum(r.mean_v_shed),
                    fnum(r.shed_cost),
                ]
            )


def write_blocks_csv(stream, bg):
    """Block table (id, buses, kW, vulnerability, risk) onto a text stream."""
    writer = csv.writer(stream)
    writer.writerow(["block", "buses", "load_kw", "vulnerability", "risk"])
    for blk in bg.blocks:
        writer.writerow(
            [
                blk.id,
                " ".join(sorted(blk.bus_ids)),
                fnum(blk.total_pd),
                fnum(blk.total_svi),
                fnum(blk.risk),
            ]
        )

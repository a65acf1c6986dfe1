"""Batch studies over solved configurations: sweeps, priority, comparisons.

These are the library counterparts of the CLI subcommands.  A sweep solves
one instance per risk threshold; the shutoff priority table ranks blocks by
how often they stay energized across a sweep under each objective; the
controllability comparison reruns one scenario under several regimes.
"""

import hashlib
from dataclasses import dataclass

from .blocks import identify_blocks
from .hazards import (
    HazardDataError,
    aggregate_risk,
    apply_tables,
    load_risk_csv,
    load_svi_csv,
)
from .model import parse_network
from .problem import Objective, Regime, build_instance
from .reduction import reduce_feeder
from .solver import SearchContext, solve


@dataclass(frozen=True)
class Case:
    """A loaded scenario: validated network plus annotated block graph."""

    net: object
    bg: object
    risk_table: object | None = None
    svi_table: object | None = None


def load_case(network_path, risk_path=None, svi_path=None):
    """Parse, validate, reduce (when needed) and annotate a full scenario.

    Risk ids are collapsed onto primary buses before any reduction removes
    the secondary circuits, so block risks are identical whether or not the
    feeder carries distribution transformers.
    """
    net = parse_network(network_path)
    rt = load_risk_csv(risk_path, net) if risk_path else None
    st = load_svi_csv(svi_path, net) if svi_path else None
    if st is not None:
        missing = sorted(set(net.load_by_id) - set(st.values))
        if missing:
            raise HazardDataError(f"missing svi entries for: {missing}")
    net = apply_tables(net, rt, st)

    bus_risk = {}
    if rt is not None:
        bus_risk = aggregate_risk(net, rt).bus_risk
    if any(t.is_distribution_xfmr for t in net.transformers):
        net = reduce_feeder(net)
    component_risk = dict(rt.values) if rt else {}
    component_risk.update(bus_risk)
    bg = identify_blocks(net, component_risk)
    return Case(net=net, bg=bg, risk_table=rt, svi_table=st)


def make_instance(
    case,
    objective,
    regime,
    threshold,
    include_switch_risk=True,
    substation_available=True,
):
    return build_instance(
        case.net,
        case.bg,
        objective,
        regime,
        threshold,
        include_switch_risk=include_switch_risk,
        substation_available=substation_available,
    )


def config_digest(config):
    """Stable 12-hex-digit fingerprint of a configuration's decisions."""
    text = "closed=%s;on=%s;forming=%s" % (
        ",".join(config.closed_switches),
        ",".join(str(b) for b in sorted(config.energized_blocks)),
        ",".join(sorted(g for g, v in config.inverter_modes.items() if v == 1)),
    )
    return hashlib.md5(text.encode()).hexdigest()[:12]


def threshold_grid(start, stop, step):
    """Deterministic inclusive grid; collapses to [start] when step > range."""
    if not 0.0 <= start <= 1.0 or not 0.0 <= stop <= 1.0:
        raise ValueError("thresholds must lie in [0, 1]")
    if stop < start:
        raise ValueError("sweep range must satisfy start <= stop")
    if step <= 0:
        raise ValueError("step must be positive")
    out = []
    i = 0
    while True:
        t = start + i * step
        if t > stop + 1e-12:
            break
        out.append(min(t, 1.0))
        i += 1
    return out


@dataclass(frozen=True)
class SweepRow:
    threshold: float
    shed_cost: float
    served_pct: float
    risk_pct: float
    config_hash: str
    energized_blocks: tuple
    closed_switches: tuple


@dataclass(frozen=True)
class SweepResult:
    objective: Objective
    regime: Regime
    rows: tuple

    def __post_init__(self):
        ts = [r.threshold for r in self.rows]
        if any(b <= a for a, b in zip(ts, ts[1:])):
            raise ValueError("sweep thresholds must be strictly increasing")

    @property
    def distinct_solutions(self):
        return len({r.config_hash for r in self.rows})


def sweep(
    case,
    objective,
    regime,
    thresholds,
    include_switch_risk=True,
    substation_available=True,
    context=None,
):
    """One solve per threshold; the search context is shared across them."""
    objective = Objective(objective) if not isinstance(objective, Objective) else objective
    regime = Regime(regime) if not isinstance(regime, Regime) else regime
    rows = []
    for t in thresholds:
        inst = make_instance(
            case,
            objective,
            regime,
            t,
            include_switch_risk=include_switch_risk,
            substation_available=substation_available,
        )
        if context is None:
            context = SearchContext(inst)
        report = solve(inst, context=context, with_dispatch=False)
        cfg = report.configuration
        rows.append(
            SweepRow(
                threshold=t,
                shed_cost=report.objective_value,
                served_pct=100.0 * report.served_fraction(),
                risk_pct=100.0 * cfg.risk_fraction,
                config_hash=config_digest(cfg),
                energized_blocks=tuple(sorted(cfg.energized_blocks)),
                closed_switches=cfg.closed_switches,
            )
        )
    return SweepResult(objective=objective, regime=regime, rows=tuple(rows))


@dataclass(frozen=True)
class PriorityTable:
    """Shutoff priority of the non-substation blocks under each objective.

    ``ranks[obj][block]`` is 1 for the block energized at the most sweep
    steps (ties broken by ascending block id); ``deltas`` are relative to
    the load-only ranking (positive = promoted).
    """

    block_ids: tuple
    counts: dict
    ranks: dict
    deltas: dict


def priority(
    case,
    thresholds,
    regime=Regime.NETWORKING,
    include_switch_risk=True,
    substation_available=True,
):
    """Rank blocks by count of sweep steps energized, per objective."""
    sub = case.bg.substation_block.id
    block_ids = tuple(b.id for b in case.bg.blocks if b.id != sub)
    counts, ranks = {}, {}
    context = None
    for obj in Objective:
        inst = make_instance(case, obj, regime, thresholds[0],
                             include_switch_risk=include_switch_risk,
                             substation_available=substation_available)
        if context is None:
            context = SearchContext(inst)
        result = sweep(
            case,
            obj,
            regime,
            thresholds,
            include_switch_risk=include_switch_risk,
            substation_available=substation_available,
            context=context,
        )
        n_on = {b: 0 for b in block_ids}
        for row in result.rows:
            for b in row.energized_blocks:
                if b != sub:
                    n_on[b] += 1
        counts[obj] = n_on
        order = sorted(block_ids, key=lambda b: (-n_on[b], b))
        ranks[obj] = {b: i + 1 for i, b in enumerate(order)}
    deltas = {
        obj: {b: ranks[Objective.LOAD_ONLY][b] - ranks[obj][b] for b in block_ids}
        for obj in Objective
    }
    return PriorityTable(block_ids=block_ids, counts=counts, ranks=ranks, deltas=deltas)


@dataclass(frozen=True)
class CompareRow:
    regime: Regime
    blocks_on: int
    total_blocks: int
    switches_closed: int
    risk_pct: float
    served_pct: float
    mean_v_served: float | None
    mean_v_shed: float | None
    shed_cost: float


def compare(
    case,
    regimes,
    objective,
    threshold,
    include_switch_risk=True,
    substation_off=False,
):
    """Solve one scenario under several controllability regimes."""
    rows = []
    for regime in regimes:
        inst = make_instance(
            case,
            objective,
            regime,
            threshold,
            include_switch_risk=include_switch_risk,
            substation_available=not substation_off,
        )
        report = solve(inst)
        cfg = report.configuration
        rows.append(
            CompareRow(
                regime=inst.control.regime,
                blocks_on=len(cfg.energized_blocks),
                total_blocks=len(case.bg.blocks),
                switches_closed=len(cfg.closed_switches),
                risk_pct=100.0 * cfg.risk_fraction,
                served_pct=100.0 * report.served_fraction(),
                mean_v_served=report.vulnerability_served,
                mean_v_shed=report.vulnerability_shed,
                shed_cost=report.objective_value,
            )
        )
    return rows

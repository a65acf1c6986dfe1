"""Exact configuration search.

``solve`` runs a depth-first branch and bound over the free switch binaries
(most-load-adjacent switch first, open branch explored before closed).  At
each leaf the island decomposition is derived combinatorially, islands that
would hold two forming sources or a switch cycle are rejected, and the best
set of islands to energize under the risk budget is chosen exactly by
subset enumeration with cached island-dispatch feasibility.  Grid-forming
roles are not branched: they are fixed by the controllability regime, and
under networking control the solver assigns the lowest-id capable source to
any island that needs one (which choice never changes dispatch
feasibility).

``enumerate_all`` is the verification oracle: it brute-forces every
admissible switch/inverter assignment and every island energization subset,
sharing only the dispatch LP with the search path.

Ties between equal-cost configurations break deterministically: fewer
closed switches, lexicographically smaller closed-switch id tuple, lower
risk, lexicographically smaller energized block tuple, then the smaller
forming-source assignment.

Leaf evaluations may run concurrently in principle (the incumbent is the
only shared mutable state); this implementation is sequential, which makes
determinism trivial.
"""

import itertools
import time
from dataclasses import dataclass, replace

from .blocks import Island, islands_for
from .flow import DispatchOracle, solve_dispatch
from .problem import (
    Objective,
    objective_value,
    served_value,
    vulnerability_stats,
)

_TOL = 1e-12

DEFAULT_BINARY_CEILING = 40
ENUMERATION_CEILING = 20


class SolverLimitError(RuntimeError):
    """The instance exceeds the exact path's binary budget; export it instead."""


@dataclass(frozen=True)
class Configuration:
    """A complete, feasible operating configuration."""

    switch_states: dict  # switch id -> "open" / "closed"
    inverter_modes: dict  # forming-capable source id -> 0/1
    energized_blocks: frozenset
    islands: tuple
    risk: float
    risk_fraction: float
    shed: dict  # Objective -> shed cost
    dispatch: object | None = None

    @property
    def closed_switches(self):
        return tuple(sorted(s for s, st in self.switch_states.items() if st == "closed"))


@dataclass
class SolveReport:
    """Solve outcome with search statistics and all-metric served totals."""

    configuration: Configuration
    objective: Objective
    objective_value: float
    optimal: bool
    nodes: int
    leaves: int
    wall_time_s: float
    served: dict
    total: dict
    vulnerability_served: float | None
    vulnerability_shed: float | None

    def served_fraction(self, objective=None):
        obj = objective or self.objective
        tot = self.total[obj]
        return 1.0 if tot == 0 else self.served[obj] / tot


@dataclass(frozen=True)
class _LeafIsland:
    island: Island
    former: str | None
    feasible: bool
    risk: float
    coef: dict


class SearchContext:
    """Instance-family cache shared across thresholds and objectives.

    Leaf decompositions depend only on the network, block graph, regime and
    substation availability -- not on the risk threshold or the objective --
    so sweeps reuse one context for every solve.
    """

    def __init__(self, inst, oracle=None):
        self.net = inst.net
        self.bg = inst.bg
        self.regime = inst.control.regime
        self.substation_available = inst.substation_available
        self.fixed_forming = inst.fixed_forming
        self.free_forming = inst.free_forming
        self.coefs = inst.shed_coefficients
        self.oracle = oracle or DispatchOracle(inst.net, inst.bg)
        self.leaf_cache = {}
        self.former_blocks = self._former_blocks()

    def matches(self, inst):
        return (
            inst.net is self.net
            and inst.bg is self.bg
            and inst.control.regime is self.regime
            and inst.substation_available == self.substation_available
        )

    def _former_blocks(self):
        out = set()
        for blk in self.bg.blocks:
            if blk.contains_substation and self.substation_available:
                out.add(blk.id)
            elif any(g in self.fixed_forming for g in blk.forming_capable_sources):
                out.add(blk.id)
            elif any(g in self.free_forming for g in blk.forming_capable_sources):
                out.add(blk.id)
        return frozenset(out)

    def leaf(self, closed):
        """Island candidates for a closed-switch set; None if inadmissible."""
        key = frozenset(closed)
        if key in self.leaf_cache:
            return self.leaf_cache[key]
        decomp = islands_for(self.bg, set(key), self.fixed_forming)
        if not decomp.feasible:
            self.leaf_cache[key] = None
            return None
        entries = []
        for isl in decomp.islands:
            former = isl.forming_source
            if former is None and self.free_forming:
                cands = sorted(
                    g
                    for bid in isl.block_ids
                    for g in self.bg.by_id[bid].forming_capable_sources
                    if g in self.free_forming
                )
                former = cands[0] if cands else None
            feasible = former is not None and self.oracle.island_feasible(
                isl.block_ids, isl.closed_switches
            )
            entries.append(
                _LeafIsland(
                    island=isl,
                    former=former,
                    feasible=feasible,
                    risk=sum(self.bg.by_id[b].risk for b in isl.block_ids),
                    coef={
                        obj: sum(self.coefs[obj][b] for b in isl.block_ids)
                        for obj in Objective
                    },
                )
            )
        self.leaf_cache[key] = tuple(entries)
        return self.leaf_cache[key]


def _config_key(shed, closed, risk, energized, forming):
    return (shed, len(closed), closed, risk, energized, len(forming), forming)


def _best_energization(entries, coefs, block_risks, budget_remaining):
    """Exact choice of islands to energize under the remaining risk budget.

    Served value and block risk of every candidate subset are accumulated in
    ascending block-id order (see ``served_value``), so results match the
    enumeration oracle bit for bit.
    """
    cands = [e for e in entries if e.feasible]
    m = len(cands)
    best = None
    for mask in range(1 << m):
        blocks = []
        for i in range(m):
            if mask >> i & 1:
                blocks.extend(cands[i].island.block_ids)
        blocks.sort()
        risk = sum(block_risks[b] for b in blocks)
        if risk > budget_remaining + _TOL:
            continue
        served = sum(coefs[b] for b in blocks)
        key = (-served, risk, tuple(blocks))
        if best is None or key < best[0]:
            best = (key, mask, served, risk, blocks)
    if best is None:
        return None
    _, mask, served, risk, blocks = best
    chosen = [cands[i] for i in range(m) if mask >> i & 1]
    return served, risk, tuple(blocks), chosen


def _switch_order(inst):
    """Free switches, most-load-adjacent first, then by id."""
    load_of = {blk.id: blk.total_pd for blk in inst.bg.blocks}
    free = [
        sid
        for sid in inst.switch_ids
        if len(inst.control.switch_domain(sid)) > 1 and sid not in inst.forced_open
    ]

    def score(sid):
        a, b = inst.bg.edge_by_switch[sid]
        return (-(load_of[a] + load_of[b]), sid)

    return sorted(free, key=score)


def _shed_lower_bound(inst, ctx, closed, undecided, spent_risk, objective):
    """Shed cost of blocks that can no longer be energized in any completion."""
    budget_left = inst.policy.budget - spent_risk
    parent = {blk.id: blk.id for blk in inst.bg.blocks}

    def find(u):
        while parent[u] != u:
            parent[u] = parent[parent[u]]
            u = parent[u]
        return u

    for sid in itertools.chain(closed, undecided):
        a, b = inst.bg.edge_by_switch[sid]
        parent[find(a)] = find(b)

    reachable = set()
    roots_with_former = {find(b) for b in ctx.former_blocks}
    for blk in inst.bg.blocks:
        if find(blk.id) in roots_with_former:
            reachable.add(blk.id)

    coefs = ctx.coefs[objective]
    bound = 0.0
    for blk in inst.bg.blocks:
        if blk.id not in reachable or blk.risk > budget_left + _TOL:
            bound += coefs[blk.id]
    return bound


def solve(
    inst,
    *,
    context=None,
    prune=True,
    binary_ceiling=DEFAULT_BINARY_CEILING,
    with_dispatch=True,
):
    """Provably optimal configuration for the instance's objective.

    ``with_dispatch`` False skips re-deriving the full operating point of
    the winner (feasibility was already proven island by island), which
    batch sweeps use to stay fast.  Raises SolverLimitError above
    ``binary_ceiling`` combined free binaries; large instances are meant
    for the MILP file exporter instead.
    """
    if inst.binary_count > binary_ceiling:
        raise SolverLimitError(
            f"instance has {inst.binary_count} free binaries "
            f"(ceiling {binary_ceiling}); use the MILP export for large cases"
        )
    if context is None:
        context = SearchContext(inst)
    elif not context.matches(inst):
        raise ValueError("search context was built for a different instance family")

    t0 = time.perf_counter()
    order = _switch_order(inst)
    budget = inst.policy.budget
    include_sw = inst.policy.include_switch_risk
    risks = inst.switch_risks
    objective = inst.objective
    coefs = context.coefs[objective]
    block_risks = {blk.id: blk.risk for blk in inst.bg.blocks}
    total_coef = served_value(block_risks.keys(), coefs)

    stats = {"nodes": 0, "leaves": 0}
    best = {"key": None, "leaf": None}

    def leaf_eval(closed_tuple):
        stats["leaves"] += 1
        entries = context.leaf(closed_tuple)
        if entries is None:
            return
        closed_risk = sum(risks[s] for s in closed_tuple) if include_sw else 0.0
        remaining = budget - closed_risk
        pick = _best_energization(entries, coefs, block_risks, remaining)
        if pick is None:
            return
        served, block_risk, energized, chosen = pick
        shed = total_coef - served
        forming = tuple(sorted(e.former for e in chosen))
        risk = block_risk + closed_risk
        key = _config_key(shed, closed_tuple, risk, energized, forming)
        if best["key"] is None or key < best["key"]:
            best["key"] = key
            best["leaf"] = (closed_tuple, entries, chosen, risk)

    # spent_risk tracks only budget-charged risk: zero while switch risk is
    # excluded from the accounting, so the bound never over-subtracts
    def descend(idx, closed, spent_risk):
        stats["nodes"] += 1
        if spent_risk > budget + _TOL:
            return  # every completion keeps these switches closed
        if prune and best["key"] is not None:
            bound = _shed_lower_bound(
                inst, context, closed, order[idx:], spent_risk, objective
            )
            if bound > best["key"][0] + _TOL:
                return
        if idx == len(order):
            leaf_eval(tuple(sorted(closed)))
            return
        sid = order[idx]
        descend(idx + 1, closed, spent_risk)
        closed.append(sid)
        descend(idx + 1, closed, spent_risk + (risks[sid] if include_sw else 0.0))
        closed.pop()

    descend(0, [], 0.0)

    closed_tuple, entries, chosen, risk = best["leaf"]
    config = _build_configuration(
        inst, context, closed_tuple, entries, chosen, risk, with_dispatch
    )
    rep = objective_value(config.energized_blocks, objective, inst.bg)
    v_on, v_off = vulnerability_stats(config.energized_blocks, inst.bg)
    return SolveReport(
        configuration=config,
        objective=objective,
        objective_value=rep.shed,
        optimal=True,
        nodes=stats["nodes"],
        leaves=stats["leaves"],
        wall_time_s=time.perf_counter() - t0,
        served=rep.served,
        total=rep.total,
        vulnerability_served=v_on,
        vulnerability_shed=v_off,
    )


def _build_configuration(inst, context, closed_tuple, entries, chosen, risk, with_dispatch=True):
    closed = set(closed_tuple)
    energized = frozenset(b for e in chosen for b in e.island.block_ids)
    chosen_ids = {id(e.island) for e in chosen}

    switch_states = {
        sid: ("closed" if sid in closed else "open") for sid in inst.switch_ids
    }

    inverter_modes = {}
    sub = inst.net.substation_source.id if inst.net.substation_source else None
    for blk in inst.bg.blocks:
        for g in blk.forming_capable_sources:
            if g == sub:
                continue
            inverter_modes[g] = 1 if g in inst.fixed_forming else 0
    for e in chosen:
        if e.former is not None and e.former != sub:
            inverter_modes[e.former] = 1

    islands = tuple(
        replace(e.island, forming_source=e.former)
        if id(e.island) in chosen_ids
        else replace(e.island, forming_source=None)
        for e in entries
    )

    dispatch = (
        solve_dispatch(inst.net, inst.bg, islands, energized) if with_dispatch else None
    )
    shed = {
        obj: objective_value(energized, obj, inst.bg).shed for obj in Objective
    }
    return Configuration(
        switch_states=switch_states,
        inverter_modes=inverter_modes,
        energized_blocks=energized,
        islands=islands,
        risk=risk,
        risk_fraction=risk / inst.policy.r_total,
        shed=shed,
        dispatch=dispatch,
    )


@dataclass(frozen=True)
class EnumeratedConfig:
    """One admissible (switches, forming, energization) point from the oracle."""

    closed_switches: tuple
    forming: tuple
    energized_blocks: tuple
    risk: float
    objective_cost: float


def enumerate_all(inst, *, oracle=None, limit=ENUMERATION_CEILING):
    """Evaluate every admissible switch/inverter pair (verification oracle).

    Returns the list of evaluated configurations, one entry per admissible
    (switch assignment, forming assignment, energized subset) triple that
    satisfies topology, uniqueness, dispatch and budget.  ``min`` of the
    ``objective_cost`` field must match ``solve`` exactly.
    """
    if inst.binary_count > limit:
        raise SolverLimitError(
            f"enumeration limited to {limit} free binaries, instance has {inst.binary_count}"
        )
    oracle = oracle or DispatchOracle(inst.net, inst.bg)
    bg = inst.bg
    coefs = inst.shed_coefficients[inst.objective]
    block_risks = {blk.id: blk.risk for blk in bg.blocks}
    total_coef = served_value(coefs.keys(), coefs)
    budget = inst.policy.budget
    include_sw = inst.policy.include_switch_risk
    risks = inst.switch_risks

    switch_domains = []
    for sid in inst.switch_ids:
        if sid in inst.forced_open:
            switch_domains.append(((sid, 0),))
        else:
            switch_domains.append(tuple((sid, v) for v in inst.control.switch_domain(sid)))

    free_inverters = sorted(inst.free_forming)
    inverter_domains = [((g, 0), (g, 1)) for g in free_inverters]

    out = []
    for sw_choice in itertools.product(*switch_domains):
        closed = tuple(sorted(sid for sid, v in sw_choice if v == 1))
        closed_risk = sum(risks[s] for s in closed) if include_sw else 0.0
        for inv_choice in itertools.product(*inverter_domains):
            forming = set(inst.fixed_forming)
            forming.update(g for g, v in inv_choice if v == 1)
            decomp = islands_for(bg, set(closed), forming)
            if not decomp.feasible:
                continue
            islands = decomp.islands
            feasible_flags = [
                isl.energized
                and oracle.island_feasible(isl.block_ids, isl.closed_switches)
                for isl in islands
            ]
            for mask in range(1 << len(islands)):
                blocks = []
                ok = True
                for i, isl in enumerate(islands):
                    if mask >> i & 1:
                        if not feasible_flags[i]:
                            ok = False
                            break
                        blocks.extend(isl.block_ids)
                if not ok:
                    continue
                blocks.sort()
                block_risk = sum(block_risks[b] for b in blocks)
                if block_risk + closed_risk > budget + _TOL:
                    continue
                served = sum(coefs[b] for b in blocks)
                out.append(
                    EnumeratedConfig(
                        closed_switches=closed,
                        forming=tuple(sorted(forming)),
                        energized_blocks=tuple(blocks),
                        risk=block_risk + closed_risk,
                        objective_cost=total_coef - served,
                    )
                )
    return out


def enumerate_minimum(inst, *, oracle=None, limit=ENUMERATION_CEILING):
    """Best enumerated configuration under the shared deterministic tie order."""
    configs = enumerate_all(inst, oracle=oracle, limit=limit)
    return min(
        configs,
        key=lambda c: _config_key(
            c.objective_cost, c.closed_switches, c.risk, c.energized_blocks, c.forming
        ),
    )

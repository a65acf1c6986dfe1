"""Load blocks, the block-level switch graph, and island decomposition.

A load block is a maximal connected component of the feeder when every
switch is open (lines and transformers remain).  Blocks are the atomic unit
of energization: an island is a set of blocks joined by closed switches, and
it can carry power only when it contains exactly one grid-forming source.
"""

from dataclasses import dataclass
from functools import cached_property


class TopologyError(ValueError):
    """The block/switch structure violates a topology invariant."""


@dataclass(frozen=True)
class LoadBlock:
    """One load block with its aggregated demand, vulnerability and risk."""

    id: int
    bus_ids: frozenset
    total_pd: float
    total_svi: float
    risk: float
    contains_substation: bool
    forming_capable_sources: tuple

    def __post_init__(self):
        if self.total_pd < 0 or self.risk < 0 or self.total_svi < 0:
            raise TopologyError(f"block {self.id}: negative aggregate value")


@dataclass(frozen=True)
class BlockGraph:
    """Quotient graph of the feeder: blocks as nodes, switches as edges."""

    blocks: tuple
    edges: tuple  # (switch id, block id, block id)

    def __post_init__(self):
        ids = [b.id for b in self.blocks]
        if len(set(ids)) != len(ids):
            raise TopologyError("duplicate block ids")
        subs = [b.id for b in self.blocks if b.contains_substation]
        if len(subs) != 1:
            raise TopologyError(f"exactly one substation block required, got {subs}")
        switch_ids = [e[0] for e in self.edges]
        if len(set(switch_ids)) != len(switch_ids):
            raise TopologyError("a switch appears on more than one edge")
        known = set(ids)
        for sid, a, b in self.edges:
            if a == b:
                raise TopologyError(f"switch {sid}: endpoints in the same block")
            if a not in known or b not in known:
                raise TopologyError(f"switch {sid}: unknown block endpoint")

    @cached_property
    def by_id(self):
        return {b.id: b for b in self.blocks}

    @cached_property
    def substation_block(self):
        return next(b for b in self.blocks if b.contains_substation)

    @cached_property
    def block_of_bus(self):
        out = {}
        for b in self.blocks:
            for bus in b.bus_ids:
                out[bus] = b.id
        return out

    @cached_property
    def edge_by_switch(self):
        return {sid: (a, b) for sid, a, b in self.edges}

    @cached_property
    def block_of_source(self):
        out = {}
        for b in self.blocks:
            for g in b.forming_capable_sources:
                out[g] = b.id
        return out

    @cached_property
    def total_pd(self):
        return sum(b.total_pd for b in self.blocks)

    @cached_property
    def total_svi(self):
        return sum(b.total_svi for b in self.blocks)

    @cached_property
    def total_block_risk(self):
        return sum(b.risk for b in self.blocks)


@dataclass(frozen=True)
class Island:
    """Blocks joined by closed switches; energized iff a forming source is set."""

    block_ids: frozenset
    closed_switches: tuple
    forming_source: str | None = None

    @property
    def energized(self):
        return self.forming_source is not None


@dataclass(frozen=True)
class IslandDecomposition:
    """Result of islands_for: the islands plus an infeasibility marker."""

    islands: tuple
    infeasible_reason: str | None = None

    @property
    def feasible(self):
        return self.infeasible_reason is None


def identify_blocks(net, component_risk=None):
    """Partition the feeder into load blocks and build the switch graph.

    Components are computed over buses with lines and transformers as edges
    and every switch removed.  Blocks are numbered 1..n ordered by their
    smallest contained bus id, which makes the numbering invariant under
    permutation of the input element order.

    ``component_risk`` maps line/bus ids to a wildfire risk index; the block
    risk is the maximum over all contained lines and buses (0 when absent).
    """
    risk = dict(component_risk) if component_risk else {}

    parent = {b.id: b.id for b in net.buses}

    def find(u):
        while parent[u] != u:
            parent[u] = parent[parent[u]]
            u = parent[u]
        return u

    for _, u, v in net.non_switch_edges():
        parent[find(u)] = find(v)

    groups = {}
    for b in net.buses:
        groups.setdefault(find(b.id), set()).add(b.id)

    ordered = sorted(groups.values(), key=lambda g: min(g))
    substation_bus = net.substation_bus.id

    blocks = []
    for idx, bus_set in enumerate(ordered, start=1):
        loads = [d for bus in sorted(bus_set) for d in net.loads_at[bus]]
        formers = sorted(
            g.id
            for bus in bus_set
            for g in net.sources_at[bus]
            if g.can_grid_form
        )
        block_lines = [l for l in net.lines if l.from_bus in bus_set]
        rho = 0.0
        for l in block_lines:
            rho = max(rho, risk.get(l.id, 0.0))
        for bus in bus_set:
            rho = max(rho, risk.get(bus, 0.0))
        blocks.append(
            LoadBlock(
                id=idx,
                bus_ids=frozenset(bus_set),
                total_pd=sum(d.total_pd for d in loads),
                total_svi=sum(d.svi for d in loads),
                risk=rho,
                contains_substation=substation_bus in bus_set,
                forming_capable_sources=tuple(formers),
            )
        )

    block_of = {}
    for blk in blocks:
        for bus in blk.bus_ids:
            block_of[bus] = blk.id

    edges = []
    for s in net.switches:
        a, b = block_of[s.from_bus], block_of[s.to_bus]
        if a == b:
            raise TopologyError(
                f"switch {s.id}: both endpoints fall in block {a}; "
                "closing it would create an intra-block cycle"
            )
        edges.append((s.id, min(a, b), max(a, b)))

    return BlockGraph(blocks=tuple(blocks), edges=tuple(edges))


def _closed_set(switch_states, bg):
    if isinstance(switch_states, (set, frozenset)):
        closed = set(switch_states)
    else:
        closed = set()
        for sid, state in switch_states.items():
            if state in ("closed", True, 1):
                closed.add(sid)
            elif state in ("open", False, 0):
                continue
            else:
                raise ValueError(f"switch {sid}: state must be 'open' or 'closed'")
    unknown = closed - set(bg.edge_by_switch)
    if unknown:
        raise ValueError(f"unknown switch id(s): {sorted(unknown)}")
    return closed


def islands_for(bg, switch_states, forming):
    """Decompose the block graph into islands for a switch/inverter choice.

    ``switch_states`` maps switch id to "open"/"closed" (a plain set of
    closed switch ids is also accepted).  ``forming`` is the set of source
    ids operating grid-forming; every entry must be a forming-capable source
    of some block.  An island's ``forming_source`` is set when it contains
    exactly one forming source; islands with none stay de-energized, and a
    configuration with two or more forming sources in one island -- or whose
    closed switches close a cycle -- is returned marked infeasible.
    """
    forming = set(forming)
    for g in forming:
        if g not in bg.block_of_source:
            raise ValueError(f"forming source {g!r} unknown or not forming-capable")

    closed = _closed_set(switch_states, bg)

    parent = {b.id: b.id for b in bg.blocks}

    def find(u):
        while parent[u] != u:
            parent[u] = parent[parent[u]]
            u = parent[u]
        return u

    for sid in sorted(closed):
        a, b = bg.edge_by_switch[sid]
        ra, rb = find(a), find(b)
        if ra == rb:
            return IslandDecomposition(
                islands=(),
                infeasible_reason=f"closed switch {sid} creates a cycle of blocks",
            )
        parent[ra] = rb

    groups = {}
    for b in bg.blocks:
        groups.setdefault(find(b.id), set()).add(b.id)

    islands = []
    for members in sorted(groups.values(), key=min):
        inside = [sid for sid in sorted(closed) if bg.edge_by_switch[sid][0] in members]
        formers = sorted(
            g
            for bid in members
            for g in bg.by_id[bid].forming_capable_sources
            if g in forming
        )
        if len(formers) > 1:
            return IslandDecomposition(
                islands=(),
                infeasible_reason=(
                    f"island {sorted(members)} contains {len(formers)} forming sources"
                ),
            )
        islands.append(
            Island(
                block_ids=frozenset(members),
                closed_switches=tuple(inside),
                forming_source=formers[0] if formers else None,
            )
        )

    return IslandDecomposition(islands=tuple(islands))

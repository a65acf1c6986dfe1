"""Seeded random fixture generation for tests and the CLI.

Random cases follow the same value ranges as the bundled feeder: block and
bus risks drawn from [0, 150], switch risks from [0, 100], vulnerability
weights from [0, 10].  Every bus id embeds its block index so canonical
block numbering matches the construction order.
"""

import csv
import json
import random

from .blocks import identify_blocks
from .hazards import RiskTable, SviTable
from .model import (
    Bus,
    DistributedSource,
    LineSegment,
    LoadPoint,
    NetworkModel,
    SwitchElement,
    network_to_dict,
)
from .problem import Objective, Regime, build_instance

_ABC = ("a", "b", "c")
_PHASE_CHOICES = [_ABC, _ABC, _ABC, ("a",), ("a", "b")]


def _impedance(rng, phases):
    n = len(phases)
    r = [[0.0] * n for _ in range(n)]
    x = [[0.0] * n for _ in range(n)]
    for i in range(n):
        r[i][i] = rng.uniform(0.01, 0.08)
        x[i][i] = r[i][i] * rng.uniform(1.5, 2.5)
    for i in range(n):
        for j in range(i + 1, n):
            r[i][j] = r[j][i] = r[i][i] * rng.uniform(0.2, 0.4)
            x[i][j] = x[j][i] = x[i][i] * rng.uniform(0.2, 0.4)
    return r, x


def _spread(total, phases, rng):
    weights = [rng.uniform(0.5, 1.5) for _ in phases]
    scale = total / sum(weights)
    return tuple(round(w * scale, 3) for w in weights)


def random_network(seed, max_blocks=5, max_switches=4):
    """Small random multi-block feeder plus risk and SVI tables.

    Returns (net, risk_table, svi_table); switch risks are stored on the
    switch elements and repeated in the risk table.
    """
    rng = random.Random(seed)
    n_blocks = rng.randint(2, max_blocks)
    n_switches = rng.randint(n_blocks - 1, max(n_blocks - 1, min(max_switches, n_blocks + 1)))

    buses, lines, loads, sources, switches = [], [], [], [], []
    risk, svi = {}, {}
    block_phases = {}
    first_bus = {}

    for blk in range(1, n_blocks + 1):
        phases = rng.choice(_PHASE_CHOICES)
        block_phases[blk] = phases
        two_buses = rng.random() < 0.4
        b0 = f"b{blk}0"
        first_bus[blk] = b0
        buses.append(Bus(id=b0, phases=phases, vmin=0.9, vmax=1.1, is_substation=blk == 1))
        if rng.random() < 0.5:
            risk[b0] = round(rng.uniform(0.0, 150.0), 1)
        if two_buses:
            b1 = f"b{blk}1"
            buses.append(Bus(id=b1, phases=phases, vmin=0.9, vmax=1.1))
            r, x = _impedance(rng, phases)
            lid = f"ln{blk}"
            lines.append(
                LineSegment(
                    id=lid, from_bus=b0, to_bus=b1, phases=phases, r=r, x=x, s_max=3000.0
                )
            )
            risk[lid] = round(rng.uniform(0.0, 150.0), 1)

        total = round(rng.uniform(0.0, 120.0), 1)
        pd = _spread(total, phases, rng)
        loads.append(
            LoadPoint(
                id=f"d{blk}",
                bus=b0,
                phases=phases,
                pd=pd,
                qd=tuple(round(v * 0.3, 3) for v in pd),
                svi=round(rng.uniform(0.0, 10.0), 2),
            )
        )
        svi[f"d{blk}"] = loads[-1].svi

        if blk == 1:
            sources.append(
                DistributedSource(
                    id="sub",
                    bus=b0,
                    phases=phases,
                    pmax=tuple(1000.0 for _ in phases),
                    qmin=tuple(-1000.0 for _ in phases),
                    qmax=tuple(1000.0 for _ in phases),
                    can_grid_form=True,
                    kind="substation_source",
                )
            )
        elif rng.random() < 0.75:
            scale = rng.uniform(0.5, 1.8)
            pmax = tuple(round(max(v * scale, 1.0), 2) for v in pd)
            sources.append(
                DistributedSource(
                    id=f"g{blk}",
                    bus=b0,
                    phases=phases,
                    pmax=pmax,
                    qmin=tuple(-max(v, 1.0) for v in pmax),
                    qmax=tuple(max(v, 1.0) for v in pmax),
                    can_grid_form=rng.random() < 0.75,
                    kind=rng.choice(("solar", "storage", "generator")),
                )
            )

    pairs = []
    for blk in range(2, n_blocks + 1):
        pairs.append((rng.randint(1, blk - 1), blk))
    while len(pairs) < n_switches:
        a = rng.randint(1, n_blocks)
        b = rng.randint(1, n_blocks)
        if a != b:
            pairs.append((min(a, b), max(a, b)))

    for i, (a, b) in enumerate(pairs, start=1):
        shared = tuple(p for p in _ABC if p in block_phases[a] and p in block_phases[b])
        sid = f"sw{i}"
        switches.append(
            SwitchElement(
                id=sid,
                from_bus=first_bus[a],
                to_bus=first_bus[b],
                phases=shared,
                risk=round(rng.uniform(0.0, 100.0), 1),
                s_max=3000.0,
            )
        )
        risk[sid] = switches[-1].risk

    for l in lines:
        risk.setdefault(l.id, 0.0)

    net = NetworkModel(
        base_kv=4.16,
        base_kva=1000.0,
        buses=tuple(buses),
        lines=tuple(lines),
        switches=tuple(switches),
        loads=tuple(loads),
        sources=tuple(sources),
    )
    return net, RiskTable(values=risk), SviTable(values=svi)


def random_instance(seed, objective=None, regime=None, threshold=None, **net_kwargs):
    """Random ProblemInstance; unspecified choices are drawn from the seed."""
    rng = random.Random(f"inst:{seed}")
    net, rt, st = random_network(seed, **net_kwargs)
    bg = identify_blocks(net, rt.values)
    objective = objective if objective is not None else rng.choice(list(Objective))
    regime = regime if regime is not None else rng.choice(list(Regime))
    threshold = threshold if threshold is not None else round(rng.uniform(0.0, 1.0), 3)
    return build_instance(net, bg, objective, regime, threshold)


def random_radial_network(seed, max_buses=10):
    """Single-block radial feeder (no switches) for power-flow exercises."""
    rng = random.Random(f"radial:{seed}")
    n = rng.randint(2, max_buses)
    buses = [Bus(id="n00", phases=_ABC, vmin=0.9, vmax=1.1, is_substation=True)]
    lines = []
    loads = []
    for i in range(1, n):
        parent = rng.randint(0, i - 1)
        parent_phases = buses[parent].phases
        phases = parent_phases if rng.random() < 0.7 else tuple(
            p for p in parent_phases if p == "a" or rng.random() < 0.6
        )
        if not phases:
            phases = ("a",)
        buses.append(Bus(id=f"n{i:02d}", phases=phases, vmin=0.9, vmax=1.1))
        r, x = _impedance(rng, phases)
        lines.append(
            LineSegment(
                id=f"e{i:02d}",
                from_bus=buses[parent].id,
                to_bus=buses[i].id,
                phases=phases,
                r=r,
                x=x,
                s_max=5000.0,
            )
        )
        if rng.random() < 0.8:
            pd = _spread(rng.uniform(0.0, 150.0), phases, rng)
            loads.append(
                LoadPoint(
                    id=f"d{i:02d}",
                    bus=buses[i].id,
                    phases=phases,
                    pd=pd,
                    qd=tuple(round(v * rng.uniform(0.1, 0.4), 3) for v in pd),
                )
            )
    source = DistributedSource(
        id="sub",
        bus="n00",
        phases=_ABC,
        pmax=(3000.0, 3000.0, 3000.0),
        qmin=(-3000.0, -3000.0, -3000.0),
        qmax=(3000.0, 3000.0, 3000.0),
        can_grid_form=True,
        kind="substation_source",
    )
    return NetworkModel(
        base_kv=4.16,
        base_kva=1000.0,
        buses=tuple(buses),
        lines=tuple(lines),
        loads=tuple(loads),
        sources=(source,),
    )


def write_case(dest, seed, max_blocks=5, max_switches=4):
    """Write network.json / risk.csv / svi.csv for a random case."""
    net, rt, st = random_network(seed, max_blocks=max_blocks, max_switches=max_switches)
    dest.mkdir(parents=True, exist_ok=True)
    with open(dest / "network.json", "w", encoding="utf-8") as fh:
        json.dump(network_to_dict(net), fh, indent=2)
        fh.write("\n")
    for name, table in (("risk.csv", rt.values), ("svi.csv", st.values)):
        with open(dest / name, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["id", "value"])
            for cid in sorted(table):
                writer.writerow([cid, table[cid]])
    return net

"""Secondary-circuit feeder reduction.

Removing a distribution transformer splits off the secondary sub-graph it
serves.  Reduction sums the real and reactive power of all secondary loads
(and of all secondary solar units) per phase and reassigns the aggregates to
the bus on the primary side, keeping the same phase connections.  Storage
units and other generators are not aggregated: they are reflected to the
primary-side bus unchanged.  SVI weights of aggregated loads are summed onto
the aggregate load, so total demand, vulnerability mass, and storage count
are invariant under reduction.
"""

import warnings
from dataclasses import replace

from .model import DistributedSource, LoadPoint, NetworkDataError


def secondary_buses(net, xfmr):
    """Bus ids cut off by removing ``xfmr``, or None if removal does not split.

    The side holding the substation is always treated as primary, so the
    returned secondary never contains it.
    """
    adj = {b.id: [] for b in net.buses}
    for _, u, v in net.non_switch_edges():
        adj[u].append(v)
        adj[v].append(u)
    for s in net.switches:
        adj[s.from_bus].append(s.to_bus)
        adj[s.to_bus].append(s.from_bus)
    # drop one instance of the transformer edge itself
    adj[xfmr.from_bus].remove(xfmr.to_bus)
    adj[xfmr.to_bus].remove(xfmr.from_bus)

    def component(start):
        seen = {start}
        stack = [start]
        while stack:
            u = stack.pop()
            for w in adj[u]:
                if w not in seen:
                    seen.add(w)
                    stack.append(w)
        return seen

    side_from = component(xfmr.from_bus)
    if xfmr.to_bus in side_from:
        return None  # secondary loops back; removal does not disconnect
    if net.substation_bus.id in side_from:
        return xfmr.from_bus, component(xfmr.to_bus)
    return xfmr.to_bus, side_from


def _sum_per_phase(elements, attr):
    """Union of phases and per-phase sums over a list of loads/sources."""
    phases = tuple(p for p in ("a", "b", "c") if any(p in e.phases for e in elements))
    sums = {p: 0.0 for p in phases}
    for e in elements:
        for p, v in zip(e.phases, getattr(e, attr)):
            sums[p] += v
    return phases, tuple(sums[p] for p in phases)


def reduce_feeder(net):
    """Collapse every distribution-transformer secondary onto its primary bus.

    Transformers whose removal does not disconnect the network are reported
    via a warning and retained.  Transformers with ``is_distribution_xfmr``
    False are left untouched.
    """
    current = net
    pending = [t.id for t in net.transformers if t.is_distribution_xfmr]
    progress = True
    while pending and progress:
        progress = False
        for tid in list(pending):
            xfmr = next(t for t in current.transformers if t.id == tid)
            split = secondary_buses(current, xfmr)
            if split is None:
                warnings.warn(
                    f"transformer {tid}: secondary loops back to the primary; retained",
                    stacklevel=2,
                )
                pending.remove(tid)
                continue
            primary_bus, secondary = split
            # nested secondaries: postpone until the inner transformer is gone
            if any(
                t.id != tid
                and t.id in pending
                and (t.from_bus in secondary or t.to_bus in secondary)
                for t in current.transformers
            ):
                continue
            current = _collapse(current, xfmr, primary_bus, secondary)
            pending.remove(tid)
            progress = True
    return current


def _collapse(net, xfmr, primary_bus, secondary):
    primary = net.bus_by_id[primary_bus]

    for s in net.switches:
        if s.from_bus in secondary or s.to_bus in secondary:
            raise NetworkDataError(
                f"transformer {xfmr.id}: switch {s.id} on the secondary side "
                "is not supported by feeder reduction"
            )

    sec_loads = [d for d in net.loads if d.bus in secondary]
    sec_solar = [g for g in net.sources if g.bus in secondary and g.kind == "solar"]
    sec_other = [g for g in net.sources if g.bus in secondary and g.kind != "solar"]

    new_loads = [d for d in net.loads if d.bus not in secondary]
    if sec_loads:
        phases, pd = _sum_per_phase(sec_loads, "pd")
        _, qd = _sum_per_phase(sec_loads, "qd")
        if not set(phases) <= set(primary.phases):
            raise NetworkDataError(
                f"transformer {xfmr.id}: aggregated load phases {phases} "
                f"not carried by primary bus {primary_bus}"
            )
        new_loads.append(
            LoadPoint(
                id=f"{xfmr.id}_load",
                bus=primary_bus,
                phases=phases,
                pd=pd,
                qd=qd,
                svi=sum(d.svi for d in sec_loads),
            )
        )

    new_sources = [g for g in net.sources if g.bus not in secondary]
    if sec_solar:
        phases, pmax = _sum_per_phase(sec_solar, "pmax")
        _, qmin = _sum_per_phase(sec_solar, "qmin")
        _, qmax = _sum_per_phase(sec_solar, "qmax")
        new_sources.append(
            DistributedSource(
                id=f"{xfmr.id}_pv",
                bus=primary_bus,
                phases=phases,
                pmax=pmax,
                qmin=qmin,
                qmax=qmax,
                can_grid_form=any(g.can_grid_form for g in sec_solar),
                kind="solar",
            )
        )
    for g in sec_other:
        # storage (and any non-solar generation) is reflected, not aggregated
        if not set(g.phases) <= set(primary.phases):
            raise NetworkDataError(
                f"transformer {xfmr.id}: source {g.id} phases {g.phases} "
                f"not carried by primary bus {primary_bus}"
            )
        new_sources.append(replace(g, bus=primary_bus))

    return net.replace(
        buses=tuple(b for b in net.buses if b.id not in secondary),
        lines=tuple(
            l for l in net.lines if l.from_bus not in secondary and l.to_bus not in secondary
        ),
        loads=tuple(new_loads),
        sources=tuple(new_sources),
        transformers=tuple(t for t in net.transformers if t.id != xfmr.id),
    )

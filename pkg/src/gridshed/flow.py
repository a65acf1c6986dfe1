"""Linear three-phase dispatch: sensitivity matrices and the dispatch LP.

The power-flow relation ties the squared voltage magnitude W = V^2 of
adjacent buses to per-phase real/reactive line flows through
impedance-derived sensitivity matrices: for an edge from bus f to bus t
carrying per-phase flows P, Q (measured f -> t),

    W_t = W_f + M_P @ P + M_Q @ Q

with M_P having -2 r on the diagonal and r +/- sqrt(3) x off-diagonal
(sign fixed by the ordered phase pair), and M_Q the analogous pattern with
r and x exchanged and the opposite off-diagonal sign.

Dispatch for a fixed topology/energization is a pure feasibility LP: loads
of energized blocks are served at nominal demand, sources dispatch within
their per-phase limits, closed energized switches and transformers tie
voltages with zero impedance, thermal limits are enforced as a per-phase
box |P| <= s_max/sqrt(2), |Q| <= s_max/sqrt(2) inscribed in the apparent
power circle, and de-energized elements carry exactly zero flow and
injection with relaxed voltage.  All quantities inside the LP are per-unit
(per-phase power base = base_kva / 3).
"""

import math
from dataclasses import dataclass

import numpy as np

from .lp import LpProblem, solve_lp

SQRT3 = math.sqrt(3.0)
SQRT2 = math.sqrt(2.0)

# substation voltage setpoint: flat 1.0 pu on every phase
W_SUBSTATION = 1.0

_CYCLIC = {("a", "b"), ("b", "c"), ("c", "a")}


def build_sensitivity_matrices(r, x, phases):
    """Sensitivity matrices (M_P, M_Q) for per-unit impedance matrices.

    ``r`` and ``x`` are symmetric matrices over the edge's own phase set
    (canonical order).  Off-diagonal signs follow the ordered global phase
    pair, so a two-phase {a, c} line keeps the (a, c)/(c, a) pattern.
    """
    r = np.asarray(r, dtype=float)
    x = np.asarray(x, dtype=float)
    n = len(phases)
    if r.shape != (n, n) or x.shape != (n, n):
        raise ValueError(f"impedance matrices must be {n}x{n} for phases {phases}")
    if not np.array_equal(r, r.T) or not np.array_equal(x, x.T):
        raise ValueError("impedance matrices must be symmetric")

    mp = np.zeros((n, n))
    mq = np.zeros((n, n))
    for i, pi in enumerate(phases):
        for j, pj in enumerate(phases):
            if i == j:
                mp[i, j] = -2.0 * r[i, j]
                mq[i, j] = -2.0 * x[i, j]
            elif (pi, pj) in _CYCLIC:
                mp[i, j] = r[i, j] - SQRT3 * x[i, j]
                mq[i, j] = x[i, j] + SQRT3 * r[i, j]
            else:
                mp[i, j] = r[i, j] + SQRT3 * x[i, j]
                mq[i, j] = x[i, j] - SQRT3 * r[i, j]
    return mp, mq


def z_base_ohm(net):
    """Per-phase impedance base in ohms."""
    return net.base_kv**2 * 1000.0 / net.base_kva


def s_phase_base_kw(net):
    """Per-phase power base in kW."""
    return net.base_kva / 3.0


def line_sensitivity(net, line):
    """M_P, M_Q of a line with its ohmic impedances converted to per-unit."""
    zb = z_base_ohm(net)
    r = np.asarray(line.r, dtype=float) / zb
    x = np.asarray(line.x, dtype=float) / zb
    return build_sensitivity_matrices(r, x, line.phases)


@dataclass(frozen=True)
class DispatchSolution:
    """A feasible operating point (kW / kvar / pu^2), or an infeasible marker."""

    feasible: bool
    pg: dict | None = None
    qg: dict | None = None
    flow_p: dict | None = None
    flow_q: dict | None = None
    w: dict | None = None


def _edge_records(net):
    """Uniform edge view: (id, from, to, phases, kind, s_max, element)."""
    out = []
    for l in net.lines:
        out.append((l.id, l.from_bus, l.to_bus, l.phases, "line", l.s_max, l))
    for s in net.switches:
        out.append((s.id, s.from_bus, s.to_bus, s.phases, "switch", s.s_max, s))
    for t in net.transformers:
        phases = tuple(
            p
            for p in net.bus_by_id[t.from_bus].phases
            if p in net.bus_by_id[t.to_bus].phases
        )
        out.append((t.id, t.from_bus, t.to_bus, phases, "transformer", None, t))
    return out


def _build_lp(net, bg, energized_blocks, closed_switches, bus_subset=None):
    """Dispatch LP over ``bus_subset`` (default: the whole system)."""
    sbase = s_phase_base_kw(net)
    energized_blocks = set(energized_blocks)
    closed_switches = set(closed_switches)
    buses = [b for b in net.buses if bus_subset is None or b.id in bus_subset]
    bus_ids = {b.id for b in buses}

    prob = LpProblem()
    w_idx, p_idx, q_idx, pg_idx, qg_idx = {}, {}, {}, {}, {}

    def bus_energized(bid):
        return bg.block_of_bus[bid] in energized_blocks

    for b in buses:
        on = bus_energized(b.id)
        for ph in b.phases:
            if on and b.is_substation:
                lo = hi = W_SUBSTATION
            elif on:
                lo, hi = b.vmin**2, b.vmax**2
            else:
                lo, hi = 0.0, None  # relaxed
            w_idx[(b.id, ph)] = prob.add_var(f"w[{b.id},{ph}]", lo, hi)

    edges = [e for e in _edge_records(net) if e[1] in bus_ids and e[2] in bus_ids]
    live = {}
    for eid, f, t, phases, kind, smax, _ in edges:
        if kind == "switch":
            on = eid in closed_switches and bus_energized(f) and bus_energized(t)
        else:
            on = bus_energized(f)
        live[eid] = on
        cap = None if smax is None else smax / SQRT2 / sbase
        for ph in phases:
            lo, hi = ((-cap if cap is not None else None), cap) if on else (0.0, 0.0)
            p_idx[(eid, ph)] = prob.add_var(f"p[{eid},{ph}]", lo, hi)
            q_idx[(eid, ph)] = prob.add_var(f"q[{eid},{ph}]", lo, hi)

    for g in net.sources:
        if g.bus not in bus_ids:
            continue
        on = bus_energized(g.bus)
        for ph, pmax, qmin, qmax in zip(g.phases, g.pmax, g.qmin, g.qmax):
            if on:
                pg_idx[(g.id, ph)] = prob.add_var(f"pg[{g.id},{ph}]", 0.0, pmax / sbase)
                qg_idx[(g.id, ph)] = prob.add_var(
                    f"qg[{g.id},{ph}]", qmin / sbase, qmax / sbase
                )
            else:
                pg_idx[(g.id, ph)] = prob.add_var(f"pg[{g.id},{ph}]", 0.0, 0.0)
                qg_idx[(g.id, ph)] = prob.add_var(f"qg[{g.id},{ph}]", 0.0, 0.0)

    # voltage coupling on energized edges
    for eid, f, t, phases, kind, _, element in edges:
        if not live[eid]:
            continue
        if kind == "line":
            mp, mq = line_sensitivity(net, element)
            for i, ph in enumerate(phases):
                row = {w_idx[(t, ph)]: 1.0, w_idx[(f, ph)]: -1.0}
                for j, ph2 in enumerate(phases):
                    if mp[i, j]:
                        row[p_idx[(eid, ph2)]] = row.get(p_idx[(eid, ph2)], 0.0) - mp[i, j]
                    if mq[i, j]:
                        row[q_idx[(eid, ph2)]] = row.get(q_idx[(eid, ph2)], 0.0) - mq[i, j]
                prob.add_eq(row, 0.0)
        else:
            # switches and transformers tie voltages with zero impedance
            for ph in phases:
                prob.add_eq({w_idx[(t, ph)]: 1.0, w_idx[(f, ph)]: -1.0}, 0.0)

    # per-bus, per-phase power balance
    for b in buses:
        on = bus_energized(b.id)
        for ph in b.phases:
            prow, qrow = {}, {}
            for eid, f, t, phases, _, _, _ in edges:
                if ph not in phases:
                    continue
                if t == b.id:
                    prow[p_idx[(eid, ph)]] = prow.get(p_idx[(eid, ph)], 0.0) + 1.0
                    qrow[q_idx[(eid, ph)]] = qrow.get(q_idx[(eid, ph)], 0.0) + 1.0
                if f == b.id:
                    prow[p_idx[(eid, ph)]] = prow.get(p_idx[(eid, ph)], 0.0) - 1.0
                    qrow[q_idx[(eid, ph)]] = qrow.get(q_idx[(eid, ph)], 0.0) - 1.0
            for g in net.sources_at[b.id]:
                if ph in g.phases:
                    prow[pg_idx[(g.id, ph)]] = 1.0
                    qrow[qg_idx[(g.id, ph)]] = 1.0
            pd = qd = 0.0
            if on:
                for d in net.loads_at[b.id]:
                    if ph in d.phases:
                        k = d.phases.index(ph)
                        pd += d.pd[k]
                        qd += d.qd[k]
            prob.add_eq(prow, pd / sbase)
            prob.add_eq(qrow, qd / sbase)

    prob.tags = {
        "w": w_idx,
        "p": p_idx,
        "q": q_idx,
        "pg": pg_idx,
        "qg": qg_idx,
        "sbase": sbase,
    }
    return prob


def assemble_dispatch_lp(net, bg, islands, energized_blocks):
    """Whole-system dispatch LP for an island decomposition and energization.

    ``energized_blocks`` must be a union of whole islands (energization is
    island-level; there is no per-block opt-out inside an island).
    """
    energized = set(energized_blocks)
    closed = set()
    for isl in islands:
        closed.update(isl.closed_switches)
        inside = isl.block_ids & energized
        if inside and inside != isl.block_ids:
            raise ValueError(
                f"energized blocks {sorted(inside)} split island {sorted(isl.block_ids)}"
            )
    return _build_lp(net, bg, energized, closed)


def extract_dispatch(net, prob, sol):
    """Convert an LP solution back to kW/kvar (and pu^2 voltages)."""
    if not sol.optimal:
        return DispatchSolution(feasible=False)
    sbase = prob.tags["sbase"]
    x = sol.x
    return DispatchSolution(
        feasible=True,
        pg={k: x[i] * sbase for k, i in prob.tags["pg"].items()},
        qg={k: x[i] * sbase for k, i in prob.tags["qg"].items()},
        flow_p={k: x[i] * sbase for k, i in prob.tags["p"].items()},
        flow_q={k: x[i] * sbase for k, i in prob.tags["q"].items()},
        w={k: x[i] for k, i in prob.tags["w"].items()},
    )


def solve_dispatch(net, bg, islands, energized_blocks):
    """Assemble and solve the dispatch LP; returns a DispatchSolution."""
    prob = assemble_dispatch_lp(net, bg, islands, energized_blocks)
    return extract_dispatch(net, prob, solve_lp(prob))


def dispatch_residuals(net, bg, energized_blocks, closed_switches, dispatch):
    """Max per-unit residuals of the voltage and balance relations.

    Returns (voltage_residual, balance_residual) evaluated on energized
    elements only; both should sit below 1e-7 for any feasible dispatch.
    """
    sbase = s_phase_base_kw(net)
    energized = set(energized_blocks)
    closed = set(closed_switches)
    records = _edge_records(net)
    v_res = 0.0
    b_res = 0.0

    def bus_on(bid):
        return bg.block_of_bus[bid] in energized

    for eid, f, t, phases, kind, _, element in records:
        if kind == "switch":
            on = eid in closed and bus_on(f) and bus_on(t)
        else:
            on = bus_on(f)
        if not on:
            continue
        if kind == "line":
            mp, mq = line_sensitivity(net, element)
            pvec = np.array([dispatch.flow_p[(eid, ph)] / sbase for ph in phases])
            qvec = np.array([dispatch.flow_q[(eid, ph)] / sbase for ph in phases])
            for i, ph in enumerate(phases):
                lhs = dispatch.w[(t, ph)] - dispatch.w[(f, ph)]
                rhs = float(mp[i] @ pvec + mq[i] @ qvec)
                v_res = max(v_res, abs(lhs - rhs))
        else:
            for ph in phases:
                v_res = max(v_res, abs(dispatch.w[(t, ph)] - dispatch.w[(f, ph)]))

    for b in net.buses:
        for ph in b.phases:
            acc_p = acc_q = 0.0
            for eid, f, t, phases, _, _, _ in records:
                if ph not in phases:
                    continue
                if t == b.id:
                    acc_p += dispatch.flow_p[(eid, ph)]
                    acc_q += dispatch.flow_q[(eid, ph)]
                if f == b.id:
                    acc_p -= dispatch.flow_p[(eid, ph)]
                    acc_q -= dispatch.flow_q[(eid, ph)]
            for g in net.sources_at[b.id]:
                if ph in g.phases:
                    acc_p += dispatch.pg[(g.id, ph)]
                    acc_q += dispatch.qg[(g.id, ph)]
            if bus_on(b.id):
                for d in net.loads_at[b.id]:
                    if ph in d.phases:
                        k = d.phases.index(ph)
                        acc_p -= d.pd[k]
                        acc_q -= d.qd[k]
            b_res = max(b_res, abs(acc_p) / sbase, abs(acc_q) / sbase)
    return v_res, b_res


class DispatchOracle:
    """Cached island-level dispatch feasibility checks.

    Feasibility of an island depends only on its blocks and the closed
    switches inside it (the choice of forming source never changes the LP),
    so results are memoized on that pair.  The oracle holds only immutable
    inputs plus the cache; reads are pure.
    """

    def __init__(self, net, bg):
        self.net = net
        self.bg = bg
        self._cache = {}

    def island_feasible(self, block_ids, closed_switches):
        key = (frozenset(block_ids), frozenset(closed_switches))
        hit = self._cache.get(key)
        if hit is None:
            buses = set()
            for bid in key[0]:
                buses |= self.bg.by_id[bid].bus_ids
            prob = _build_lp(self.net, self.bg, key[0], key[1], bus_subset=buses)
            hit = solve_lp(prob).optimal
            self._cache[key] = hit
        return hit

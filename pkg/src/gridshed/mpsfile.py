"""Complete MILP emission in MPS fixed format.

The exported model carries the full configuration problem for external
solvers: block/switch/inverter binaries (``zbl_<i>``, ``zsw_<id>``,
``zinv_<id>``), a single-commodity connectivity flow per forming-capable
source realizing microgrid connectivity, the forest cardinality row that
pins one forming source per energized island, big-M disjunctions that
activate the linear power-flow and operating limits only for energized
elements, the risk-budget row (RHS exactly threshold * total risk), and the
selected shed objective.

The objective row omits the constant part of the shed cost (the total
system coefficient); it is reported in the returned summary.  Section
layout follows the classic fixed-format column positions; all shipped
fixtures keep names within eight characters, and longer ids simply widen
their fields (whitespace-separated readers, including every mainstream
solver, accept this).
"""

from dataclasses import dataclass

from .flow import SQRT2, line_sensitivity, s_phase_base_kw
from .problem import shed_coefficient

W_MAX = 2.0  # relaxed upper bound on squared voltage, pu^2
W_SET = 1.0  # substation squared-voltage setpoint


@dataclass(frozen=True)
class ExportSummary:
    """Dimensions and key coefficients of a written MPS file."""

    path: str
    n_rows: int  # constraint rows, objective excluded
    n_cols: int
    n_binaries: int
    risk_rhs: float
    objective_constant: float


class _Builder:
    def __init__(self):
        self.rows = []  # (sense, name) sense in E/L/G
        self.row_names = set()
        self.cols = {}  # name -> list of (row, coeff)
        self.col_order = []
        self.integer = set()
        self.rhs = {}
        self.bounds = {}  # name -> (kind, value) kind in UP/LO/FX/BV/FR
        self.lower = {}

    def row(self, sense, name, rhs=None):
        if name in self.row_names:
            raise ValueError(f"duplicate row {name}")
        self.row_names.add(name)
        self.rows.append((sense, name))
        if rhs is not None and rhs != 0.0:
            self.rhs[name] = rhs

    def var(self, name, integer=False):
        if name not in self.cols:
            self.cols[name] = []
            self.col_order.append(name)
            if integer:
                self.integer.add(name)
        return name

    def put(self, row, var, coeff):
        if coeff != 0.0:
            self.cols[var].append((row, coeff))


def _fmt(value):
    return f"{value:.12g}"


def _write(builder, path, name, objective_rhs):
    lines = [f"NAME          {name}", "ROWS", " N  COST"]
    for sense, rname in builder.rows:
        lines.append(f" {sense}  {rname}")
    lines.append("COLUMNS")
    in_int = False
    marker_idx = 0
    for col in builder.col_order:
        is_int = col in builder.integer
        if is_int and not in_int:
            lines.append(
                f"    MARK{marker_idx:04d}  'MARKER'                 'INTORG'"
            )
            marker_idx += 1
            in_int = True
        elif not is_int and in_int:
            lines.append(
                f"    MARK{marker_idx:04d}  'MARKER'                 'INTEND'"
            )
            marker_idx += 1
            in_int = False
        for row, coeff in builder.cols[col]:
            lines.append(f"    {col:<10}{row:<10}{_fmt(coeff)}")
    if in_int:
        lines.append(f"    MARK{marker_idx:04d}  'MARKER'                 'INTEND'")
    lines.append("RHS")
    if objective_rhs:
        lines.append(f"    RHS       COST      {_fmt(objective_rhs)}")
    for rname, value in builder.rhs.items():
        lines.append(f"    RHS       {rname:<10}{_fmt(value)}")
    lines.append("BOUNDS")
    for col in builder.col_order:
        for kind, value in builder.bounds.get(col, ()):
            if kind in ("BV", "FR", "MI"):
                lines.append(f" {kind} BND       {col}")
            else:
                lines.append(f" {kind} BND       {col:<10}{_fmt(value)}")
    lines.append("ENDATA")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def export_milp(inst, path, name="GRIDSHED"):
    """Write the instance as a MILP in MPS format; returns an ExportSummary."""
    bg = inst.bg
    net = inst.net
    sbase = s_phase_base_kw(net)
    b = _Builder()
    n_blocks = len(bg.blocks)
    flow_cap = float(n_blocks)

    # binaries -----------------------------------------------------------
    zbl = {blk.id: b.var(f"zbl_{blk.id}", integer=True) for blk in bg.blocks}
    zsw = {sid: b.var(f"zsw_{sid}", integer=True) for sid in inst.switch_ids}
    formers = []  # (source id, block id)
    sub_id = net.substation_source.id if net.substation_source else None
    for blk in bg.blocks:
        for g in blk.forming_capable_sources:
            formers.append((g, blk.id))
    zinv = {g: b.var(f"zinv_{g}", integer=True) for g, _ in formers}

    for blk in bg.blocks:
        b.bounds.setdefault(zbl[blk.id], []).append(("BV", None))
    for sid in inst.switch_ids:
        if sid in inst.forced_open or len(inst.control.switch_domain(sid)) == 1:
            fixed = 0 if sid in inst.forced_open else inst.control.switch_domain(sid)[0]
            b.bounds.setdefault(zsw[sid], []).append(("FX", float(fixed)))
        else:
            b.bounds.setdefault(zsw[sid], []).append(("BV", None))
    for g, blk_id in formers:
        if g == sub_id:
            b.bounds.setdefault(zinv[g], []).append(
                ("FX", 1.0 if inst.substation_available else 0.0)
            )
        else:
            dom = inst.control.inverter_domain(g, blk_id)
            if len(dom) == 1:
                b.bounds.setdefault(zinv[g], []).append(("FX", float(dom[0])))
            else:
                b.bounds.setdefault(zinv[g], []).append(("BV", None))

    # objective ----------------------------------------------------------
    coefs = {blk.id: shed_coefficient(blk, inst.objective) for blk in bg.blocks}
    constant = sum(coefs.values())
    for blk in bg.blocks:
        b.put("COST", zbl[blk.id], -coefs[blk.id])

    # risk budget --------------------------------------------------------
    b.row("L", "risk", inst.policy.budget)
    for blk in bg.blocks:
        if blk.risk:
            b.put("risk", zbl[blk.id], blk.risk)
    if inst.policy.include_switch_risk:
        for s in net.switches:
            if s.risk:
                b.put("risk", zsw[s.id], s.risk)

    # topology: endpoints, forest cardinality, connectivity flow ---------
    for sid, a, c in bg.edges:
        b.row("L", f"se1_{sid}")
        b.put(f"se1_{sid}", zsw[sid], 1.0)
        b.put(f"se1_{sid}", zbl[a], -1.0)
        b.row("L", f"se2_{sid}")
        b.put(f"se2_{sid}", zsw[sid], 1.0)
        b.put(f"se2_{sid}", zbl[c], -1.0)

    y = {}
    h = {}
    for g, blk_id in formers:
        y[g] = b.var(f"y_{g}")
        h[g] = b.var(f"h_{g}")
        b.bounds.setdefault(y[g], []).append(("UP", 1.0))
        b.bounds.setdefault(h[g], []).append(("UP", flow_cap))
        b.row("L", f"ya_{g}")
        b.put(f"ya_{g}", y[g], 1.0)
        b.put(f"ya_{g}", zinv[g], -1.0)
        b.row("L", f"yb_{g}")
        b.put(f"yb_{g}", y[g], 1.0)
        b.put(f"yb_{g}", zbl[blk_id], -1.0)
        b.row("L", f"yc_{g}", 1.0)
        b.put(f"yc_{g}", zinv[g], 1.0)
        b.put(f"yc_{g}", zbl[blk_id], 1.0)
        b.put(f"yc_{g}", y[g], -1.0)
        b.row("L", f"hu_{g}")
        b.put(f"hu_{g}", h[g], 1.0)
        b.put(f"hu_{g}", y[g], -flow_cap)

    b.row("E", "forest")
    for sid in inst.switch_ids:
        b.put("forest", zsw[sid], 1.0)
    for blk in bg.blocks:
        b.put("forest", zbl[blk.id], -1.0)
    for g, _ in formers:
        b.put("forest", y[g], 1.0)

    f_vars = {}
    for sid, a, c in bg.edges:
        f_vars[sid] = b.var(f"f_{sid}")
        b.bounds.setdefault(f_vars[sid], []).append(("LO", -flow_cap))
        b.bounds.setdefault(f_vars[sid], []).append(("UP", flow_cap))
        b.row("L", f"cu_{sid}")
        b.put(f"cu_{sid}", f_vars[sid], 1.0)
        b.put(f"cu_{sid}", zsw[sid], -flow_cap)
        b.row("L", f"cl_{sid}")
        b.put(f"cl_{sid}", f_vars[sid], -1.0)
        b.put(f"cl_{sid}", zsw[sid], -flow_cap)
    for blk in bg.blocks:
        row = f"cb_{blk.id}"
        b.row("E", row)
        for sid, a, c in bg.edges:
            if c == blk.id:
                b.put(row, f_vars[sid], 1.0)
            if a == blk.id:
                b.put(row, f_vars[sid], -1.0)
        for g, blk_id in formers:
            if blk_id == blk.id:
                b.put(row, h[g], 1.0)
        b.put(row, zbl[blk.id], -1.0)

    # dispatch variables --------------------------------------------------
    w = {}
    for bus in net.buses:
        on_block = zbl[bg.block_of_bus[bus.id]]
        for ph in bus.phases:
            w[(bus.id, ph)] = b.var(f"w_{bus.id}_{ph}")
            b.bounds.setdefault(w[(bus.id, ph)], []).append(("UP", W_MAX))
            b.row("L", f"wub_{bus.id}_{ph}", W_MAX)
            b.put(f"wub_{bus.id}_{ph}", w[(bus.id, ph)], 1.0)
            b.put(f"wub_{bus.id}_{ph}", on_block, W_MAX - bus.vmax**2)
            b.row("L", f"wlb_{bus.id}_{ph}")
            b.put(f"wlb_{bus.id}_{ph}", w[(bus.id, ph)], -1.0)
            b.put(f"wlb_{bus.id}_{ph}", on_block, bus.vmin**2)
            if bus.is_substation:
                b.row("L", f"sbu_{ph}", W_MAX + W_SET)
                b.put(f"sbu_{ph}", w[(bus.id, ph)], 1.0)
                b.put(f"sbu_{ph}", on_block, W_MAX)
                b.row("L", f"sbl_{ph}", W_MAX - W_SET)
                b.put(f"sbl_{ph}", w[(bus.id, ph)], -1.0)
                b.put(f"sbl_{ph}", on_block, W_MAX)

    total_pu = (
        sum(d.total_pd for d in net.loads) + sum(g.total_pmax for g in net.sources)
    ) / sbase + 1.0

    p_vars, q_vars = {}, {}
    edge_meta = []
    for l in net.lines:
        cap = min(l.s_max / SQRT2 / sbase, total_pu)
        edge_meta.append((l.id, l.from_bus, l.to_bus, l.phases, "line", cap, l))
    for s in net.switches:
        cap = min(s.s_max / SQRT2 / sbase, total_pu)
        edge_meta.append((s.id, s.from_bus, s.to_bus, s.phases, "switch", cap, s))
    for t in net.transformers:
        phases = tuple(
            p
            for p in net.bus_by_id[t.from_bus].phases
            if p in net.bus_by_id[t.to_bus].phases
        )
        edge_meta.append((t.id, t.from_bus, t.to_bus, phases, "transformer", total_pu, t))

    for eid, fb, tb, phases, kind, cap, _ in edge_meta:
        gate = zsw[eid] if kind == "switch" else zbl[bg.block_of_bus[fb]]
        for ph in phases:
            p_vars[(eid, ph)] = b.var(f"p_{eid}_{ph}")
            q_vars[(eid, ph)] = b.var(f"q_{eid}_{ph}")
            for var, tag in ((p_vars[(eid, ph)], "p"), (q_vars[(eid, ph)], "q")):
                b.bounds.setdefault(var, []).append(("LO", -cap))
                b.bounds.setdefault(var, []).append(("UP", cap))
                b.row("L", f"{tag}u_{eid}_{ph}")
                b.put(f"{tag}u_{eid}_{ph}", var, 1.0)
                b.put(f"{tag}u_{eid}_{ph}", gate, -cap)
                b.row("L", f"{tag}l_{eid}_{ph}")
                b.put(f"{tag}l_{eid}_{ph}", var, -1.0)
                b.put(f"{tag}l_{eid}_{ph}", gate, -cap)

    # voltage coupling ----------------------------------------------------
    for eid, fb, tb, phases, kind, cap, element in edge_meta:
        if kind == "line":
            mp, mq = line_sensitivity(net, element)
            gate = zbl[bg.block_of_bus[fb]]
            for i, ph in enumerate(phases):
                big_m = W_MAX + float(
                    sum((abs(mp[i, j]) + abs(mq[i, j])) * cap for j in range(len(phases)))
                )
                for sense, sign in (("u", 1.0), ("l", -1.0)):
                    row = f"vd{sense}_{eid}_{ph}"
                    b.row("L", row, big_m)
                    b.put(row, w[(tb, ph)], sign)
                    b.put(row, w[(fb, ph)], -sign)
                    for j, ph2 in enumerate(phases):
                        if mp[i, j]:
                            b.put(row, p_vars[(eid, ph2)], -sign * mp[i, j])
                        if mq[i, j]:
                            b.put(row, q_vars[(eid, ph2)], -sign * mq[i, j])
                    b.put(row, gate, big_m)
        elif kind == "switch":
            for ph in phases:
                for sense, sign in (("u", 1.0), ("l", -1.0)):
                    row = f"wt{sense}_{eid}_{ph}"
                    b.row("L", row, W_MAX)
                    b.put(row, w[(tb, ph)], sign)
                    b.put(row, w[(fb, ph)], -sign)
                    b.put(row, zsw[eid], W_MAX)
        else:  # transformer: zero-impedance closed connection
            for ph in phases:
                row = f"wte_{eid}_{ph}"
                b.row("E", row)
                b.put(row, w[(tb, ph)], 1.0)
                b.put(row, w[(fb, ph)], -1.0)

    # sources --------------------------------------------------------------
    pg, qg = {}, {}
    for g in net.sources:
        gate = zbl[bg.block_of_bus[g.bus]]
        for ph, pmax, qmin, qmax in zip(g.phases, g.pmax, g.qmin, g.qmax):
            pv = pg[(g.id, ph)] = b.var(f"pg_{g.id}_{ph}")
            qv = qg[(g.id, ph)] = b.var(f"qg_{g.id}_{ph}")
            b.bounds.setdefault(pv, []).append(("UP", pmax / sbase))
            b.bounds.setdefault(qv, []).append(("LO", min(qmin / sbase, 0.0)))
            b.bounds.setdefault(qv, []).append(("UP", max(qmax / sbase, 0.0)))
            b.row("L", f"pu_{g.id}_{ph}")
            b.put(f"pu_{g.id}_{ph}", pv, 1.0)
            b.put(f"pu_{g.id}_{ph}", gate, -pmax / sbase)
            b.row("L", f"qu_{g.id}_{ph}")
            b.put(f"qu_{g.id}_{ph}", qv, 1.0)
            b.put(f"qu_{g.id}_{ph}", gate, -qmax / sbase)
            b.row("L", f"ql_{g.id}_{ph}")
            b.put(f"ql_{g.id}_{ph}", qv, -1.0)
            b.put(f"ql_{g.id}_{ph}", gate, qmin / sbase)

    # nodal balance ---------------------------------------------------------
    for bus in net.buses:
        gate = zbl[bg.block_of_bus[bus.id]]
        for ph in bus.phases:
            prow, qrow = f"pb_{bus.id}_{ph}", f"qb_{bus.id}_{ph}"
            b.row("E", prow)
            b.row("E", qrow)
            for eid, fb, tb, phases, _, _, _ in edge_meta:
                if ph not in phases:
                    continue
                if tb == bus.id:
                    b.put(prow, p_vars[(eid, ph)], 1.0)
                    b.put(qrow, q_vars[(eid, ph)], 1.0)
                if fb == bus.id:
                    b.put(prow, p_vars[(eid, ph)], -1.0)
                    b.put(qrow, q_vars[(eid, ph)], -1.0)
            for g in net.sources_at[bus.id]:
                if ph in g.phases:
                    b.put(prow, pg[(g.id, ph)], 1.0)
                    b.put(qrow, qg[(g.id, ph)], 1.0)
            pd = qd = 0.0
            for d in net.loads_at[bus.id]:
                if ph in d.phases:
                    k = d.phases.index(ph)
                    pd += d.pd[k]
                    qd += d.qd[k]
            if pd:
                b.put(prow, gate, -pd / sbase)
            if qd:
                b.put(qrow, gate, -qd / sbase)

    _write(b, path, name, objective_rhs=0.0)
    return ExportSummary(
        path=str(path),
        n_rows=len(b.rows),
        n_cols=len(b.col_order),
        n_binaries=len(b.integer),
        risk_rhs=inst.policy.budget,
        objective_constant=constant,
    )

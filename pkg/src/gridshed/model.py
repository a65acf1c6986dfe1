"""Three-phase distribution feeder model: domain types, validation, JSON I/O.

The network file format is a single JSON document with top-level keys
``base_kv``, ``base_kva``, ``buses``, ``lines``, ``switches``, ``loads``,
``sources``, ``transformers`` (in that order when serialized).  Phases are
encoded as the strings ``"a"``, ``"b"``, ``"c"``; per-phase quantities are
arrays parallel to the element's ``phases`` list; impedance matrices are
row-major lists of lists sized to the line's own phase set.

All model objects are immutable after construction and safe to share
across threads.  ``parse_network`` validates every structural invariant
(referential integrity, a single substation, radial load blocks, symmetric
impedances) and raises :class:`NetworkDataError` naming the offending
field on any violation.
"""

import json
from dataclasses import dataclass, replace
from functools import cached_property

PHASES = ("a", "b", "c")

SOURCE_KINDS = ("solar", "storage", "generator", "substation_source")


class NetworkDataError(ValueError):
    """A network description violates the schema or a model invariant."""


def canon_phases(phases, ctx="element"):
    """Validate and canonically order a phase collection (a < b < c)."""
    try:
        items = list(phases)
    except TypeError:
        raise NetworkDataError(f"{ctx}: phases must be a list of phase names")
    if not items:
        raise NetworkDataError(f"{ctx}: phases must be nonempty")
    for p in items:
        if p not in PHASES:
            raise NetworkDataError(f"{ctx}: unknown phase {p!r}")
    if len(set(items)) != len(items):
        raise NetworkDataError(f"{ctx}: duplicate phase in {items}")
    return tuple(p for p in PHASES if p in items)


def _per_phase(values, phases, ctx, allow_negative=False):
    vals = tuple(float(v) for v in values)
    if len(vals) != len(phases):
        raise NetworkDataError(
            f"{ctx}: expected {len(phases)} per-phase values, got {len(vals)}"
        )
    if not allow_negative and any(v < 0 for v in vals):
        raise NetworkDataError(f"{ctx}: negative per-phase value in {vals}")
    return vals


def _matrix(rows, n, ctx):
    try:
        mat = tuple(tuple(float(v) for v in row) for row in rows)
    except (TypeError, ValueError):
        raise NetworkDataError(f"{ctx}: matrix must be numeric rows")
    if len(mat) != n or any(len(row) != n for row in mat):
        raise NetworkDataError(f"{ctx}: matrix must be {n}x{n}")
    for i in range(n):
        for j in range(n):
            if mat[i][j] != mat[j][i]:
                raise NetworkDataError(f"{ctx}: matrix is not symmetric")
    return mat


@dataclass(frozen=True)
class Bus:
    """A network node.

    Attributes:
        id: Unique bus name.
        phases: Canonically ordered subset of ("a", "b", "c").
        vmin, vmax: Per-unit voltage magnitude bounds applied on every phase.
        is_substation: True for the single substation node.
        meta: Optional opaque metadata (e.g. coordinates); never interpreted.
    """

    id: str
    phases: tuple
    vmin: float = 0.95
    vmax: float = 1.05
    is_substation: bool = False
    meta: dict | None = None

    def __post_init__(self):
        object.__setattr__(self, "phases", canon_phases(self.phases, f"bus {self.id}"))
        if not (0.0 < self.vmin <= self.vmax):
            raise NetworkDataError(f"bus {self.id}: requires 0 < vmin <= vmax")


@dataclass(frozen=True, eq=False)
class LineSegment:
    """A distribution line with per-phase impedance in ohms.

    ``r`` and ``x`` are symmetric |phases| x |phases| matrices (self terms on
    the diagonal, mutuals off-diagonal).  ``s_max`` is the per-phase apparent
    power limit in kVA; ``length`` in meters is informational only.
    """

    id: str
    from_bus: str
    to_bus: str
    phases: tuple
    r: tuple
    x: tuple
    s_max: float = 1e9
    length: float = 0.0

    def __post_init__(self):
        ctx = f"line {self.id}"
        object.__setattr__(self, "phases", canon_phases(self.phases, ctx))
        n = len(self.phases)
        object.__setattr__(self, "r", _matrix(self.r, n, ctx + " r"))
        object.__setattr__(self, "x", _matrix(self.x, n, ctx + " x"))
        if self.s_max < 0:
            raise NetworkDataError(f"{ctx}: s_max must be >= 0")


@dataclass(frozen=True)
class SwitchElement:
    """A switchable tie between two buses, modeled with zero impedance."""

    id: str
    from_bus: str
    to_bus: str
    phases: tuple
    normally_open: bool = False
    risk: float = 0.0
    s_max: float = 1e9

    def __post_init__(self):
        ctx = f"switch {self.id}"
        object.__setattr__(self, "phases", canon_phases(self.phases, ctx))
        if self.risk < 0:
            raise NetworkDataError(f"{ctx}: risk must be >= 0")
        if self.s_max < 0:
            raise NetworkDataError(f"{ctx}: s_max must be >= 0")


@dataclass(frozen=True)
class LoadPoint:
    """A demand point: per-phase kW/kvar plus a social-vulnerability weight."""

    id: str
    bus: str
    phases: tuple
    pd: tuple
    qd: tuple
    svi: float = 0.0

    def __post_init__(self):
        ctx = f"load {self.id}"
        object.__setattr__(self, "phases", canon_phases(self.phases, ctx))
        object.__setattr__(self, "pd", _per_phase(self.pd, self.phases, ctx + " pd"))
        object.__setattr__(
            self, "qd", _per_phase(self.qd, self.phases, ctx + " qd", allow_negative=True)
        )
        if self.svi < 0:
            raise NetworkDataError(f"{ctx}: svi must be >= 0")

    @property
    def total_pd(self):
        return sum(self.pd)

    @property
    def total_qd(self):
        return sum(self.qd)


@dataclass(frozen=True)
class DistributedSource:
    """A generation source (solar, storage, generator, or the substation feed).

    Power limits are per-phase kW/kvar.  ``can_grid_form`` marks sources whose
    inverter may regulate an island's voltage; only those may anchor an
    energized island that has no path to the substation.
    """

    id: str
    bus: str
    phases: tuple
    pmax: tuple
    qmin: tuple
    qmax: tuple
    can_grid_form: bool = False
    kind: str = "generator"

    def __post_init__(self):
        ctx = f"source {self.id}"
        object.__setattr__(self, "phases", canon_phases(self.phases, ctx))
        object.__setattr__(self, "pmax", _per_phase(self.pmax, self.phases, ctx + " pmax"))
        object.__setattr__(
            self, "qmin", _per_phase(self.qmin, self.phases, ctx + " qmin", allow_negative=True)
        )
        object.__setattr__(
            self, "qmax", _per_phase(self.qmax, self.phases, ctx + " qmax", allow_negative=True)
        )
        if self.kind not in SOURCE_KINDS:
            raise NetworkDataError(f"{ctx}: unknown kind {self.kind!r}")
        for lo, hi in zip(self.qmin, self.qmax):
            if lo > hi:
                raise NetworkDataError(f"{ctx}: qmin exceeds qmax")

    @property
    def total_pmax(self):
        return sum(self.pmax)


@dataclass(frozen=True)
class TransformerElement:
    """A transformer edge; distribution transformers mark secondary circuits.

    Transformers are modeled as zero-impedance closed connections for the
    linear power-flow studies; phase coupling uses the intersection of the
    endpoint bus phase sets.
    """

    id: str
    from_bus: str
    to_bus: str
    is_distribution_xfmr: bool = False


@dataclass(frozen=True)
class NetworkModel:
    """An immutable, validated feeder model.

    The graph over all edges (lines, switches, transformers) must be
    connected, and every connected component with all switches open must be
    radial.  Exactly one bus is the substation.
    """

    base_kv: float
    base_kva: float
    buses: tuple
    lines: tuple = ()
    switches: tuple = ()
    loads: tuple = ()
    sources: tuple = ()
    transformers: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "buses", tuple(self.buses))
        object.__setattr__(self, "lines", tuple(self.lines))
        object.__setattr__(self, "switches", tuple(self.switches))
        object.__setattr__(self, "loads", tuple(self.loads))
        object.__setattr__(self, "sources", tuple(self.sources))
        object.__setattr__(self, "transformers", tuple(self.transformers))
        _validate(self)

    @cached_property
    def bus_by_id(self):
        return {b.id: b for b in self.buses}

    @cached_property
    def line_by_id(self):
        return {l.id: l for l in self.lines}

    @cached_property
    def switch_by_id(self):
        return {s.id: s for s in self.switches}

    @cached_property
    def load_by_id(self):
        return {d.id: d for d in self.loads}

    @cached_property
    def source_by_id(self):
        return {g.id: g for g in self.sources}

    @cached_property
    def substation_bus(self):
        return next(b for b in self.buses if b.is_substation)

    @cached_property
    def substation_source(self):
        for g in self.sources:
            if g.kind == "substation_source":
                return g
        return None

    @cached_property
    def loads_at(self):
        out = {b.id: [] for b in self.buses}
        for d in self.loads:
            out[d.bus].append(d)
        return out

    @cached_property
    def sources_at(self):
        out = {b.id: [] for b in self.buses}
        for g in self.sources:
            out[g.bus].append(g)
        return out

    def non_switch_edges(self):
        """(edge id, from, to) for lines and transformers -- the block-internal edges."""
        out = [(l.id, l.from_bus, l.to_bus) for l in self.lines]
        out += [(t.id, t.from_bus, t.to_bus) for t in self.transformers]
        return out

    def replace(self, **changes):
        return replace(self, **changes)


def _validate(net):
    if net.base_kv <= 0 or net.base_kva <= 0:
        raise NetworkDataError("base_kv and base_kva must be positive")

    bus_ids = [b.id for b in net.buses]
    if len(set(bus_ids)) != len(bus_ids):
        dup = sorted({i for i in bus_ids if bus_ids.count(i) > 1})
        raise NetworkDataError(f"duplicate bus id(s): {dup}")
    known = set(bus_ids)

    # component ids shared across the whole model: risk/SVI tables address
    # lines, switches and buses by a single id namespace
    comp_ids = list(bus_ids)
    for coll in (net.lines, net.switches, net.loads, net.sources, net.transformers):
        comp_ids.extend(e.id for e in coll)
    if len(set(comp_ids)) != len(comp_ids):
        dup = sorted({i for i in comp_ids if comp_ids.count(i) > 1})
        raise NetworkDataError(f"duplicate component id(s): {dup}")

    subs = [b.id for b in net.buses if b.is_substation]
    if len(subs) != 1:
        raise NetworkDataError(
            f"exactly one substation bus required, found {len(subs)}: {subs}"
        )

    bus_phase = {b.id: set(b.phases) for b in net.buses}

    def check_endpoint(kind, eid, bus):
        if bus not in known:
            raise NetworkDataError(f"{kind} {eid}: references unknown bus {bus!r}")

    for l in net.lines:
        check_endpoint("line", l.id, l.from_bus)
        check_endpoint("line", l.id, l.to_bus)
        for endpoint in (l.from_bus, l.to_bus):
            if not set(l.phases) <= bus_phase[endpoint]:
                raise NetworkDataError(
                    f"line {l.id}: phases {l.phases} not carried by bus {endpoint}"
                )
    for s in net.switches:
        check_endpoint("switch", s.id, s.from_bus)
        check_endpoint("switch", s.id, s.to_bus)
        for endpoint in (s.from_bus, s.to_bus):
            if not set(s.phases) <= bus_phase[endpoint]:
                raise NetworkDataError(
                    f"switch {s.id}: phases {s.phases} not carried by bus {endpoint}"
                )
    for t in net.transformers:
        check_endpoint("transformer", t.id, t.from_bus)
        check_endpoint("transformer", t.id, t.to_bus)
    for d in net.loads:
        check_endpoint("load", d.id, d.bus)
        if not set(d.phases) <= bus_phase[d.bus]:
            raise NetworkDataError(
                f"load {d.id}: phases {d.phases} not carried by bus {d.bus}"
            )
    for g in net.sources:
        check_endpoint("source", g.id, g.bus)
        if not set(g.phases) <= bus_phase[g.bus]:
            raise NetworkDataError(
                f"source {g.id}: phases {g.phases} not carried by bus {g.bus}"
            )
        if g.kind == "substation_source":
            if g.bus != subs[0]:
                raise NetworkDataError(
                    f"source {g.id}: substation_source must sit at the substation bus"
                )
            if not g.can_grid_form:
                raise NetworkDataError(
                    f"source {g.id}: substation_source must be grid-forming capable"
                )
    if sum(1 for g in net.sources if g.kind == "substation_source") > 1:
        raise NetworkDataError("more than one substation_source")

    # whole-graph connectivity over lines + switches + transformers
    adj = {b: [] for b in known}
    all_edges = net.non_switch_edges() + [(s.id, s.from_bus, s.to_bus) for s in net.switches]
    for _, u, v in all_edges:
        adj[u].append(v)
        adj[v].append(u)
    seen = set()
    stack = [bus_ids[0]]
    while stack:
        u = stack.pop()
        if u in seen:
            continue
        seen.add(u)
        stack.extend(w for w in adj[u] if w not in seen)
    if seen != known:
        missing = sorted(known - seen)
        raise NetworkDataError(f"network graph not connected; unreachable buses {missing}")

    # each load block (component with all switches open) must be radial
    parent = {b: b for b in known}

    def find(u):
        while parent[u] != u:
            parent[u] = parent[parent[u]]
            u = parent[u]
        return u

    for eid, u, v in net.non_switch_edges():
        ru, rv = find(u), find(v)
        if ru == rv:
            raise NetworkDataError(
                f"non-radial load block: edge {eid} closes a cycle between {u} and {v}"
            )
        parent[ru] = rv


# ---------------------------------------------------------------------------
# JSON schema I/O


def _req(obj, key, ctx):
    if key not in obj:
        raise NetworkDataError(f"{ctx}: missing required field {key!r}")
    return obj[key]


def _parse_bus(obj):
    ctx = f"bus {obj.get('id', '?')}"
    return Bus(
        id=str(_req(obj, "id", ctx)),
        phases=_req(obj, "phases", ctx),
        vmin=float(_req(obj, "vmin", ctx)),
        vmax=float(_req(obj, "vmax", ctx)),
        is_substation=bool(obj.get("is_substation", False)),
        meta=obj.get("meta"),
    )


def _parse_line(obj):
    ctx = f"line {obj.get('id', '?')}"
    return LineSegment(
        id=str(_req(obj, "id", ctx)),
        from_bus=str(_req(obj, "from_bus", ctx)),
        to_bus=str(_req(obj, "to_bus", ctx)),
        phases=_req(obj, "phases", ctx),
        r=_req(obj, "r", ctx),
        x=_req(obj, "x", ctx),
        s_max=float(_req(obj, "s_max", ctx)),
        length=float(obj.get("length", 0.0)),
    )


def _parse_switch(obj):
    ctx = f"switch {obj.get('id', '?')}"
    return SwitchElement(
        id=str(_req(obj, "id", ctx)),
        from_bus=str(_req(obj, "from_bus", ctx)),
        to_bus=str(_req(obj, "to_bus", ctx)),
        phases=_req(obj, "phases", ctx),
        normally_open=bool(obj.get("normally_open", False)),
        risk=float(obj.get("risk", 0.0)),
        s_max=float(_req(obj, "s_max", ctx)),
    )


def _parse_load(obj):
    ctx = f"load {obj.get('id', '?')}"
    return LoadPoint(
        id=str(_req(obj, "id", ctx)),
        bus=str(_req(obj, "bus", ctx)),
        phases=_req(obj, "phases", ctx),
        pd=_req(obj, "pd", ctx),
        qd=_req(obj, "qd", ctx),
        svi=float(obj.get("svi", 0.0)),
    )


def _parse_source(obj):
    ctx = f"source {obj.get('id', '?')}"
    return DistributedSource(
        id=str(_req(obj, "id", ctx)),
        bus=str(_req(obj, "bus", ctx)),
        phases=_req(obj, "phases", ctx),
        pmax=_req(obj, "pmax", ctx),
        qmin=_req(obj, "qmin", ctx),
        qmax=_req(obj, "qmax", ctx),
        can_grid_form=bool(obj.get("can_grid_form", False)),
        kind=str(obj.get("kind", "generator")),
    )


def _parse_transformer(obj):
    ctx = f"transformer {obj.get('id', '?')}"
    return TransformerElement(
        id=str(_req(obj, "id", ctx)),
        from_bus=str(_req(obj, "from_bus", ctx)),
        to_bus=str(_req(obj, "to_bus", ctx)),
        is_distribution_xfmr=bool(obj.get("is_distribution_xfmr", False)),
    )


def network_from_dict(doc):
    """Build a validated NetworkModel from a schema dictionary."""
    if not isinstance(doc, dict):
        raise NetworkDataError("top level: expected a JSON object")
    for key in ("base_kv", "base_kva", "buses"):
        _req(doc, key, "top level")
    return NetworkModel(
        base_kv=float(doc["base_kv"]),
        base_kva=float(doc["base_kva"]),
        buses=tuple(_parse_bus(o) for o in doc.get("buses", [])),
        lines=tuple(_parse_line(o) for o in doc.get("lines", [])),
        switches=tuple(_parse_switch(o) for o in doc.get("switches", [])),
        loads=tuple(_parse_load(o) for o in doc.get("loads", [])),
        sources=tuple(_parse_source(o) for o in doc.get("sources", [])),
        transformers=tuple(_parse_transformer(o) for o in doc.get("transformers", [])),
    )


def parse_network(path):
    """Parse and validate a network JSON file into a NetworkModel."""
    with open(path, "r", encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise NetworkDataError(f"{path}: invalid JSON ({exc})") from exc
    return network_from_dict(doc)


def network_to_dict(net):
    """Serialize a NetworkModel to the schema dictionary (stable key order)."""

    def bus_obj(b):
        obj = {
            "id": b.id,
            "phases": list(b.phases),
            "vmin": b.vmin,
            "vmax": b.vmax,
            "is_substation": b.is_substation,
        }
        if b.meta is not None:
            obj["meta"] = b.meta
        return obj

    return {
        "base_kv": net.base_kv,
        "base_kva": net.base_kva,
        "buses": [bus_obj(b) for b in net.buses],
        "lines": [
            {
                "id": l.id,
                "from_bus": l.from_bus,
                "to_bus": l.to_bus,
                "phases": list(l.phases),
                "r": [list(row) for row in l.r],
                "x": [list(row) for row in l.x],
                "s_max": l.s_max,
                "length": l.length,
            }
            for l in net.lines
        ],
        "switches": [
            {
                "id": s.id,
                "from_bus": s.from_bus,
                "to_bus": s.to_bus,
                "phases": list(s.phases),
                "normally_open": s.normally_open,
                "risk": s.risk,
                "s_max": s.s_max,
            }
            for s in net.switches
        ],
        "loads": [
            {
                "id": d.id,
                "bus": d.bus,
                "phases": list(d.phases),
                "pd": list(d.pd),
                "qd": list(d.qd),
                "svi": d.svi,
            }
            for d in net.loads
        ],
        "sources": [
            {
                "id": g.id,
                "bus": g.bus,
                "phases": list(g.phases),
                "pmax": list(g.pmax),
                "qmin": list(g.qmin),
                "qmax": list(g.qmax),
                "can_grid_form": g.can_grid_form,
                "kind": g.kind,
            }
            for g in net.sources
        ],
        "transformers": [
            {
                "id": t.id,
                "from_bus": t.from_bus,
                "to_bus": t.to_bus,
                "is_distribution_xfmr": t.is_distribution_xfmr,
            }
            for t in net.transformers
        ],
    }


def serialize_network(net, path=None):
    """Write (or return) the JSON form of a network; inverse of parse_network."""
    doc = network_to_dict(net)
    if path is not None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(doc, fh, indent=2)
            fh.write("\n")
    return doc

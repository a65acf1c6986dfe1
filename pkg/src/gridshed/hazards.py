"""Wildfire-risk and social-vulnerability ingestion and aggregation.

Both inputs arrive as two-column CSV files with the exact header ``id,value``
(comma separated, decimal point, no thousands separators).  Risk ids address
lines, switches, and optionally buses; SVI ids address loads.

Aggregation rules: risk collapses by maximum (secondary-side lines onto the
primary bus of their distribution transformer, then all lines and buses of a
block onto the block), while vulnerability sums (loads onto blocks).  Switch
risk stays per-switch so closed switches can be charged separately from
block energization.
"""

import csv
import warnings
from dataclasses import dataclass, replace

from . import reduction

WFPI_MAX = 150.0  # advisory upper bound of the wildfire index scale


class HazardDataError(ValueError):
    """A risk/SVI table is malformed or inconsistent with the network."""


@dataclass(frozen=True)
class RiskTable:
    """Per-component wildfire risk indices (dimensionless, nominally 0-150)."""

    values: dict

    def __post_init__(self):
        for cid, v in self.values.items():
            if v < 0:
                raise HazardDataError(f"risk for {cid!r} is negative")

    def get(self, cid, default=None):
        return self.values.get(cid, default)

    def __contains__(self, cid):
        return cid in self.values

    def __getitem__(self, cid):
        return self.values[cid]


@dataclass(frozen=True)
class SviTable:
    """Per-load social vulnerability values (dimensionless, >= 0)."""

    values: dict

    def __post_init__(self):
        for lid, v in self.values.items():
            if v < 0:
                raise HazardDataError(f"svi for {lid!r} is negative")

    def get(self, lid, default=None):
        return self.values.get(lid, default)

    def __contains__(self, lid):
        return lid in self.values

    def __getitem__(self, lid):
        return self.values[lid]


def _read_pairs(path):
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise HazardDataError(f"{path}: empty file")
        if [h.strip() for h in header] != ["id", "value"]:
            raise HazardDataError(f"{path}: header must be exactly 'id,value'")
        out = {}
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 2:
                raise HazardDataError(f"{path}:{lineno}: expected 2 columns")
            cid = row[0].strip()
            try:
                value = float(row[1])
            except ValueError:
                raise HazardDataError(f"{path}:{lineno}: non-numeric value {row[1]!r}")
            if cid in out:
                raise HazardDataError(f"{path}:{lineno}: duplicate id {cid!r}")
            out[cid] = value
        return out


def load_risk_csv(path, net=None):
    """Read a component-risk CSV; when ``net`` is given, ids are checked.

    Values above the nominal index range (150) are accepted with a warning:
    the bound is advisory, not structural.
    """
    values = _read_pairs(path)
    for cid, v in values.items():
        if v < 0:
            raise HazardDataError(f"{path}: risk for {cid!r} is negative")
        if v > WFPI_MAX:
            warnings.warn(
                f"{path}: risk {v} for {cid!r} exceeds the nominal 0-150 range",
                stacklevel=2,
            )
    if net is not None:
        known = (
            set(net.bus_by_id)
            | set(net.line_by_id)
            | set(net.switch_by_id)
        )
        unknown = sorted(set(values) - known)
        if unknown:
            raise HazardDataError(f"{path}: id(s) not present in the network: {unknown}")
    return RiskTable(values=values)


def load_svi_csv(path, net=None):
    """Read a per-load SVI CSV; when ``net`` is given, ids are checked."""
    values = _read_pairs(path)
    for lid, v in values.items():
        if v < 0:
            raise HazardDataError(f"{path}: svi for {lid!r} is negative")
    if net is not None:
        unknown = sorted(set(values) - set(net.load_by_id))
        if unknown:
            raise HazardDataError(f"{path}: id(s) not present in the network: {unknown}")
    return SviTable(values=values)


@dataclass(frozen=True)
class RiskAggregate:
    """Per-bus risk (secondary circuits collapsed) and per-block risk."""

    bus_risk: dict
    block_risk: dict


def aggregate_risk(net, risk_table, block_graph=None):
    """Aggregate component risks to primary buses and then to load blocks.

    Every line and switch must have an entry (buses are optional and default
    to 0).  For each distribution transformer, the maximum risk over all
    secondary-side lines and buses is folded onto the primary-side bus; the
    block risk is the maximum over contained lines and (collapsed) bus risks.
    """
    missing = sorted(
        eid
        for eid in list(net.line_by_id) + list(net.switch_by_id)
        if eid not in risk_table
    )
    if missing:
        raise HazardDataError(f"missing risk entries for: {missing}")

    bus_risk = {b.id: risk_table.get(b.id, 0.0) for b in net.buses}
    for xfmr in net.transformers:
        if not xfmr.is_distribution_xfmr:
            continue
        split = reduction.secondary_buses(net, xfmr)
        if split is None:
            continue
        primary_bus, secondary = split
        collapsed = bus_risk[primary_bus]
        for l in net.lines:
            if l.from_bus in secondary and l.to_bus in secondary:
                collapsed = max(collapsed, risk_table[l.id])
        for bus in secondary:
            collapsed = max(collapsed, bus_risk[bus])
        bus_risk[primary_bus] = collapsed

    if block_graph is None:
        from .blocks import identify_blocks

        block_graph = identify_blocks(net)

    block_risk = {}
    for blk in block_graph.blocks:
        rho = 0.0
        for l in net.lines:
            if l.from_bus in blk.bus_ids and l.to_bus in blk.bus_ids:
                rho = max(rho, risk_table[l.id])
        for bus in blk.bus_ids:
            rho = max(rho, bus_risk.get(bus, 0.0))
        block_risk[blk.id] = rho
    return RiskAggregate(bus_risk=bus_risk, block_risk=block_risk)


def aggregate_svi(net, svi_table, block_graph=None):
    """Sum per-load SVI values to block vulnerability v_i.

    Every load of the network must have an entry.
    """
    missing = sorted(lid for lid in net.load_by_id if lid not in svi_table)
    if missing:
        raise HazardDataError(f"missing svi entries for: {missing}")

    if block_graph is None:
        from .blocks import identify_blocks

        block_graph = identify_blocks(net)

    out = {blk.id: 0.0 for blk in block_graph.blocks}
    for d in net.loads:
        out[block_graph.block_of_bus[d.bus]] += svi_table[d.id]
    return out


def apply_tables(net, risk_table=None, svi_table=None):
    """Return a copy of ``net`` with switch risks / load SVI taken from tables.

    Entries absent from a table leave the field value untouched, so partial
    overrides are allowed here; strict completeness is enforced by the
    aggregation functions.
    """
    switches = net.switches
    if risk_table is not None:
        switches = tuple(
            replace(s, risk=risk_table.get(s.id, s.risk)) for s in net.switches
        )
    loads = net.loads
    if svi_table is not None:
        loads = tuple(replace(d, svi=svi_table.get(d.id, d.svi)) for d in net.loads)
    return net.replace(switches=switches, loads=loads)

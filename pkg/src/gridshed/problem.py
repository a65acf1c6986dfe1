"""Configuration problem definition: controllability, risk budget, objectives.

Four controllability regimes fix or free the binary switch and inverter
decisions:

* ``none`` (no microgrids): every non-substation inverter is grid-following;
  switches are free.  Only blocks connected to the substation can energize.
* ``static``: one designated inverter per block is grid-forming, all
  switches are open.  Each block with generation runs as its own microgrid.
* ``expanding``: inverter roles as in static, switches free.  A microgrid
  can pick up formerless neighbors but two designated microgrids can never
  merge, since the merged island would hold two forming sources.
* ``networking``: both switch and inverter decisions are free.

The substation voltage source is grid-forming whenever it is energized and
is never a decision variable.

Risk is budgeted, not priced: a configuration is admissible when the risk
of its energized blocks (plus, by default, its closed switches) stays below
a fraction of the total possible system risk.
"""

import enum
from dataclasses import dataclass
from functools import cached_property


class Objective(enum.Enum):
    """Shed-cost metric: plain kW, vulnerability, or MW-times-vulnerability."""

    LOAD_ONLY = "lo"
    VULNERABILITY_ONLY = "vo"
    VULNERABILITY_WEIGHTED = "vl"


class Regime(enum.Enum):
    NO_MICROGRIDS = "none"
    STATIC = "static"
    EXPANDING = "expanding"
    NETWORKING = "networking"


OBJECTIVE_LABELS = {
    Objective.LOAD_ONLY: "load only (kW)",
    Objective.VULNERABILITY_ONLY: "vulnerability only",
    Objective.VULNERABILITY_WEIGHTED: "vulnerability weighted (MW*v)",
}


def shed_coefficient(block, objective):
    """Per-block shed cost coefficient under an objective."""
    if objective is Objective.LOAD_ONLY:
        return block.total_pd
    if objective is Objective.VULNERABILITY_ONLY:
        return block.total_svi
    # demand in MW so the weighted value carries MW*v units; multiply before
    # dividing so integer-valued kW columns reproduce reference values exactly
    return block.total_pd * block.total_svi / 1000.0


@dataclass(frozen=True)
class Controllability:
    """Regime plus the derived switch/inverter variable domains."""

    regime: Regime
    designated: dict  # block id -> source id fixed grid-forming (static/expanding)

    @classmethod
    def build(cls, regime, bg):
        regime = Regime(regime) if not isinstance(regime, Regime) else regime
        designated = {}
        if regime in (Regime.STATIC, Regime.EXPANDING):
            for blk in bg.blocks:
                if blk.contains_substation:
                    continue  # the substation source already forms this block
                if blk.forming_capable_sources:
                    designated[blk.id] = min(blk.forming_capable_sources)
        return cls(regime=regime, designated=designated)

    def switch_domain(self, switch_id):
        if self.regime is Regime.STATIC:
            return (0,)
        return (0, 1)

    def inverter_domain(self, source_id, block_id):
        """Admissible grid-forming values for a forming-capable DG source."""
        if self.regime is Regime.NO_MICROGRIDS:
            return (0,)
        if self.regime in (Regime.STATIC, Regime.EXPANDING):
            return (1,) if self.designated.get(block_id) == source_id else (0,)
        return (0, 1)


@dataclass(frozen=True)
class RiskPolicy:
    """Budget R <= threshold * r_total on the wildfire risk of what stays on."""

    threshold: float
    r_total: float
    include_switch_risk: bool = True

    def __post_init__(self):
        if not 0.0 <= self.threshold <= 1.0:
            raise ValueError(f"risk threshold must be in [0, 1], got {self.threshold}")
        if self.r_total <= 0.0:
            raise ValueError("total system risk must be positive")

    @property
    def budget(self):
        return self.threshold * self.r_total

    @classmethod
    def build(cls, bg, switch_risks, threshold, include_switch_risk=True):
        total = bg.total_block_risk
        if include_switch_risk:
            total += sum(switch_risks.values())
        return cls(threshold=threshold, r_total=total, include_switch_risk=include_switch_risk)


@dataclass(frozen=True)
class ProblemInstance:
    """One solvable problem: network + blocks + policy + objective + regime.

    ``substation_available`` False models a widespread shutoff where the
    feeder is cut from the grid: the substation source stops forming and
    every switch incident to the substation block is forced open.
    """

    net: object
    bg: object
    policy: RiskPolicy
    objective: Objective
    control: Controllability
    substation_available: bool = True

    @cached_property
    def switch_risks(self):
        return {s.id: s.risk for s in self.net.switches}

    @cached_property
    def switch_ids(self):
        return tuple(sorted(s.id for s in self.net.switches))

    @cached_property
    def forced_open(self):
        """Switches held open by the scenario (substation block cut off)."""
        if self.substation_available:
            return frozenset()
        sub = self.bg.substation_block.id
        return frozenset(
            sid for sid, a, b in self.bg.edges if sub in (a, b)
        )

    @cached_property
    def fixed_forming(self):
        """Source ids whose grid-forming status is fixed to 1."""
        out = set()
        if self.substation_available and self.net.substation_source is not None:
            out.add(self.net.substation_source.id)
        out.update(self.control.designated.values())
        return frozenset(out)

    @cached_property
    def free_forming(self):
        """Forming-capable DG whose status is a free binary (networking only)."""
        if self.control.regime is not Regime.NETWORKING:
            return frozenset()
        sub = self.net.substation_source.id if self.net.substation_source else None
        return frozenset(
            g
            for blk in self.bg.blocks
            for g in blk.forming_capable_sources
            if g != sub
        )

    @cached_property
    def shed_coefficients(self):
        return {
            obj: {blk.id: shed_coefficient(blk, obj) for blk in self.bg.blocks}
            for obj in Objective
        }

    @property
    def binary_count(self):
        free_switches = sum(
            1
            for sid in self.switch_ids
            if len(self.control.switch_domain(sid)) > 1 and sid not in self.forced_open
        )
        return free_switches + len(self.free_forming)


def build_instance(
    net,
    bg,
    objective,
    regime,
    threshold,
    include_switch_risk=True,
    substation_available=True,
):
    """Convenience constructor wiring the policy and controllability together."""
    objective = Objective(objective) if not isinstance(objective, Objective) else objective
    control = Controllability.build(regime, bg)
    policy = RiskPolicy.build(
        bg,
        {s.id: s.risk for s in net.switches},
        threshold,
        include_switch_risk=include_switch_risk,
    )
    return ProblemInstance(
        net=net,
        bg=bg,
        policy=policy,
        objective=objective,
        control=control,
        substation_available=substation_available,
    )


def served_value(blocks, coefs):
    """Canonical served sum: always accumulated in ascending block-id order.

    Summation order is pinned so the search path and the enumeration oracle
    produce bit-identical objective values.
    """
    return sum(coefs[b] for b in sorted(blocks))


def risk_value(energized_blocks, closed_switches, bg, switch_risks, include_switch_risk=True):
    """Absolute risk carried by energized blocks plus (optionally) closed switches.

    Accumulation order is canonical (sorted ids) for bit-stable results.
    """
    total = sum(bg.by_id[b].risk for b in sorted(energized_blocks))
    if include_switch_risk:
        total += sum(switch_risks[s] for s in sorted(closed_switches))
    return total


def risk_of(config, policy, bg, switch_risks):
    """Accepted-risk fraction of a configuration under a policy."""
    value = risk_value(
        config.energized_blocks,
        config.closed_switches,
        bg,
        switch_risks,
        include_switch_risk=policy.include_switch_risk,
    )
    return value / policy.r_total


@dataclass(frozen=True)
class ObjectiveReport:
    """Shed cost for the selected metric plus served/total under all three."""

    objective: Objective
    shed: float
    served: dict
    total: dict

    @property
    def served_fraction(self):
        tot = self.total[self.objective]
        return 1.0 if tot == 0 else self.served[self.objective] / tot


def objective_value(energized_blocks, objective, bg):
    """Shed cost of an energization choice plus the full served/total report.

    Accepts either a set of block ids or any configuration object exposing
    ``energized_blocks``.
    """
    energized_blocks = getattr(energized_blocks, "energized_blocks", energized_blocks)
    energized = set(energized_blocks)
    served = {}
    total = {}
    for obj in Objective:
        tot = on = 0.0
        for blk in bg.blocks:
            c = shed_coefficient(blk, obj)
            tot += c
            if blk.id in energized:
                on += c
        served[obj] = on
        total[obj] = tot
    objective = Objective(objective) if not isinstance(objective, Objective) else objective
    return ObjectiveReport(
        objective=objective,
        shed=total[objective] - served[objective],
        served=served,
        total=total,
    )


def vulnerability_stats(energized_blocks, bg):
    """Mean block vulnerability of served and shed blocks (None when empty).

    The substation block is counted in whichever class its actual
    energization puts it; it is not treated specially here.
    """
    energized_blocks = getattr(energized_blocks, "energized_blocks", energized_blocks)
    energized = set(energized_blocks)
    on = [blk.total_svi for blk in bg.blocks if blk.id in energized]
    off = [blk.total_svi for blk in bg.blocks if blk.id not in energized]
    mean_on = sum(on) / len(on) if on else None
    mean_off = sum(off) / len(off) if off else None
    return mean_on, mean_off

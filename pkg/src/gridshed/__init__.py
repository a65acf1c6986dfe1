"""gridshed: networked-microgrid configuration under wildfire risk budgets.

The library models a three-phase distribution feeder as switchable load
blocks, ingests per-component wildfire-risk and per-load social-vulnerability
data, and finds switch/inverter configurations that cap the accepted share
of ignition risk while minimizing load shed -- in plain kilowatts, in
vulnerability, or in vulnerability-weighted form.
"""

from .blocks import (
    BlockGraph,
    Island,
    IslandDecomposition,
    LoadBlock,
    TopologyError,
    identify_blocks,
    islands_for,
)
from .flow import (
    DispatchOracle,
    DispatchSolution,
    assemble_dispatch_lp,
    build_sensitivity_matrices,
    dispatch_residuals,
    solve_dispatch,
)
from .hazards import (
    HazardDataError,
    RiskTable,
    SviTable,
    aggregate_risk,
    aggregate_svi,
    apply_tables,
    load_risk_csv,
    load_svi_csv,
)
from .lp import LpNumericalError, LpProblem, LpSolution, solve_lp
from .model import (
    Bus,
    DistributedSource,
    LineSegment,
    LoadPoint,
    NetworkDataError,
    NetworkModel,
    SwitchElement,
    TransformerElement,
    network_from_dict,
    network_to_dict,
    parse_network,
    serialize_network,
)
from .mpsfile import export_milp
from .problem import (
    Controllability,
    Objective,
    ObjectiveReport,
    ProblemInstance,
    Regime,
    RiskPolicy,
    build_instance,
    objective_value,
    risk_of,
    risk_value,
    vulnerability_stats,
)
from .reduction import reduce_feeder
from .solver import (
    Configuration,
    SearchContext,
    SolveReport,
    SolverLimitError,
    enumerate_all,
    enumerate_minimum,
    solve,
)

__version__ = "0.1.0"

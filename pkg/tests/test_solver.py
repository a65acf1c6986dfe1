"""Search correctness: the branch and bound against the exhaustive oracle."""

import pytest

from gridshed import (
    Bus,
    DistributedSource,
    LoadPoint,
    NetworkModel,
    Objective,
    Regime,
    SolverLimitError,
    SwitchElement,
    build_instance,
    enumerate_all,
    enumerate_minimum,
    identify_blocks,
    solve,
)
from gridshed.solver import SearchContext
from gridshed.synth import random_instance


def make(case, objective="vl", regime="networking", threshold=0.5, **kw):
    return build_instance(case.net, case.bg, objective, regime, threshold, **kw)


def test_illustrative_example(ieee13_case):
    report = solve(make(ieee13_case))
    cfg = report.configuration
    assert sorted(cfg.energized_blocks) == [1, 2, 4, 6]
    assert cfg.closed_switches == ("sw2",)
    assert cfg.risk == 416.0
    assert cfg.risk_fraction == 416 / 854
    assert report.served[Objective.LOAD_ONLY] == 3851.0
    assert report.served[Objective.VULNERABILITY_ONLY] == 18.0
    assert report.served[Objective.VULNERABILITY_WEIGHTED] == pytest.approx(11.223, abs=1e-12)
    assert report.vulnerability_served == 4.5
    assert report.vulnerability_shed == 4.0
    assert cfg.dispatch.feasible
    assert report.optimal


def test_zero_budget_sheds_everything(ieee13_case):
    report = solve(make(ieee13_case, threshold=0.0))
    assert not report.configuration.energized_blocks
    assert report.configuration.risk == 0.0


def test_full_budget_serves_all_load(ieee13_case):
    report = solve(make(ieee13_case, objective="lo", threshold=1.0))
    # zero shed; block 3 carries no load, so the lower-risk tie-break leaves
    # it dark while every load-bearing block energizes
    assert report.objective_value == 0.0
    on = report.configuration.energized_blocks
    for blk in ieee13_case.bg.blocks:
        if blk.total_pd > 0:
            assert blk.id in on


def test_static_has_single_topology(ieee13_case):
    report = solve(make(ieee13_case, regime="static"))
    assert report.leaves == 1
    assert report.configuration.closed_switches == ()


def test_expanding_cannot_merge_designated_microgrids(psps_case):
    # blocks 5 and 6 both carry designated forming sources: their tie stays open
    report = solve(
        make(psps_case, regime="expanding", threshold=0.9, substation_available=False)
    )
    assert "sw5" not in report.configuration.closed_switches
    assert sorted(report.configuration.energized_blocks) == [2, 3, 4, 5]
    networking = solve(
        make(psps_case, regime="networking", threshold=0.9, substation_available=False)
    )
    assert sorted(networking.configuration.energized_blocks) == [2, 3, 4, 5, 6]
    assert "sw5" in networking.configuration.closed_switches


def test_substation_off_keeps_block1_dark(psps_case):
    report = solve(make(psps_case, threshold=1.0, substation_available=False))
    assert 1 not in report.configuration.energized_blocks
    for sid in ("sw1", "sw2", "sw3", "sw4"):
        assert report.configuration.switch_states[sid] == "open"


def test_solve_matches_oracle_on_fixture_grid(ieee13_case):
    for regime in Regime:
        for objective in Objective:
            for threshold in (0.0, 0.3, 0.5, 0.8, 1.0):
                inst = make(ieee13_case, objective.value, regime.value, threshold)
                report = solve(inst)
                best = enumerate_minimum(inst)
                assert report.objective_value == best.objective_cost, (
                    f"{regime} {objective} t={threshold}"
                )
                assert report.configuration.closed_switches == best.closed_switches
                assert (
                    tuple(sorted(report.configuration.energized_blocks))
                    == best.energized_blocks
                )


def test_solve_matches_oracle_with_substation_off(psps_case):
    for regime in Regime:
        for threshold in (0.3, 0.6, 0.9):
            inst = make(
                psps_case, "vl", regime.value, threshold, substation_available=False
            )
            report = solve(inst)
            best = enumerate_minimum(inst)
            assert report.objective_value == best.objective_cost, (regime, threshold)
            assert report.configuration.closed_switches == best.closed_switches


def test_solve_matches_oracle_on_random_instances():
    for seed in range(25):
        inst = random_instance(seed)
        report = solve(inst)
        best = enumerate_minimum(inst)
        assert report.objective_value == best.objective_cost, f"seed {seed}"


def test_pruning_is_sound():
    for seed in range(12):
        inst = random_instance(seed)
        pruned = solve(inst, prune=True)
        full = solve(inst, prune=False)
        assert pruned.objective_value == full.objective_value, f"seed {seed}"
        assert pruned.configuration.closed_switches == full.configuration.closed_switches


def test_determinism_repeated_solves(ieee13_case):
    inst = make(ieee13_case)
    a = solve(inst)
    b = solve(inst)
    assert a.configuration.switch_states == b.configuration.switch_states
    assert a.configuration.inverter_modes == b.configuration.inverter_modes
    assert a.configuration.energized_blocks == b.configuration.energized_blocks
    assert a.objective_value == b.objective_value
    assert a.nodes == b.nodes


def test_returned_configuration_invariants():
    for seed in range(20):
        inst = random_instance(seed)
        report = solve(inst)
        cfg = report.configuration
        assert cfg.risk_fraction <= inst.policy.threshold + 1e-12, f"seed {seed}"
        for isl in cfg.islands:
            assert len(isl.closed_switches) == len(isl.block_ids) - 1
        if cfg.dispatch is not None:
            assert cfg.dispatch.feasible


def test_regime_nesting_on_fixture(ieee13_case):
    for threshold in (0.2, 0.5, 0.9):
        shed = {
            regime: solve(make(ieee13_case, "vl", regime.value, threshold)).objective_value
            for regime in Regime
        }
        assert shed[Regime.STATIC] >= shed[Regime.EXPANDING] - 1e-12
        assert shed[Regime.EXPANDING] >= shed[Regime.NETWORKING] - 1e-12
        assert shed[Regime.NO_MICROGRIDS] >= shed[Regime.NETWORKING] - 1e-12


def test_shared_context_reuse_across_thresholds(ieee13_case):
    inst = make(ieee13_case, threshold=0.3)
    ctx = SearchContext(inst)
    a = solve(inst, context=ctx)
    b = solve(make(ieee13_case, threshold=0.7), context=ctx)
    assert a.objective_value >= b.objective_value
    with pytest.raises(ValueError, match="different instance"):
        solve(make(ieee13_case, regime="static"), context=ctx)


def test_binary_ceiling_enforced(ieee13_case):
    inst = make(ieee13_case)
    with pytest.raises(SolverLimitError, match="export"):
        solve(inst, binary_ceiling=3)
    with pytest.raises(SolverLimitError):
        enumerate_all(inst, limit=3)


def tiny_three_block_case():
    """Chain of 3 single-bus blocks; DG capable of forming only in block 3."""
    abc = ("a",)
    zz = ((0.02,),)
    buses = tuple(
        Bus(id=f"t{i}", phases=abc, vmin=0.9, vmax=1.1, is_substation=i == 1)
        for i in (1, 2, 3)
    )
    switches = (
        SwitchElement(id="s12", from_bus="t1", to_bus="t2", phases=abc, risk=10.0, s_max=500.0),
        SwitchElement(id="s23", from_bus="t2", to_bus="t3", phases=abc, risk=10.0, s_max=500.0),
    )
    loads = tuple(
        LoadPoint(id=f"d{i}", bus=f"t{i}", phases=abc, pd=(10.0,), qd=(2.0,), svi=1.0)
        for i in (1, 2, 3)
    )
    sources = (
        DistributedSource(id="sub", bus="t1", phases=abc, pmax=(100.0,), qmin=(-100.0,),
                          qmax=(100.0,), can_grid_form=True, kind="substation_source"),
        DistributedSource(id="g3", bus="t3", phases=abc, pmax=(50.0,), qmin=(-50.0,),
                          qmax=(50.0,), can_grid_form=True, kind="generator"),
    )
    net = NetworkModel(base_kv=4.16, base_kva=1000.0, buses=buses, lines=(),
                       switches=switches, loads=loads, sources=sources)
    return net, identify_blocks(net, {"t1": 5.0, "t2": 5.0, "t3": 5.0})


def test_enumeration_cardinality():
    net, bg = tiny_three_block_case()
    inst = build_instance(net, bg, "lo", "networking", 1.0)
    configs = enumerate_all(inst)
    pairs = {(c.closed_switches, c.forming) for c in configs}
    # 4 switch patterns x 2 inverter patterns, minus the fully-closed chain
    # with both sub and g3 forming (two formers in one island)
    assert len(pairs) == 7
    best = enumerate_minimum(inst)
    assert best.objective_cost == 0.0


def test_full_budget_energizes_all_blocks_when_all_carry_load():
    net, bg = tiny_three_block_case()
    inst = build_instance(net, bg, "lo", "networking", 1.0)
    report = solve(inst)
    assert sorted(report.configuration.energized_blocks) == [1, 2, 3]
    assert report.objective_value == 0.0


def test_static_is_single_admissible_topology():
    net, bg = tiny_three_block_case()
    inst = build_instance(net, bg, "lo", "static", 1.0)
    configs = enumerate_all(inst)
    assert {c.closed_switches for c in configs} == {()}


def test_strict_block_risk_accounting_without_switch_risk(ieee13_case):
    inst = make(ieee13_case, include_switch_risk=False)
    assert inst.policy.r_total == 519.0
    report = solve(inst)
    best = enumerate_minimum(inst)
    assert report.objective_value == best.objective_cost
    # with switch risk free, the budget covers {1, 4, 5} but not {1, 2, 4}
    assert sorted(report.configuration.energized_blocks) == [1, 4, 5]
    assert report.configuration.risk == 257.0


def test_pruning_sound_with_switch_risk_excluded():
    """A high-risk switch that is free under --no-switch-risk must not eat
    the pruning budget (regression: the bound once subtracted it anyway)."""
    abc = ("a",)
    buses = (
        Bus(id="t1", phases=abc, vmin=0.9, vmax=1.1, is_substation=True),
        Bus(id="t2", phases=abc, vmin=0.9, vmax=1.1),
    )
    switches = (
        SwitchElement(id="s12", from_bus="t1", to_bus="t2", phases=abc, risk=100.0, s_max=500.0),
    )
    loads = (
        LoadPoint(id="d1", bus="t1", phases=abc, pd=(1.0,), qd=(0.2,), svi=1.0),
        LoadPoint(id="d2", bus="t2", phases=abc, pd=(20.0,), qd=(4.0,), svi=1.0),
    )
    sources = (
        DistributedSource(id="sub", bus="t1", phases=abc, pmax=(100.0,), qmin=(-100.0,),
                          qmax=(100.0,), can_grid_form=True, kind="substation_source"),
    )
    net = NetworkModel(base_kv=4.16, base_kva=1000.0, buses=buses, switches=switches,
                       loads=loads, sources=sources)
    bg = identify_blocks(net, {"t1": 5.0, "t2": 60.0})
    inst = build_instance(net, bg, "lo", "networking", 1.0, include_switch_risk=False)
    report = solve(inst)
    best = enumerate_minimum(inst)
    assert report.objective_value == best.objective_cost == 0.0
    assert report.configuration.closed_switches == ("s12",)


def test_risk_of_matches_configuration(ieee13_case):
    from gridshed import risk_of

    inst = make(ieee13_case)
    report = solve(inst)
    frac = risk_of(report.configuration, inst.policy, ieee13_case.bg, inst.switch_risks)
    assert frac == report.configuration.risk_fraction == 416 / 854


def test_vulnerability_scale_leaves_argmin_unchanged(ieee13_case):
    """Multiplying every v by a positive constant must not move the optimum
    under either vulnerability objective."""
    from dataclasses import replace as dc_replace

    from gridshed.data import case_files
    from gridshed.hazards import load_risk_csv

    scaled_net = ieee13_case.net.replace(
        loads=tuple(dc_replace(d, svi=d.svi * 7.0) for d in ieee13_case.net.loads)
    )
    rt = load_risk_csv(case_files("ieee13")[1], scaled_net)
    bg_scaled = identify_blocks(scaled_net, rt.values)

    for objective in ("vo", "vl"):
        for threshold in (0.3, 0.5, 0.8):
            base = solve(make(ieee13_case, objective, "networking", threshold))
            scaled = solve(
                build_instance(scaled_net, bg_scaled, objective, "networking", threshold)
            )
            assert (
                base.configuration.energized_blocks
                == scaled.configuration.energized_blocks
            )
            assert (
                base.configuration.closed_switches
                == scaled.configuration.closed_switches
            )


def test_objective_value_accepts_configuration(ieee13_case):
    from gridshed import objective_value, vulnerability_stats

    report = solve(make(ieee13_case))
    via_config = objective_value(report.configuration, Objective.LOAD_ONLY, ieee13_case.bg)
    via_set = objective_value(
        report.configuration.energized_blocks, Objective.LOAD_ONLY, ieee13_case.bg
    )
    assert via_config == via_set
    assert vulnerability_stats(report.configuration, ieee13_case.bg) == (4.5, 4.0)


def test_objective_zero_iff_all_load_bearing_blocks_energized(ieee13_case):
    from gridshed import objective_value

    bg = ieee13_case.bg
    load_bearing = {b.id for b in bg.blocks if b.total_pd > 0}
    for obj in Objective:
        assert objective_value(load_bearing | {3}, obj, bg).shed == 0.0
    assert objective_value(load_bearing - {5}, Objective.LOAD_ONLY, bg).shed > 0.0

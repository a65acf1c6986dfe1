"""Batch-study layer: grids, sweep stability, priority and compare rows."""

import pytest

from gridshed.analysis import (
    compare,
    config_digest,
    load_case,
    priority,
    sweep,
    threshold_grid,
)
from gridshed.data import case_files
from gridshed.problem import Objective, Regime


def test_threshold_grid_basics():
    assert threshold_grid(0.0, 1.0, 0.25) == [0.0, 0.25, 0.5, 0.75, 1.0]
    assert threshold_grid(0.4, 0.6, 0.9) == [0.4]
    grid = threshold_grid(0.0, 1.0, 0.001)
    assert len(grid) == 1001
    assert grid[-1] == pytest.approx(1.0, abs=1e-12)
    with pytest.raises(ValueError):
        threshold_grid(-0.1, 1.0, 0.1)
    with pytest.raises(ValueError):
        threshold_grid(0.5, 0.4, 0.1)
    with pytest.raises(ValueError):
        threshold_grid(0.0, 1.0, 0.0)


def test_sweep_distinct_solutions_stable(ieee13_case):
    grid = threshold_grid(0.0, 1.0, 0.01)
    first = sweep(ieee13_case, "vl", "networking", grid)
    second = sweep(ieee13_case, "vl", "networking", grid)
    assert first.rows == second.rows
    assert first.distinct_solutions == second.distinct_solutions
    assert 2 <= first.distinct_solutions <= 20  # small finite set


def test_sweep_rows_respect_threshold(ieee13_case):
    grid = threshold_grid(0.0, 1.0, 0.05)
    result = sweep(ieee13_case, "lo", "networking", grid)
    for row in result.rows:
        assert row.risk_pct <= row.threshold * 100 + 1e-9


def test_priority_ranks_are_permutations(ieee13_case):
    table = priority(ieee13_case, threshold_grid(0.0, 1.0, 0.05))
    for obj in Objective:
        assert sorted(table.ranks[obj].values()) == [1, 2, 3, 4, 5]
        assert sum(table.deltas[obj].values()) == 0


def test_compare_rows_shape(ieee13_case):
    rows = compare(ieee13_case, ["static"], "vl", 0.5)
    assert len(rows) == 1
    assert rows[0].regime is Regime.STATIC
    assert rows[0].total_blocks == 6


def test_config_digest_depends_on_decisions(ieee13_case):
    from gridshed import build_instance, solve

    a = solve(build_instance(ieee13_case.net, ieee13_case.bg, "vl", "networking", 0.5))
    b = solve(build_instance(ieee13_case.net, ieee13_case.bg, "vl", "networking", 0.3))
    assert config_digest(a.configuration) != config_digest(b.configuration)
    again = solve(build_instance(ieee13_case.net, ieee13_case.bg, "vl", "networking", 0.5))
    assert config_digest(a.configuration) == config_digest(again.configuration)


def test_load_case_runs_reduction():
    net_path, _, _ = case_files("reduction15")
    case = load_case(net_path)
    assert len(case.net.buses) == 6
    assert len(case.bg.blocks) == 1

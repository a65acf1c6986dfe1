"""Feeder reduction: aggregation, reflection, conservation."""

import pytest

from gridshed import (
    Bus,
    DistributedSource,
    LoadPoint,
    NetworkModel,
    TransformerElement,
    reduce_feeder,
)


def totals(net):
    kw = sum(sum(d.pd) for d in net.loads)
    kvar = sum(sum(d.qd) for d in net.loads)
    svi = sum(d.svi for d in net.loads)
    storage = [g.id for g in net.sources if g.kind == "storage"]
    return kw, kvar, svi, storage


def test_reduction_fixture_shrinks_and_conserves(reduction_net):
    before = totals(reduction_net)
    reduced = reduce_feeder(reduction_net)
    after = totals(reduced)
    assert len(reduced.buses) == 6
    assert len(reduced.buses) < len(reduction_net.buses)
    assert not reduced.transformers
    assert after[0] == before[0]  # kW (integer-valued, exact)
    assert after[1] == before[1]  # kvar
    assert after[2] == before[2]  # svi mass
    assert sorted(after[3]) == sorted(before[3])  # storage units untouched


def test_secondary_loads_sum_onto_primary(reduction_net):
    reduced = reduce_feeder(reduction_net)
    agg = reduced.load_by_id["t1_load"]
    assert agg.bus == "p2"
    assert agg.phases == ("a",)
    assert agg.pd == (7.0,)  # 3 kW + 4 kW on phase a


def test_secondary_solar_sums_onto_primary(reduction_net):
    reduced = reduce_feeder(reduction_net)
    pv = reduced.source_by_id["t1_pv"]
    assert pv.bus == "p2"
    assert pv.kind == "solar"
    assert pv.pmax == (2.0,)
    pv3 = reduced.source_by_id["t3_pv"]
    assert pv3.bus == "p4"
    assert pv3.pmax == (3.0,)


def test_storage_reflected_not_aggregated(reduction_net):
    reduced = reduce_feeder(reduction_net)
    st1 = reduced.source_by_id["st1"]
    st2 = reduced.source_by_id["st2"]
    assert st1.bus == "p3" and st2.bus == "p3"
    assert st1.pmax == (3.0, 3.0)  # powers unchanged
    assert st2.pmax == (5.0,)


def test_aggregate_phases_are_union_of_secondary_loads(reduction_net):
    reduced = reduce_feeder(reduction_net)
    agg3 = reduced.load_by_id["t3_load"]
    assert agg3.phases == ("a", "b", "c")
    assert agg3.pd == (2.0, 2.0, 7.0)
    bus_phases = set(reduced.bus_by_id[agg3.bus].phases)
    assert set(agg3.phases) <= bus_phases


def test_primary_elements_untouched(reduction_net):
    reduced = reduce_feeder(reduction_net)
    assert "ld_p1" in reduced.load_by_id
    assert reduced.load_by_id["ld_p1"].pd == (10.0, 10.0, 10.0)
    assert "pv_p5" in reduced.source_by_id


def looping_transformer_net():
    """Transformer with a switchable path in parallel: removal cannot split."""
    from gridshed import SwitchElement

    abc = ("a", "b", "c")
    return NetworkModel(
        base_kv=4.16,
        base_kva=1000.0,
        buses=(
            Bus(id="u", phases=abc, is_substation=True),
            Bus(id="v", phases=abc),
        ),
        switches=(SwitchElement(id="swp", from_bus="u", to_bus="v", phases=abc, s_max=100.0),),
        loads=(LoadPoint(id="d", bus="v", phases=("a",), pd=(5.0,), qd=(1.0,)),),
        sources=(
            DistributedSource(
                id="sub", bus="u", phases=abc, pmax=(10.0,) * 3,
                qmin=(-10.0,) * 3, qmax=(10.0,) * 3, can_grid_form=True,
                kind="substation_source",
            ),
        ),
        transformers=(TransformerElement(id="t", from_bus="u", to_bus="v", is_distribution_xfmr=True),),
    )


def test_looping_secondary_reported_and_retained():
    net = looping_transformer_net()
    with pytest.warns(UserWarning, match="loops back"):
        reduced = reduce_feeder(net)
    assert len(reduced.transformers) == 1
    assert len(reduced.buses) == 2


def test_non_distribution_transformer_left_alone(reduction_net):
    demoted = reduction_net.replace(
        transformers=tuple(
            TransformerElement(id=t.id, from_bus=t.from_bus, to_bus=t.to_bus,
                               is_distribution_xfmr=False)
            for t in reduction_net.transformers
        )
    )
    reduced = reduce_feeder(demoted)
    assert len(reduced.buses) == len(reduction_net.buses)
    assert len(reduced.transformers) == 3


def test_reduced_network_revalidates(reduction_net):
    # reduce_feeder returns a NetworkModel, so invariants re-run on build
    reduced = reduce_feeder(reduction_net)
    assert reduced.substation_bus.id == "p0"
    for d in reduced.loads:
        assert set(d.phases) <= set(reduced.bus_by_id[d.bus].phases)

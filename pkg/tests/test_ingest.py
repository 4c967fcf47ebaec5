import itertools
import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fixtures import FIG_EDGES, FIG_PATHS, FIG_TIERS, example_network
from sctm.dp import min_seed_set
from sctm.ingest import RawDag, enumerate_paths, ingest, place_tiers, read_raw_csv, read_raw_json
from sctm.network import validate_network


def test_skip_edge_gets_a_dummy():
    net, rep = ingest(RawDag([1, 2, 3], [(1, 2), (1, 3), (2, 3)]))
    assert net.k == 3 and rep.tiers == {1: 1, 2: 2, 3: 3}
    assert rep.dummies == [{"id": 4, "tier": 2, "reason": "edge", "anchor": [1, 3]}]
    assert net.dummies == {4}
    assert set(net.edges) == {(1, 2), (2, 3), (1, 4), (4, 3)}
    assert {p.nodes for p in net.paths} == {(1, 2, 3), (1, 4, 3)}
    assert validate_network(net).ok


def test_chain_and_single_node():
    net, rep = ingest(RawDag([1, 2, 3], [(1, 2), (2, 3)]))
    assert net.k == 3 and not rep.dummies and [p.nodes for p in net.paths] == [(1, 2, 3)]
    net, rep = ingest(RawDag([7], []))
    assert net.k == 1 and rep.tiers == {7: 1} and [p.nodes for p in net.paths] == [(7,)]


def test_late_source_is_padded_from_tier_one():
    net, rep = ingest(RawDag([1, 2, 3, 4], [(1, 2), (2, 3), (4, 3)]))
    assert rep.tiers[4] == 2
    (d,) = rep.dummies
    assert d["reason"] == "source" and d["tier"] == 1 and d["anchor"] == [4]
    assert (d["id"], 4, 3) in {p.nodes for p in net.paths}


def test_isolated_nodes_sit_in_tier_one():
    tiers, k = place_tiers(RawDag([1, 2, 3], [(1, 2)]))
    assert tiers == {1: 1, 2: 2, 3: 1} and k == 2


def test_latest_feasible_placement():
    # 1 feeds both the long chain and the sink directly
    tiers, k = place_tiers(RawDag([1, 2, 3, 4, 5], [(1, 2), (2, 3), (3, 4), (5, 4)]))
    assert k == 4 and tiers[5] == 3 and tiers[1] == 1


def test_canonical_network_is_unchanged():
    base = example_network()
    net, rep = ingest(RawDag.from_network(base))
    assert rep.kept_tiers and not rep.dummies
    assert net == base


def test_ingest_is_idempotent():
    dag = RawDag([1, 2, 3, 4, 5], [(1, 2), (1, 3), (2, 3), (5, 3)])
    once, _ = ingest(dag)
    twice, rep = ingest(RawDag.from_network(once))
    assert twice == once and rep.kept_tiers and not rep.dummies


def test_enumerate_example_paths():
    net, rep = ingest(RawDag(sorted(FIG_TIERS), sorted(FIG_EDGES)))
    assert rep.tiers == FIG_TIERS and not rep.dummies
    assert sorted(p.nodes for p in net.paths) == sorted(FIG_PATHS)


def _layered(b, k):
    nodes = list(range(1, b * k + 1))
    layer = [nodes[l * b:(l + 1) * b] for l in range(k)]
    edges = [(u, v) for l in range(k - 1) for u in layer[l] for v in layer[l + 1]]
    return RawDag(nodes, edges)


def test_complete_layers_and_truncation():
    net, rep = ingest(_layered(3, 4))
    assert len(net.paths) == 3 ** 4 and not rep.truncated
    net, rep = ingest(_layered(3, 4), cap=10)
    assert len(net.paths) == 10 and rep.truncated
    paths, trunc = enumerate_paths(net.k, net.nodes, net.edges, cap=81)
    assert len(paths) == 81 and not trunc


def test_explicit_paths_are_padded():
    dag = RawDag([1, 2, 3], [(1, 2), (1, 3), (2, 3)], paths=[((1, 3), 2)])
    net, _ = ingest(dag)
    assert [(p.nodes, p.flow) for p in net.paths] == [((1, 4, 3), 2)]
    with pytest.raises(ValueError):
        ingest(RawDag([1, 2, 3], [(1, 2)], paths=[((1, 3), 1)]))


def test_cycle_and_unknown_node_errors():
    with pytest.raises(ValueError, match="cycle"):
        ingest(RawDag([1, 2], [(1, 2), (2, 1)]))
    with pytest.raises(ValueError):
        RawDag([1], [(1, 2)])
    with pytest.raises(ValueError):
        RawDag([1, 1], [])


def test_csv_reader_with_labels():
    dag = read_raw_csv(
        "id,cost\nmine,1\nsmelter,2\nplant,\n",
        "src,dst\nmine,smelter\nsmelter,plant\n",
        "path_id,rank,node_id,flow\nA,2,plant,3\nA,0,mine,\nA,1,smelter,\n",
    )
    assert dag.labels == {1: "mine", 2: "smelter", 3: "plant"}
    assert dag.costs == {1: 1, 2: 2}
    assert dag.paths == [((1, 2, 3), 3)]
    with pytest.raises(ValueError):
        read_raw_csv("id\na\n", "src,dst\na,b\n")


def test_json_reader_forms():
    raw = read_raw_json(json.dumps({"nodes": ["a", "b"], "edges": [["a", "b"]]}))
    assert raw.nodes == [1, 2] and raw.edges == [(1, 2)] and raw.labels == {1: "a", 2: "b"}
    canon = read_raw_json(example_network().to_json())
    net, rep = ingest(canon)
    assert net == example_network() and rep.kept_tiers


def _dag(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 7))
    edges = [(a, b) for a in range(1, n + 1) for b in range(a + 1, n + 1) if rng.random() < 0.35]
    return RawDag(list(range(1, n + 1)), edges)


def _maximal_paths(dag):
    succ, pred = dag.successors(), dag.predecessors()
    out = []

    def walk(v, path):
        if not succ[v]:
            out.append(path)
        for w in sorted(succ[v]):
            walk(w, path + (w,))

    for s in dag.nodes:
        if not pred[s]:
            walk(s, (s,))
    # a lone firm in a multi-tier graph is on no chain
    return [p for p in out if len(p) > 1 or not dag.edges]


def _naive_min_seed(dag):
    """Smallest seed on the raw graph with every source-to-sink path as a chain."""
    paths = _maximal_paths(dag)
    for size in range(len(dag.nodes) + 1):
        for seed in itertools.combinations(dag.nodes, size):
            active = set(seed)
            grew = True
            while grew:
                grew = False
                for p in paths:
                    missing = [i for i in p if i not in active]
                    if len(missing) == 1:
                        active.add(missing[0])
                        grew = True
            if len(active) == len(dag.nodes):
                return size


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_padding_preserves_the_optimum(seed):
    dag = _dag(seed)
    net, rep = ingest(dag)
    assert validate_network(net).ok
    real = {p.nodes for p in net.paths}
    stripped = {tuple(i for i in p if i not in net.dummies) for p in real}
    assert stripped == set(_maximal_paths(dag))
    assert min_seed_set(net).opt_size == _naive_min_seed(dag)

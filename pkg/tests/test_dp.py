import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fixtures import AUX, P2, P3, P4, example_decomposition, example_network, random_instance, single_path
from sctm.auxgraph import build_aux_epsilon
from sctm.dp import (
    SolverConfig, count_orders, fold_edge, join_reductions, join_step, leaf_table, min_seed_set, order_space,
    replace_intro, replace_step, split_map,
)
from sctm.errors import MemoryBudgetExceeded
from sctm.network import SupplyChainNetwork
from sctm.oracle import brute_force_min_seed, verify_seed
from sctm.treedec import JOIN, LEAF, to_nice

GLOBAL = SolverConfig(ranges="global")


@pytest.fixture(scope="module")
def aux():
    return build_aux_epsilon(example_network())


def _orig(aux, entry):
    size, seeds = entry
    return None if size is None else aux.to_original(seeds)


def test_order_counts():
    assert [count_orders(w, "strict") for w in range(1, 5)] == [1, 2, 6, 24]
    assert [count_orders(w, "weak") for w in range(1, 5)] == [1, 3, 13, 75]
    for w in range(1, 5):
        assert len(order_space(w, "weak")) == count_orders(w, "weak")


def test_config_rejects_unknown_options():
    with pytest.raises(ValueError):
        SolverConfig(orders="partial")
    with pytest.raises(ValueError):
        SolverConfig(ranges="none")
    with pytest.raises(ValueError):
        SolverConfig(mem_budget=0)


def test_leaf_entries(aux):
    leaf = leaf_table(aux, (P3, AUX["4"], AUX["7"]), GLOBAL)
    assert _orig(aux, leaf.entry((1, 1, 0), (1, 2, 0))) == set()
    assert _orig(aux, leaf.entry((1, 1, 3), (1, 2, 0))) == {7}
    # the path-node comes first with a positive threshold: infeasible
    assert leaf.entry((1, 1, 3), (0, 2, 1)) == (None, None)


def test_leaf_index_errors(aux):
    leaf = leaf_table(aux, (P3, AUX["4"], AUX["7"]), SolverConfig())
    with pytest.raises(IndexError):
        leaf.entry((4, 0, 0), (0, 1, 2))
    with pytest.raises(KeyError):
        leaf.entry((0, 0, 0), (0, 0, 1))


def test_replace_lookup(aux):
    leaf = leaf_table(aux, (P3, AUX["4"], AUX["7"]), GLOBAL)
    tab = replace_intro(aux, leaf, P4, AUX["4"], GLOBAL)
    assert tab.bag == (P3, P4, AUX["7"])
    assert _orig(aux, tab.entry((1, 0, 3), (1, 2, 0))) == {7}


def test_fold_edge_lookup(aux):
    leaf = leaf_table(aux, (P3, AUX["4"], AUX["7"]), GLOBAL)
    before = replace_intro(aux, leaf, P4, AUX["4"], GLOBAL)
    after = fold_edge(aux, before, P4, AUX["7"], GLOBAL)
    assert aux.w(P4, AUX["7"]) == 1
    # the later endpoint 7 has its requirement lowered by one
    assert after.entry((1, 0, 3), (1, 0, 2)) == before.entry((1, 0, 2), (1, 0, 2))
    # p4 comes later but its requirement is already zero
    assert after.entry((1, 0, 3), (1, 2, 0)) == before.entry((1, 0, 3), (1, 2, 0))
    # simultaneous endpoints do not interact
    weak = SolverConfig(ranges="global", orders="weak")
    b = replace_intro(aux, leaf_table(aux, (P3, AUX["4"], AUX["7"]), weak), P4, AUX["4"], weak)
    a = fold_edge(aux, b, P4, AUX["7"], weak)
    assert a.entry((1, 0, 3), (1, 0, 0)) == b.entry((1, 0, 3), (1, 0, 0))


def test_join_split_constraint(aux):
    bag = (P3, P4, AUX["7"])
    space = order_space(3, "strict")
    o = space.lookup((1, 2, 0))
    red = join_reductions(aux, bag, GLOBAL)[o]
    assert tuple(red) == (1, 1, 0)
    c = np.array([1, 0, 3])
    assert tuple(c + red) == (2, 1, 3)
    R = (3, 3, 3)
    gm = split_map(R, join_reductions(aux, bag, GLOBAL), clamp=False)
    for s, (cs, T) in enumerate(zip(c, c + red)):
        for f in range(4):
            g = gm[o, s, cs, f]
            assert g == (T - f if 0 <= T - f <= 3 else -1)


def _subtree_table(aux, ntd, zid, config):
    z = ntd.nodes[zid]
    if z.kind == LEAF:
        return leaf_table(aux, z.bag, config)
    if z.kind == JOIN:
        kids = [_subtree_table(aux, ntd, c, config) for c in z.children]
        return join_step(aux, kids[0], kids[1], z.bag, config)
    return replace_step(aux, _subtree_table(aux, ntd, z.children[0], config), z.u, z.v, config)


def test_join_synergy(aux):
    """The cheapest union is not the union of the cheapest children."""
    ntd = to_nice(example_decomposition(), root=5)
    z = next(z for z in ntd.nodes if z.kind == JOIN and set(z.bag) == {P2, P3, AUX["9"]})
    # p3 first, then 9, then p2; requirements p2:1, p3:0, 9:2
    rank = {P3: 0, AUX["9"]: 1, P2: 2}
    need = {P2: 1, P3: 0, AUX["9"]: 2}
    a = tuple(rank[x] for x in z.bag)
    c = tuple(need[x] for x in z.bag)
    kids = [_subtree_table(aux, ntd, ch, GLOBAL) for ch in z.children]
    assert sorted(_orig(aux, t.entry(c, a)) for t in kids) == [{5}, {9}]
    joined = join_step(aux, kids[0], kids[1], z.bag, GLOBAL)
    assert _orig(aux, joined.entry(c, a)) == {9}


def test_join_both_infeasible_stays_infeasible(aux):
    bag = (P3, AUX["4"], AUX["7"])
    leaf = leaf_table(aux, bag, GLOBAL)
    joined = join_step(aux, leaf, leaf, bag, GLOBAL)
    assert leaf.entry((1, 1, 3), (0, 2, 1)) == (None, None)
    assert joined.entry((1, 1, 3), (0, 2, 1)) == (None, None)


def test_join_rejects_mismatched_bags(aux):
    a = leaf_table(aux, (P3, AUX["4"], AUX["7"]), GLOBAL)
    b = leaf_table(aux, (AUX["4"], P3, AUX["7"]), GLOBAL)
    with pytest.raises(ValueError):
        join_step(aux, a, b, a.bag, GLOBAL)


@pytest.mark.parametrize(
    "config",
    [SolverConfig(), GLOBAL, SolverConfig(orders="weak"), SolverConfig(orders="weak", ranges="global")],
)
def test_example_optimum(config):
    res = min_seed_set(example_network(), config)
    assert res.opt_size == 5
    assert verify_seed(example_network(), res.seed)


def test_example_with_supplied_decomposition():
    res = min_seed_set(example_network(), td=example_decomposition(), root=0)
    assert res.opt_size == 5 and res.diagnostics["omega"] == 3


def test_invalid_supplied_decomposition():
    td = example_decomposition()
    del td.bags[8]
    td.tree_edges = [e for e in td.tree_edges if 8 not in e]
    with pytest.raises(ValueError):
        min_seed_set(example_network(), td=td)


@pytest.mark.parametrize("k,expected", [(2, 1), (3, 2), (5, 4)])
def test_single_path(k, expected):
    assert min_seed_set(single_path(k)).opt_size == expected


def test_two_tier_components():
    tiers = {1: 1, 2: 1, 3: 1, 4: 2, 5: 2, 6: 2}
    paths = [((1, 4), "1"), ((2, 4), "1"), ((3, 5), "1"), ((3, 6), "2")]
    net = SupplyChainNetwork.build(2, tiers, {p for p, _ in paths} | {(1, 5)}, paths)
    # {1,2,4} and {3,5,6} plus the path-less pairing 1-5 does not merge them
    assert min_seed_set(net).opt_size == 2
    lone = SupplyChainNetwork.build(2, {**tiers, 7: 1}, {p for p, _ in paths}, paths)
    assert min_seed_set(lone).opt_size == 3


def test_single_tier_counts_pathless_nodes():
    net = SupplyChainNetwork.build(1, {1: 1, 2: 1, 3: 1}, set(), [((1,), "1")])
    res = min_seed_set(net)
    assert res.opt_size == 2 and res.seed == {2, 3}


def test_memory_budget():
    with pytest.raises(MemoryBudgetExceeded) as err:
        min_seed_set(example_network(), SolverConfig(mem_budget=1000))
    assert err.value.estimated_bytes > 1000


def test_parallel_matches_sequential():
    rng = np.random.default_rng(11)
    for _ in range(5):
        net = random_instance(rng, 10, 3, 4)
        a = min_seed_set(net, SolverConfig())
        b = min_seed_set(net, SolverConfig(parallel=True, workers=2))
        assert a.opt_size == b.opt_size


def test_diagnostics_shape():
    d = min_seed_set(example_network()).to_dict()
    assert set(d) == {"opt_size", "seed", "forced", "dummies", "omega", "c_max", "wall_ms"}
    assert d["opt_size"] == len(d["seed"]) == 5


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.booleans())
def test_solver_matches_brute_force(seed, general):
    rng = np.random.default_rng(seed)
    n, k = int(rng.integers(4, 10)), int(rng.integers(2, 5))
    net = random_instance(rng, n, k, int(rng.integers(1, 5)), general=general, zero_flow=0.1)
    mode = "general" if general else "eps"
    res = min_seed_set(net, SolverConfig(mode=mode))
    assert res.opt_size == brute_force_min_seed(net, mode)[0]
    assert verify_seed(net, res.seed, mode)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_order_and_range_variants_agree(seed):
    rng = np.random.default_rng(seed)
    net = random_instance(rng, int(rng.integers(4, 9)), 3, int(rng.integers(1, 4)))
    sizes = {
        min_seed_set(net, SolverConfig(orders=o, ranges=r)).opt_size
        for o, r in itertools.product(("strict", "weak"), ("per-slot", "global"))
    }
    assert len(sizes) == 1

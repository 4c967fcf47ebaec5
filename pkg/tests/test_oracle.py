import numpy as np
import pytest

from fixtures import example_network, random_instance, single_path
from sctm.dynamics import simulate
from sctm.errors import CapExceeded
from sctm.network import SupplyChainNetwork
from sctm.oracle import (
    CBlock, LineBlock, Linkage, brute_force_min_seed, build_gadget_graph, solve_k_le_2, verify_seed,
)


def test_example_optimum():
    size, seed = brute_force_min_seed(example_network())
    assert size == 5 and verify_seed(example_network(), seed)


def test_single_path():
    assert brute_force_min_seed(single_path(4))[0] == 3


def test_cap_exceeded():
    with pytest.raises(CapExceeded):
        brute_force_min_seed(example_network(), size_cap=4)


def test_forced_nodes_are_counted():
    net = SupplyChainNetwork.build(2, {1: 1, 2: 2, 3: 1}, {(1, 2)}, [((1, 2), "1")])
    size, seed = brute_force_min_seed(net)
    assert size == 2 and 3 in seed


def test_dummies_are_free():
    net = SupplyChainNetwork.build(3, {1: 1, 2: 2, 3: 3}, {(1, 2), (2, 3)}, [((1, 2, 3), "1")], dummies={2})
    size, seed = brute_force_min_seed(net)
    assert size == 1 and 2 not in seed


def test_verify_seed_agrees_with_simulate():
    net = example_network()
    for seed in ({3, 6, 8, 4, 7}, {2, 4, 7}, set(range(1, 10))):
        final, _ = simulate(net, seed, "eps")
        assert verify_seed(net, seed) == (len(final) == net.n)


def test_closed_form_small_cases():
    net = SupplyChainNetwork.build(1, {1: 1, 2: 1}, set(), [((1,), "1")])
    assert solve_k_le_2(net) == 1
    tiers = {1: 1, 2: 1, 3: 2, 4: 2, 5: 2}
    paths = [((1, 3), "1"), ((2, 4), "1"), ((1, 4), "0")]
    net = SupplyChainNetwork.build(2, tiers, {p for p, _ in paths}, paths)
    # zero-flow paths do not join components; 5 sits on no path
    assert solve_k_le_2(net) == 3
    with pytest.raises(ValueError):
        solve_k_le_2(example_network())


def test_closed_form_matches_brute_force():
    rng = np.random.default_rng(2024)
    for _ in range(50):
        net = random_instance(rng, int(rng.integers(3, 12)), 2, int(rng.integers(1, 7)), zero_flow=0.2)
        assert solve_k_le_2(net) == brute_force_min_seed(net)[0]


def _pair(kind):
    return build_gadget_graph([CBlock("C"), LineBlock("V")], [Linkage(kind, "C", "V")])


def _spread(g, label):
    final, _ = simulate(g.net, g.block(label), "eps")
    return {g.name_of[i] for i in final - g.block(label)}


def test_bidirectional_link_is_mutual():
    g = _pair("bidir")
    assert _spread(g, "C") == {"1@V", "2@V", "3@V"}
    assert _spread(g, "V") == {f"{i}@C" for i in range(1, 6)}


def test_left_link_needs_the_line_tail():
    g = _pair("L")
    # the only new chain through 2@V also runs through 3@V
    assert _spread(g, "C") == set()
    _, traj = simulate(g.net, g.block("C") | g.ids("3@V"), "eps")
    assert {g.name_of[i] for i in traj[1] - traj[0]} == {"2@V"}


def test_right_link_activates_line_tail():
    g = _pair("R")
    assert _spread(g, "C") == {"3@V"}
    assert _spread(g, "V") == set()


def test_both_links():
    g = _pair("LR")
    assert _spread(g, "C") == {"1@V", "2@V", "3@V"}
    assert _spread(g, "V") == {"4@C"}


def test_gadget_validation():
    with pytest.raises(ValueError):
        build_gadget_graph([LineBlock("A"), LineBlock("A")])
    with pytest.raises(ValueError):
        build_gadget_graph([LineBlock("A"), LineBlock("B")], [Linkage("L", "A", "B")])
    with pytest.raises(ValueError):
        build_gadget_graph([CBlock("A"), LineBlock("B")], [Linkage("X", "A", "B")])


def test_gadget_network_shape():
    g = build_gadget_graph([CBlock("C"), LineBlock("U"), LineBlock("V")],
                           [Linkage("bidir", "C", "U"), Linkage("LR", "C", "V")])
    assert g.net.k == 3 and g.net.n == 11
    assert all(p.flow == 1 for p in g.net.paths)
    assert g.ids("2@U") == {g.id_of["2@U"]}

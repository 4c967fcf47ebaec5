"""Shared small networks."""

from sctm.network import SupplyChainNetwork

FIG_TIERS = {1: 1, 2: 1, 3: 2, 4: 2, 5: 2, 6: 3, 7: 3, 8: 4, 9: 4}
FIG_PATHS = [(1, 3, 6, 8), (1, 3, 6, 9), (2, 4, 7, 9), (2, 5, 7, 9)]
FIG_EDGES = {(1, 3), (3, 6), (6, 8), (6, 9), (2, 4), (2, 5), (4, 7), (5, 7), (7, 9)}


def example_network(costs=None, flows=None):
    flows = flows or [1, 1, 1, 1]
    return SupplyChainNetwork.build(
        4, FIG_TIERS, FIG_EDGES, [(p, f) for p, f in zip(FIG_PATHS, map(str, flows))], costs=costs
    )


def single_path(k):
    tiers = {i + 1: i + 1 for i in range(k)}
    p = tuple(range(1, k + 1))
    return SupplyChainNetwork.build(k, tiers, set(zip(p, p[1:])), [p])


def random_instance(rng, n, k, m, general=False, zero_flow=0.0, extra_edges=0, max_flow=2, max_cost=3):
    """Random tiered network; in general mode costs never exceed incident flow."""
    tiers = {}
    ids = list(range(1, n + 1))
    for t in range(1, k + 1):
        tiers[ids[t - 1]] = t
    for i in ids[k:]:
        tiers[i] = int(rng.integers(1, k + 1))
    by_tier = {t: [i for i in ids if tiers[i] == t] for t in range(1, k + 1)}
    paths = []
    for _ in range(m):
        p = tuple(int(rng.choice(by_tier[t])) for t in range(1, k + 1))
        if general:
            f = 0 if rng.random() < zero_flow else int(rng.integers(1, max_flow + 1))
        else:
            f = 0 if rng.random() < zero_flow else 1
        paths.append((p, str(f)))
    edges = set()
    for p, _ in paths:
        edges.update(zip(p, p[1:]))
    for _ in range(extra_edges):
        t = int(rng.integers(1, k)) if k > 1 else None
        if t is not None:
            edges.add((int(rng.choice(by_tier[t])), int(rng.choice(by_tier[t + 1]))))
    costs = None
    if general:
        inc = {i: 0 for i in ids}
        for p, f in paths:
            for i in p:
                inc[i] += int(f)
        costs = {i: int(rng.integers(0, min(inc[i], max_cost) + 1)) for i in ids}
    return SupplyChainNetwork.build(k, tiers, edges, paths, costs=costs)


# Auxiliary-graph ids of the example network in epsilon mode: path-nodes come
# first in path order, then node-nodes in block order.
P1, P2, P3, P4 = 0, 1, 2, 3
AUX = {"1": 4, "36": 5, "2": 6, "7": 7, "4": 8, "5": 9, "8": 10, "9": 11}


def example_decomposition():
    """Width-2 decomposition of the example aux graph.

    Top bag {9, p3, p4}; the p3/p4 side runs through {p3, p4, 2} and
    {p3, p4, 7} down to {p3, 4, 7} and {p4, 5, 7}; the p1/p2 side hangs off
    {p2, p3, 9}.
    """
    from sctm.treedec import TreeDecomposition

    a = AUX
    bags = {
        0: {a["9"], P3, P4},
        1: {P3, P4, a["2"]},
        2: {P3, P4, a["7"]},
        3: {P3, a["4"], a["7"]},
        4: {P4, a["5"], a["7"]},
        5: {P2, P3, a["9"]},
        6: {P1, P2, a["36"]},
        7: {P1, P2, a["1"]},
        8: {P1, a["8"], a["36"]},
    }
    edges = [(0, 1), (1, 2), (2, 3), (2, 4), (0, 5), (5, 6), (6, 7), (6, 8)]
    return TreeDecomposition(bags, edges)

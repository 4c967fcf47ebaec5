"""Random tiered supply chain networks from a one-dimensional specialisation model.

Every firm gets a position in [0, 1] in its own tier; every product gets a
position too, and its supply chain is the closest firm in each tier. The same
positions also define a deterministic worst-case network that contains every
realisation. Statistics used to judge how realistic the output looks live
here as well.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass

import networkx as nx
import numpy as np
from scipy.stats import wasserstein_distance

from .auxgraph import NODE, PATH, AuxiliaryGraph, AuxNode
from .network import CostMode, Node, Path, SupplyChainNetwork
from .treedec import decompose


@dataclass(frozen=True)
class RandomModelConfig:
    n: int
    k: int
    m: int | None = None
    alpha: float | None = None
    tier_sizes: tuple | None = None
    seed: int = 0

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be at least 1")
        if (self.m is None) == (self.alpha is None):
            raise ValueError("give exactly one of m and alpha")
        if self.tier_sizes is not None:
            if len(self.tier_sizes) != self.k or sum(self.tier_sizes) != self.n:
                raise ValueError("tier_sizes must have k entries summing to n")
            if min(self.tier_sizes) < 1:
                raise ValueError("every tier needs at least one firm")
        elif self.n < self.k:
            raise ValueError("need at least one firm per tier")
        if self.paths < 1:
            raise ValueError("m must be at least 1")

    @property
    def paths(self) -> int:
        return self.m if self.m is not None else int(round(self.n ** self.alpha))

    @property
    def sizes(self) -> tuple:
        if self.tier_sizes is not None:
            return tuple(self.tier_sizes)
        q, r = divmod(self.n, self.k)
        return tuple(q + (1 if l < r else 0) for l in range(self.k))


def _ids(sizes):
    """Firm ids per tier: tier ``l`` holds a consecutive block starting after tier ``l-1``."""
    out, start = [], 1
    for s in sizes:
        out.append(np.arange(start, start + s))
        start += s
    return out


def nearest(sorted_pos, z):
    """Index of the closest position for each query (positions sorted)."""
    mids = (sorted_pos[:-1] + sorted_pos[1:]) / 2
    return np.searchsorted(mids, z)


def _network(k, sizes, ids, tuples):
    counts = Counter(tuples)
    paths = [Path(p, c) for p, c in sorted(counts.items())]
    edges = {(a, b) for p in counts for a, b in zip(p, p[1:])}
    nodes = [Node(int(i), l + 1, 1) for l in range(k) for i in ids[l]]
    return SupplyChainNetwork(k, nodes, edges, paths)


@dataclass
class GeneratedInstance:
    config: RandomModelConfig
    positions: list
    z: np.ndarray
    choice: np.ndarray  # (m, k) index of the chosen firm per tier
    network: SupplyChainNetwork
    aux: AuxiliaryGraph

    @property
    def path_tuples(self) -> list:
        """One firm-id tuple per product, duplicates kept."""
        ids = _ids(self.config.sizes)
        return [tuple(int(ids[l][j]) for l, j in enumerate(row)) for row in self.choice]


def _direct_aux(k, ids, tuples):
    nodes = [AuxNode(j, PATH, p, k - 1) for j, p in enumerate(tuples)]
    index = {}
    used = {i for p in tuples for i in p}
    for tier in ids:
        for i in tier:
            index[int(i)] = len(nodes)
            nodes.append(AuxNode(len(nodes), NODE, (int(i),), 1 if int(i) in used else 0))
    weight = {}
    for j, p in enumerate(tuples):
        for i in p:
            weight[(j, index[i])] = 1
            weight[(index[i], j)] = 1
    return AuxiliaryGraph(k, CostMode.EPSILON, nodes, weight)


def generate(config: RandomModelConfig, samplers=None) -> GeneratedInstance:
    """Draw one instance.

    ``samplers`` optionally maps a tier index to ``f(rng, size)`` returning
    positions in [0, 1]; the default is uniform.
    """
    rng = np.random.default_rng(config.seed)
    sizes = config.sizes
    z = rng.random(config.paths)
    positions = []
    for l, s in enumerate(sizes):
        draw = (samplers or {}).get(l)
        positions.append(np.sort(draw(rng, s) if draw else rng.random(s)))
    choice = np.stack([nearest(pos, z) for pos in positions], axis=1)
    ids = _ids(sizes)
    tuples = [tuple(int(ids[l][j]) for l, j in enumerate(row)) for row in choice]
    net = _network(config.k, sizes, ids, tuples)
    return GeneratedInstance(config, positions, z, choice, net, _direct_aux(config.k, ids, tuples))


@dataclass
class WorstCaseGraph:
    positions: list
    switch_points: list
    intervals: list
    interval_paths: list  # one firm-id tuple per interval
    network: SupplyChainNetwork
    collisions: int = 0

    @property
    def paths(self) -> set:
        return {p.nodes for p in self.network.paths}


def worst_case(positions) -> WorstCaseGraph:
    """Supergraph of every realisation over fixed firm positions.

    Switch points (midpoints between neighbouring firms of one tier) cut
    [0, 1] into intervals; all products in one interval share their supply
    chain, so each interval contributes one path.
    """
    positions = [np.sort(np.asarray(p, dtype=float)) for p in positions]
    k = len(positions)
    sizes = tuple(len(p) for p in positions)
    switch = [(p[:-1] + p[1:]) / 2 for p in positions]
    allpts = np.concatenate([np.zeros(1), *switch, np.ones(1)])
    cuts = np.unique(allpts)
    collisions = len(allpts) - len(cuts)
    intervals = list(zip(cuts[:-1], cuts[1:]))
    reps = np.array([(a + b) / 2 for a, b in intervals])
    ids = _ids(sizes)
    choice = np.stack([nearest(pos, reps) for pos in positions], axis=1)
    tuples = [tuple(int(ids[l][j]) for l, j in enumerate(row)) for row in choice]
    net = _network(k, sizes, ids, tuples)
    return WorstCaseGraph(positions, switch, intervals, tuples, net, collisions)


def is_subnetwork(small: SupplyChainNetwork, big: SupplyChainNetwork) -> bool:
    """Nodes, edges and path tuples of ``small`` all appear in ``big``."""
    return (
        set(small.node_ids) <= set(big.node_ids)
        and set(small.edges) <= set(big.edges)
        and {p.nodes for p in small.paths} <= {p.nodes for p in big.paths}
    )


# Statistics ------------------------------------------------------------------


def wasserstein_1d(a, b) -> float:
    if len(a) == 0 or len(b) == 0:
        raise ValueError("wasserstein distance needs nonempty samples")
    return float(wasserstein_distance(a, b))


def _preds(net):
    pred = {i: set() for i in net.node_ids}
    for a, b in net.edges:
        pred[b].add(a)
    return pred


def diamond_scale(net: SupplyChainNetwork, focal, pred=None) -> float:
    """Supplier-to-second-tier links per distinct second-tier supplier.

    Equals 1 when no second-tier supplier serves two direct suppliers of the
    focal firm and grows with sharing.
    """
    pred = pred or _preds(net)
    if net.tier[focal] < 3:
        raise ValueError(f"node {focal} has no second upstream tier")
    links = [(s, t) for s in pred[focal] for t in pred[s]]
    second = {t for _, t in links}
    if not second:
        raise ValueError(f"node {focal} has no second-tier suppliers")
    return len(links) / len(second)


def diamond_scale_stats(net: SupplyChainNetwork):
    """``(mean, std, values)`` over every eligible focal firm; ``None`` stats if none."""
    pred = _preds(net)
    vals = []
    for i in net.node_ids:
        if net.tier[i] >= 3 and any(pred[s] for s in pred[i]):
            vals.append(diamond_scale(net, i, pred))
    if not vals:
        return None, None, []
    return float(np.mean(vals)), float(np.std(vals)), vals


def to_digraph(net: SupplyChainNetwork) -> nx.DiGraph:
    g = nx.DiGraph()
    g.add_nodes_from(net.node_ids)
    g.add_edges_from(net.edges)
    return g


def modularity(net: SupplyChainNetwork):
    """Greedy directed-modularity communities; returns ``(Q, communities)``.

    Firms without any edge are left out, since they carry no information
    about community structure.
    """
    if not net.edges:
        raise ValueError("modularity needs at least one edge")
    g = to_digraph(net)
    g.remove_nodes_from([v for v in list(g) if g.degree(v) == 0])
    comms = [set(c) for c in nx.community.greedy_modularity_communities(g)]
    return float(nx.community.modularity(g, comms)), comms


def _pearson(x, y):
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if len(x) < 2 or x.std() == 0 or y.std() == 0:
        return None
    return float(np.corrcoef(x, y)[0, 1])


ASSORTATIVITY_KEYS = ("in_in", "in_out", "out_in", "out_out", "paths")


def assortativity(net: SupplyChainNetwork) -> dict:
    """Edge correlations between supplier and buyer attributes.

    ``out_in`` pairs the supplier's out-degree with the buyer's in-degree and
    so on; ``paths`` correlates the number of supply chains through each end.
    Coefficients with zero variance on either side are ``None``.
    """
    if len(net.edges) < 2:
        raise ValueError("assortativity needs at least two edges")
    deg = {"in": net.in_degree(), "out": net.out_degree()}
    count = {i: 0 for i in net.node_ids}
    for p in net.paths:
        for i in p.nodes:
            count[i] += p.flow
    edges = sorted(net.edges)
    out = {}
    for key in ASSORTATIVITY_KEYS[:4]:
        a, b = key.split("_")
        out[key] = _pearson([deg[a][u] for u, _ in edges], [deg[b][v] for _, v in edges])
    out["paths"] = _pearson([float(count[u]) for u, _ in edges], [float(count[v]) for _, v in edges])
    return out


# Experiments -----------------------------------------------------------------


def child_seed(seed, *index) -> int:
    """Deterministic 64-bit seed for replication ``index`` of master ``seed``."""
    return int(np.random.SeedSequence([seed, *index]).generate_state(1, dtype=np.uint64)[0])


def perturbed_sizes(n, k, rng, p_remove, fractions=(0.5, 0.9)) -> tuple:
    """Uneven tier sizes.

    Each tier independently loses, with probability ``p_remove``, a share of
    its firms drawn from ``fractions``; the removed firms are reassigned to
    uniformly random tiers. Every tier keeps at least one firm.
    """
    base = RandomModelConfig(n, k, m=1).sizes
    sizes = list(base)
    pool = 0
    for l in range(k):
        if rng.random() < p_remove:
            frac = fractions[int(rng.integers(len(fractions)))]
            cut = min(int(round(sizes[l] * frac)), sizes[l] - 1)
            sizes[l] -= cut
            pool += cut
    for t in rng.integers(0, k, size=pool):
        sizes[int(t)] += 1
    return tuple(sizes)


def fit_alpha(net: SupplyChainNetwork, alpha_grid, reps=5, seed=0):
    """Pick the path exponent whose generated degree distributions match ``net`` best.

    Returns ``(alpha_in, alpha_out, dist_in, dist_out)`` with the distance
    curves aligned to ``alpha_grid``.
    """
    grid = list(alpha_grid)
    if not grid or reps < 1:
        raise ValueError("need a nonempty grid and reps >= 1")
    sizes = tuple(sum(1 for i in net.node_ids if net.tier[i] == l) for l in range(1, net.k + 1))
    target_in = list(net.in_degree().values())
    target_out = list(net.out_degree().values())
    d_in, d_out = [], []
    for g, a in enumerate(grid):
        pin, pout = [], []
        for r in range(reps):
            cfg = RandomModelConfig(net.n, net.k, alpha=a, tier_sizes=sizes, seed=child_seed(seed, g, r))
            gen = generate(cfg).network
            pin += list(gen.in_degree().values())
            pout += list(gen.out_degree().values())
        d_in.append(wasserstein_1d(target_in, pin))
        d_out.append(wasserstein_1d(target_out, pout))
    return grid[int(np.argmin(d_in))], grid[int(np.argmin(d_out))], d_in, d_out


def treewidth_bound(n, k, m) -> float:
    return k * (m / n) * math.log(n)


def treewidth_experiment(grid, reps, seed=0, heuristic="min-fill") -> list:
    """Heuristic aux-graph width against ``k (m/n) ln n`` for each ``(n, k, alpha)``."""
    rows = []
    for c, (n, k, alpha) in enumerate(grid):
        m = int(math.ceil(n ** alpha))
        for r in range(reps):
            inst = generate(RandomModelConfig(n, k, m=m, seed=child_seed(seed, c, r)))
            aux = inst.aux
            td = decompose(range(len(aux.nodes)), aux.undirected_edges(), heuristic)
            rows.append({"n": n, "k": k, "alpha": alpha, "m": m, "rep": r,
                         "width": td.width, "bound": treewidth_bound(n, k, m)})
    return rows


def group_sizes(communities) -> list:
    return [len(c) for c in communities]


STATS_FIELDS = ("n", "k", "p_remove", "alpha", "rep", "m", "diamond_mean", "diamond_std",
                "modularity", "group_median", *ASSORTATIVITY_KEYS)


def stats_protocol(ns, ks, p_removes, alphas, reps, seed=0, with_modularity=True) -> list:
    """Realism statistics over a grid of network structures and path exponents.

    One row per generated network; see ``STATS_FIELDS``.
    """
    rows = []
    combos = [(n, k, p) for n in ns for k in ks for p in p_removes]
    for c, (n, k, p) in enumerate(combos):
        for ai, a in enumerate(alphas):
            for r in range(reps):
                rng = np.random.default_rng(child_seed(seed, c, ai, r))
                sizes = perturbed_sizes(n, k, rng, p)
                cfg = RandomModelConfig(n, k, alpha=a, tier_sizes=sizes, seed=int(rng.integers(2**63)))
                net = generate(cfg).network
                mean, std, _ = diamond_scale_stats(net)
                row = {"n": n, "k": k, "p_remove": p, "alpha": a, "rep": r, "m": cfg.paths,
                       "diamond_mean": mean, "diamond_std": std}
                if with_modularity and net.edges:
                    q, comms = modularity(net)
                    row["modularity"] = q
                    row["group_median"] = float(np.median(group_sizes(comms)))
                else:
                    row["modularity"] = row["group_median"] = None
                row.update(assortativity(net) if len(net.edges) >= 2 else dict.fromkeys(ASSORTATIVITY_KEYS))
                rows.append(row)
    return rows

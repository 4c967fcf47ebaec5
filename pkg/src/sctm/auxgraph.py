"""Bipartite auxiliary graph of path-nodes and node-nodes.

A path-node stands for one supply chain and needs ``k - 1`` weight from active
neighbours. A node-node stands for a group of original firms that share exactly
the same supply chains. Only node-nodes may be seeded, and seeding one costs
``len(cont)`` original firms.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from functools import cached_property

from .network import CostMode, SupplyChainNetwork, is_integral, validate_network
from .errors import NetworkValidationError

PATH = "path"
NODE = "node"


@dataclass(frozen=True)
class AuxNode:
    id: int
    kind: str
    cont: tuple
    threshold: int
    path: int | None = None

    @property
    def seedable(self) -> bool:
        return self.kind == NODE

    @property
    def size(self) -> int:
        return len(self.cont)


@dataclass
class AuxiliaryGraph:
    """Weighted threshold graph; ``weight[(a, b)]`` is what active ``a`` gives ``b``."""

    k: int
    mode: CostMode
    nodes: list
    weight: dict
    forced: frozenset = frozenset()
    preseeded: frozenset = frozenset()

    @cached_property
    def neighbors(self) -> list:
        adj = [set() for _ in self.nodes]
        for a, b in self.weight:
            adj[a].add(b)
            adj[b].add(a)
        return [sorted(s) for s in adj]

    @cached_property
    def in_edges(self) -> list:
        inc = [[] for _ in self.nodes]
        for (a, b), w in sorted(self.weight.items()):
            inc[b].append((a, w))
        return inc

    @property
    def path_nodes(self):
        return [x for x in self.nodes if x.kind == PATH]

    @property
    def node_nodes(self):
        return [x for x in self.nodes if x.kind == NODE]

    def undirected_edges(self) -> list:
        return sorted({(min(a, b), max(a, b)) for a, b in self.weight})

    def w(self, a, b) -> int:
        return self.weight.get((a, b), 0)

    @property
    def thresholds(self) -> list:
        return [x.threshold for x in self.nodes]

    def c_max(self) -> int:
        return max((x.threshold for x in self.nodes), default=0)

    def node_of(self) -> dict:
        """Map original node id to the node-node containing it."""
        out = {}
        for x in self.node_nodes:
            for i in x.cont:
                out[i] = x.id
        return out

    def to_original(self, aux_ids) -> set:
        """Original firms represented by the node-nodes among ``aux_ids``."""
        out = set()
        for a in aux_ids:
            if self.nodes[a].kind == NODE:
                out.update(self.nodes[a].cont)
        return out

    def to_dict(self) -> dict:
        return {
            "k": self.k,
            "mode": self.mode.value,
            "nodes": [
                {"id": x.id, "kind": x.kind, "cont": list(x.cont), "threshold": x.threshold}
                | ({"path": x.path} if x.path is not None else {})
                for x in self.nodes
            ],
            "edges": [[a, b, w] for (a, b), w in sorted(self.weight.items())],
            "forced": sorted(self.forced),
            "preseeded": sorted(self.preseeded),
        }

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)

    @classmethod
    def from_dict(cls, d) -> "AuxiliaryGraph":
        nodes = [AuxNode(x["id"], x["kind"], tuple(x["cont"]), x["threshold"], x.get("path")) for x in d["nodes"]]
        weight = {(a, b): w for a, b, w in d["edges"]}
        return cls(d["k"], CostMode.parse(d["mode"]), nodes, weight,
                   frozenset(d.get("forced", ())), frozenset(d.get("preseeded", ())))

    def to_gr(self) -> str:
        from .treedec import write_gr

        return write_gr(len(self.nodes), self.undirected_edges())


def partition_nodes(net: SupplyChainNetwork, positive_only=True) -> list:
    """Group nodes by identical path membership.

    Returns ``(block, path_indices, pathless)`` triples in order of first
    appearance. Nodes on no (positive-flow) path each form their own block.
    """
    groups: dict = {}
    out = []
    for n in net.nodes:
        ps = tuple(r for r in net.paths_through[n.id] if not positive_only or net.paths[r].flow > 0)
        if not ps:
            out.append(([n.id], (), True))
            continue
        if ps in groups:
            out[groups[ps]][0].append(n.id)
        else:
            groups[ps] = len(out)
            out.append(([n.id], ps, False))
    return [(tuple(b), ps, pl) for b, ps, pl in out]


def _path_nodes(net):
    nodes, index = [], {}
    for r, p in enumerate(net.paths):
        if p.flow > 0:
            index[r] = len(nodes)
            nodes.append(AuxNode(len(nodes), PATH, tuple(p.nodes), net.k - 1, r))
    return nodes, index


def _forced(net, mode):
    rep = validate_network(net, mode)
    if not rep.ok:
        raise NetworkValidationError(rep)
    return rep.forced_seeds


def build_aux_epsilon(net: SupplyChainNetwork) -> AuxiliaryGraph:
    forced = _forced(net, CostMode.EPSILON)
    preset = set(forced) | set(net.dummies)
    nodes, pidx = _path_nodes(net)
    weight = {}

    def add(cont, thr, ps, out_w=None):
        a = len(nodes)
        nodes.append(AuxNode(a, NODE, tuple(sorted(cont)), thr))
        wt = len(cont) if out_w is None else out_w
        for r in ps:
            weight[(a, pidx[r])] = wt
            weight[(pidx[r], a)] = wt

    for block, ps, pathless in partition_nodes(net):
        if pathless:
            add(block, 0, ())
            continue
        pre = [i for i in block if i in preset]
        rest = [i for i in block if i not in preset]
        if pre:
            add(pre, 0, ps)
        if rest:
            first = min(rest)
            add([first], 1, ps)
            others = [i for i in rest if i != first]
            if others:
                add(others, len(others), ps)
    return AuxiliaryGraph(net.k, CostMode.EPSILON, nodes, weight, frozenset(forced), frozenset(net.dummies))


def build_aux_general(net: SupplyChainNetwork) -> AuxiliaryGraph:
    if not is_integral(net):
        raise ValueError("general-mode construction needs integral costs and flows; rescale first")
    forced = _forced(net, CostMode.GENERAL)
    preset = set(forced) | set(net.dummies)
    cost = {i: (0 if i in preset else int(c)) for i, c in net.cost.items()}
    nodes, pidx = _path_nodes(net)
    weight = {}

    def add(cont, thr_cost, ps, out_w):
        flows = [int(net.paths[r].flow) for r in ps]
        g = math.gcd(thr_cost, *flows) if flows else 1
        g = g or 1
        a = len(nodes)
        nodes.append(AuxNode(a, NODE, tuple(sorted(cont)), thr_cost // g))
        for r, f in zip(ps, flows):
            weight[(a, pidx[r])] = out_w
            weight[(pidx[r], a)] = f // g

    for block, ps, pathless in partition_nodes(net):
        if pathless:
            add(block, 0, (), 0)
            continue
        # zero-cost members adopt at once, so they must not share a node-node
        # with members that need each other to be active first
        free = [i for i in block if cost[i] == 0]
        rest = [i for i in block if cost[i] != 0]
        if free:
            add(free, 0, ps, len(free))
        if rest:
            first = min(rest, key=lambda i: (cost[i], i))
            add([first], cost[first], ps, 1)
            others = [i for i in rest if i != first]
            if others:
                add(others, max(cost[i] for i in others), ps, len(others))
    return AuxiliaryGraph(net.k, CostMode.GENERAL, nodes, weight, frozenset(forced), frozenset(net.dummies))


def build_aux(net: SupplyChainNetwork, mode) -> AuxiliaryGraph:
    mode = CostMode.parse(mode)
    return build_aux_epsilon(net) if mode is CostMode.EPSILON else build_aux_general(net)


def aux_simulate(aux: AuxiliaryGraph, seed) -> frozenset:
    """Synchronous weighted-threshold cascade on the auxiliary graph."""
    active = set(seed)
    for a in active:
        if not aux.nodes[a].seedable:
            raise ValueError(f"aux node {a} is a path-node and cannot be seeded")
    inc = aux.in_edges
    while True:
        new = set()
        for x in aux.nodes:
            if x.id in active:
                continue
            b = sum(w for y, w in inc[x.id] if y in active)
            if b >= x.threshold:
                new.add(x.id)
        if not new:
            return frozenset(active)
        active |= new


def aux_seed_for(aux: AuxiliaryGraph, original_seed) -> set:
    """Node-nodes whose whole ``cont`` lies inside ``original_seed``."""
    s = set(original_seed)
    return {x.id for x in aux.node_nodes if set(x.cont) <= s}

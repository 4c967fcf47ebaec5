"""Turn an arbitrary acyclic supplier graph into a tiered network.

Nodes are placed in the latest tier their successors allow, edges that skip
tiers are padded with zero-cost dummy nodes, sources below the first tier get
dummy predecessor chains, and (unless explicit paths are given) every
first-to-last-tier path becomes a unit-flow supply chain.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from fractions import Fraction
from graphlib import CycleError, TopologicalSorter

from .network import Node, Path, SupplyChainNetwork, to_fraction

DEFAULT_PATH_CAP = 10**6


@dataclass
class RawDag:
    nodes: list
    edges: list
    costs: dict | None = None
    paths: list | None = None  # [(node tuple, flow)]
    tiers: dict | None = None  # optional given placement, kept if already consistent
    labels: dict = field(default_factory=dict)  # int id -> original label
    dummies: frozenset = frozenset()

    def __post_init__(self):
        if len(set(self.nodes)) != len(self.nodes):
            raise ValueError("node ids must be unique")
        known = set(self.nodes)
        for a, b in self.edges:
            if a not in known or b not in known:
                raise ValueError(f"edge ({a}, {b}) references an unknown node")

    def successors(self) -> dict:
        succ = {i: set() for i in self.nodes}
        for a, b in self.edges:
            succ[a].add(b)
        return succ

    def predecessors(self) -> dict:
        pred = {i: set() for i in self.nodes}
        for a, b in self.edges:
            pred[b].add(a)
        return pred

    @classmethod
    def from_network(cls, net: SupplyChainNetwork) -> "RawDag":
        return cls(
            list(net.node_ids), sorted(net.edges),
            {n.id: n.cost for n in net.nodes},
            [(p.nodes, p.flow) for p in net.paths],
            dict(net.tier),
            dummies=net.dummies,
        )


@dataclass
class IngestReport:
    k: int
    tiers: dict
    dummies: list  # dicts: id, tier, reason ("edge" or "source"), anchor
    n_paths: int = 0
    truncated: bool = False
    kept_tiers: bool = False
    labels: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "k": self.k,
            "tiers": {str(i): t for i, t in sorted(self.tiers.items())},
            "dummies": self.dummies,
            "n_paths": self.n_paths,
            "truncated": self.truncated,
            "kept_tiers": self.kept_tiers,
            "labels": {str(i): v for i, v in sorted(self.labels.items())},
        }


def _topo(dag: RawDag) -> list:
    ts = TopologicalSorter({i: dag.predecessors()[i] for i in dag.nodes})
    try:
        return list(ts.static_order())
    except CycleError as e:
        raise ValueError(f"graph has a cycle through {e.args[1]}") from None


def place_tiers(dag: RawDag):
    """Latest feasible tier per node; returns ``(tiers, k)``.

    ``k`` is the number of nodes on a longest path. Nodes without successors
    sit in tier ``k`` and every other node sits one tier before its earliest
    successor. Isolated nodes are put in tier 1.
    """
    order = _topo(dag)
    succ = dag.successors()
    pred = dag.predecessors()
    depth = {}
    for i in reversed(order):
        depth[i] = 1 + max((depth[s] for s in succ[i]), default=0)
    k = max(depth.values(), default=1)
    tiers = {}
    for i in reversed(order):
        if not succ[i] and not pred[i]:
            tiers[i] = 1
        elif not succ[i]:
            tiers[i] = k
        else:
            tiers[i] = min(tiers[s] for s in succ[i]) - 1
    return tiers, k


def _consistent(dag: RawDag, tiers, k) -> bool:
    succ, pred = dag.successors(), dag.predecessors()
    for i in dag.nodes:
        t = tiers.get(i)
        if t is None or not 1 <= t <= k:
            return False
        if not succ[i] and not pred[i]:
            continue
        if not pred[i] and t != 1 or not succ[i] and t != k:
            return False
    return all(tiers[b] == tiers[a] + 1 for a, b in dag.edges)


def insert_dummies(dag: RawDag, tiers, k):
    """Pad tier-skipping edges and late sources with dummy nodes.

    Returns ``(nodes, edges, expand, dummies)`` where ``expand`` maps each
    original edge and each padded source to the dummy chain standing in for it.
    """
    next_id = max(dag.nodes, default=0) + 1
    costs = dag.costs or {}
    nodes = [Node(i, tiers[i], costs.get(i, 1), i in dag.dummies) for i in sorted(dag.nodes)]
    edges = set()
    expand = {}
    dummies = []

    def chain(t0, t1, reason, anchor):
        nonlocal next_id
        ids = []
        for t in range(t0, t1):
            nodes.append(Node(next_id, t, 0, True))
            dummies.append({"id": next_id, "tier": t, "reason": reason, "anchor": list(anchor)})
            ids.append(next_id)
            next_id += 1
        return ids

    for a, b in sorted(dag.edges):
        mid = chain(tiers[a] + 1, tiers[b], "edge", (a, b))
        seq = [a, *mid, b]
        edges.update(zip(seq, seq[1:]))
        expand[(a, b)] = tuple(mid)
    pred = dag.predecessors()
    succ = dag.successors()
    for i in sorted(dag.nodes):
        if not pred[i] and succ[i] and tiers[i] > 1:
            mid = chain(1, tiers[i], "source", (i,))
            seq = [*mid, i]
            edges.update(zip(seq, seq[1:]))
            expand[(i,)] = tuple(mid)
    return nodes, edges, expand, dummies


def enumerate_paths(k, nodes, edges, cap=DEFAULT_PATH_CAP):
    """All tier-1 to tier-``k`` paths, depth first; returns ``(paths, truncated)``."""
    tier = {n.id: n.tier for n in nodes}
    succ = {}
    for a, b in edges:
        succ.setdefault(a, []).append(b)
    for v in succ.values():
        v.sort()
    out = []
    for s in sorted(i for i, t in tier.items() if t == 1):
        stack = [(s, (s,))]
        while stack:
            v, path = stack.pop()
            if tier[v] == k:
                if len(out) >= cap:
                    return out, True
                out.append(path)
                continue
            for w in reversed(succ.get(v, ())):
                stack.append((w, path + (w,)))
    return out, False


def _expand_path(nodes, expand):
    seq = list(expand.get((nodes[0],), ()))
    for a, b in zip(nodes, nodes[1:]):
        seq.append(a)
        seq.extend(expand[(a, b)])
    seq.append(nodes[-1])
    return tuple(seq)


def ingest(dag: RawDag, cap=DEFAULT_PATH_CAP):
    """Raw graph to ``(SupplyChainNetwork, IngestReport)``.

    Given tiers are kept when they already satisfy the tier rules, which
    makes ingestion idempotent on canonical networks. Explicit paths are
    padded through the same dummies as their edges.
    """
    _topo(dag)
    kept = False
    if dag.tiers:
        k = max(dag.tiers.values())
        if _consistent(dag, dag.tiers, k):
            tiers, kept = dict(dag.tiers), True
    if not kept:
        tiers, k = place_tiers(dag)
    nodes, edges, expand, dummies = insert_dummies(dag, tiers, k)
    truncated = False
    if dag.paths is not None:
        paths = []
        for p, f in dag.paths:
            p = tuple(p)
            for a, b in zip(p, p[1:]):
                if (a, b) not in expand:
                    raise ValueError(f"path {p} uses missing edge ({a}, {b})")
            paths.append(Path(_expand_path(p, expand), f))
    else:
        found, truncated = enumerate_paths(k, nodes, edges, cap)
        paths = [Path(p, 1) for p in found]
    net = SupplyChainNetwork(k, sorted(nodes, key=lambda n: n.id), edges, paths)
    rep = IngestReport(k, dict(tiers), dummies, len(paths), truncated, kept, dict(dag.labels))
    return net, rep


# Readers -----------------------------------------------------------------------


def _intern(raw_ids):
    """Integer ids for raw labels; labels kept only when they were not integers."""
    try:
        ids = [int(x) for x in raw_ids]
        if all(str(i) == str(x).strip() for i, x in zip(ids, raw_ids)):
            return {x: i for x, i in zip(raw_ids, ids)}, {}
    except (TypeError, ValueError):
        pass
    mapping = {x: j + 1 for j, x in enumerate(raw_ids)}
    return mapping, {j: str(x) for x, j in mapping.items()}


def read_raw_csv(nodes_csv: str, edges_csv: str, paths_csv: str | None = None) -> RawDag:
    """``nodes.csv`` (id[,cost]), ``edges.csv`` (src,dst), optional ``paths.csv``
    (path_id,rank,node_id,flow). Header rows are required."""
    nrows = list(csv.DictReader(io.StringIO(nodes_csv)))
    raw = [r["id"].strip() for r in nrows]
    mapping, labels = _intern(raw)
    costs = None
    if nrows and "cost" in nrows[0]:
        costs = {mapping[r["id"].strip()]: to_fraction(r["cost"].strip()) for r in nrows if r["cost"].strip()}
    edges = []
    for r in csv.DictReader(io.StringIO(edges_csv)):
        try:
            edges.append((mapping[r["src"].strip()], mapping[r["dst"].strip()]))
        except KeyError as e:
            raise ValueError(f"edge references unknown node {e.args[0]!r}") from None
    paths = None
    if paths_csv is not None:
        groups: dict = {}
        for r in csv.DictReader(io.StringIO(paths_csv)):
            g = groups.setdefault(r["path_id"].strip(), {"flow": None, "nodes": []})
            g["nodes"].append((int(r["rank"]), mapping[r["node_id"].strip()]))
            if r.get("flow", "").strip():
                g["flow"] = to_fraction(r["flow"].strip())
        paths = [(tuple(n for _, n in sorted(g["nodes"])), g["flow"] if g["flow"] is not None else Fraction(1))
                 for _, g in sorted(groups.items())]
    return RawDag([mapping[x] for x in raw], edges, costs, paths, None, labels)


def read_raw_json(text: str) -> RawDag:
    """Either a canonical network document or ``{"nodes", "edges"[, "paths"]}``.

    Nodes may be plain ids or objects with ``id`` and optional ``cost`` and
    ``tier``.
    """
    d = json.loads(text)
    items = d.get("nodes", [])
    objs = [x if isinstance(x, dict) else {"id": x} for x in items]
    mapping, labels = _intern([o["id"] for o in objs])
    costs = {mapping[o["id"]]: to_fraction(o["cost"]) for o in objs if "cost" in o} or None
    tiers = {mapping[o["id"]]: int(o["tier"]) for o in objs if "tier" in o} or None
    dummies = frozenset(mapping[o["id"]] for o in objs if o.get("dummy"))
    edges = [(mapping[a], mapping[b]) for a, b in d.get("edges", [])]
    paths = None
    if d.get("paths"):
        paths = []
        for p in d["paths"]:
            nodes = p["nodes"] if isinstance(p, dict) else p
            flow = to_fraction(p.get("flow", 1)) if isinstance(p, dict) else Fraction(1)
            paths.append((tuple(mapping[x] for x in nodes), flow))
    return RawDag([mapping[o["id"]] for o in objs], edges, costs, paths, tiers, labels, dummies)

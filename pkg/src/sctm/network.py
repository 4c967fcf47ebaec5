"""Tiered supply chain networks: data model, validation, rescaling and JSON I/O."""

from __future__ import annotations

import enum
import json
import math
from collections import Counter, defaultdict
from dataclasses import dataclass, replace
from fractions import Fraction
from functools import cached_property
from typing import Iterable, Mapping

from .report import ValidationReport


class CostMode(enum.Enum):
    """How adoption costs are interpreted.

    ``EPSILON`` treats every cost as a uniform negligible ``eps`` no larger than
    the smallest positive flow, so a node adopts as soon as it is the last
    inactive node on some positive-flow path. ``GENERAL`` compares summed
    completed-path flows against each node's own cost.
    """

    EPSILON = "eps"
    GENERAL = "general"

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        value = str(value).lower()
        if value in ("eps", "epsilon", "e"):
            return cls.EPSILON
        if value in ("general", "gen", "g"):
            return cls.GENERAL
        raise ValueError(f"unknown cost mode {value!r}")


def to_fraction(value) -> Fraction:
    """Parse an exact rational from int, Fraction, decimal string or ``"p/q"``."""
    if isinstance(value, bool):
        raise TypeError("booleans are not costs or flows")
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, float):
        if not math.isfinite(value):
            raise ValueError(f"non-finite value {value!r} is not rational")
        return Fraction(repr(value))
    if isinstance(value, str):
        return Fraction(value.strip())
    raise TypeError(f"cannot interpret {value!r} as a rational number")


def format_fraction(q: Fraction) -> str:
    return str(q.numerator) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"


@dataclass(frozen=True)
class Node:
    id: int
    tier: int
    cost: Fraction = Fraction(1)
    dummy: bool = False

    def __post_init__(self):
        object.__setattr__(self, "cost", to_fraction(self.cost))


@dataclass(frozen=True)
class Path:
    nodes: tuple
    flow: Fraction = Fraction(1)

    def __post_init__(self):
        object.__setattr__(self, "nodes", tuple(self.nodes))
        object.__setattr__(self, "flow", to_fraction(self.flow))


@dataclass(frozen=True)
class SupplyChainNetwork:
    """A k-tier DAG whose supply chains are explicit tier-1-to-tier-k paths.

    Construction does not enforce the structural invariants; call
    :func:`validate_network` to get a report of everything that is wrong.
    """

    k: int
    nodes: tuple
    edges: frozenset
    paths: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "nodes", tuple(self.nodes))
        object.__setattr__(self, "edges", frozenset(tuple(e) for e in self.edges))
        object.__setattr__(self, "paths", tuple(self.paths))

    @classmethod
    def build(cls, k, tiers: Mapping[int, int], edges=(), paths=(), costs=None, dummies=()):
        """Convenience constructor from ``{id: tier}`` and ``[(nodes, flow)]``."""
        costs = costs or {}
        dummies = set(dummies)
        nodes = [Node(i, t, costs.get(i, 1), i in dummies) for i, t in sorted(tiers.items())]
        ps = []
        for p in paths:
            if isinstance(p, Path):
                ps.append(p)
            elif len(p) == 2 and not isinstance(p[1], int):
                ps.append(Path(p[0], p[1]))
            else:
                ps.append(Path(p))
        return cls(k, nodes, edges, ps)

    @cached_property
    def node_ids(self) -> tuple:
        return tuple(n.id for n in self.nodes)

    @cached_property
    def node_by_id(self) -> dict:
        return {n.id: n for n in self.nodes}

    @cached_property
    def tier(self) -> dict:
        return {n.id: n.tier for n in self.nodes}

    @cached_property
    def cost(self) -> dict:
        return {n.id: n.cost for n in self.nodes}

    @cached_property
    def dummies(self) -> frozenset:
        return frozenset(n.id for n in self.nodes if n.dummy)

    @cached_property
    def paths_through(self) -> dict:
        """Map node id to the indices of paths containing it."""
        out = defaultdict(list)
        for r, p in enumerate(self.paths):
            for i in p.nodes:
                out[i].append(r)
        return {i: tuple(out.get(i, ())) for i in self.node_ids}

    @property
    def n(self) -> int:
        return len(self.nodes)

    @property
    def m(self) -> int:
        return len(self.paths)

    def incident_flow(self, i) -> Fraction:
        return sum((self.paths[r].flow for r in self.paths_through[i]), Fraction(0))

    def positive_paths(self) -> list:
        return [r for r, p in enumerate(self.paths) if p.flow > 0]

    def epsilon(self) -> Fraction | None:
        """Canonical epsilon: the smallest positive path flow."""
        flows = [p.flow for p in self.paths if p.flow > 0]
        return min(flows) if flows else None

    def with_costs(self, costs: Mapping) -> "SupplyChainNetwork":
        nodes = [replace(n, cost=to_fraction(costs[n.id])) if n.id in costs else n for n in self.nodes]
        return replace(self, nodes=tuple(nodes))

    def in_degree(self) -> dict:
        deg = Counter(j for _, j in self.edges)
        return {i: deg.get(i, 0) for i in self.node_ids}

    def out_degree(self) -> dict:
        deg = Counter(i for i, _ in self.edges)
        return {i: deg.get(i, 0) for i in self.node_ids}

    # JSON -----------------------------------------------------------------

    def to_dict(self) -> dict:
        nodes = []
        for n in self.nodes:
            d = {"id": n.id, "tier": n.tier, "cost": format_fraction(n.cost)}
            if n.dummy:
                d["dummy"] = True
            nodes.append(d)
        return {
            "k": self.k,
            "nodes": nodes,
            "edges": [list(e) for e in sorted(self.edges)],
            "paths": [{"nodes": list(p.nodes), "flow": format_fraction(p.flow)} for p in self.paths],
        }

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)

    @classmethod
    def from_dict(cls, data: Mapping) -> "SupplyChainNetwork":
        nodes = [
            Node(int(d["id"]), int(d["tier"]), to_fraction(d.get("cost", 1)), bool(d.get("dummy", False)))
            for d in data["nodes"]
        ]
        edges = [tuple(int(x) for x in e) for e in data.get("edges", [])]
        paths = [Path(tuple(int(x) for x in p["nodes"]), to_fraction(p.get("flow", 1))) for p in data.get("paths", [])]
        return cls(int(data["k"]), nodes, edges, paths)

    @classmethod
    def from_json(cls, text: str) -> "SupplyChainNetwork":
        return cls.from_dict(json.loads(text))


def validate_network(net: SupplyChainNetwork, mode=CostMode.GENERAL) -> ValidationReport:
    """Check every structural invariant and flag nodes that can never adopt.

    Nodes whose total incident flow is below their cost (in epsilon mode:
    nodes on no positive-flow path) are reported as warnings and collected in
    ``forced_seeds``; they must be part of any fully activating seed set.
    """
    mode = CostMode.parse(mode)
    rep = ValidationReport()
    if not isinstance(net.k, int) or net.k < 1:
        rep.error("tier-count", f"k must be an integer >= 1, got {net.k!r}")
        return rep

    counts = Counter(n.id for n in net.nodes)
    for i, c in counts.items():
        if c > 1:
            rep.error("duplicate-node", f"node id {i} appears {c} times", i)
    tier = {}
    for n in net.nodes:
        tier[n.id] = n.tier
        if not (1 <= n.tier <= net.k):
            rep.error("tier-range", f"node {n.id} has tier {n.tier} outside 1..{net.k}", n.id)
        if n.cost < 0:
            rep.error("negative-cost", f"node {n.id} has negative cost {n.cost}", n.id)

    for e in sorted(net.edges):
        i, j = e
        if i not in tier or j not in tier:
            rep.error("unknown-node", f"edge {e} references an unknown node", e)
        elif tier[j] != tier[i] + 1:
            rep.error("tier-adjacency", f"edge {e} connects tier {tier[i]} to tier {tier[j]}", e)

    for r, p in enumerate(net.paths):
        if p.flow < 0:
            rep.error("negative-flow", f"path {r} has negative flow {p.flow}", r)
        if len(p.nodes) != net.k:
            rep.error("path-length", f"path {r} has {len(p.nodes)} nodes, expected {net.k}", r)
            continue
        missing = [i for i in p.nodes if i not in tier]
        if missing:
            rep.error("unknown-node", f"path {r} references unknown nodes {missing}", r)
            continue
        if any(tier[i] != l + 1 for l, i in enumerate(p.nodes)):
            rep.error("path-tiers", f"path {r} does not visit tiers 1..{net.k} in order", r)
        for a, b in zip(p.nodes, p.nodes[1:]):
            if (a, b) not in net.edges:
                rep.error("path-edge", f"path {r} uses missing edge ({a}, {b})", r)
        if mode is CostMode.EPSILON and p.flow == 0:
            rep.warn("zero-flow-path", f"path {r} has zero flow and never confers benefit", r)

    if not rep.ok:
        return rep

    forced = []
    for n in net.nodes:
        if n.dummy:
            continue
        if mode is CostMode.EPSILON:
            if not any(net.paths[r].flow > 0 for r in net.paths_through[n.id]):
                forced.append(n.id)
        elif net.incident_flow(n.id) < n.cost:
            forced.append(n.id)
    for i in forced:
        rep.warn("forced-seed", f"node {i} can never adopt on its own and must be seeded", i)
    rep.forced_seeds = frozenset(forced)
    return rep


def rescale_integral(net: SupplyChainNetwork) -> SupplyChainNetwork:
    """Multiply all costs and flows by the lcm of their denominators."""
    values = [n.cost for n in net.nodes] + [p.flow for p in net.paths]
    for v in values:
        if not isinstance(v, Fraction):
            raise TypeError(f"{v!r} is not an exact rational")
    scale = 1
    for v in values:
        scale = math.lcm(scale, v.denominator)
    if scale == 1:
        return net
    nodes = tuple(replace(n, cost=n.cost * scale) for n in net.nodes)
    paths = tuple(replace(p, flow=p.flow * scale) for p in net.paths)
    return replace(net, nodes=nodes, paths=paths)


def merge_paths(net: SupplyChainNetwork) -> SupplyChainNetwork:
    """Collapse paths with identical node tuples, summing their flows."""
    merged: dict = {}
    for p in net.paths:
        merged[p.nodes] = merged.get(p.nodes, Fraction(0)) + p.flow
    return replace(net, paths=tuple(Path(t, f) for t, f in merged.items()))


def is_integral(net: SupplyChainNetwork) -> bool:
    return all(n.cost.denominator == 1 for n in net.nodes) and all(p.flow.denominator == 1 for p in net.paths)


def edges_from_paths(paths: Iterable) -> set:
    out = set()
    for p in paths:
        nodes = p.nodes if isinstance(p, Path) else tuple(p)
        out.update(zip(nodes, nodes[1:]))
    return out

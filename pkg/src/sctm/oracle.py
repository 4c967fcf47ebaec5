"""Ground truth for small instances, closed forms for k <= 2, and gadget fixtures.

The brute-force search deliberately shares no code with ``dynamics`` or the
solver: it re-encodes the network as bitmasks and integers and runs its own
cascade.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

from .errors import CapExceeded
from .network import CostMode, Node, Path, SupplyChainNetwork


class _BitNet:
    def __init__(self, net: SupplyChainNetwork, mode: CostMode):
        self.ids = list(net.node_ids)
        self.index = {i: b for b, i in enumerate(self.ids)}
        self.n = len(self.ids)
        self.full = (1 << self.n) - 1
        self.eps = mode is CostMode.EPSILON
        scale = 1
        for p in net.paths:
            scale = math.lcm(scale, Fraction(p.flow).denominator)
        for nd in net.nodes:
            scale = math.lcm(scale, Fraction(nd.cost).denominator)
        self.cost = [int(Fraction(nd.cost) * scale) for nd in net.nodes]
        # per node: list of (mask of the other path members, integer flow)
        self.inc = [[] for _ in range(self.n)]
        for p in net.paths:
            f = int(Fraction(p.flow) * scale)
            if self.eps and f <= 0:
                continue
            mask = 0
            for i in p.nodes:
                mask |= 1 << self.index[i]
            for i in set(p.nodes):
                b = self.index[i]
                self.inc[b].append((mask & ~(1 << b), f))
        self.dummy = 0
        for nd in net.nodes:
            if nd.dummy:
                self.dummy |= 1 << self.index[nd.id]
        self.forced = 0
        for b in range(self.n):
            if (self.dummy >> b) & 1:
                continue
            total = sum(f for _, f in self.inc[b])
            if (self.eps and not self.inc[b]) or (not self.eps and total < self.cost[b]):
                self.forced |= 1 << b

    def closure(self, active: int) -> int:
        while True:
            new = 0
            for b in range(self.n):
                if (active >> b) & 1:
                    continue
                if self.eps:
                    if any(m & ~active == 0 for m, _ in self.inc[b]):
                        new |= 1 << b
                else:
                    c = self.cost[b]
                    if c <= 0 or sum(f for m, f in self.inc[b] if m & ~active == 0) >= c:
                        new |= 1 << b
            if not new:
                return active
            active |= new

    def nodes_of(self, mask):
        return frozenset(self.ids[b] for b in range(self.n) if (mask >> b) & 1)


def _colex(free_bits, size):
    """Subsets of ``free_bits`` with ``size`` elements in colex order (Gosper)."""
    r = len(free_bits)
    if size == 0:
        yield ()
        return
    if size > r:
        return
    x = (1 << size) - 1
    limit = 1 << r
    while x < limit:
        yield tuple(free_bits[b] for b in range(r) if (x >> b) & 1)
        c = x & -x
        y = x + c
        x = (((x ^ y) >> 2) // c) | y


def brute_force_min_seed(net: SupplyChainNetwork, mode=CostMode.EPSILON, size_cap=None):
    """Smallest fully activating seed by exhaustive search.

    Forced nodes are always included and counted; dummy nodes are pre-seeded
    and not counted. Returns ``(opt_size, seed)`` where ``seed`` holds the
    counted original nodes. Raises :class:`CapExceeded` if nothing of size
    ``<= size_cap`` works.
    """
    mode = CostMode.parse(mode)
    bn = _BitNet(net, mode)
    base = bn.forced | bn.dummy
    n_forced = bin(bn.forced).count("1")
    free = [b for b in range(bn.n) if not (base >> b) & 1]
    cap = bn.n if size_cap is None else size_cap
    for extra in range(0, len(free) + 1):
        if n_forced + extra > cap:
            break
        for combo in _colex(free, extra):
            mask = base
            for b in combo:
                mask |= 1 << b
            if bn.closure(mask) == bn.full:
                return n_forced + extra, bn.nodes_of(mask & ~bn.dummy)
    raise CapExceeded(cap)


def verify_seed(net: SupplyChainNetwork, seed, mode=CostMode.EPSILON) -> bool:
    bn = _BitNet(net, CostMode.parse(mode))
    mask = bn.dummy
    for i in seed:
        mask |= 1 << bn.index[i]
    return bn.closure(mask) == bn.full


def solve_k_le_2(net: SupplyChainNetwork, mode=CostMode.EPSILON) -> int:
    """Closed form for one- and two-tier networks in the negligible-cost case."""
    mode = CostMode.parse(mode)
    if net.k > 2:
        raise ValueError("closed form only applies to k <= 2")
    if mode is CostMode.GENERAL:
        return brute_force_min_seed(net, mode)[0]
    pos = [p for p in net.paths if p.flow > 0]
    on_path = {i for p in pos for i in p.nodes}
    pathless = sum(1 for nd in net.nodes if nd.id not in on_path and not nd.dummy)
    if net.k == 1:
        return pathless
    parent = {i: i for i in on_path}

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for p in pos:
        a, b = p.nodes
        parent[find(a)] = find(b)
    comps = {}
    for i in on_path:
        comps.setdefault(find(i), []).append(i)
    dummies = net.dummies
    # a component already holding a pre-seeded dummy needs no further seed
    need = sum(1 for members in comps.values() if not any(i in dummies for i in members))
    return need + pathless


# Gadget fixtures -------------------------------------------------------------


@dataclass(frozen=True)
class LineBlock:
    """Three nodes on one chain, one per tier."""

    label: str


@dataclass(frozen=True)
class CBlock:
    """Five nodes: 1 -> 2 -> 3, 1 -> 5 -> 3 and 4 -> 5."""

    label: str


_LINE = {1: 1, 2: 2, 3: 3}
_C = {1: 1, 2: 2, 3: 3, 4: 1, 5: 2}
_C_EDGES = [(1, 2), (1, 5), (2, 3), (4, 5), (5, 3)]
LINKAGES = ("bidir", "L", "R", "LR")


@dataclass(frozen=True)
class Linkage:
    """Connect a C block to a line block.

    ``bidir`` adds edges (1C, 2B) and (2B, 3C); ``L`` adds (4C, 2B); ``R`` adds
    (2C, 3B); ``LR`` adds both.
    """

    kind: str
    c_block: str
    line_block: str


@dataclass
class GadgetGraph:
    net: SupplyChainNetwork
    id_of: dict = field(default_factory=dict)

    @property
    def name_of(self) -> dict:
        return {v: k for k, v in self.id_of.items()}

    def ids(self, *names):
        return {self.id_of[x] for x in names}

    def block(self, label):
        return {i for name, i in self.id_of.items() if name.split("@")[1] == label}


def build_gadget_graph(blocks, linkages=()) -> GadgetGraph:
    """Three-tier negligible-cost network from blocks and linkages.

    Node names are ``"<local>@<label>"`` (for instance ``"2@B_V"``). Every tier
    1 to tier 3 path of the assembled graph becomes a unit-flow supply chain.
    """
    id_of, tier = {}, {}
    kinds = {}
    edges = set()
    for blk in blocks:
        if blk.label in kinds:
            raise ValueError(f"duplicate block label {blk.label!r}")
        layout = _LINE if isinstance(blk, LineBlock) else _C
        kinds[blk.label] = type(blk)
        for local, t in layout.items():
            name = f"{local}@{blk.label}"
            id_of[name] = len(id_of) + 1
            tier[id_of[name]] = t
        pairs = [(1, 2), (2, 3)] if isinstance(blk, LineBlock) else _C_EDGES
        for a, b in pairs:
            edges.add((id_of[f"{a}@{blk.label}"], id_of[f"{b}@{blk.label}"]))
    for ln in linkages:
        if ln.kind not in LINKAGES:
            raise ValueError(f"unknown linkage {ln.kind!r}")
        if kinds.get(ln.c_block) is not CBlock or kinds.get(ln.line_block) is not LineBlock:
            raise ValueError(f"linkage {ln.kind} must join a declared C block to a declared line block")
        c = lambda x: id_of[f"{x}@{ln.c_block}"]
        b = lambda x: id_of[f"{x}@{ln.line_block}"]
        if ln.kind == "bidir":
            edges |= {(c(1), b(2)), (b(2), c(3))}
        if ln.kind in ("L", "LR"):
            edges.add((c(4), b(2)))
        if ln.kind in ("R", "LR"):
            edges.add((c(2), b(3)))
    succ = {}
    for a, b in edges:
        succ.setdefault(a, []).append(b)
    paths = []
    for a in sorted(i for i, t in tier.items() if t == 1):
        for b in sorted(succ.get(a, ())):
            for c in sorted(succ.get(b, ())):
                paths.append(Path((a, b, c), 1))
    nodes = [Node(i, tier[i], 1) for i in sorted(tier)]
    return GadgetGraph(SupplyChainNetwork(3, nodes, edges, paths), id_of)

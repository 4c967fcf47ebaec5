"""Tree decompositions: elimination heuristics, validation, PACE I/O and nice form."""

from __future__ import annotations

import heapq
import json
from collections import defaultdict, deque
from dataclasses import dataclass, field

from .errors import PaceFormatError
from .report import ValidationReport


@dataclass
class TreeDecomposition:
    bags: dict
    tree_edges: list = field(default_factory=list)

    def __post_init__(self):
        self.bags = {z: frozenset(b) for z, b in self.bags.items()}
        self.tree_edges = [tuple(e) for e in self.tree_edges]

    @property
    def width(self) -> int:
        return max((len(b) for b in self.bags.values()), default=0) - 1

    def adjacency(self) -> dict:
        adj = {z: set() for z in self.bags}
        for a, b in self.tree_edges:
            adj[a].add(b)
            adj[b].add(a)
        return adj


def _adjacency(vertices, edges):
    adj = {v: set() for v in vertices}
    for a, b in edges:
        if a == b:
            continue
        adj.setdefault(a, set()).add(b)
        adj.setdefault(b, set()).add(a)
    return adj


def _fill(adj, v):
    nb = list(adj[v])
    missing = 0
    for i, a in enumerate(nb):
        na = adj[a]
        for b in nb[i + 1:]:
            if b not in na:
                missing += 1
    return missing


def elimination_order(vertices, edges, heuristic="min-fill"):
    """Greedy elimination ordering with lazily refreshed priorities."""
    if heuristic not in ("min-fill", "min-degree"):
        raise ValueError(f"unknown heuristic {heuristic!r}")
    adj = _adjacency(vertices, edges)
    score = (lambda v: (_fill(adj, v), len(adj[v]))) if heuristic == "min-fill" else (lambda v: (len(adj[v]),))
    key = {v: score(v) for v in adj}
    heap = [(key[v], v) for v in adj]
    heapq.heapify(heap)
    done = set()
    order, bags = [], []
    while heap:
        k, v = heapq.heappop(heap)
        if v in done or k != key[v]:
            continue
        nb = adj[v]
        order.append(v)
        bags.append((v, frozenset(nb)))
        done.add(v)
        nbl = list(nb)
        for i, a in enumerate(nbl):
            adj[a].discard(v)
            for b in nbl[i + 1:]:
                adj[a].add(b)
                adj[b].add(a)
        del adj[v]
        touched = set(nbl)
        if heuristic == "min-fill":
            for a in nbl:
                touched.update(adj[a])
        for a in touched:
            nk = score(a)
            if nk != key[a]:
                key[a] = nk
                heapq.heappush(heap, (nk, a))
    return order, bags


def decompose(vertices, edges, heuristic="min-fill") -> TreeDecomposition:
    """Heuristic tree decomposition from a greedy elimination ordering."""
    vertices = list(vertices)
    if not vertices:
        return TreeDecomposition({}, [])
    order, elim = elimination_order(vertices, edges, heuristic)
    pos = {v: i for i, v in enumerate(order)}
    bags = {}
    parent = {}
    roots = []
    for i, (v, nb) in enumerate(elim):
        bags[i] = frozenset(nb | {v})
        if nb:
            parent[i] = min(pos[a] for a in nb)
        else:
            roots.append(i)
    for a, b in zip(roots, roots[1:]):
        parent[a] = b

    # drop bags contained in their parent
    alive = set(bags)
    children = defaultdict(list)
    for c, p in parent.items():
        children[p].append(c)
    for i in range(len(elim)):
        p = parent.get(i)
        if p is not None and bags[i] <= bags[p]:
            for c in children[i]:
                parent[c] = p
                children[p].append(c)
            children[p].remove(i)
            del parent[i]
            alive.discard(i)
    kept = sorted(alive)
    relabel = {z: j for j, z in enumerate(kept)}
    td = TreeDecomposition(
        {relabel[z]: bags[z] for z in kept},
        [(relabel[c], relabel[p]) for c, p in sorted(parent.items()) if c in alive],
    )
    return td


def validate_decomposition(vertices, edges, td: TreeDecomposition) -> ValidationReport:
    rep = ValidationReport()
    vertices = set(vertices)
    covered = set().union(*td.bags.values()) if td.bags else set()
    for v in sorted(vertices - covered):
        rep.error("vertex-coverage", f"vertex {v} appears in no bag", v)
    for v in sorted(covered - vertices):
        rep.error("unknown-vertex", f"bag element {v} is not a graph vertex", v)

    adj = td.adjacency()
    for a, b in td.tree_edges:
        if a not in td.bags or b not in td.bags:
            rep.error("tree-edge", f"tree edge ({a}, {b}) references an unknown bag", (a, b))
    if td.bags:
        start = next(iter(td.bags))
        seen = {start}
        dq = deque([start])
        while dq:
            z = dq.popleft()
            for y in adj.get(z, ()):
                if y not in seen:
                    seen.add(y)
                    dq.append(y)
        if len(seen) != len(td.bags):
            rep.error("tree-connected", "decomposition tree is disconnected")
        if len(set(map(frozenset, td.tree_edges))) != len(td.bags) - 1:
            rep.error("tree-acyclic", "decomposition tree has a cycle or parallel edges")

    holders = defaultdict(list)
    for z, b in td.bags.items():
        for v in b:
            holders[v].append(z)
    for a, b in sorted(set((min(x, y), max(x, y)) for x, y in edges if x != y)):
        if not any(a in bag and b in bag for bag in (td.bags[z] for z in holders.get(a, ()))):
            rep.error("edge-coverage", f"edge ({a}, {b}) is not inside any bag", (a, b))
    for v, zs in holders.items():
        zs_set = set(zs)
        seen = {zs[0]}
        dq = deque([zs[0]])
        while dq:
            z = dq.popleft()
            for y in adj.get(z, ()):
                if y in zs_set and y not in seen:
                    seen.add(y)
                    dq.append(y)
        if seen != zs_set:
            rep.error("running-intersection", f"bags containing {v} are not connected", v)
    rep.width = td.width
    return rep


# PACE 2016 formats -----------------------------------------------------------


def _lines(text):
    for raw in text.splitlines():
        line = raw.strip()
        if not line or line.startswith("c"):
            continue
        tok = line.split()
        if tok[0] not in ("p", "s", "b") and not all(t.lstrip("-").isdigit() for t in tok):
            raise PaceFormatError(f"unparseable line: {line}")
        if tok[0] in ("p", "s", "b") and not all(t.lstrip("-").isdigit() for t in tok[2 if tok[0] != "b" else 1:]):
            raise PaceFormatError(f"non-integer field in: {line}")
        yield tok


def write_gr(n, edges, offset=1) -> str:
    edges = list(edges)
    out = [f"p tw {n} {len(edges)}"]
    out += [f"{a + offset} {b + offset}" for a, b in edges]
    return "\n".join(out) + "\n"


def read_gr(text, offset=1):
    n = m = None
    edges = []
    for tok in _lines(text):
        if tok[0] == "p":
            if len(tok) != 4 or tok[1] != "tw":
                raise PaceFormatError(f"malformed .gr header: {' '.join(tok)}")
            n, m = int(tok[2]), int(tok[3])
            continue
        if n is None:
            raise PaceFormatError("edge line before 'p tw' header")
        if len(tok) != 2:
            raise PaceFormatError(f"malformed edge line: {' '.join(tok)}")
        a, b = int(tok[0]), int(tok[1])
        for x in (a, b):
            if not offset <= x < n + offset:
                raise PaceFormatError(f"vertex {x} out of range")
        edges.append((a - offset, b - offset))
    if n is None:
        raise PaceFormatError("missing 'p tw' header")
    if len(edges) != m:
        raise PaceFormatError(f"header announces {m} edges, found {len(edges)}")
    return n, edges


def write_td(td: TreeDecomposition, n, offset=1) -> str:
    ids = sorted(td.bags)
    num = {z: j + 1 for j, z in enumerate(ids)}
    out = [f"s td {len(ids)} {td.width + 1} {n}"]
    for z in ids:
        members = " ".join(str(v + offset) for v in sorted(td.bags[z]))
        out.append(f"b {num[z]} {members}".rstrip())
    out += [f"{num[a]} {num[b]}" for a, b in td.tree_edges]
    return "\n".join(out) + "\n"


def read_td(text, offset=1):
    """Parse a PACE ``.td`` file; returns ``(TreeDecomposition, n_vertices)``."""
    header = None
    bags = {}
    edges = []
    for tok in _lines(text):
        if tok[0] == "s":
            if len(tok) != 5 or tok[1] != "td":
                raise PaceFormatError(f"malformed .td header: {' '.join(tok)}")
            header = tuple(int(x) for x in tok[2:])
            continue
        if header is None:
            raise PaceFormatError("content before 's td' header")
        nb, maxb, n = header
        if tok[0] == "b":
            z = int(tok[1])
            if not 1 <= z <= nb:
                raise PaceFormatError(f"bag id {z} out of range 1..{nb}")
            members = [int(x) for x in tok[2:]]
            for v in members:
                if not offset <= v < n + offset:
                    raise PaceFormatError(f"vertex {v} out of range")
            if len(members) > maxb:
                raise PaceFormatError(f"bag {z} exceeds announced size {maxb}")
            bags[z] = frozenset(v - offset for v in members)
        else:
            if len(tok) != 2:
                raise PaceFormatError(f"malformed tree edge: {' '.join(tok)}")
            a, b = int(tok[0]), int(tok[1])
            for x in (a, b):
                if not 1 <= x <= nb:
                    raise PaceFormatError(f"bag id {x} out of range 1..{nb}")
            edges.append((a, b))
    if header is None:
        raise PaceFormatError("missing 's td' header")
    nb, maxb, n = header
    for z in range(1, nb + 1):
        bags.setdefault(z, frozenset())
    if len(bags) != nb:
        raise PaceFormatError("bag count does not match header")
    td = TreeDecomposition(bags, edges)
    if nb and len(edges) != nb - 1:
        raise PaceFormatError("decomposition tree is not connected (wrong edge count)")
    adj = td.adjacency()
    if nb:
        seen = {1}
        dq = deque([1])
        while dq:
            z = dq.popleft()
            for y in adj[z]:
                if y not in seen:
                    seen.add(y)
                    dq.append(y)
        if len(seen) != nb:
            raise PaceFormatError("decomposition tree is disconnected")
    return td, n


# Nice decompositions --------------------------------------------------------

LEAF, REPLACE, JOIN = "leaf", "replace", "join"


@dataclass
class NiceNode:
    id: int
    kind: str
    bag: tuple
    children: tuple = ()
    u: object = None
    v: object = None
    slot: int | None = None


@dataclass
class NiceTreeDecomposition:
    """Rooted decomposition whose bags all have ``omega`` elements.

    ``bag`` tuples are ordered by slot: ``bag[s]`` is the element held in slot
    ``s``. A replace node's entering element ``u`` occupies the slot that its
    leaving element ``v`` held in the child.
    """

    nodes: list
    root: int
    omega: int

    def postorder(self) -> list:
        out, stack = [], [(self.root, False)]
        while stack:
            z, done = stack.pop()
            if done:
                out.append(z)
                continue
            stack.append((z, True))
            for c in reversed(self.nodes[z].children):
                stack.append((c, False))
        return out

    def as_tree_decomposition(self) -> TreeDecomposition:
        edges = [(z.id, c) for z in self.nodes for c in z.children]
        return TreeDecomposition({z.id: z.bag for z in self.nodes}, edges)

    def check(self) -> list:
        """Structural problems of the nice form (empty when well formed)."""
        errs = []
        for z in self.nodes:
            if len(z.bag) != self.omega or len(set(z.bag)) != self.omega:
                errs.append(f"node {z.id}: bag size {len(set(z.bag))} != {self.omega}")
            ch = [self.nodes[c] for c in z.children]
            if z.kind == LEAF and ch:
                errs.append(f"leaf {z.id} has children")
            elif z.kind == REPLACE:
                if len(ch) != 1:
                    errs.append(f"replace {z.id} needs one child")
                    continue
                c = ch[0]
                if set(z.bag) - set(c.bag) != {z.u} or set(c.bag) - set(z.bag) != {z.v}:
                    errs.append(f"replace {z.id}: bags do not differ by swapping {z.u} for {z.v}")
                if z.bag[z.slot] != z.u or c.bag[z.slot] != z.v:
                    errs.append(f"replace {z.id}: slot {z.slot} not shared by {z.u}/{z.v}")
                if any(a != b for s, (a, b) in enumerate(zip(z.bag, c.bag)) if s != z.slot):
                    errs.append(f"replace {z.id}: slot map not preserved")
            elif z.kind == JOIN:
                if len(ch) != 2 or any(c.bag != z.bag for c in ch):
                    errs.append(f"join {z.id}: children bags differ")
        return errs

    def to_dict(self) -> dict:
        return {
            "omega": self.omega,
            "root": self.root,
            "nodes": [
                {"id": z.id, "kind": z.kind, "bag": list(z.bag), "children": list(z.children)}
                | ({"u": z.u, "v": z.v, "slot": z.slot} if z.kind == REPLACE else {})
                for z in self.nodes
            ],
        }

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)


def _pad(td: TreeDecomposition, omega):
    bags = {z: set(b) for z, b in td.bags.items()}
    adj = td.adjacency()
    start = max(sorted(bags), key=lambda z: len(bags[z]))
    seen = {start}
    dq = deque([start])
    while dq:
        z = dq.popleft()
        for y in sorted(adj[z]):
            if y in seen:
                continue
            seen.add(y)
            extra = sorted(bags[z] - bags[y])
            need = omega - len(bags[y])
            bags[y].update(extra[:need])
            dq.append(y)
    return bags, adj


def _contract_equal(bags, adj):
    rep = {z: z for z in bags}

    def find(z):
        while rep[z] != z:
            rep[z] = rep[rep[z]]
            z = rep[z]
        return z

    for a in sorted(adj):
        for b in sorted(adj[a]):
            if bags[a] == bags[b]:
                ra, rb = find(a), find(b)
                if ra != rb:
                    rep[max(ra, rb)] = min(ra, rb)
    nbags = {}
    nadj = defaultdict(set)
    for z in bags:
        nbags[find(z)] = bags[z]
    for a in adj:
        for b in adj[a]:
            ra, rb = find(a), find(b)
            if ra != rb:
                nadj[ra].add(rb)
    for z in nbags:
        nadj.setdefault(z, set())
    return nbags, dict(nadj)


def _eccentricity(adj, z):
    dist = {z: 0}
    dq = deque([z])
    while dq:
        x = dq.popleft()
        for y in adj[x]:
            if y not in dist:
                dist[y] = dist[x] + 1
                dq.append(y)
    return max(dist.values())


def to_nice(td: TreeDecomposition, root=None) -> NiceTreeDecomposition:
    """Convert ``td`` into a nice decomposition of the same width.

    ``root`` names a bag of ``td``; by default the most central bag is used.
    """
    if not td.bags:
        raise ValueError("cannot make an empty decomposition nice")
    omega = td.width + 1
    bags, adj = _pad(td, omega)
    root_bag = frozenset(bags[root]) if root is not None else None
    bags, adj = _contract_equal(bags, adj)
    if root_bag is not None:
        root = next(z for z in sorted(bags) if frozenset(bags[z]) == root_bag)
    else:
        root = min(sorted(bags), key=lambda z: _eccentricity(adj, z))

    # orient the tree
    children = {root: []}
    order = [root]
    dq = deque([root])
    while dq:
        z = dq.popleft()
        for y in sorted(adj[z]):
            if y not in children:
                children[y] = []
                children[z].append(y)
                order.append(y)
                dq.append(y)

    nodes: list = []
    top: dict = {}

    def new(kind, bag, ch=(), u=None, v=None, slot=None):
        nodes.append(NiceNode(len(nodes), kind, bag, tuple(ch), u, v, slot))
        return len(nodes) - 1

    # build bottom-up with bags as frozensets; slots are fixed afterwards
    for z in reversed(order):
        X = frozenset(bags[z])
        tops = []
        for c in children[z]:
            cur_id = top[c]
            cur = set(bags[c])
            outs = sorted(cur - X)
            ins = sorted(X - cur)
            for v, u in zip(outs, ins):
                cur.discard(v)
                cur.add(u)
                cur_id = new(REPLACE, frozenset(cur), (cur_id,), u, v)
            tops.append(cur_id)
        if not tops:
            top[z] = new(LEAF, X)
        elif len(tops) == 1:
            top[z] = tops[0]
        else:
            acc = tops[-1]
            for t in reversed(tops[:-1]):
                acc = new(JOIN, X, (t, acc))
            top[z] = acc

    rid = top[root]
    # assign slots top-down
    nodes[rid].bag = tuple(sorted(nodes[rid].bag))
    stack = [rid]
    while stack:
        z = nodes[stack.pop()]
        for c in z.children:
            child = nodes[c]
            if z.kind == REPLACE:
                s = z.bag.index(z.u)
                z.slot = s
                child.bag = z.bag[:s] + (z.v,) + z.bag[s + 1:]
            else:
                child.bag = z.bag
            stack.append(c)
    return NiceTreeDecomposition(nodes, rid, omega)

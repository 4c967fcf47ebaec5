"""Exact minimum seed sets by dynamic programming over a nice tree decomposition.

Every table is indexed by a residual-threshold vector (one entry per bag slot)
and an activation order on the bag. An entry holds the smallest seed set of
the subgraph below that node such that everything in it activates when bag
elements need only their residual threshold and activate in the given order.

Tables are numpy arrays of shape ``(R_0 + 1, ..., R_{w-1} + 1, n_orders)``:

* ``size``    total number of original firms seeded (``INF`` when impossible)
* ``bagmask`` which bag slots are seeded, so joins can discount the overlap
* ``seeds``   the seed set itself as a Python int bitmask over aux node ids
"""

from __future__ import annotations

import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache
from itertools import permutations, product

import numpy as np
from numba import njit

from .auxgraph import AuxiliaryGraph, build_aux
from .dynamics import simulate
from .errors import InternalConsistencyError, MemoryBudgetExceeded, NetworkValidationError
from .network import CostMode, SupplyChainNetwork, rescale_integral, validate_network
from .treedec import JOIN, LEAF, REPLACE, NiceTreeDecomposition, decompose, to_nice, validate_decomposition

log = logging.getLogger(__name__)

INF = 1 << 40
_ENTRY_BYTES = 56


@dataclass
class SolverConfig:
    mode: CostMode = CostMode.EPSILON
    mem_budget: int = 4 << 30
    parallel: bool = False
    workers: int | None = None
    trace: int = 0
    heuristic: str = "min-fill"
    # "strict" enumerates total orders of the bag, "weak" also allows ties
    orders: str = "strict"
    # "per-slot" bounds each slot by its own threshold, "global" uses one bound
    ranges: str = "per-slot"
    verify: bool = True

    def __post_init__(self):
        self.mode = CostMode.parse(self.mode)
        if self.mem_budget <= 0:
            raise ValueError("memory budget must be positive")
        if self.orders not in ("strict", "weak"):
            raise ValueError(f"unknown order space {self.orders!r}")
        if self.ranges not in ("per-slot", "global"):
            raise ValueError(f"unknown threshold range {self.ranges!r}")


# Activation orders -----------------------------------------------------------


def normalize_order(a) -> tuple:
    """Dense ranks of ``a``: equal values tie, gaps are closed."""
    vals = sorted(set(a))
    rank = {v: r for r, v in enumerate(vals)}
    return tuple(rank[x] for x in a)


def _weak_orders(w):
    out = []
    ranks = [0] * w

    def rec(remaining, r):
        if not remaining:
            out.append(tuple(ranks))
            return
        n = len(remaining)
        for m in range(1, 1 << n):
            chosen = [remaining[b] for b in range(n) if (m >> b) & 1]
            for s in chosen:
                ranks[s] = r
            rec([x for x in remaining if x not in chosen], r + 1)

    rec(list(range(w)), 0)
    return sorted(out)


def count_orders(w, kind) -> int:
    if kind == "strict":
        return math.factorial(w)
    # ordered Bell (Fubini) numbers
    a = [1]
    for n in range(1, w + 1):
        a.append(sum(math.comb(n, j) * a[n - j] for j in range(1, n + 1)))
    return a[w]


class OrderSpace:
    def __init__(self, w, kind):
        self.w = w
        self.kind = kind
        if kind == "strict":
            self.orders = [tuple(p) for p in permutations(range(w))]
        else:
            self.orders = _weak_orders(w)
        self.index = {o: j for j, o in enumerate(self.orders)}
        self.ranks = np.array(self.orders, dtype=np.int64).reshape(len(self.orders), w)
        self._cand = {}

    def __len__(self):
        return len(self.orders)

    def lookup(self, a) -> int:
        o = normalize_order(a)
        if o not in self.index:
            raise KeyError(f"order {tuple(a)} is not in the {self.kind} order space")
        return self.index[o]

    def candidates(self, slot):
        """Padded matrix: row ``o`` lists orders that agree with ``o`` off ``slot``."""
        if slot not in self._cand:
            groups = {}
            keys = []
            for j, o in enumerate(self.orders):
                key = normalize_order(o[:slot] + o[slot + 1:]) if self.w > 1 else ()
                keys.append(key)
                groups.setdefault(key, []).append(j)
            width = max(len(g) for g in groups.values())
            mat = np.full((len(self.orders), width), -1, dtype=np.int64)
            for j, key in enumerate(keys):
                g = groups[key]
                mat[j, : len(g)] = g
            self._cand[slot] = mat
        return self._cand[slot]

    def reductions(self, W):
        """``red[o, s]``: weight reaching slot ``s`` from strictly earlier slots."""
        less = self.ranks[:, :, None] < self.ranks[:, None, :]
        return (less * W[None, :, :]).sum(axis=1)


@lru_cache(maxsize=None)
def order_space(w, kind) -> OrderSpace:
    return OrderSpace(w, kind)


# Tables ----------------------------------------------------------------------


@dataclass
class SeedTable:
    bag: tuple
    ranges: tuple
    space: OrderSpace
    size: np.ndarray
    bagmask: np.ndarray
    seeds: np.ndarray

    @property
    def entries(self) -> int:
        return int(self.size.size)

    def _index(self, c, a):
        c = tuple(int(x) for x in c)
        for s, (x, r) in enumerate(zip(c, self.ranges)):
            if not 0 <= x <= r:
                raise IndexError(f"threshold {x} at slot {s} outside 0..{r}")
        return c + (self.space.lookup(a),)

    def entry(self, c, a):
        """``(size, seed ids)``, or ``(None, None)`` for the infeasible sentinel."""
        idx = self._index(c, a)
        sz = int(self.size[idx])
        if sz >= INF:
            return None, None
        return sz, _bits(int(self.seeds[idx]))

    def slot_of(self, x) -> int:
        return self.bag.index(x)


def _bits(mask):
    out = set()
    while mask:
        low = mask & -mask
        out.add(low.bit_length() - 1)
        mask ^= low
    return frozenset(out)


class _Ctx:
    """Per-solve constants derived from the auxiliary graph."""

    def __init__(self, aux: AuxiliaryGraph, config: SolverConfig):
        self.aux = aux
        self.config = config
        self.thr = [x.threshold for x in aux.nodes]
        self.cw = [len(x.cont) if x.seedable else 0 for x in aux.nodes]
        self.seedable = [x.seedable for x in aux.nodes]
        self.C = max([aux.k - 1] + self.thr) if aux.nodes else 0

    def range_of(self, x) -> int:
        return self.thr[x] if self.config.ranges == "per-slot" else self.C

    def ranges(self, bag):
        return tuple(self.range_of(x) for x in bag)

    def weights(self, bag):
        w = len(bag)
        W = np.zeros((w, w), dtype=np.int64)
        for t in range(w):
            for s in range(w):
                if t != s:
                    W[t, s] = self.aux.w(bag[t], bag[s])
        return W

    def slot_weights(self, bag):
        return np.array([self.cw[x] for x in bag], dtype=np.int64)

    def mask_lut(self, bag):
        """Overlap weight and aux bitmask for every subset of bag slots."""
        w = len(bag)
        cw = self.slot_weights(bag)
        n = 1 << w
        weight = np.zeros(n, dtype=np.int64)
        aux_bits = np.empty(n, dtype=object)
        aux_bits[0] = 0
        for m in range(1, n):
            low = (m & -m).bit_length() - 1
            weight[m] = weight[m & (m - 1)] + cw[low]
            aux_bits[m] = aux_bits[m & (m - 1)] | (1 << bag[low])
        return weight, aux_bits


def _axis_view(arr_1d, s, w):
    shape = [1] * (w + 1)
    shape[s] = arr_1d.shape[0]
    shape[w] = arr_1d.shape[1]
    return arr_1d.reshape(shape)


def _c_strides(shape):
    out = [1] * len(shape)
    for d in range(len(shape) - 2, -1, -1):
        out[d] = out[d + 1] * shape[d + 1]
    return out


def leaf_table(aux: AuxiliaryGraph, bag, config: SolverConfig, ctx=None) -> SeedTable:
    """Table of a leaf: only the bag itself is below it.

    A bag element is seeded exactly when its residual threshold exceeds the
    weight it receives from elements strictly earlier in the order; if that
    element is a path-node the entry is infeasible.
    """
    ctx = ctx or _Ctx(aux, config)
    bag = tuple(bag)
    w = len(bag)
    space = order_space(w, config.orders)
    R = ctx.ranges(bag)
    red = space.reductions(ctx.weights(bag))  # (O, w)
    cw = ctx.slot_weights(bag)
    shape = tuple(r + 1 for r in R) + (len(space),)
    size = np.zeros(shape, dtype=np.int64)
    bagmask = np.zeros(shape, dtype=np.int64)
    bad = np.zeros(shape, dtype=bool)
    for s in range(w):
        need = np.arange(R[s] + 1)[:, None] > red[None, :, s]  # (R_s+1, O)
        v = _axis_view(need, s, w)
        if ctx.seedable[bag[s]]:
            size = size + v * cw[s]
            bagmask = bagmask | (v.astype(np.int64) << s)
        else:
            bad = bad | v
    size = np.broadcast_to(size, shape).copy()
    bagmask = np.broadcast_to(bagmask, shape).copy()
    bad = np.broadcast_to(bad, shape)
    size[bad] = INF
    bagmask[bad] = 0
    _, lut = ctx.mask_lut(bag)
    seeds = lut[bagmask]
    return SeedTable(bag, R, space, size, bagmask, seeds)


def replace_intro(aux, child: SeedTable, u, v, config, ctx=None) -> SeedTable:
    """First half of a replace step: forget ``v`` and add ``u`` without its edges."""
    ctx = ctx or _Ctx(aux, config)
    i = child.slot_of(v)
    space = child.space
    bag = child.bag[:i] + (u,) + child.bag[i + 1:]
    R = child.ranges[:i] + (ctx.range_of(u),) + child.ranges[i + 1:]
    cv = ctx.thr[v]
    if cv > child.ranges[i]:
        raise ValueError("child table does not cover the leaving element's threshold")
    size = np.take(child.size, cv, axis=i)  # (..., O) without axis i
    bm = np.take(child.bagmask, cv, axis=i) & ~np.int64(1 << i)
    sd = np.take(child.seeds, cv, axis=i)
    cand = space.candidates(i)
    pad = cand < 0
    safe = np.where(pad, 0, cand)
    g = np.take(size, safe, axis=-1)  # (..., O, G)
    g = np.where(pad, INF, g)
    best = np.argmin(g, axis=-1)
    pick = np.take_along_axis(np.broadcast_to(safe, g.shape), best[..., None], axis=-1)[..., 0]
    base_size = np.take_along_axis(size, pick, axis=-1)
    base_bm = np.take_along_axis(bm, pick, axis=-1)
    base_sd = np.take_along_axis(sd, pick, axis=-1)

    layers_size, layers_bm, layers_sd = [base_size], [base_bm], [base_sd]
    if R[i] > 0:
        if ctx.seedable[u]:
            inf = base_size >= INF
            s2 = np.where(inf, INF, base_size + ctx.cw[u])
            b2 = np.where(inf, 0, base_bm | np.int64(1 << i))
            d2 = base_sd | (1 << u)
        else:
            s2 = np.full_like(base_size, INF)
            b2 = np.zeros_like(base_bm)
            d2 = np.zeros(base_sd.shape, dtype=object)
        for _ in range(R[i]):
            layers_size.append(s2)
            layers_bm.append(b2)
            layers_sd.append(d2)
    size_p = np.stack(layers_size, axis=i)
    bm_p = np.stack(layers_bm, axis=i)
    sd_p = np.stack(layers_sd, axis=i)
    return SeedTable(bag, R, space, size_p, bm_p, sd_p)


def fold_edge(aux, table: SeedTable, u, t, config, ctx=None) -> SeedTable:
    """Account for the bag edge between ``u`` and ``t``.

    Whichever endpoint comes later in the order receives the weight of the edge
    pointing at it, clamped at zero; simultaneous endpoints do not interact.
    """
    ctx = ctx or _Ctx(aux, config)
    su, st = table.slot_of(u), table.slot_of(t)
    ranks = table.space.ranks
    earlier_u = ranks[:, su] < ranks[:, st]
    later_u = ranks[:, su] > ranks[:, st]
    idx_t = np.maximum(np.arange(table.ranges[st] + 1) - aux.w(u, t), 0)
    idx_u = np.maximum(np.arange(table.ranges[su] + 1) - aux.w(t, u), 0)

    def fold(arr):
        a_t = np.take(arr, idx_t, axis=st)
        a_u = np.take(arr, idx_u, axis=su)
        return np.where(earlier_u, a_t, np.where(later_u, a_u, arr))

    return SeedTable(table.bag, table.ranges, table.space, fold(table.size), fold(table.bagmask), fold(table.seeds))


def replace_step(aux, child: SeedTable, u, v, config, ctx=None) -> SeedTable:
    ctx = ctx or _Ctx(aux, config)
    tab = replace_intro(aux, child, u, v, config, ctx)
    for t in tab.bag:
        if t != u and (aux.w(u, t) or aux.w(t, u)):
            tab = fold_edge(aux, tab, u, t, config, ctx)
    return tab


@njit(cache=True)
def _join_kernel(size0, bm0, size1, bm1, overlap, cvec, gmap, strides):
    """Best split per entry.

    ``gmap[o, s, c, f]`` is the flat-index contribution of slot ``s`` in the
    second child for requirement ``c`` and first-child share ``f``, or -1 when
    that split is not allowed. Only finite first-child entries are visited.
    """
    F, O = size0.shape
    w = cvec.shape[1]
    best = np.full((F, O), INF, dtype=np.int64)
    best_f = np.zeros((F, O), dtype=np.int64)
    best_g = np.zeros((F, O), dtype=np.int64)
    live = np.empty(F, dtype=np.int64)
    for o in range(O):
        n_live = 0
        for fi in range(F):
            if size0[fi, o] < INF:
                live[n_live] = fi
                n_live += 1
        if n_live == 0:
            continue
        for ci in range(F):
            cur = INF
            cf = 0
            cg = 0
            for j in range(n_live):
                fi = live[j]
                gi = 0
                ok = True
                for s in range(w):
                    x = gmap[o, s, cvec[ci, s], cvec[fi, s]]
                    if x < 0:
                        ok = False
                        break
                    gi += x
                if not ok:
                    continue
                s1 = size1[gi, o]
                if s1 >= INF:
                    continue
                cost = size0[fi, o] + s1 - overlap[bm0[fi, o] & bm1[gi, o]]
                if cost < cur:
                    cur = cost
                    cf = fi
                    cg = gi
            if cur < INF:
                best[ci, o] = cur
                best_f[ci, o] = cf * O + o
                best_g[ci, o] = cg * O + o
    return best, best_f, best_g


def join_reductions(aux, bag, config, ctx=None):
    ctx = ctx or _Ctx(aux, config)
    return order_space(len(bag), config.orders).reductions(ctx.weights(tuple(bag)))


def split_map(R, red, clamp=True):
    """Allowed second-child shares for each (order, slot, requirement, first share).

    With ``T = c + red`` the two shares must add up to ``T``. Under ``clamp``
    a share equal to the slot's full range settles the slot on its own and
    the other side's share is capped at the range; otherwise shares outside
    the range are simply not allowed.
    """
    O, w = red.shape
    Rm = max(R) + 1
    out = np.full((O, w, Rm, Rm), -1, dtype=np.int64)
    for s in range(w):
        r = R[s]
        c = np.arange(r + 1)[None, :, None]
        f = np.arange(r + 1)[None, None, :]
        T = c + red[:, s][:, None, None]
        if clamp:
            g = np.where(f < r, np.minimum(T - f, r), 0)
            ok = np.where(f < r, T - f >= 0, T >= r)
        else:
            g = T - f
            ok = (g >= 0) & (g <= r)
        out[:, s, : r + 1, : r + 1] = np.where(ok, g, -1)
    return out


def join_step(aux, m0: SeedTable, m1: SeedTable, bag, config, ctx=None) -> SeedTable:
    """Combine two children over the same bag, minimising the union size.

    Each slot's requirement plus the weight it receives from earlier bag
    elements (counted in both children) is split between the two sides.
    """
    ctx = ctx or _Ctx(aux, config)
    bag = tuple(bag)
    if m0.bag != bag or m1.bag != bag:
        raise ValueError("join children must share the bag and slot order")
    w = len(bag)
    R = m0.ranges
    O = len(m0.space)
    shape = m0.size.shape
    red = join_reductions(aux, bag, config, ctx)
    overlap, _ = ctx.mask_lut(bag)
    strides = _c_strides(shape[:-1])
    gmap = split_map(R, red, config.ranges == "per-slot")
    for s in range(w):
        gmap[:, s] = np.where(gmap[:, s] >= 0, gmap[:, s] * strides[s], -1)
    cvec = np.array(list(product(*(range(r + 1) for r in R))), dtype=np.int64).reshape(-1, w)
    best, bf, bg = _join_kernel(
        np.ascontiguousarray(m0.size.reshape(-1, O)), np.ascontiguousarray(m0.bagmask.reshape(-1, O)),
        np.ascontiguousarray(m1.size.reshape(-1, O)), np.ascontiguousarray(m1.bagmask.reshape(-1, O)),
        overlap, cvec, gmap, np.array(strides, dtype=np.int64),
    )
    feasible = best < INF
    bm = np.where(feasible, m0.bagmask.ravel()[bf] | m1.bagmask.ravel()[bg], 0)
    sd = np.where(feasible, m0.seeds.ravel()[bf] | m1.seeds.ravel()[bg], 0)
    return SeedTable(bag, R, m0.space, best.reshape(shape), bm.reshape(shape), sd.reshape(shape))


# Driver ----------------------------------------------------------------------


@dataclass
class SolveResult:
    opt_size: int
    seed: frozenset
    forced: frozenset
    dummies: frozenset
    aux_seed: frozenset
    diagnostics: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        d = self.diagnostics
        return {
            "opt_size": self.opt_size,
            "seed": sorted(self.seed),
            "forced": sorted(self.forced),
            "dummies": sorted(self.dummies),
            "omega": d.get("omega", 0),
            "c_max": d.get("c_max", 0),
            "wall_ms": d.get("wall_ms", 0),
        }


def worst_case_entries(aux: AuxiliaryGraph, omega, mode) -> int:
    """Table size bound ``[(C+1)(w+1)]^w`` with ``C`` the threshold range."""
    mode = CostMode.parse(mode)
    C = aux.k - 1 if mode is CostMode.EPSILON else max(aux.c_max(), aux.k - 1)
    return ((C + 1) * (omega + 1)) ** omega


def estimate_memory(aux, ntd: NiceTreeDecomposition, config: SolverConfig):
    """Peak bytes over a post-order traversal, assuming children die after use."""
    ctx = _Ctx(aux, config)
    n_orders = count_orders(ntd.omega, config.orders)
    per_entry = _ENTRY_BYTES + 8 * (len(aux.nodes) // 64 + 1)
    entries = {}
    for z in ntd.nodes:
        e = n_orders
        for x in z.bag:
            e *= ctx.range_of(x) + 1
        entries[z.id] = e
    live = peak = 0
    for z in ntd.postorder():
        node = ntd.nodes[z]
        work = entries[z] * (2 if node.kind == JOIN else 1)
        peak = max(peak, (live + entries[z] + work) * per_entry)
        live += entries[z] - sum(entries[c] for c in node.children)
    return peak, max(entries.values(), default=0), n_orders


def compute_tables(aux, ntd: NiceTreeDecomposition, config: SolverConfig, ctx=None) -> dict:
    """Run the DP bottom-up; returns the root table (and stats in ``ctx``)."""
    ctx = ctx or _Ctx(aux, config)
    done: dict = {}
    pending_parents = {}
    for z in ntd.nodes:
        for c in z.children:
            pending_parents[c] = z.id

    def build(zid):
        z = ntd.nodes[zid]
        if z.kind == LEAF:
            tab = leaf_table(aux, z.bag, config, ctx)
        elif z.kind == REPLACE:
            tab = replace_step(aux, done[z.children[0]], z.u, z.v, config, ctx)
        else:
            tab = join_step(aux, done[z.children[0]], done[z.children[1]], z.bag, config, ctx)
        if tab.bag != z.bag:
            raise InternalConsistencyError(f"slot order mismatch at node {zid}")
        if config.trace > 1:
            log.debug("node %d %s entries=%d", zid, z.kind, tab.entries)
        return tab

    if config.parallel:
        remaining = {z.id: len(z.children) for z in ntd.nodes}
        ready = sorted(z for z, r in remaining.items() if r == 0)
        with ThreadPoolExecutor(max_workers=config.workers) as pool:
            while ready:
                tabs = list(pool.map(build, ready))
                nxt = []
                for zid, tab in zip(ready, tabs):
                    done[zid] = tab
                    for c in ntd.nodes[zid].children:
                        del done[c]
                    p = pending_parents.get(zid)
                    if p is not None:
                        remaining[p] -= 1
                        if remaining[p] == 0:
                            nxt.append(p)
                ready = sorted(nxt)
    else:
        for zid in ntd.postorder():
            done[zid] = build(zid)
            for c in ntd.nodes[zid].children:
                del done[c]
    return done[ntd.root]


def solve(aux: AuxiliaryGraph, ntd: NiceTreeDecomposition | None, config: SolverConfig) -> SolveResult:
    t0 = time.perf_counter()
    ctx = _Ctx(aux, config)
    diag = {"aux_nodes": len(aux.nodes), "aux_edges": len(aux.undirected_edges()), "c_max": aux.c_max()}
    forced = frozenset(aux.forced)
    if not aux.nodes:
        diag.update(omega=0, wall_ms=0, tables=0)
        return SolveResult(len(forced), forced, forced, frozenset(aux.preseeded), frozenset(), diag)
    if ntd is None:
        raise ValueError("a nice tree decomposition is required for a non-empty graph")
    peak, max_entries, n_orders = estimate_memory(aux, ntd, config)
    worst = worst_case_entries(aux, ntd.omega, config.mode)
    diag.update(omega=ntd.omega, width=ntd.omega - 1, tables=len(ntd.nodes), n_orders=n_orders,
                max_table_entries=max_entries, estimated_peak_bytes=peak, worst_case_entries=worst)
    if peak > config.mem_budget:
        raise MemoryBudgetExceeded(peak, config.mem_budget, worst)
    root = compute_tables(aux, ntd, config, ctx)
    c = tuple(ctx.thr[x] for x in root.bag)
    row = root.size[c]
    j = int(np.argmin(row))
    if row[j] >= INF:
        raise InternalConsistencyError("root row has no feasible entry")
    aux_seed = _bits(int(root.seeds[c + (j,)]))
    original = frozenset(aux.to_original(aux_seed))
    seed = original | forced
    diag["root_order"] = list(root.space.orders[j])
    diag["wall_ms"] = int((time.perf_counter() - t0) * 1000)
    if int(row[j]) != len(original):
        raise InternalConsistencyError("table size disagrees with the seed it stores")
    return SolveResult(len(seed), seed, forced, frozenset(aux.preseeded), aux_seed, diag)


def min_seed_set(net: SupplyChainNetwork, config: SolverConfig | None = None, td=None, root=None) -> SolveResult:
    """Validate, build the auxiliary graph, decompose, solve, and verify."""
    config = config or SolverConfig()
    t0 = time.perf_counter()
    rep = validate_network(net, config.mode)
    if not rep.ok:
        raise NetworkValidationError(rep)
    work = rescale_integral(net) if config.mode is CostMode.GENERAL else net
    aux = build_aux(work, config.mode)
    ntd = None
    width = -1
    if aux.nodes:
        verts = range(len(aux.nodes))
        edges = aux.undirected_edges()
        if td is None:
            td = decompose(verts, edges, config.heuristic)
        else:
            chk = validate_decomposition(verts, edges, td)
            if not chk.ok:
                raise ValueError(f"supplied decomposition is invalid:\n{chk}")
        width = td.width
        ntd = to_nice(td, root)
    res = solve(aux, ntd, config)
    res.diagnostics["heuristic_width"] = width
    res.diagnostics["wall_ms"] = int((time.perf_counter() - t0) * 1000)
    if config.verify:
        final, _ = simulate(net, res.seed | res.dummies, config.mode)
        if len(final) != net.n:
            raise InternalConsistencyError(
                f"solver seed {sorted(res.seed)} does not activate the whole network"
            )
    return res

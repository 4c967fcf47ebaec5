"""Adoption dynamics: benefit, one synchronous step, and simulation to fixed point."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .network import CostMode, SupplyChainNetwork


@dataclass(frozen=True)
class AdoptionState:
    active: frozenset
    t: int = 0

    def __post_init__(self):
        object.__setattr__(self, "active", frozenset(self.active))


def benefit(net: SupplyChainNetwork, state: AdoptionState, i) -> Fraction:
    """Summed flow of the paths that ``i`` would complete by adopting now."""
    if i not in net.paths_through:
        raise KeyError(f"unknown node {i}")
    if i in state.active:
        raise ValueError(f"node {i} is already active")
    active = state.active
    total = Fraction(0)
    for r in net.paths_through[i]:
        p = net.paths[r]
        if all(j in active for j in p.nodes if j != i):
            total += p.flow
    return total


def _eligible(net, active, i, mode):
    if mode is CostMode.EPSILON:
        for r in net.paths_through[i]:
            p = net.paths[r]
            if p.flow > 0 and all(j in active for j in p.nodes if j != i):
                return True
        return False
    c = net.cost[i]
    if c == 0:
        return True
    total = Fraction(0)
    for r in net.paths_through[i]:
        p = net.paths[r]
        if all(j in active for j in p.nodes if j != i):
            total += p.flow
            if total >= c:
                return True
    return False


def step(net: SupplyChainNetwork, state: AdoptionState, mode=CostMode.GENERAL) -> AdoptionState:
    mode = CostMode.parse(mode)
    active = state.active
    new = {i for i in net.node_ids if i not in active and _eligible(net, active, i, mode)}
    return AdoptionState(active | new, state.t + 1)


def simulate(net: SupplyChainNetwork, seed, mode=CostMode.GENERAL):
    """Run the cascade from ``seed``; return ``(final_set, trajectory)``.

    The trajectory lists the distinct states S_0, S_1, ... up to and including
    the fixed point, so its length minus one is the number of activation rounds.
    """
    mode = CostMode.parse(mode)
    seed = frozenset(seed)
    unknown = seed - set(net.node_ids)
    if unknown:
        raise KeyError(f"unknown seed nodes {sorted(unknown)}")
    state = AdoptionState(seed, 0)
    traj = [state.active]
    while True:
        nxt = step(net, state, mode)
        if nxt.active == state.active:
            return state.active, traj
        state = nxt
        traj.append(state.active)


def activates_all(net: SupplyChainNetwork, seed, mode=CostMode.GENERAL) -> bool:
    final, _ = simulate(net, seed, mode)
    return len(final) == net.n

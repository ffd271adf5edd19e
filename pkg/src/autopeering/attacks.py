"""Damage/cost accounting and the Betweenness, Greedy and Blind strategies.

Damage and cost are reported as shares of the total Mana, so efficiency
(damage over cost) is dimensionless. The cheaper endpoint of a link is the
one with less Mana; on equal Mana (``s = 0``) the higher rank is taken, which
makes the frontier endpoint of any link its larger rank.
"""

from __future__ import annotations

import math
from collections.abc import Iterable
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from . import _kernels
from .errors import ParameterError
from .graph import Edge, Graph, canonical, components, remove_nodes
from .mana import ManaDistribution

STRATEGIES = ("betweenness", "greedy", "blind")
MAX_DAMAGE = 0.5


@dataclass(frozen=True)
class Cut:
    links: frozenset[Edge]
    frontier: frozenset[int] = field(init=False)

    def __post_init__(self):
        links = frozenset(canonical(*e) for e in self.links)
        object.__setattr__(self, "links", links)
        object.__setattr__(self, "frontier", frozenset(j for _, j in links))


@dataclass(frozen=True)
class AttackOutcome:
    strategy: str
    success: bool
    part_a: frozenset[int]
    part_b: frozenset[int]
    controlled: frozenset[int]
    damage: float
    cost: float
    efficiency: float
    target: int | None = None
    cut: frozenset[Edge] = frozenset()

    @property
    def frontier_size(self) -> int:
        return len(self.controlled)


class GreedyRow(NamedTuple):
    target: int
    damage: float
    cost: float
    efficiency: float


def _efficiency(damage: float, cost: float) -> float:
    if cost > 0:
        return damage / cost
    return math.inf if damage > 0 else math.nan


def damage(a: Iterable[int], dist: ManaDistribution, universe: Iterable[int] | None = None) -> float:
    """Mana share of the lighter of ``a`` and its complement within ``universe``."""
    a = set(a)
    if not a:
        return 0.0
    rest = set(range(1, dist.n + 1) if universe is None else universe) - a
    return min(dist.fraction(a), dist.fraction(rest), MAX_DAMAGE)


def cut_cost(c: Cut | Iterable[Edge], dist: ManaDistribution) -> float:
    """Mana share of the frontier: the cheaper endpoint of every cut link, counted once."""
    if not isinstance(c, Cut):
        c = Cut(frozenset(c))
    return dist.fraction(c.frontier)


def _sides(g: Graph, dist: ManaDistribution, comps: list[set[int]]):
    """Isolate the heaviest fragment from everything else in ``g``.

    Nodes outside ``comps`` (a blind attacker's own nodes) stay in the
    network and join the remainder side. Returns (lighter side, heavier side,
    damage); cutting off the heaviest fragment is the best single-fragment
    isolation.
    """
    masses = [dist.fraction(c) for c in comps]
    heavy = max(range(len(comps)), key=lambda k: (masses[k], -min(comps[k])))
    core = frozenset(comps[heavy])
    rest = frozenset(g.nodes) - core
    m_core = masses[heavy]
    m_rest = dist.fraction(rest)
    if m_core <= m_rest:
        return core, rest, min(m_core, MAX_DAMAGE)
    return rest, core, min(m_rest, MAX_DAMAGE)


def betweenness_attack(g: Graph, dist: ManaDistribution) -> AttackOutcome:
    """Strip the current top-betweenness link, recomputing after each removal,
    until the graph falls apart. Removed links form the cut.

    A graph that is already disconnected counts as split at zero cost.
    """
    comps = components(g)
    removed: list[Edge] = []
    success = True
    if len(comps) == 1 and g.n >= 2:
        _, eu, ev = g.index_arrays()
        ids, success = _kernels.split_by_betweenness(g.n, eu, ev)
        removed = [g.edges[k] for k in ids.tolist()]
        if success:
            drop = set(removed)
            comps = components(Graph.from_edges(g.nodes, (e for e in g.edges if e not in drop)))
    cut = Cut(frozenset(removed))
    if not success or len(comps) < 2:
        return AttackOutcome(
            "betweenness", False, frozenset(), frozenset(g.nodes), cut.frontier,
            0.0, dist.fraction(cut.frontier), 0.0, cut=cut.links,
        )
    part_a, part_b, dmg = _sides(g, dist, comps)
    cost = dist.fraction(cut.frontier)
    return AttackOutcome(
        "betweenness", True, part_a, part_b, cut.frontier,
        dmg, cost, _efficiency(dmg, cost), cut=cut.links,
    )


def _greedy_arrays(g: Graph, dist: ManaDistribution):
    """Damage and cost of every rank-prefix split, vectorised.

    Node at position ``q`` (in rank order) is on the frontier of split ``t``
    (prefix = positions ``0..t``) iff its lowest-ranked neighbour sits at a
    position ``<= t < q``. Costs are accumulated over those ranges with a
    difference array.
    """
    nodes = np.asarray(g.nodes)
    w = dist.weights[nodes]
    pos = {v: q for q, v in enumerate(g.nodes)}
    n = len(nodes)
    diff = np.zeros(n + 1)
    count = np.zeros(n + 1, np.int64)
    for q, v in enumerate(g.nodes):
        nb = g.adjacency[v]
        if nb:
            lo = pos[min(nb)]
            if lo < q:
                diff[lo] += w[q]
                diff[q] -= w[q]
                count[lo] += 1
                count[q] -= 1
    cost = np.cumsum(diff[: n - 1]) / dist.unit_total
    # float residue must not turn an uncrossed split into a tiny nonzero cost
    cost[np.cumsum(count[: n - 1]) == 0] = 0.0
    head = np.cumsum(w)[: n - 1]
    tail = w.sum() - head
    dmg = np.minimum(np.minimum(head, tail) / dist.unit_total, MAX_DAMAGE)
    return nodes[: n - 1], dmg, cost


def greedy_scan(g: Graph, dist: ManaDistribution) -> list[GreedyRow]:
    """One row per split ``A = {i <= i*}``, ``B = {i > i*}``; efficiency is
    ``inf`` for a split crossed by no link."""
    targets, dmg, cost = _greedy_arrays(g, dist)
    return [
        GreedyRow(int(t), float(d), float(c), _efficiency(float(d), float(c)))
        for t, d, c in zip(targets, dmg, cost)
    ]


def greedy_attack(g: Graph, dist: ManaDistribution) -> AttackOutcome:
    rows = [r for r in greedy_scan(g, dist) if not (r.cost == 0 and r.damage == 0)]
    if not rows:
        return AttackOutcome("greedy", False, frozenset(), frozenset(g.nodes), frozenset(), 0.0, 0.0, 0.0)
    # efficiencies equal up to rounding count as ties, won by the smallest i*
    top = max(r.efficiency for r in rows)
    floor = top if math.isinf(top) else top - _kernels.TIE_RTOL * top
    best = next(r for r in rows if r.efficiency >= floor)
    t = best.target
    head = frozenset(v for v in g.nodes if v <= t)
    tail = frozenset(g.nodes) - head
    cut = Cut(frozenset(e for e in g.edges if e[0] <= t < e[1]))
    if dist.fraction(head) <= dist.fraction(tail):
        part_a, part_b = head, tail
    else:
        part_a, part_b = tail, head
    return AttackOutcome(
        "greedy", True, part_a, part_b, cut.frontier,
        best.damage, best.cost, best.efficiency, target=t, cut=cut.links,
    )


def blind_control_set(target: int, l: int, n: int) -> set[int]:
    """Ranks within distance ``l - 1`` of ``target``, clipped to ``1..n``."""
    if l < 1:
        raise ParameterError(f"range L must be >= 1, got {l}")
    if not 1 <= target <= n:
        raise ParameterError(f"target {target} outside 1..{n}")
    return set(range(max(1, target - l + 1), min(n, target + l - 1) + 1))


def blind_attack(g: Graph, dist: ManaDistribution, target: int, l: int) -> AttackOutcome:
    """Take over every node in the rank window around ``target`` and check
    whether the rest of the graph falls apart.

    The controlled nodes keep their Mana and stay on the far side of the
    partition, so damage is that of cutting the heaviest surviving fragment
    off from the remainder of the network.
    """
    control = blind_control_set(target, l, dist.n)
    cost = dist.fraction(control)
    survivors = remove_nodes(g, control & set(g.nodes))
    comps = components(survivors)
    if survivors.n < 2 or len(comps) < 2:
        return AttackOutcome(
            "blind", False, frozenset(), frozenset(survivors.nodes), frozenset(control),
            0.0, cost, 0.0, target=target,
        )
    part_a, part_b, dmg = _sides(g, dist, comps)
    return AttackOutcome(
        "blind", True, part_a, part_b, frozenset(control), dmg, cost, dmg / cost, target=target,
    )


def run_strategy(strategy: str, g: Graph, dist: ManaDistribution, target: int | None = None,
                 l: int | None = None) -> AttackOutcome:
    if strategy == "betweenness":
        return betweenness_attack(g, dist)
    if strategy == "greedy":
        return greedy_attack(g, dist)
    if strategy == "blind":
        if target is None or l is None:
            raise ParameterError("blind strategy needs a target and a range L")
        return blind_attack(g, dist, target, l)
    raise ParameterError(f"unknown strategy {strategy!r}")

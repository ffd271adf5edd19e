"""Network formation: the Mana-driven auto-peering model and two baselines.

Auto-peering procedure (single pass, all draws from one PCG64 stream):

1. visit nodes in a uniformly random order;
2. each node shuffles its candidate list and sends requests in that order;
3. a request to ``j`` is accepted while ``j`` holds fewer than ``k_out``
   accepted links and the pair is not already linked;
4. the requester stops after ``k_out`` accepted requests or when its
   candidates run out.

Nodes that run out of candidates keep a degree below ``2 * k_out``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, replace
from functools import lru_cache

import numpy as np

from .errors import ParameterError
from .graph import Graph
from .mana import DEFAULT_K, ManaDistribution, build_mana

log = logging.getLogger(__name__)

MODELS = ("autopeering", "lattice", "ws")


@dataclass(frozen=True)
class FormationParams:
    n: int = 100
    s: float = 1.0
    k_const: float = DEFAULT_K
    rho: float = 4.0
    r_window: int = 10
    k_out: int = 4
    seed: int = 0
    model: str = "autopeering"
    rewire_p: float = 1.0

    def __post_init__(self):
        if self.model not in MODELS:
            raise ParameterError(f"unknown model {self.model!r}; expected one of {MODELS}")
        if self.k_out < 1:
            raise ParameterError("k_out must be >= 1")
        if self.n <= 2 * self.k_out:
            raise ParameterError(f"n={self.n} must exceed 2*k_out={2 * self.k_out}")
        if not self.rho > 1:
            raise ParameterError(f"rho must be > 1, got {self.rho}")
        if self.r_window < 1:
            raise ParameterError("r_window must be >= 1")
        if self.s < 0:
            raise ParameterError("s must be >= 0")
        if not 0.0 <= self.rewire_p <= 1.0:
            raise ParameterError("rewire_p must lie in [0, 1]")
        if not 0 <= self.seed < 2**64:
            raise ParameterError("seed must be an unsigned 64-bit integer")

    def with_seed(self, seed: int) -> FormationParams:
        return replace(self, seed=int(seed))

    def mana(self) -> ManaDistribution:
        return build_mana(self.n, self.s, self.k_const)


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(int(seed)))


def potential_neighbors(i: int, dist: ManaDistribution, rho: float, r_window: int) -> set[int]:
    """Ranks ``j != i`` with ``m(i)/rho < m(j) < rho*m(i)`` or ``|j - i| < r_window``."""
    if not 1 <= i <= dist.n:
        raise ParameterError(f"rank {i} outside 1..{dist.n}")
    w = dist.weights
    j = np.arange(1, dist.n + 1)
    ok = ((w[i] / rho < w[1:]) & (w[1:] < rho * w[i])) | (np.abs(j - i) < r_window)
    ok[i - 1] = False
    return set(j[ok].tolist())


@lru_cache(maxsize=64)
def _candidate_table(n: int, s: float, rho: float, r_window: int) -> tuple[np.ndarray, ...]:
    # K cancels in the ratio test, so unit weights are enough.
    w = build_mana(n, s, 1.0).weights[1:]
    ranks = np.arange(1, n + 1)
    ratio = (w[:, None] / rho < w[None, :]) & (w[None, :] < rho * w[:, None])
    window = np.abs(ranks[:, None] - ranks[None, :]) < r_window
    ok = ratio | window
    np.fill_diagonal(ok, False)
    table = [np.empty(0, np.int64)]
    for row in ok:
        cand = ranks[row]
        cand.setflags(write=False)
        table.append(cand)
    return tuple(table)


def candidate_lists(p: FormationParams) -> tuple[np.ndarray, ...]:
    """Candidate ranks for every node, indexed by rank (entry 0 unused)."""
    return _candidate_table(p.n, float(p.s), float(p.rho), int(p.r_window))


def generate_autopeering(p: FormationParams) -> Graph:
    cands = candidate_lists(p)
    rng = make_rng(p.seed)
    k = p.k_out
    incoming = [0] * (p.n + 1)
    edges: set[tuple[int, int]] = set()
    for i in (rng.permutation(p.n) + 1).tolist():
        if not len(cands[i]):
            continue
        made = 0
        for j in rng.permutation(cands[i]).tolist():
            if incoming[j] >= k:
                continue
            e = (i, j) if i < j else (j, i)
            if e in edges:
                continue
            edges.add(e)
            incoming[j] += 1
            made += 1
            if made == k:
                break
    g = Graph.from_edges(p.n, edges)
    if log.isEnabledFor(logging.DEBUG):
        short = sum(1 for d in g.degrees().values() if d < 2 * k)
        if short:
            log.debug("seed %d: %d nodes below degree %d", p.seed, short, 2 * k)
    return g


def generate_lattice(n: int, k_out: int) -> Graph:
    """Path lattice: ``i ~ j`` iff ``0 < |i - j| <= k_out`` (no wraparound)."""
    if n <= 2 * k_out:
        raise ParameterError(f"n={n} must exceed 2*k_out={2 * k_out}")
    return Graph.from_edges(
        n, ((i, j) for i in range(1, n + 1) for j in range(i + 1, min(n, i + k_out) + 1))
    )


def generate_ws(n: int, k_out: int, rewire_p: float, seed: int) -> Graph:
    """Watts-Strogatz ring with ``k_out`` neighbours per side.

    Each ring edge ``(u, u+j)`` is rewired with probability ``rewire_p`` to
    ``(u, w)`` with ``w`` uniform over nodes that are neither ``u`` nor already
    adjacent to it.
    """
    if n <= 2 * k_out:
        raise ParameterError(f"n={n} must exceed 2*k_out={2 * k_out}")
    rng = make_rng(seed)
    adj: list[set[int]] = [set() for _ in range(n)]
    for u in range(n):
        for j in range(1, k_out + 1):
            v = (u + j) % n
            adj[u].add(v)
            adj[v].add(u)
    for j in range(1, k_out + 1):
        for u in range(n):
            v = (u + j) % n
            if rng.random() >= rewire_p or v not in adj[u]:
                continue
            if len(adj[u]) >= n - 1:
                continue
            w = int(rng.integers(n))
            while w == u or w in adj[u]:
                w = int(rng.integers(n))
            adj[u].discard(v)
            adj[v].discard(u)
            adj[u].add(w)
            adj[w].add(u)
    return Graph.from_edges(
        n, ((u + 1, v + 1) for u in range(n) for v in adj[u] if u < v)
    )


def generate(p: FormationParams) -> Graph:
    """Dispatch on ``p.model``."""
    if p.model == "autopeering":
        return generate_autopeering(p)
    if p.model == "lattice":
        return generate_lattice(p.n, p.k_out)
    return generate_ws(p.n, p.k_out, p.rewire_p, p.seed)

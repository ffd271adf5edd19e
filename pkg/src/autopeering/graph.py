"""Undirected simple graphs whose nodes are Mana ranks.

Graphs are immutable; ``remove_edge`` and ``remove_nodes`` return new graphs.
Node labels (ranks) survive node removal.
"""

from __future__ import annotations

from collections import deque
from collections.abc import Iterable
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from . import _kernels
from .errors import EdgeNotFoundError, ParameterError, RankError

Edge = tuple[int, int]


def canonical(i: int, j: int) -> Edge:
    return (i, j) if i < j else (j, i)


class EdgeScore(NamedTuple):
    edge: Edge
    score: float


@dataclass(frozen=True, eq=False)
class Graph:
    nodes: tuple[int, ...]
    edges: tuple[Edge, ...]
    adjacency: dict[int, frozenset[int]] = field(repr=False, compare=False)

    @classmethod
    def from_edges(cls, nodes: int | Iterable[int], edges: Iterable[tuple[int, int]]) -> Graph:
        """Build a graph on ``nodes`` (a count ``n`` means ranks ``1..n``).

        Self-loops and repeated edges are rejected.
        """
        if isinstance(nodes, (int, np.integer)):
            node_list = list(range(1, int(nodes) + 1))
        else:
            node_list = sorted({int(v) for v in nodes})
        if node_list and node_list[0] < 1:
            raise RankError("ranks are 1-based")
        members = set(node_list)
        adj: dict[int, set[int]] = {v: set() for v in node_list}
        canon = set()
        for i, j in edges:
            i, j = int(i), int(j)
            if i == j:
                raise ParameterError(f"self-loop on node {i}")
            if i not in members or j not in members:
                raise RankError(f"edge ({i}, {j}) references a node outside the graph")
            e = canonical(i, j)
            if e in canon:
                raise ParameterError(f"parallel edge {e}")
            canon.add(e)
            adj[i].add(j)
            adj[j].add(i)
        return cls(
            tuple(node_list),
            tuple(sorted(canon)),
            {v: frozenset(nb) for v, nb in adj.items()},
        )

    @property
    def n(self) -> int:
        return len(self.nodes)

    def neighbors(self, v: int) -> list[int]:
        return sorted(self.adjacency[v])

    def degree(self, v: int) -> int:
        return len(self.adjacency[v])

    def degrees(self) -> dict[int, int]:
        return {v: len(self.adjacency[v]) for v in self.nodes}

    def has_edge(self, i: int, j: int) -> bool:
        return i in self.adjacency and j in self.adjacency[i]

    def edge_set(self) -> set[Edge]:
        return set(self.edges)

    def index_arrays(self) -> tuple[dict[int, int], np.ndarray, np.ndarray]:
        """0-based position of each rank plus edge endpoint arrays in canonical order."""
        pos = {v: k for k, v in enumerate(self.nodes)}
        eu = np.fromiter((pos[i] for i, _ in self.edges), np.int64, len(self.edges))
        ev = np.fromiter((pos[j] for _, j in self.edges), np.int64, len(self.edges))
        return pos, eu, ev

    def to_edgelist(self) -> str:
        top = self.nodes[-1] if self.nodes else 0
        lines = [f"# n={top}"]
        if self.nodes != tuple(range(1, top + 1)):
            lines.append("# nodes=" + ",".join(map(str, self.nodes)))
        lines += [f"{i} {j}" for i, j in self.edges]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_edgelist(cls, text: str) -> Graph:
        n = None
        nodes = None
        edges = []
        for raw in text.splitlines():
            line = raw.strip()
            if not line:
                continue
            if line.startswith("#"):
                key, _, val = line[1:].strip().partition("=")
                if key.strip() == "n":
                    n = int(val)
                elif key.strip() == "nodes":
                    nodes = [int(x) for x in val.split(",") if x]
                continue
            i, j = line.split()
            edges.append((int(i), int(j)))
        if nodes is None:
            if n is None:
                raise ParameterError("edge list lacks a '# n=<N>' header")
            nodes = n
        return cls.from_edges(nodes, edges)


def components(g: Graph) -> list[set[int]]:
    """Connected components ordered by their smallest rank."""
    seen: set[int] = set()
    out = []
    for start in g.nodes:
        if start in seen:
            continue
        comp = {start}
        seen.add(start)
        queue = deque([start])
        while queue:
            v = queue.popleft()
            for w in g.adjacency[v]:
                if w not in seen:
                    seen.add(w)
                    comp.add(w)
                    queue.append(w)
        out.append(comp)
    return out


def edge_betweenness(g: Graph) -> list[EdgeScore]:
    """Exact unnormalised edge betweenness, one score per edge in canonical order."""
    if not g.edges:
        return []
    _, eu, ev = g.index_arrays()
    indptr, nbr, eid = _kernels.build_csr(g.n, eu, ev)
    alive = np.ones(len(g.edges), np.bool_)
    scores = _kernels.edge_betweenness(g.n, len(g.edges), indptr, nbr, eid, alive)
    return [EdgeScore(e, float(x)) for e, x in zip(g.edges, scores)]


def remove_edge(g: Graph, e: tuple[int, int]) -> Graph:
    e = canonical(*e)
    if not g.has_edge(*e):
        raise EdgeNotFoundError(e)
    return Graph.from_edges(g.nodes, (x for x in g.edges if x != e))


def remove_nodes(g: Graph, s: Iterable[int]) -> Graph:
    drop = set(s)
    members = set(g.nodes)
    for v in drop:
        if v not in members:
            raise RankError(f"rank {v} is not a node of the graph")
    if not drop:
        return g
    return Graph.from_edges(
        [v for v in g.nodes if v not in drop],
        ((i, j) for i, j in g.edges if i not in drop and j not in drop),
    )

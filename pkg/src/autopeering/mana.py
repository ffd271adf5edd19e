"""Ranked Zipf Mana endowments.

Node ``i`` (1 = richest) holds ``m(i) = K * i**-s``. Every fraction this module
hands out is computed from the unit-scale weights ``i**-s`` so that results
are bitwise identical for any choice of ``K``.
"""

from __future__ import annotations

import math
from collections.abc import Iterable
from dataclasses import dataclass, field

import numpy as np

from .errors import ParameterError, RankError

DEFAULT_K = 1e10


def _neumaier_prefix(terms: np.ndarray) -> np.ndarray:
    """Running sums with Neumaier compensation; out[0] = 0, out[i] = sum(terms[:i])."""
    out = np.empty(len(terms) + 1)
    out[0] = 0.0
    total = 0.0
    comp = 0.0
    for idx, x in enumerate(terms.tolist(), start=1):
        t = total + x
        if abs(total) >= abs(x):
            comp += (total - t) + x
        else:
            comp += (x - t) + total
        total = t
        out[idx] = total + comp
    return out


@dataclass(frozen=True, eq=False)
class ManaDistribution:
    """Immutable Zipf endowment over ranks ``1..n``.

    ``values``, ``weights`` and ``prefix`` are padded at index 0 so that they
    can be indexed by rank directly.
    """

    n: int
    s: float
    k_const: float = DEFAULT_K
    weights: np.ndarray = field(init=False, repr=False)
    values: np.ndarray = field(init=False, repr=False)
    prefix: np.ndarray = field(init=False, repr=False)
    unit_total: float = field(init=False, repr=False)
    total: float = field(init=False)

    def __post_init__(self):
        if isinstance(self.n, bool) or int(self.n) != self.n or self.n < 2:
            raise ParameterError(f"n must be an integer >= 2, got {self.n!r}")
        if not math.isfinite(self.s) or self.s < 0:
            raise ParameterError(f"s must be a finite real >= 0, got {self.s!r}")
        if not math.isfinite(self.k_const) or self.k_const <= 0:
            raise ParameterError(f"k_const must be positive, got {self.k_const!r}")
        ranks = np.arange(1, self.n + 1, dtype=float)
        unit = np.empty(self.n + 1)
        unit[0] = 0.0
        unit[1:] = ranks ** (-float(self.s))
        values = unit * float(self.k_const)
        prefix = _neumaier_prefix(values[1:])
        for arr in (unit, values, prefix):
            arr.setflags(write=False)
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "weights", unit)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "prefix", prefix)
        object.__setattr__(self, "unit_total", math.fsum(unit[1:].tolist()))
        object.__setattr__(self, "total", float(prefix[-1]))

    def mana(self, rank: int) -> float:
        self._check(rank)
        return float(self.values[rank])

    def mass(self, a: int, b: int) -> float:
        """Absolute Mana of the contiguous rank range ``[a, b]``."""
        if a > b:
            return 0.0
        self._check(a)
        self._check(b)
        return float(self.prefix[b] - self.prefix[a - 1])

    def fraction(self, nodes: Iterable[int]) -> float:
        """Mana share of ``nodes`` relative to the total; duplicates count once."""
        ranks = set(nodes)
        for r in ranks:
            self._check(r)
        if not ranks:
            return 0.0
        return math.fsum(self.weights[sorted(ranks)].tolist()) / self.unit_total

    def _check(self, rank) -> None:
        if isinstance(rank, bool) or not isinstance(rank, (int, np.integer)):
            raise RankError(f"rank must be an integer, got {rank!r}")
        if not 1 <= rank <= self.n:
            raise RankError(f"rank {rank} outside 1..{self.n}")


def build_mana(n: int, s: float, k_const: float = DEFAULT_K) -> ManaDistribution:
    return ManaDistribution(n, s, k_const)


def mass_fraction(dist: ManaDistribution, nodes: Iterable[int]) -> float:
    """Share of total Mana held by ``nodes`` (a set of distinct ranks)."""
    nodes = list(nodes)
    if len(set(nodes)) != len(nodes):
        raise RankError("duplicate ranks in node set")
    return dist.fraction(nodes)

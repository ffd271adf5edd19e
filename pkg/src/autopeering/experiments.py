"""Monte Carlo campaigns over ensembles of generated networks.

Every run draws its graph from a seed derived from ``(master_seed, stream,
point_id, ...)`` so results do not depend on how runs are spread over worker
processes. Aggregates are reduced in run-index order.

Seed streams:

* ``ENSEMBLE`` feeds full-information ensembles (``run_ensemble``,
  ``frontier_frequencies``, heatmap cells);
* ``BLIND`` feeds per-``L`` blind ensembles (``blind_sweep``,
  ``min_l_for_full_success``), so the minimum ``L`` found by the search is the
  first ``L`` at which the matching sweep reports ``p == 1``.
"""

from __future__ import annotations

import csv
import math
import os
from collections.abc import Callable, Iterable, Sequence
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from .attacks import AttackOutcome, blind_attack, blind_control_set, greedy_scan, run_strategy
from .errors import ConfigError, ParameterError
from .formation import FormationParams, generate
from .mana import mass_fraction

ENSEMBLE = 0
BLIND = 1

FULL_INFO = ("betweenness", "greedy")
BLIND_LABEL = {"betweenness": "bb", "greedy": "bg"}
Z95 = 1.96

RUN_COLUMNS = [
    "point_id", "s", "rho", "n", "r", "k", "run", "seed", "strategy", "target",
    "L", "success", "damage", "cost", "efficiency", "frontier_size",
]
AGG_COLUMNS = [
    "point_id", "s", "rho", "strategy", "L", "runs", "p", "mean_eff", "std_eff",
    "ci95", "mean_damage", "mean_cost",
]
POINT_COLUMNS = ["point_id", "model", "n", "s", "rho", "r", "k", "rewire_p", "k_const"]

EFFICIENCY_CONVENTION = "mean over successful runs with finite efficiency"


def derive_seed(master_seed: int, *indices: int) -> int:
    ss = np.random.SeedSequence(int(master_seed), spawn_key=tuple(int(i) for i in indices))
    return int(ss.generate_state(1, np.uint64)[0])


def resolve_jobs(jobs: int) -> int:
    if jobs == 0:
        return os.cpu_count() or 1
    return max(1, jobs)


def _pmap(fn: Callable, tasks: Sequence, jobs: int) -> list:
    jobs = resolve_jobs(jobs)
    if jobs == 1 or len(tasks) < 2:
        return [fn(t) for t in tasks]
    chunk = max(1, len(tasks) // (jobs * 8))
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, tasks, chunksize=chunk))


# ---------------------------------------------------------------- records


@dataclass(frozen=True)
class RunRecord:
    point_id: int
    s: float
    rho: float
    n: int
    r: int
    k: int
    run: int
    seed: int
    strategy: str
    target: int | None
    L: int | None
    success: bool
    damage: float
    cost: float
    efficiency: float
    frontier_size: int
    frontier: frozenset[int] = field(default=frozenset(), compare=False, repr=False)

    @classmethod
    def from_outcome(cls, pid: int, p: FormationParams, run: int, label: str,
                     o: AttackOutcome, l: int | None = None) -> RunRecord:
        return cls(pid, p.s, p.rho, p.n, p.r_window, p.k_out, run, p.seed, label, o.target, l,
                   o.success, o.damage, o.cost, o.efficiency, o.frontier_size, o.controlled)

    def row(self) -> list[str]:
        return [_fmt(getattr(self, c)) for c in RUN_COLUMNS]


@dataclass(frozen=True)
class AggregateRow:
    point_id: int
    s: float
    rho: float
    strategy: str
    L: int | None
    runs: int
    p: float
    mean_eff: float
    std_eff: float
    ci95: float
    mean_damage: float
    mean_cost: float

    def row(self) -> list[str]:
        return [_fmt(getattr(self, c)) for c in AGG_COLUMNS]


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "1" if v else "0"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _mean_std_ci(values: list[float]) -> tuple[float, float, float]:
    if not values:
        return math.nan, math.nan, math.nan
    arr = np.asarray(values)
    mean = math.fsum(values) / len(values)
    if len(values) == 1:
        return mean, 0.0, 0.0
    std = float(np.sqrt(math.fsum(((arr - mean) ** 2).tolist()) / (len(values) - 1)))
    return mean, std, Z95 * std / math.sqrt(len(values))


def aggregate(records: Iterable[RunRecord]) -> list[AggregateRow]:
    """Group by (point, strategy, L) in first-seen order.

    Efficiency statistics use successful runs with finite efficiency only;
    damage and cost means use every run.
    """
    groups: dict[tuple, list[RunRecord]] = {}
    for rec in records:
        groups.setdefault((rec.point_id, rec.strategy, rec.L), []).append(rec)
    rows = []
    for (pid, strategy, l), recs in groups.items():
        effs = [r.efficiency for r in recs if r.success and math.isfinite(r.efficiency)]
        mean, std, ci = _mean_std_ci(effs)
        wins = sum(r.success for r in recs)
        rows.append(AggregateRow(
            pid, recs[0].s, recs[0].rho, strategy, l, len(recs), wins / len(recs),
            mean, std, ci,
            math.fsum(r.damage for r in recs) / len(recs),
            math.fsum(r.cost for r in recs) / len(recs),
        ))
    return rows


@dataclass
class ResultsTable:
    rows: list[AggregateRow]
    records: list[RunRecord]
    points: list[tuple[int, FormationParams]]
    metadata: dict = field(default_factory=dict)

    def row(self, strategy: str, point_id: int = 0, l: int | None = None) -> AggregateRow:
        for r in self.rows:
            if r.strategy == strategy and r.point_id == point_id and r.L == l:
                return r
        raise KeyError((strategy, point_id, l))

    def write(self, out_dir: str | os.PathLike, prefix: str = "") -> dict[str, str]:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        paths = {
            "runs": out / f"{prefix}runs.csv",
            "aggregate": out / f"{prefix}aggregate.csv",
            "points": out / f"{prefix}points.csv",
        }
        write_csv(paths["runs"], RUN_COLUMNS, (r.row() for r in self.records))
        write_csv(paths["aggregate"], AGG_COLUMNS, (r.row() for r in self.rows))
        write_csv(paths["points"], POINT_COLUMNS, (
            [_fmt(pid), p.model, _fmt(p.n), _fmt(p.s), _fmt(p.rho), _fmt(p.r_window),
             _fmt(p.k_out), _fmt(p.rewire_p), _fmt(p.k_const)]
            for pid, p in self.points
        ))
        return {k: str(v) for k, v in paths.items()}


def write_csv(path: Path, header: list[str], rows: Iterable[list[str]]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


# ---------------------------------------------------------------- configs


@dataclass(frozen=True)
class BlindSpec:
    """Blind attacks inside ``run_ensemble``.

    ``target_source="fixed"`` attacks every rank in ``targets``;
    ``"mode"`` attacks the frontier-frequency mode of each full-information
    strategy that ran at the same point (labelled ``bb`` / ``bg``).
    """

    target_source: str = "fixed"
    targets: tuple[int, ...] = (12,)
    l_grid: tuple[int, ...] = tuple(range(1, 13))


@dataclass(frozen=True)
class SweepConfig:
    base: FormationParams = FormationParams()
    s_grid: tuple[float, ...] = (1.0,)
    rho_grid: tuple[float, ...] = (4.0,)
    n_grid: tuple[int, ...] | None = None
    r_grid: tuple[int, ...] | None = None
    runs: int = 1000
    strategies: tuple[str, ...] = FULL_INFO
    blind: BlindSpec | None = None
    baseline: str = "none"
    master_seed: int = 0

    def points(self) -> list[tuple[int, FormationParams]]:
        """Auto-peering grid points, then baseline points (one per ``n``, ``s``)."""
        base = replace(self.base, model="autopeering", seed=0)
        pts = []
        for n in self.n_grid or (base.n,):
            for r in self.r_grid or (base.r_window,):
                for s in self.s_grid:
                    for rho in self.rho_grid:
                        pts.append(replace(base, n=n, r_window=r, s=float(s), rho=float(rho)))
        if self.baseline != "none":
            for n in self.n_grid or (base.n,):
                for s in self.s_grid:
                    pts.append(replace(base, n=n, s=float(s), model=self.baseline))
        return list(enumerate(pts))

    def validate(self) -> None:
        if self.runs < 1:
            raise ConfigError("runs must be >= 1")
        for name in ("s_grid", "rho_grid", "n_grid", "r_grid"):
            grid = getattr(self, name)
            if grid is not None and len(grid) == 0:
                raise ConfigError(f"{name} must not be empty")
        if not self.strategies:
            raise ConfigError("no strategies selected")
        for st in self.strategies:
            if st not in FULL_INFO + ("blind",):
                raise ConfigError(f"unknown strategy {st!r}")
        if ("blind" in self.strategies) != (self.blind is not None):
            raise ConfigError("the blind strategy and a blind spec go together")
        if self.baseline not in ("none", "lattice", "ws"):
            raise ConfigError(f"unknown baseline {self.baseline!r}")
        if not 0 <= self.master_seed < 2**64:
            raise ConfigError("master_seed must be an unsigned 64-bit integer")
        try:
            pts = self.points()
        except ParameterError as exc:
            raise ConfigError(str(exc)) from exc
        if self.blind is not None:
            b = self.blind
            if b.target_source not in ("fixed", "mode"):
                raise ConfigError(f"unknown target source {b.target_source!r}")
            if not b.l_grid or min(b.l_grid) < 1:
                raise ConfigError("blind l_grid must hold integers >= 1")
            if b.target_source == "fixed":
                if not b.targets:
                    raise ConfigError("fixed blind targets missing")
                for _, p in pts:
                    if not all(1 <= t <= p.n for t in b.targets):
                        raise ConfigError(f"blind target outside 1..{p.n}")
            elif not any(s in self.strategies for s in FULL_INFO):
                raise ConfigError("mode-informed blind attacks need a full-information strategy")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> SweepConfig:
        d = dict(d)
        d["base"] = FormationParams(**d.get("base", {}))
        for key in ("s_grid", "rho_grid", "n_grid", "r_grid", "strategies"):
            if d.get(key) is not None:
                d[key] = tuple(d[key])
        if d.get("blind") is not None:
            b = dict(d["blind"])
            b["targets"] = tuple(b.get("targets", ()))
            b["l_grid"] = tuple(b.get("l_grid", ()))
            d["blind"] = BlindSpec(**b)
        return cls(**d)


# ---------------------------------------------------------------- workers


def _full_info_task(task) -> list[RunRecord]:
    pid, params, run, strategies, blind_jobs = task
    g = generate(params)
    dist = params.mana()
    out = []
    for st in strategies:
        out.append(RunRecord.from_outcome(pid, params, run, st, run_strategy(st, g, dist)))
    for label, target, l in blind_jobs:
        out.append(RunRecord.from_outcome(pid, params, run, label, blind_attack(g, dist, target, l), l))
    return out


def _blind_task(task) -> list[RunRecord]:
    pid, params, run, l, targets = task
    g = generate(params)
    dist = params.mana()
    return [
        RunRecord.from_outcome(pid, params, run, label, blind_attack(g, dist, t, l), l)
        for label, t in targets
    ]


def _ensemble_tasks(pid, point, runs, master_seed, strategies, blind_jobs=()):
    return [
        (pid, point.with_seed(derive_seed(master_seed, ENSEMBLE, pid, run)), run,
         tuple(strategies), tuple(blind_jobs))
        for run in range(runs)
    ]


def _flatten(chunks: Iterable[list]) -> list:
    return [x for chunk in chunks for x in chunk]


# ---------------------------------------------------------------- campaigns


@dataclass
class FrequencyHistogram:
    counts: np.ndarray  # indexed by rank; entry 0 unused
    runs: int

    @property
    def mode(self) -> int:
        return int(np.argmax(self.counts[1:])) + 1

    def rows(self) -> list[list[str]]:
        return [[str(rank), str(int(c))] for rank, c in enumerate(self.counts) if rank > 0]

    @classmethod
    def from_records(cls, records: Iterable[RunRecord], n: int, runs: int) -> FrequencyHistogram:
        counts = np.zeros(n + 1, np.int64)
        for rec in records:
            for v in rec.frontier:
                counts[v] += 1
        return cls(counts, runs)


def run_ensemble(cfg: SweepConfig, jobs: int = 1) -> ResultsTable:
    cfg.validate()
    points = cfg.points()
    full = [s for s in cfg.strategies if s in FULL_INFO]
    b = cfg.blind
    fixed_jobs = []
    if b is not None and b.target_source == "fixed":
        fixed_jobs = [(f"blind:{t}", t, l) for t in b.targets for l in b.l_grid]
    records: list[RunRecord] = []
    modes: dict[int, dict[str, int]] = {}
    for pid, point in points:
        recs = _flatten(_pmap(
            _full_info_task, _ensemble_tasks(pid, point, cfg.runs, cfg.master_seed, full, fixed_jobs), jobs
        ))
        if b is not None and b.target_source == "mode":
            modes[pid] = {
                st: FrequencyHistogram.from_records(
                    (r for r in recs if r.strategy == st), point.n, cfg.runs).mode
                for st in full
            }
            mode_jobs = [(BLIND_LABEL[st], t, l) for st, t in modes[pid].items() for l in b.l_grid]
            recs += _flatten(_pmap(
                _full_info_task, _ensemble_tasks(pid, point, cfg.runs, cfg.master_seed, (), mode_jobs), jobs
            ))
        records += recs
    meta = {"efficiency": EFFICIENCY_CONVENTION, "seed_stream": ENSEMBLE}
    if modes:
        meta["blind_targets"] = {str(pid): m for pid, m in modes.items()}
    return ResultsTable(aggregate(records), records, points, meta)


def frontier_frequencies(point: FormationParams, strategy: str, runs: int, master_seed: int,
                         point_id: int = 0, jobs: int = 1) -> FrequencyHistogram:
    """How often each rank lands in the strategy's frontier, once per run."""
    if strategy not in FULL_INFO:
        raise ParameterError(f"frontier frequencies need a full-information strategy, got {strategy!r}")
    recs = _flatten(_pmap(
        _full_info_task, _ensemble_tasks(point_id, point, runs, master_seed, (strategy,)), jobs
    ))
    return FrequencyHistogram.from_records(recs, point.n, runs)


def blind_sweep(point: FormationParams, target: int | Sequence[int], l_grid: Sequence[int], runs: int,
                master_seed: int, point_id: int = 0, jobs: int = 1,
                labels: Sequence[str] | None = None) -> ResultsTable:
    """Blind attacks on a fresh ensemble per ``L``.

    Several targets may share the ensembles; each gets its own label
    (default ``blind:<rank>``).
    """
    targets = [target] if isinstance(target, (int, np.integer)) else list(target)
    for t in targets:
        if not 1 <= t <= point.n:
            raise ParameterError(f"target {t} outside 1..{point.n}")
    labels = list(labels) if labels else [f"blind:{t}" for t in targets]
    pairs = tuple(zip(labels, targets))
    tasks = [
        (point_id, point.with_seed(derive_seed(master_seed, BLIND, point_id, l, run)), run, l, pairs)
        for l in l_grid for run in range(runs)
    ]
    recs = _flatten(_pmap(_blind_task, tasks, jobs))
    # group per label so each target's L-curve is contiguous
    order = {lab: k for k, lab in enumerate(labels)}
    recs.sort(key=lambda r: order[r.strategy])
    meta = {"efficiency": EFFICIENCY_CONVENTION, "seed_stream": BLIND}
    return ResultsTable(aggregate(recs), recs, [(point_id, point)], meta)


def min_l_for_full_success(point: FormationParams, target: int, runs: int, l_max: int,
                           master_seed: int, point_id: int = 0) -> int | None:
    """Smallest ``L`` whose blind ensemble splits on every run, or ``None``."""
    if l_max > point.n:
        raise ParameterError(f"l_max={l_max} exceeds n={point.n}")
    dist = point.mana()
    for l in range(1, l_max + 1):
        for run in range(runs):
            g = generate(point.with_seed(derive_seed(master_seed, BLIND, point_id, l, run)))
            if not blind_attack(g, dist, target, l).success:
                break
        else:
            return l
    return None


def greedy_profile(point: FormationParams, runs: int, master_seed: int, point_id: int = 0) -> list[tuple[int, float]]:
    """Mean greedy efficiency per split rank ``i*`` over an ensemble; splits
    crossed by no link are left out of the mean."""
    dist = point.mana()
    sums = np.zeros(point.n)
    counts = np.zeros(point.n, np.int64)
    for run in range(runs):
        g = generate(point.with_seed(derive_seed(master_seed, ENSEMBLE, point_id, run)))
        for row in greedy_scan(g, dist):
            if math.isfinite(row.efficiency):
                sums[row.target] += row.efficiency
                counts[row.target] += 1
    return [
        (t, float(sums[t] / counts[t]) if counts[t] else math.nan)
        for t in range(1, point.n)
    ]


# ---------------------------------------------------------------- heatmaps

HEATMAP_METRICS = ("efficiency", "cost_at_full_success", "efficiency_ratio", "min_l")


@dataclass(frozen=True)
class HeatmapCell:
    point_id: int
    params: FormationParams
    efficiency: dict[str, float]
    mode: dict[str, int]
    min_l: dict[str, int | None]
    cost_at_full_success: dict[str, float]


def heatmap_cells(cfg: SweepConfig, l_max: int | None = None, jobs: int = 1,
                  blind: bool = True) -> list[HeatmapCell]:
    """Per-cell statistics for both full-information strategies and the blind
    attacks they inform. ``blind=False`` skips the minimum-``L`` searches."""
    cfg = replace(cfg, strategies=FULL_INFO, blind=None, baseline="none")
    cfg.validate()
    cells = []
    for pid, point in cfg.points():
        recs = _flatten(_pmap(
            _full_info_task, _ensemble_tasks(pid, point, cfg.runs, cfg.master_seed, FULL_INFO), jobs
        ))
        rows = {r.strategy: r for r in aggregate(recs)}
        eff = {st: rows[st].mean_eff for st in FULL_INFO}
        mode = {
            st: FrequencyHistogram.from_records((r for r in recs if r.strategy == st), point.n, cfg.runs).mode
            for st in FULL_INFO
        }
        min_l: dict[str, int | None] = {}
        cost: dict[str, float] = {}
        if blind:
            dist = point.mana()
            for st in FULL_INFO:
                lm = min_l_for_full_success(point, mode[st], cfg.runs, l_max or point.n,
                                            cfg.master_seed, pid)
                min_l[st] = lm
                cost[st] = math.nan if lm is None else mass_fraction(
                    dist, sorted(blind_control_set(mode[st], lm, point.n)))
        cells.append(HeatmapCell(pid, point, eff, mode, min_l, cost))
    return cells


def heatmap(cfg: SweepConfig, metric: str, strategy: str = "betweenness",
            cells: list[HeatmapCell] | None = None, l_max: int | None = None,
            jobs: int = 1) -> np.ndarray:
    """Matrix of ``metric`` over ``s_grid`` (rows) x ``rho_grid`` (columns).

    ``strategy`` selects the full-information strategy, or for ``min_l`` and
    ``cost_at_full_success`` the strategy informing the blind target; it is
    ignored for ``efficiency_ratio`` (betweenness over greedy). Missing
    values (no full success within ``l_max``) are NaN.
    """
    if metric not in HEATMAP_METRICS:
        raise ConfigError(f"unknown heatmap metric {metric!r}")
    if strategy not in FULL_INFO:
        raise ConfigError(f"unknown strategy {strategy!r}")
    if len(cfg.n_grid or (1,)) > 1 or len(cfg.r_grid or (1,)) > 1:
        raise ConfigError("heatmap takes a single n and r; loop over n_grid / r_grid outside")
    if cells is None:
        cells = heatmap_cells(cfg, l_max=l_max, jobs=jobs,
                              blind=metric in ("min_l", "cost_at_full_success"))
    out = np.full((len(cfg.s_grid), len(cfg.rho_grid)), math.nan)
    for idx, cell in enumerate(cells):
        i, j = divmod(idx, len(cfg.rho_grid))
        if metric == "efficiency":
            out[i, j] = cell.efficiency[strategy]
        elif metric == "efficiency_ratio":
            out[i, j] = cell.efficiency["betweenness"] / cell.efficiency["greedy"]
        elif metric == "min_l":
            lm = cell.min_l[strategy]
            out[i, j] = math.nan if lm is None else lm
        else:
            out[i, j] = cell.cost_at_full_success[strategy]
    return out

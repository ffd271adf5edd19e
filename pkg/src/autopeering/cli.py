"""Command-line entry point.

Settings resolve in this order, later wins: built-in defaults, ``--figure``
preset, ``--config`` file, explicit flags. The config file is a flat YAML (or
JSON) mapping using the long flag names with dashes turned into underscores;
a results manifest is accepted as well, so ``--config manifest.json`` replays
a finished run exactly.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys
from pathlib import Path

import numpy as np
import yaml

from . import __version__
from .attacks import AttackOutcome, STRATEGIES, run_strategy
from .errors import ConfigError, ParameterError, RankError
from .experiments import (
    BlindSpec, FULL_INFO, HEATMAP_METRICS, ResultsTable, SweepConfig, aggregate, blind_sweep,
    frontier_frequencies, greedy_profile, heatmap, heatmap_cells, min_l_for_full_success,
    run_ensemble, write_csv,
)
from .formation import MODELS, FormationParams, generate
from .graph import Graph, components
from .mana import build_mana

log = logging.getLogger("autopeering")

OUT_ENV = "AUTOPEERING_OUT"
EXIT_OK, EXIT_RUNTIME, EXIT_USAGE = 0, 1, 2

S_GRID = [round(0.5 + 0.1 * i, 1) for i in range(11)]
RHO_GRID = [1.5, 2.0, 2.5, 3.0, 3.5, 4.0]

DEFAULTS = {
    "n": 100, "s": 1.0, "rho": 4.0, "r": 10, "k": 4, "k_const": 1e10, "seed": 0,
    "model": "autopeering", "rewire_p": 1.0,
    "master_seed": 0, "runs": 1000, "format": "csv", "jobs": 1,
    "s_grid": None, "rho_grid": None, "n_grid": None, "r_grid": None,
    "strategies": ["betweenness", "greedy"], "baseline": "none",
    "targets": None, "l_grid": list(range(1, 13)), "l_max": None,
    "metrics": None, "strategy": None, "target": None, "range_l": None,
}

FIGURES = {
    "fig2": ("sweep", {"s_grid": S_GRID, "rho_grid": [4.0], "strategies": ["betweenness", "greedy"],
                       "baseline": "ws"}),
    "figA5": ("sweep", {"s_grid": S_GRID, "rho_grid": RHO_GRID, "n_grid": [50, 100, 200],
                        "strategies": ["betweenness", "greedy"]}),
    "figA6": ("sweep", {"s_grid": S_GRID, "rho_grid": RHO_GRID, "r_grid": [5, 10, 20],
                        "strategies": ["betweenness", "greedy"]}),
    "fig3": ("blind", {"targets": [12, 14], "l_grid": list(range(1, 13)), "baseline": "both"}),
    "fig4": ("heatmap", {"s_grid": S_GRID, "rho_grid": RHO_GRID, "metrics": ["efficiency"]}),
    "fig5": ("heatmap", {"s_grid": S_GRID, "rho_grid": RHO_GRID, "metrics": ["cost_at_full_success"]}),
    "figA3": ("heatmap", {"s_grid": S_GRID, "rho_grid": RHO_GRID, "metrics": ["efficiency_ratio"]}),
    "figA4": ("minl", {"s_grid": S_GRID, "rho_grid": RHO_GRID}),
    "figA1": ("freq", {"strategy": "profile"}),
    "figA2": ("freq", {"strategy": "both"}),
}


class UsageError(Exception):
    pass


# ---------------------------------------------------------------- parsing


def _floats(text: str) -> list[float]:
    return [float(x) for x in _split(text)]


def _ints(text: str) -> list[int]:
    out = []
    for part in _split(text):
        if ".." in part:
            a, b = part.split("..")
            out.extend(range(int(a), int(b) + 1))
        else:
            out.append(int(part))
    return out


def _split(text: str) -> list[str]:
    return [x for x in text.replace(" ", "").split(",") if x]


def build_parser() -> argparse.ArgumentParser:
    shared = argparse.ArgumentParser(add_help=False, argument_default=argparse.SUPPRESS)
    g = shared.add_argument_group("shared")
    g.add_argument("--config", help="flat YAML/JSON settings file or a results manifest")
    g.add_argument("--n", type=int)
    g.add_argument("--s", type=float)
    g.add_argument("--rho", type=float)
    g.add_argument("--r", type=int, help="rank window R")
    g.add_argument("--k", type=int, help="coordination number (outgoing quota)")
    g.add_argument("--k-const", type=float, dest="k_const")
    g.add_argument("--seed", type=int)
    g.add_argument("--master-seed", type=int, dest="master_seed")
    g.add_argument("--runs", type=int)
    g.add_argument("--out", help="output directory (gen/attack: output file)")
    g.add_argument("--format", choices=("csv", "json"))
    g.add_argument("--jobs", type=int, help="worker processes, 0 = one per CPU")
    g.add_argument("--model", choices=MODELS)
    g.add_argument("--rewire-p", type=float, dest="rewire_p")
    g.add_argument("-v", "--verbose", action="count", default=0)

    grids = argparse.ArgumentParser(add_help=False, argument_default=argparse.SUPPRESS)
    gg = grids.add_argument_group("grids")
    gg.add_argument("--figure", choices=sorted(FIGURES))
    gg.add_argument("--s-grid", type=_floats, dest="s_grid", help="comma list, e.g. 0.5,1.0")
    gg.add_argument("--rho-grid", type=_floats, dest="rho_grid")
    gg.add_argument("--n-grid", type=_ints, dest="n_grid")
    gg.add_argument("--r-grid", type=_ints, dest="r_grid")

    p = argparse.ArgumentParser(prog="autopeering", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("gen", parents=[shared], help="generate one graph")
    sp.add_argument("--nodes", help="node table path (default: <out>.nodes.csv)")

    sp = sub.add_parser("attack", parents=[shared], help="run one attack")
    sp.add_argument("--strategy", choices=STRATEGIES, required=True)
    sp.add_argument("--in", dest="graph_in", help="edge-list file; otherwise a graph is generated")
    sp.add_argument("--target", type=int)
    sp.add_argument("--range-l", type=int, dest="range_l")

    sp = sub.add_parser("sweep", parents=[shared, grids], help="full-information ensembles")
    sp.add_argument("--strategies", type=lambda t: _split(t))
    sp.add_argument("--baseline", choices=("none", "lattice", "ws"))

    sp = sub.add_parser("blind", parents=[shared, grids], help="blind attack L sweeps")
    sp.add_argument("--targets", type=_ints)
    sp.add_argument("--l-grid", type=_ints, dest="l_grid", help="e.g. 1..12")
    sp.add_argument("--baseline", choices=("none", "lattice", "ws", "both"))

    sp = sub.add_parser("freq", parents=[shared, grids], help="frontier frequency histograms")
    sp.add_argument("--strategy", choices=("betweenness", "greedy", "both", "profile"))

    sp = sub.add_parser("minl", parents=[shared, grids], help="minimum L for 100%% blind success")
    sp.add_argument("--target", type=int, help="fixed target; default: per-cell frequency modes")
    sp.add_argument("--l-max", type=int, dest="l_max")

    sp = sub.add_parser("heatmap", parents=[shared, grids], help="(s, rho) heatmaps")
    sp.add_argument("--metrics", type=lambda t: _split(t), help=",".join(HEATMAP_METRICS))
    sp.add_argument("--l-max", type=int, dest="l_max")
    return p


def _load_config(path: str) -> dict:
    try:
        with open(path) as fh:
            data = yaml.safe_load(fh) or {}
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except yaml.YAMLError as exc:
        raise ConfigError(f"cannot parse config {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError("config file must hold a flat mapping")
    if "config" in data and isinstance(data["config"], dict):
        data = data["config"]
    unknown = set(data) - set(DEFAULTS) - {"figure", "out"}
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    return data


def resolve(args: argparse.Namespace) -> dict:
    given = {k: v for k, v in vars(args).items()
             if v is not None and (k in DEFAULTS or k == "figure")}
    cfg = dict(DEFAULTS)
    file_cfg = _load_config(args.config) if getattr(args, "config", None) else {}
    figure = given.get("figure", file_cfg.get("figure"))
    if figure is not None:
        cmd, preset = FIGURES[figure]
        if cmd != args.command:
            raise UsageError(f"--figure {figure} belongs to the '{cmd}' command")
        cfg.update(preset)
        cfg["figure"] = figure
    cfg.update(file_cfg)
    cfg.update(given)
    cfg.pop("out", None)
    return cfg


# ---------------------------------------------------------------- helpers


def _params(c: dict, **over) -> FormationParams:
    kw = dict(n=c["n"], s=c["s"], k_const=c["k_const"], rho=c["rho"], r_window=c["r"],
              k_out=c["k"], seed=c["seed"], model=c["model"], rewire_p=c["rewire_p"])
    kw.update(over)
    return FormationParams(**kw)


def _out_dir(args) -> Path:
    return Path(getattr(args, "out", None) or os.environ.get(OUT_ENV) or "results")


def _sweep_config(c: dict, **over) -> SweepConfig:
    kw = dict(
        base=_params(c, model="autopeering", seed=0),
        s_grid=tuple(c["s_grid"] or [c["s"]]),
        rho_grid=tuple(c["rho_grid"] or [c["rho"]]),
        n_grid=tuple(c["n_grid"]) if c["n_grid"] else None,
        r_grid=tuple(c["r_grid"]) if c["r_grid"] else None,
        runs=c["runs"],
        strategies=tuple(c["strategies"]),
        baseline=c["baseline"] if c["baseline"] in ("none", "lattice", "ws") else "none",
        master_seed=c["master_seed"],
    )
    kw.update(over)
    cfg = SweepConfig(**kw)
    cfg.validate()
    return cfg


def _jsonable(v):
    if isinstance(v, float) and not math.isfinite(v):
        return None if math.isnan(v) else ("inf" if v > 0 else "-inf")
    if isinstance(v, (frozenset, set)):
        return sorted(v)
    if isinstance(v, np.integer):
        return int(v)
    return v


def _write_table(path: Path, header: list[str], rows: list[list[str]], fmt: str) -> str:
    if fmt == "json":
        path = path.with_suffix(".json")
        path.write_text(json.dumps([dict(zip(header, r)) for r in rows], indent=1) + "\n")
    else:
        write_csv(path, header, rows)
    return str(path)


def _write_results(table: ResultsTable, out: Path, fmt: str, prefix: str = "") -> dict:
    if fmt == "csv":
        return table.write(out, prefix)
    from .experiments import AGG_COLUMNS, RUN_COLUMNS
    out.mkdir(parents=True, exist_ok=True)
    return {
        "runs": _write_table(out / f"{prefix}runs.csv", RUN_COLUMNS, [r.row() for r in table.records], fmt),
        "aggregate": _write_table(out / f"{prefix}aggregate.csv", AGG_COLUMNS, [r.row() for r in table.rows], fmt),
    }


def _manifest(out: Path, command: str, cfg: dict, files: dict, extra: dict | None = None) -> Path:
    doc = {"command": command, "version": __version__, "config": cfg, "files": files}
    if extra:
        doc["results"] = extra
    path = out / "manifest.json"
    path.write_text(json.dumps(doc, indent=1, sort_keys=True, default=_jsonable) + "\n")
    return path


def _merge(tables: list[ResultsTable]) -> ResultsTable:
    records = [r for t in tables for r in t.records]
    meta = {}
    for t in tables:
        meta.update(t.metadata)
    return ResultsTable(aggregate(records), records, [p for t in tables for p in t.points], meta)


# ---------------------------------------------------------------- commands


def cmd_gen(args, c: dict) -> int:
    p = _params(c)
    g = generate(p)
    dist = p.mana()
    out = getattr(args, "out", None)
    text = g.to_edgelist()
    if out:
        Path(out).write_text(text)
        nodes = Path(args.nodes) if getattr(args, "nodes", None) else Path(str(out) + ".nodes.csv")
        write_csv(nodes, ["rank", "mana"], ([str(v), repr(float(dist.values[v]))] for v in g.nodes))
    else:
        sys.stdout.write(text)
    deg = np.array(list(g.degrees().values()))
    print(f"model={p.model} n={g.n} edges={len(g.edges)} degree min/mean/max="
          f"{deg.min()}/{deg.mean():.3f}/{deg.max()} components={len(components(g))}",
          file=sys.stderr if not out else sys.stdout)
    return EXIT_OK


def cmd_attack(args, c: dict) -> int:
    strategy = args.strategy
    if strategy == "blind" and (c.get("target") is None or c.get("range_l") is None):
        raise UsageError("blind attacks need --target and --range-l")
    if getattr(args, "graph_in", None):
        try:
            g = Graph.from_edgelist(Path(args.graph_in).read_text())
        except OSError as exc:
            raise RuntimeError(f"cannot read {args.graph_in}: {exc}") from exc
        n = max(c["n"] if "n" in vars(args) else 0, g.nodes[-1])
    else:
        g = generate(_params(c))
        n = c["n"]
    dist = build_mana(n, c["s"], c["k_const"])
    o = run_strategy(strategy, g, dist, c.get("target"), c.get("range_l"))
    rec = _outcome_dict(o)
    text = json.dumps(rec, default=_jsonable, sort_keys=True)
    print(text)
    out = getattr(args, "out", None)
    if out:
        Path(out).write_text(text + "\n")
    return EXIT_OK


def _outcome_dict(o: AttackOutcome) -> dict:
    return {
        "strategy": o.strategy, "success": o.success, "target": o.target,
        "damage": o.damage, "cost": o.cost, "efficiency": o.efficiency,
        "frontier_size": o.frontier_size, "controlled": o.controlled,
        "part_a": o.part_a, "cut": sorted(o.cut),
    }


def cmd_sweep(args, c: dict) -> int:
    cfg = _sweep_config(c)
    table = run_ensemble(cfg, jobs=c["jobs"])
    out = _out_dir(args)
    files = _write_results(table, out, c["format"])
    _manifest(out, "sweep", c, files, {"metadata": table.metadata})
    _print_rows(table)
    return EXIT_OK


def cmd_blind(args, c: dict) -> int:
    targets = c["targets"] or [12]
    labels = None
    if c.get("figure") == "fig3":
        labels = ["bb", "bg"]
    base = _params(c, model="autopeering", seed=0)
    tables = [blind_sweep(base, targets, c["l_grid"], c["runs"], c["master_seed"], 0, c["jobs"], labels)]
    baselines = {"both": ["lattice", "ws"]}.get(c["baseline"], [] if c["baseline"] == "none" else [c["baseline"]])
    for pid, model in enumerate(baselines, start=1):
        l_grid = c["l_grid"]
        if model == "ws" and c.get("figure") == "fig3":
            l_grid = list(range(1, base.n // 2 + 1))
        tables.append(blind_sweep(_params(c, model=model, seed=0), targets[0], l_grid, c["runs"],
                                  c["master_seed"], pid, c["jobs"], [f"{model}:{targets[0]}"]))
    table = _merge(tables)
    out = _out_dir(args)
    files = _write_results(table, out, c["format"])
    _manifest(out, "blind", c, files, {"metadata": table.metadata})
    _print_rows(table)
    return EXIT_OK


def cmd_freq(args, c: dict) -> int:
    point = _params(c, model="autopeering", seed=0)
    mode = c.get("strategy") or "both"
    out = _out_dir(args)
    out.mkdir(parents=True, exist_ok=True)
    files, modes = {}, {}
    if mode == "profile":
        prof = greedy_profile(point, c["runs"], c["master_seed"])
        files["greedy_profile"] = _write_table(
            out / "greedy_profile.csv", ["rank", "mean_eff"],
            [[str(t), repr(v)] for t, v in prof], c["format"])
        best = max((t for t, v in prof if math.isfinite(v)), key=lambda t: prof[t - 1][1])
        modes["best_target"] = best
    else:
        for st in FULL_INFO if mode == "both" else (mode,):
            h = frontier_frequencies(point, st, c["runs"], c["master_seed"], jobs=c["jobs"])
            files[st] = _write_table(out / f"freq_{st}.csv", ["rank", "count"], h.rows(), c["format"])
            modes[st] = h.mode
    _manifest(out, "freq", c, files, modes)
    for k, v in modes.items():
        print(f"{k}: {v}")
    return EXIT_OK


def _cell_rows(cells) -> list[list[str]]:
    rows = []
    for cell in cells:
        p = cell.params
        row = [str(cell.point_id), str(p.n), str(p.r_window), repr(p.s), repr(p.rho)]
        for st in FULL_INFO:
            row += [repr(cell.efficiency[st]), str(cell.mode[st])]
            lm = cell.min_l.get(st)
            row += ["" if lm is None else str(lm), repr(cell.cost_at_full_success.get(st, math.nan))]
        rows.append(row)
    return rows


CELL_COLUMNS = ["point_id", "n", "r", "s", "rho",
                "eff_betweenness", "mode_betweenness", "min_l_bb", "cost_bb",
                "eff_greedy", "mode_greedy", "min_l_bg", "cost_bg"]


def _heatmap_long(c: dict, metrics: list[str], need_blind: bool):
    rows, all_cells = [], []
    for n in c["n_grid"] or [c["n"]]:
        for r in c["r_grid"] or [c["r"]]:
            cfg = _sweep_config(c, base=_params(c, n=n, r_window=r, model="autopeering", seed=0),
                                n_grid=None, r_grid=None, baseline="none",
                                strategies=FULL_INFO)
            cells = heatmap_cells(cfg, l_max=c["l_max"], jobs=c["jobs"], blind=need_blind)
            all_cells += cells
            for metric in metrics:
                strategies = ("betweenness",) if metric == "efficiency_ratio" else FULL_INFO
                for st in strategies:
                    mat = heatmap(cfg, metric, st, cells=cells)
                    label = "ratio" if metric == "efficiency_ratio" else st
                    for i, s in enumerate(cfg.s_grid):
                        for j, rho in enumerate(cfg.rho_grid):
                            rows.append([str(n), str(r), repr(s), repr(rho), metric, label,
                                         repr(float(mat[i, j]))])
    return rows, all_cells


def cmd_heatmap(args, c: dict) -> int:
    metrics = c["metrics"] or ["efficiency"]
    for m in metrics:
        if m not in HEATMAP_METRICS:
            raise UsageError(f"unknown metric {m!r}; choose from {', '.join(HEATMAP_METRICS)}")
    need_blind = any(m in ("min_l", "cost_at_full_success") for m in metrics)
    rows, cells = _heatmap_long(c, metrics, need_blind)
    out = _out_dir(args)
    out.mkdir(parents=True, exist_ok=True)
    files = {
        "heatmap": _write_table(out / "heatmap.csv", ["n", "r", "s", "rho", "metric", "strategy", "value"],
                                rows, c["format"]),
        "cells": _write_table(out / "cells.csv", CELL_COLUMNS, _cell_rows(cells), c["format"]),
    }
    _manifest(out, "heatmap", c, files)
    print(f"{len(cells)} cells written to {out}")
    return EXIT_OK


def cmd_minl(args, c: dict) -> int:
    out = _out_dir(args)
    out.mkdir(parents=True, exist_ok=True)
    l_max = c["l_max"]
    if c.get("target") is not None:
        rows = []
        cfg = _sweep_config(c, strategies=FULL_INFO, baseline="none")
        for pid, point in cfg.points():
            lm = min_l_for_full_success(point, c["target"], c["runs"], l_max or point.n,
                                        c["master_seed"], pid)
            rows.append([str(point.n), str(point.r_window), repr(point.s), repr(point.rho),
                         str(c["target"]), "" if lm is None else str(lm)])
            print(f"s={point.s} rho={point.rho}: L*={lm}")
        files = {"min_l": _write_table(out / "min_l.csv", ["n", "r", "s", "rho", "target", "min_l"],
                                       rows, c["format"])}
    else:
        rows, cells = _heatmap_long(c, ["min_l", "cost_at_full_success"], True)
        files = {
            "min_l": _write_table(out / "min_l.csv", ["n", "r", "s", "rho", "metric", "strategy", "value"],
                                  rows, c["format"]),
            "cells": _write_table(out / "cells.csv", CELL_COLUMNS, _cell_rows(cells), c["format"]),
        }
        print(f"{len(cells)} cells written to {out}")
    _manifest(out, "minl", c, files)
    return EXIT_OK


def _print_rows(table: ResultsTable) -> None:
    for r in table.rows:
        l = "" if r.L is None else f" L={r.L}"
        print(f"point {r.point_id} s={r.s} rho={r.rho} {r.strategy}{l}: p={r.p:.3f} "
              f"E[D/x]={r.mean_eff:.4f} +/- {r.ci95:.4f}")


COMMANDS = {
    "gen": cmd_gen, "attack": cmd_attack, "sweep": cmd_sweep, "blind": cmd_blind,
    "freq": cmd_freq, "minl": cmd_minl, "heatmap": cmd_heatmap,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    level = {0: logging.WARNING, 1: logging.INFO}.get(getattr(args, "verbose", 0), logging.DEBUG)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        c = resolve(args)
        if c["jobs"] < 0:
            raise UsageError("--jobs must be >= 0")
        return COMMANDS[args.command](args, c)
    except (UsageError, ConfigError, ParameterError, RankError) as exc:
        parser.print_usage(sys.stderr)
        print(f"autopeering {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (OSError, RuntimeError) as exc:
        print(f"autopeering {args.command}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())

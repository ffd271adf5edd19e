"""Simulate Mana-driven auto-peering networks and measure how cheaply they can be split."""

__version__ = "0.1.0"

from .attacks import (
    AttackOutcome, Cut, betweenness_attack, blind_attack, blind_control_set, cut_cost, damage,
    greedy_attack, greedy_scan, run_strategy,
)
from .errors import ConfigError, EdgeNotFoundError, ParameterError, RankError
from .experiments import (
    BlindSpec, ResultsTable, SweepConfig, blind_sweep, derive_seed, frontier_frequencies, heatmap,
    heatmap_cells, min_l_for_full_success, run_ensemble,
)
from .formation import (
    FormationParams, generate, generate_autopeering, generate_lattice, generate_ws, potential_neighbors,
)
from .graph import Graph, components, edge_betweenness, remove_edge, remove_nodes
from .mana import ManaDistribution, build_mana, mass_fraction

"""Enumerate the testable conditional independences of causal graphs with latent confounders."""

__version__ = "0.1.0"

from .baselines import CapExceeded, brute_force_acs, count_gmp, iter_ci_bf, iter_gmp
from .clmp import CiStatement, ci_from_ac, find_aac, iter_ci, list_ci, list_ci_x
from .graph import CausalGraph, GraphError, VariableOrder, latent_project
from .graphio import load_fixture, read_graph
from .separation import d_separated, find_separator

__all__ = [
    "CapExceeded", "CausalGraph", "CiStatement", "GraphError", "VariableOrder",
    "brute_force_acs", "ci_from_ac", "count_gmp", "d_separated", "find_aac",
    "find_separator", "iter_ci", "iter_ci_bf", "iter_gmp", "latent_project",
    "list_ci", "list_ci_x", "load_fixture", "read_graph",
]

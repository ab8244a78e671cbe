"""Grammar-driven molecule generation, property estimation and MCTS search."""

from .grammar import (DEFAULT_DEPTH_CAP, PRODUCTIONS, RULES, DerivationState,
                      apply_production, legal_productions, random_rollout,
                      render_smiles)
from .graph import MolecularGraph, build_graph
from .mcts import SearchResult, flat_random_search, mcts_search
from .properties import (GROUP_LABELS, POLAR_LABELS, MissingCoefficient,
                         Property, PropertyModel, UnclassifiableMolecule,
                         classify_groups, estimate_property,
                         load_property_model, polar_fragments)

__all__ = [
    "DEFAULT_DEPTH_CAP", "PRODUCTIONS", "RULES", "DerivationState",
    "apply_production", "legal_productions", "random_rollout", "render_smiles",
    "MolecularGraph", "build_graph", "SearchResult", "flat_random_search",
    "mcts_search", "GROUP_LABELS", "POLAR_LABELS", "MissingCoefficient",
    "Property", "PropertyModel", "UnclassifiableMolecule", "classify_groups",
    "estimate_property", "load_property_model", "polar_fragments",
]

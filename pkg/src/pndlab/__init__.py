"""Desk-scale GNN-to-MLP distillation with explicit output propagation."""

from .errors import (
    ConfigError,
    ConstructionError,
    InputError,
    LoadError,
    NumericError,
    PndError,
    SplitError,
    UndefinedMetricError,
)
from .graph import (
    NormalizedAdjacency,
    SparseGraph,
    apply_operator,
    build_graph,
    dirichlet_energy,
    homophily,
    normalized_adjacency,
)
from .propagation import (
    PropagationConfig,
    inverse_propagate,
    normalize_rows,
    ppr_exact,
    propagate_pnd,
    propagate_pnd_fix,
)

__version__ = "0.1.0"

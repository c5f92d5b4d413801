"""Diffusion-defined Laplacian for hypergraphs: operator, diffusion, SDE, spectra and oracles."""
__version__ = "0.1.0"

from .hypergraph import (  # noqa: E402
    DEFAULT_TOL,
    Hypergraph,
    HypergraphError,
    Space,
    StateVector,
    bundled,
    convert,
    discrepancy_ratio,
    edge_expansion,
    load_hypergraph,
    resolve_instance,
)
from .operator import apply_even_split_operator, apply_operator  # noqa: E402

__all__ = [
    "__version__",
    "DEFAULT_TOL",
    "Hypergraph",
    "HypergraphError",
    "Space",
    "StateVector",
    "apply_even_split_operator",
    "apply_operator",
    "bundled",
    "convert",
    "discrepancy_ratio",
    "edge_expansion",
    "load_hypergraph",
    "resolve_instance",
]

"""Causal graph discovery and stability auditing on tabular data."""

__version__ = "0.1.0"

from .data import (  # noqa: E402
    SemSpec,
    SufficientStats,
    Table,
    align_columns,
    load_table,
    subsample,
    sufficient_stats,
    synth_sem,
)
from .fci import fci  # noqa: E402
from .ges import bic_local, ges  # noqa: E402
from .graph import Mark, MixedGraph, canonical_tokens, validate  # noqa: E402
from .lingam import fastica, ica_lingam  # noqa: E402
from .pc import pc_stable  # noqa: E402
from .stability import jaccard  # noqa: E402
from .stats import bootstrap_differs, cliffs_delta, scott_knott  # noqa: E402

__all__ = [
    "Mark", "MixedGraph", "SemSpec", "SufficientStats", "Table",
    "align_columns", "bic_local", "bootstrap_differs", "canonical_tokens", "cliffs_delta",
    "fastica", "fci", "ges", "ica_lingam", "jaccard", "load_table", "pc_stable",
    "scott_knott", "subsample", "sufficient_stats", "synth_sem", "validate",
]

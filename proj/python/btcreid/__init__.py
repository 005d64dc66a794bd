"""Bitcoin address clustering heuristics, partition metrics and a synthetic ledger generator."""

from ._core import (
    GroundTruth,
    Ledger,
    PairCounts,
    Partition,
    SimConfig,
    anmi,
    cluster_h1,
    cluster_h2,
    cluster_h3,
    cluster_h4,
    evaluate,
    generate,
    hint_edges,
    nmi,
    pair_counts,
    parse_ledger,
    parse_ledger_text,
    precision_recall_f1,
    write_ledger,
)

__version__ = "0.1.0"

__all__ = [
    "GroundTruth",
    "Ledger",
    "PairCounts",
    "Partition",
    "SimConfig",
    "anmi",
    "cluster_h1",
    "cluster_h2",
    "cluster_h3",
    "cluster_h4",
    "evaluate",
    "generate",
    "hint_edges",
    "nmi",
    "pair_counts",
    "parse_ledger",
    "parse_ledger_text",
    "precision_recall_f1",
    "write_ledger",
]

"""
Corpus Statistics

Aggregates a corpus into per-theory counts, size histograms, the mean
dual/logic proof size ratio per theory and rule usage in both calculi.
"""

from collections import Counter
from typing import Dict, Sequence

import pandas as pd

from app.core.logger import get_logger
from app.models.dataset import CorpusStats, DatasetRecord
from app.services.kernel import rule_counts
from app.services.topo_dual import sieve_rule_counts

logger = get_logger(__name__)


def records_frame(records: Sequence[DatasetRecord]) -> pd.DataFrame:
    """One row per record with its theory and size measures"""
    return pd.DataFrame(
        {
            "theory_id": [r.theory_id for r in records],
            "proof_size": [r.meta.proof_size for r in records],
            "proof_depth": [r.meta.proof_depth for r in records],
            "dual_size": [r.meta.dual_size for r in records],
            "premise_count": [r.meta.premise_count for r in records],
        },
        columns=["theory_id", "proof_size", "proof_depth", "dual_size", "premise_count"],
    )


def _histogram(column: pd.Series) -> Dict[int, int]:
    counts = column.value_counts().sort_index()
    return {int(k): int(v) for k, v in counts.items()}


def corpus_stats(records: Sequence[DatasetRecord]) -> CorpusStats:
    if not records:
        return CorpusStats()
    df = records_frame(records)
    per_theory = df.groupby("theory_id", sort=False).size()
    df["ratio"] = df["dual_size"] / df["proof_size"].where(df["proof_size"] > 0)
    ratio = df.groupby("theory_id", sort=False)["ratio"].mean().fillna(0.0)

    rules: Counter = Counter()
    sieve_rules: Counter = Counter()
    for r in records:
        rules.update(rule_counts(r.proof))
        if r.dual_proof is not None:
            sieve_rules.update(sieve_rule_counts(r.dual_proof))

    stats = CorpusStats(
        record_count=len(df),
        per_theory={str(k): int(v) for k, v in per_theory.items()},
        proof_size_histogram=_histogram(df["proof_size"]),
        proof_depth_histogram=_histogram(df["proof_depth"]),
        dual_size_histogram=_histogram(df["dual_size"]),
        size_ratio={str(k): round(float(v), 6) for k, v in ratio.items()},
        rule_usage=dict(sorted(rules.items())),
        sieve_rule_usage=dict(sorted(sieve_rules.items())),
    )
    logger.info("corpus_stats_computed", records=stats.record_count, theories=len(stats.per_theory))
    return stats

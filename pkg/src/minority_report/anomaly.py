"""Score documents by reconstruction error and select the minority reports."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .corpus import counts_to_matrix
from .dbm import DbmModel, reconstruction_errors_matrix

POLICY_PERCENTILE = "percentile"
POLICY_MEAN_K_SIGMA = "mean_plus_k_sigma"


class Score(NamedTuple):
    doc_id: str
    epsilon: float
    epsilon_normalized: float


class ReportEntry(NamedTuple):
    doc_id: str
    epsilon: float
    epsilon_normalized: float
    rank: int
    flagged: bool


@dataclass(frozen=True)
class AnomalyReport:
    """Ranked scores with the threshold and the policy that produced it."""

    entries: tuple[ReportEntry, ...]
    threshold: float
    policy: str
    param: float

    @property
    def flagged_ids(self) -> list[str]:
        return [e.doc_id for e in self.entries if e.flagged]

    def to_dict(self) -> dict:
        return {
            "policy": self.policy,
            "param": self.param,
            "threshold": self.threshold,
            "entries": [
                {
                    "doc_id": e.doc_id,
                    "epsilon": e.epsilon,
                    "epsilon_normalized": e.epsilon_normalized,
                    "rank": e.rank,
                    "flagged": e.flagged,
                }
                for e in self.entries
            ],
        }


def score_corpus(model: DbmModel, vectors, norm: str = "l1") -> list[Score]:
    """Per-document epsilon from encode -> decode -> distance (L1 by default).

    The normalized score divides by document length D, with empty documents
    mapped to D = 1.
    """
    vectors = list(vectors)
    if not vectors:
        return []
    v, d, ids = counts_to_matrix(vectors, model.n_visible)
    eps = reconstruction_errors_matrix(v, d, model, norm=norm)
    denom = np.maximum(d, 1.0)
    return [Score(i, float(e), float(e / dd)) for i, e, dd in zip(ids, eps, denom)]


def nearest_rank_percentile(values, p: float) -> float:
    """Smallest value such that at least p percent of samples are <= it."""
    arr = np.sort(np.asarray(values, dtype=np.float64))
    if arr.size == 0:
        raise ValueError("cannot take a percentile of no values")
    if not 0.0 < p < 100.0:
        raise ValueError("percentile must lie in (0, 100)")
    rank = math.ceil(p / 100.0 * arr.size)
    return float(arr[max(rank, 1) - 1])


def select_minority(scores, policy: str, param: float) -> AnomalyReport:
    """Threshold the scores and rank every document by descending epsilon."""
    scores = list(scores)
    if not scores:
        raise ValueError("cannot select from an empty score list")
    eps = np.array([s.epsilon for s in scores], dtype=np.float64)
    if policy == POLICY_PERCENTILE:
        threshold = nearest_rank_percentile(eps, param)
    elif policy == POLICY_MEAN_K_SIGMA:
        if param < 0:
            raise ValueError("k must be >= 0 for the mean_plus_k_sigma policy")
        threshold = float(eps.mean() + param * eps.std(ddof=0))
    else:
        raise ValueError(f"unknown selection policy {policy!r}")

    ordered = sorted(scores, key=lambda s: (-s.epsilon, s.doc_id))
    entries = tuple(
        ReportEntry(
            doc_id=s.doc_id,
            epsilon=s.epsilon,
            epsilon_normalized=s.epsilon_normalized,
            rank=rank,
            flagged=s.epsilon > threshold,
        )
        for rank, s in enumerate(ordered, start=1)
    )
    return AnomalyReport(entries=entries, threshold=threshold, policy=policy, param=float(param))


def report_csv_rows(report: AnomalyReport) -> list[list]:
    """Header plus one row per entry, ordered by rank."""
    rows: list[list] = [["doc_id", "epsilon", "epsilon_normalized", "rank", "flagged"]]
    for e in report.entries:
        rows.append([e.doc_id, repr(e.epsilon), repr(e.epsilon_normalized), e.rank, str(e.flagged).lower()])
    return rows

"""Uncertainty-correctness alignment metrics.

ROC AUC treats correctness as binary ground truth and confidence as the
ranking score; the relative-accuracy curve measures how close the weak model
gets to the strong one once low-confidence queries are excluded.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import EmptyKeptSet, LengthMismatch, SingleClassLabels
from .scoring import ConfidenceScore


@dataclass(frozen=True)
class AlignmentReport:
    method: str
    auc: float
    n_used: int
    n_discarded: int


@dataclass(frozen=True)
class RelAccPoint:
    excluded_fraction: float
    slm_accuracy: float
    llm_accuracy: float
    relative_accuracy: float
    n_kept: int


def _values(scores: Sequence) -> list[float]:
    return [s.value if isinstance(s, ConfidenceScore) else float(s) for s in scores]


def _ids(scores: Sequence) -> list[str]:
    # Raw floats fall back to zero-padded positional ids (stable sort keys).
    width = max(6, len(str(len(scores))))
    return [
        s.trace_id if isinstance(s, ConfidenceScore) else f"{i:0{width}d}"
        for i, s in enumerate(scores)
    ]


def roc_auc(scores: Sequence, labels: Sequence[bool]) -> float:
    """Probability a correct answer outranks an incorrect one (ties count 1/2).

    Defined by the pairwise count over all (positive, negative) pairs;
    computed via the rank-sum identity in O(n log n). Average tie ranks are
    half-integers, so the result matches the brute-force pairwise count
    exactly, not just approximately.
    """
    values = np.asarray(_values(scores), dtype=float)
    y = np.asarray([bool(b) for b in labels], dtype=bool)
    if len(values) != len(y):
        raise LengthMismatch(f"{len(values)} scores vs {len(y)} labels")
    n_pos = int(y.sum())
    n_neg = len(y) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise SingleClassLabels("need at least one positive and one negative label")
    _, inverse, counts = np.unique(values, return_inverse=True, return_counts=True)
    starts = np.concatenate(([0], np.cumsum(counts)[:-1]))
    avg_rank = starts + (counts + 1) / 2.0  # 1-based average rank per distinct value
    rank_sum = float(avg_rank[inverse][y].sum())
    return (rank_sum - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg)


def alignment_report(
    method: str,
    scores: Sequence,
    labels: Sequence[bool],
    n_discarded: int = 0,
) -> AlignmentReport:
    return AlignmentReport(
        method=method,
        auc=roc_auc(scores, labels),
        n_used=len(scores),
        n_discarded=n_discarded,
    )


def relative_accuracy_curve(
    conf: Sequence,
    slm_correct: Sequence[bool],
    llm_correct: Sequence[bool],
    grid: Sequence[float],
) -> list[RelAccPoint]:
    """Accuracy ratio on the most-confident remainder as the low-confidence
    tail is progressively excluded.

    For each fraction f, the floor(f*n) lowest-confidence queries are dropped
    (ties broken by ascending trace id) and both accuracies are computed on
    the kept set.
    """
    n = len(conf)
    if len(slm_correct) != n or len(llm_correct) != n:
        raise LengthMismatch("conf, slm_correct and llm_correct must align")
    values = _values(conf)
    ids = _ids(conf)
    order = sorted(range(n), key=lambda i: (values[i], ids[i]))
    slm = [bool(b) for b in slm_correct]
    llm = [bool(b) for b in llm_correct]
    points = []
    for f in grid:
        k = int(math.floor(f * n))
        if k >= n:
            raise EmptyKeptSet(f"fraction {f} excludes all {n} queries")
        kept = order[k:]
        slm_acc = sum(slm[i] for i in kept) / len(kept)
        llm_acc = sum(llm[i] for i in kept) / len(kept)
        if llm_acc > 0:
            rel = slm_acc / llm_acc
        else:
            rel = 0.0 if slm_acc == 0 else math.inf
        points.append(
            RelAccPoint(
                excluded_fraction=float(f),
                slm_accuracy=slm_acc,
                llm_accuracy=llm_acc,
                relative_accuracy=rel,
                n_kept=len(kept),
            )
        )
    return points

"""Routing decisions and cost-accuracy curves.

Routing is defined by rank quantile, not raw score: at target ratio r the
floor(r*n) lowest-confidence queries are escalated, so comparing methods at
equal routed fraction compares them at equal cost. Ties are broken by
ascending trace id to keep every plan deterministic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence

from .errors import EmptyScores, InvalidArgument, MissingLabel
from .scoring import ConfidenceScore

DEFAULT_GRID = tuple(i / 20 for i in range(21))


def should_route(confidence: float, threshold: float) -> bool:
    """Strictly-below comparator shared by every routing surface (batch
    plans, threshold transfer, and the live gateway)."""
    return confidence < threshold


@dataclass(frozen=True)
class RoutingPlan:
    threshold: float
    target_ratio: float
    achieved_ratio: float
    routed_ids: frozenset[str]
    kept_ids: frozenset[str]
    # routed fraction is the cost proxy; an optional per-call weight scales it
    cost: float = 0.0


@dataclass(frozen=True)
class CurvePoint:
    ratio: float
    overall_accuracy: float


def plan_for_ratio(
    scores: Sequence[ConfidenceScore],
    target_ratio: float,
    cost_weight: float = 1.0,
) -> RoutingPlan:
    """Escalate exactly floor(target_ratio * n) queries, lowest confidence first.

    The reported threshold is the confidence of the lowest kept query
    (+inf when everything is routed): a query is routed iff its confidence is
    strictly below it, with id-ascending tie resolution pinning the count.
    """
    if not scores:
        raise EmptyScores("cannot plan routing over an empty score set")
    if not 0.0 <= target_ratio <= 1.0:
        raise InvalidArgument(f"target_ratio must lie in [0, 1], got {target_ratio}")
    n = len(scores)
    k = int(math.floor(target_ratio * n))
    ranked = sorted(scores, key=lambda s: (s.value, s.trace_id))
    routed = frozenset(s.trace_id for s in ranked[:k])
    kept = frozenset(s.trace_id for s in ranked[k:])
    threshold = ranked[k].value if k < n else math.inf
    return RoutingPlan(
        threshold=threshold,
        target_ratio=float(target_ratio),
        achieved_ratio=k / n,
        routed_ids=routed,
        kept_ids=kept,
        cost=cost_weight * (k / n),
    )


def _lookup(labels: Mapping[str, bool], trace_id: str) -> bool:
    try:
        return bool(labels[trace_id])
    except KeyError:
        raise MissingLabel(trace_id) from None


def overall_accuracy(
    plan: RoutingPlan,
    slm_correct: Mapping[str, bool],
    llm_correct: Mapping[str, bool],
) -> float:
    """Fraction answered correctly when kept queries are served by the weak
    model and routed ones by the strong model."""
    n = len(plan.routed_ids) + len(plan.kept_ids)
    hits = sum(_lookup(slm_correct, tid) for tid in plan.kept_ids)
    hits += sum(_lookup(llm_correct, tid) for tid in plan.routed_ids)
    return hits / n


def _as_label_map(labels, scores: Sequence[ConfidenceScore]) -> Mapping[str, bool]:
    if isinstance(labels, Mapping):
        return labels
    if len(labels) != len(scores):
        raise MissingLabel("label sequence does not align with scores")
    return {s.trace_id: bool(b) for s, b in zip(scores, labels)}


def routing_curve(
    scores: Sequence[ConfidenceScore],
    slm_correct,
    llm_correct,
    grid: Sequence[float] = DEFAULT_GRID,
) -> list[CurvePoint]:
    """Overall accuracy at each routed fraction on the grid.

    Labels may be id->bool mappings or sequences aligned with the scores.
    """
    slm = _as_label_map(slm_correct, scores)
    llm = _as_label_map(llm_correct, scores)
    return [
        CurvePoint(float(r), overall_accuracy(plan_for_ratio(scores, r), slm, llm))
        for r in grid
    ]


def oracle_curve(
    slm_correct: Mapping[str, bool],
    llm_correct: Mapping[str, bool],
    grid: Sequence[float] = DEFAULT_GRID,
) -> list[CurvePoint]:
    """Best achievable curve given both label sets.

    Escalation order: queries the strong model fixes first, then both-wrong,
    then both-right, and queries only the weak model gets right last; this
    dominates every score-based curve pointwise.
    """
    if not slm_correct:
        raise EmptyScores("no labels supplied")

    def group(tid: str) -> int:
        s, l = _lookup(slm_correct, tid), _lookup(llm_correct, tid)
        if not s and l:
            return 0
        if not s and not l:
            return 1
        if s and l:
            return 2
        return 3

    ids = sorted(slm_correct.keys())
    order = sorted(ids, key=lambda tid: (group(tid), tid))
    n = len(order)
    points = []
    for r in grid:
        k = int(math.floor(r * n))
        hits = sum(_lookup(llm_correct, tid) for tid in order[:k])
        hits += sum(_lookup(slm_correct, tid) for tid in order[k:])
        points.append(CurvePoint(float(r), hits / n))
    return points

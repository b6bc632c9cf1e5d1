"""Data-agnostic calibration sets and routing-threshold transfer.

Confidence scores from diverse source datasets are binned into a uniform
histogram over [0, 1]; a fixed fraction of each bin is sampled (seeded,
without replacement) so the calibration set mirrors the pooled confidence
distribution. Quantiles of the calibration confidences then serve as routing
thresholds for datasets never seen during construction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .errors import (
    EmptyCalibrationSet,
    EmptyScores,
    InvalidArgument,
    SingleDataset,
    UnknownDataset,
)
from .routing import overall_accuracy, plan_for_ratio, should_route
from .scoring import ConfidenceScore, score_batch
from .traces import TraceSet

DEFAULT_BINS = 30
DEFAULT_RATE = 0.1
DEFAULT_SEED = 50


@dataclass(frozen=True)
class BinMember:
    trace_id: str
    dataset: str
    confidence: float


@dataclass
class ConfidenceHistogram:
    """Uniform-width histogram of confidences with per-bin membership.

    Bins are half-open [lo, hi) except the last, which includes 1.0.
    """

    bin_count: int
    edges: list[float]
    counts: list[int]
    members: list[list[BinMember]]
    source: str = ""

    def member_ids(self) -> list[list[str]]:
        return [[m.trace_id for m in bin_members] for bin_members in self.members]


@dataclass
class CalibrationSet:
    entries: list[BinMember]
    per_bin_counts: list[int]
    pooled_counts: list[int]
    bin_count: int
    rate: float
    seed: int

    def __len__(self) -> int:
        return len(self.entries)

    def ids(self) -> set[str]:
        return {e.trace_id for e in self.entries}

    def confidences(self) -> list[float]:
        return [e.confidence for e in self.entries]

    def datasets(self) -> set[str]:
        return {e.dataset for e in self.entries}


def bin_index(value: float, bin_count: int) -> int:
    # Values equal to 1.0 land in the last bin.
    return min(int(math.floor(value * bin_count)), bin_count - 1)


def build_histogram(
    scores: Sequence[ConfidenceScore],
    bin_count: int = DEFAULT_BINS,
    source: str = "",
) -> ConfidenceHistogram:
    if not scores:
        raise EmptyScores("cannot build a histogram from no scores")
    if bin_count < 1:
        raise InvalidArgument(f"bin count must be >= 1, got {bin_count}")
    members: list[list[BinMember]] = [[] for _ in range(bin_count)]
    for s in scores:
        if not 0.0 <= s.value <= 1.0:
            raise InvalidArgument(f"confidence {s.value} outside [0, 1]")
        members[bin_index(s.value, bin_count)].append(
            BinMember(s.trace_id, source, s.value)
        )
    return ConfidenceHistogram(
        bin_count=bin_count,
        edges=[i / bin_count for i in range(bin_count + 1)],
        counts=[len(b) for b in members],
        members=members,
        source=source,
    )


def sample_calibration(
    histograms: ConfidenceHistogram | Sequence[ConfidenceHistogram],
    rate: float = DEFAULT_RATE,
    seed: int = DEFAULT_SEED,
) -> CalibrationSet:
    """Pool source histograms and draw max(1, floor(rate * n_b)) members from
    every non-empty bin, uniformly without replacement.

    The min-1 rule keeps sparse tail bins represented. Pooling requires all
    histograms to share the same bin count; members are sorted by
    (dataset, id) before drawing so the result depends only on content + seed.
    """
    if isinstance(histograms, ConfidenceHistogram):
        histograms = [histograms]
    if not histograms:
        raise EmptyScores("no histograms to sample from")
    if not 0.0 < rate <= 1.0:
        raise InvalidArgument(f"rate must lie in (0, 1], got {rate}")
    bin_count = histograms[0].bin_count
    for h in histograms:
        if h.bin_count != bin_count:
            raise InvalidArgument("histograms disagree on bin count")
    rng = np.random.default_rng(seed)
    entries: list[BinMember] = []
    sampled_counts: list[int] = []
    pooled_counts: list[int] = []
    for b in range(bin_count):
        pooled = sorted(
            (m for h in histograms for m in h.members[b]),
            key=lambda m: (m.dataset, m.trace_id),
        )
        n_b = len(pooled)
        pooled_counts.append(n_b)
        if n_b == 0:
            sampled_counts.append(0)
            continue
        k_b = max(1, int(math.floor(rate * n_b)))
        chosen = rng.choice(n_b, size=k_b, replace=False)
        entries.extend(pooled[i] for i in sorted(chosen))
        sampled_counts.append(k_b)
    return CalibrationSet(
        entries=entries,
        per_bin_counts=sampled_counts,
        pooled_counts=pooled_counts,
        bin_count=bin_count,
        rate=rate,
        seed=seed,
    )


def leave_one_out_calibration(
    groups: Mapping[str, TraceSet],
    target_dataset: str,
    method: str,
    probe=None,
    bin_count: int = DEFAULT_BINS,
    rate: float = DEFAULT_RATE,
    seed: int = DEFAULT_SEED,
) -> CalibrationSet:
    """Build a calibration set from every dataset except the target.

    Each non-target group is scored with the configured method, binned into
    its own histogram, and the pooled histograms are sampled. The result
    contains no trace from the target dataset by construction.
    """
    if len(groups) < 2:
        raise SingleDataset("need at least two dataset groups")
    if target_dataset not in groups:
        raise UnknownDataset(target_dataset)
    histograms = []
    for tag in sorted(groups):
        if tag == target_dataset:
            continue
        scores, _ = score_batch(groups[tag], method, probe=probe)
        if scores:
            histograms.append(build_histogram(scores, bin_count, source=tag))
    if not histograms:
        raise EmptyScores("no scorable traces outside the target dataset")
    return sample_calibration(histograms, rate=rate, seed=seed)


def transfer_threshold(cal: CalibrationSet, target_ratio: float) -> float:
    """Routing threshold for a target ratio: the lower empirical quantile of
    the calibration confidences.

    Routing is strictly-below, so ratio 0 returns the minimum (routes
    nothing) and ratio 1 returns +inf (routes everything).
    """
    if len(cal) == 0:
        raise EmptyCalibrationSet("calibration set is empty")
    if not 0.0 <= target_ratio <= 1.0:
        raise InvalidArgument(f"target_ratio must lie in [0, 1], got {target_ratio}")
    ordered = sorted(cal.confidences())
    k = int(math.floor(target_ratio * len(ordered)))
    if k >= len(ordered):
        return math.inf
    return ordered[k]


@dataclass(frozen=True)
class TransferPoint:
    target_ratio: float
    threshold: float
    achieved_ratio: float
    accuracy_transfer: float
    accuracy_direct: float


@dataclass
class GeneralizationReport:
    points: list[TransferPoint]

    @property
    def max_ratio_gap(self) -> float:
        return max(abs(p.achieved_ratio - p.target_ratio) for p in self.points)

    @property
    def max_accuracy_gap(self) -> float:
        return max(abs(p.accuracy_transfer - p.accuracy_direct) for p in self.points)

    @property
    def mean_accuracy_gap(self) -> float:
        gaps = [abs(p.accuracy_transfer - p.accuracy_direct) for p in self.points]
        return sum(gaps) / len(gaps)


def generalization_report(
    cal: CalibrationSet,
    target_scores: Sequence[ConfidenceScore],
    slm_correct: Mapping[str, bool],
    llm_correct: Mapping[str, bool],
    grid: Sequence[float],
) -> GeneralizationReport:
    """Compare transferred thresholds against direct quantile routing.

    For each grid ratio the calibration threshold is applied to the target
    (route strictly below); the achieved ratio and resulting accuracy are
    reported next to the accuracy of routing the target directly at that
    ratio.
    """
    if not target_scores:
        raise EmptyScores("target score set is empty")
    n = len(target_scores)
    points = []
    for r in grid:
        tau = transfer_threshold(cal, r)
        routed = {s.trace_id for s in target_scores if should_route(s.value, tau)}
        kept = {s.trace_id for s in target_scores} - routed
        hits = sum(bool(slm_correct[tid]) for tid in kept)
        hits += sum(bool(llm_correct[tid]) for tid in routed)
        direct = overall_accuracy(plan_for_ratio(target_scores, r), slm_correct, llm_correct)
        points.append(
            TransferPoint(
                target_ratio=float(r),
                threshold=tau,
                achieved_ratio=len(routed) / n,
                accuracy_transfer=hits / n,
                accuracy_direct=direct,
            )
        )
    return GeneralizationReport(points)


MANIFEST_VERSION = 1


def save_calibration(cal: CalibrationSet, path: str | Path) -> None:
    """Manifest (id, dataset, confidence rows) plus a histogram sidecar, so a
    calibration set ships independently of the raw traces."""
    path = Path(path)
    lines = ["id\tdataset\tconfidence"]
    for e in cal.entries:
        lines.append(f"{e.trace_id}\t{e.dataset}\t{repr(e.confidence)}")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    side = [
        f"uqroute-calibration {MANIFEST_VERSION}",
        f"bins {cal.bin_count}",
        f"rate {repr(cal.rate)}",
        f"seed {cal.seed}",
        "bin\tpooled\tsampled",
    ]
    for b in range(cal.bin_count):
        side.append(f"{b}\t{cal.pooled_counts[b]}\t{cal.per_bin_counts[b]}")
    sidecar_path(path).write_text("\n".join(side) + "\n", encoding="utf-8")


def sidecar_path(manifest: Path) -> Path:
    return manifest.with_name(manifest.name + ".hist")


def load_calibration(path: str | Path) -> CalibrationSet:
    path = Path(path)
    lines = path.read_text(encoding="utf-8").splitlines()
    if not lines or lines[0] != "id\tdataset\tconfidence":
        raise InvalidArgument(f"{path}: not a calibration manifest")
    entries = []
    for line in lines[1:]:
        if not line.strip():
            continue
        tid, dataset, conf = line.split("\t")
        entries.append(BinMember(tid, dataset, float(conf)))
    bin_count, rate, seed = DEFAULT_BINS, DEFAULT_RATE, DEFAULT_SEED
    pooled: list[int] = []
    sampled: list[int] = []
    side = sidecar_path(path)
    if side.exists():
        slines = side.read_text(encoding="utf-8").splitlines()
        for line in slines:
            if line.startswith("bins "):
                bin_count = int(line.split()[1])
            elif line.startswith("rate "):
                rate = float(line.split()[1])
            elif line.startswith("seed "):
                seed = int(line.split()[1])
            elif line and line[0].isdigit():
                _, p, s = line.split("\t")
                pooled.append(int(p))
                sampled.append(int(s))
    else:
        pooled = [0] * bin_count
        sampled = [0] * bin_count
    return CalibrationSet(
        entries=entries,
        per_bin_counts=sampled,
        pooled_counts=pooled,
        bin_count=bin_count,
        rate=rate,
        seed=seed,
    )

"""Confidence scorers mapping one trace to a scalar in [0, 1].

All methods are normalized so that higher = more certain. Methods whose raw
form measures disagreement (the degree-matrix consistency score) are flipped
to confidence; the raw uncertainty remains available for reporting.
"""

from __future__ import annotations

import math
import re
import string
from dataclasses import dataclass
from typing import Callable, Sequence

from .errors import InvalidArgument, MissingField, NonCompliant
from .traces import InferenceTrace, TraceSet

METHODS = (
    "avg_token_prob",
    "perplexity",
    "p_true",
    "jaccard_degree",
    "verbalization_1s",
    "verbalization_2s",
    "trained_probe",
    "ood_probe",
)

PROBE_METHODS = ("trained_probe", "ood_probe")


@dataclass(frozen=True)
class MethodInfo:
    """Taxonomy of a confidence method: what it reads and what it needs."""

    taxonomy: str
    access: str  # white_box: needs logits/weights; black_box: generated text only
    requires_training: bool
    required_fields: tuple[str, ...]


METHOD_INFO: dict[str, MethodInfo] = {
    "avg_token_prob": MethodInfo(
        "token_probability", "white_box", False,
        ("token_logprobs", "chosen_option_logprob"),
    ),
    "perplexity": MethodInfo(
        "token_probability", "white_box", False, ("token_logprobs",)
    ),
    "p_true": MethodInfo(
        "token_probability", "white_box", False, ("true_false_logprobs",)
    ),
    "jaccard_degree": MethodInfo(
        "output_consistency", "black_box", False, ("samples",)
    ),
    "verbalization_1s": MethodInfo(
        "verbalized", "black_box", False, ("verbal_confidence_text",)
    ),
    "verbalization_2s": MethodInfo(
        "verbalized", "black_box", False, ("verbal_confidence_text",)
    ),
    "trained_probe": MethodInfo(
        "uncertainty_probe", "white_box", True, ("hidden_state", "correct")
    ),
    "ood_probe": MethodInfo(
        "uncertainty_probe", "white_box", True, ("hidden_state", "correct")
    ),
}

# Exponentiation floor: avoids underflow-to-zero asymmetries for extreme logs.
LOGPROB_FLOOR = -700.0


@dataclass(frozen=True)
class ConfidenceScore:
    method: str
    value: float
    trace_id: str


def _exp(logprob: float) -> float:
    return math.exp(max(logprob, LOGPROB_FLOOR))


def score_avg_token_prob(trace: InferenceTrace) -> ConfidenceScore:
    """Mean token probability; for option-style answers, the chosen option's
    probability."""
    if trace.answer_kind == "free_form":
        if not trace.token_logprobs:
            raise MissingField("token_logprobs", trace.id)
        value = sum(_exp(lp) for lp in trace.token_logprobs) / len(trace.token_logprobs)
    else:
        if trace.chosen_option_logprob is None:
            raise MissingField("chosen_option_logprob", trace.id)
        value = _exp(trace.chosen_option_logprob)
    return ConfidenceScore("avg_token_prob", value, trace.id)


def score_perplexity(trace: InferenceTrace) -> ConfidenceScore:
    """Geometric-mean token probability, i.e. the reciprocal of perplexity.

    exp(mean ln p) lies in (0, 1] and grows with certainty, so it is used
    directly as the confidence value.
    """
    if not trace.token_logprobs:
        raise MissingField("token_logprobs", trace.id)
    mean_lp = sum(trace.token_logprobs) / len(trace.token_logprobs)
    return ConfidenceScore("perplexity", _exp(mean_lp), trace.id)


def score_p_true(trace: InferenceTrace) -> ConfidenceScore:
    """Normalized probability of the "True" token from the self-check prompt."""
    if trace.true_false_logprobs is None:
        raise MissingField("true_false_logprobs", trace.id)
    lt, lf = trace.true_false_logprobs
    m = max(lt, lf)
    et = math.exp(lt - m)
    ef = math.exp(lf - m)
    return ConfidenceScore("p_true", et / (et + ef), trace.id)


def _token_set(text: str) -> frozenset[str]:
    # Lowercase, whitespace-split, leading/trailing punctuation stripped.
    tokens = (tok.strip(string.punctuation) for tok in text.lower().split())
    return frozenset(t for t in tokens if t)


def _jaccard(a: frozenset[str], b: frozenset[str]) -> float:
    if not a and not b:
        return 1.0
    union = len(a | b)
    return len(a & b) / union


def _jaccard_degree_sum(samples: Sequence[str]) -> tuple[int, float]:
    """(m, trace of D) for the degree matrix D of the pairwise
    Jaccard-similarity matrix (diagonal = 1)."""
    m = len(samples)
    if m < 2:
        raise InvalidArgument(f"need at least 2 samples, got {m}")
    sets = [_token_set(s) for s in samples]
    degree_sum = 0.0
    for i in range(m):
        row = sum(_jaccard(sets[i], sets[j]) for j in range(m) if j != i)
        degree_sum += row + 1.0  # include W_ii = 1
    return m, degree_sum


def degree_uncertainty(samples: Sequence[str]) -> float:
    """Disagreement among resamples: trace(m*I - D) / m^2.

    0 under perfect agreement, approaching 1 as samples diverge.
    """
    m, degree_sum = _jaccard_degree_sum(samples)
    return (m * m - degree_sum) / (m * m)


def score_jaccard_degree(trace: InferenceTrace) -> ConfidenceScore:
    """Consistency of the stochastic resamples: 1 minus degree uncertainty,
    computed as trace(D)/m^2 so the analytic cases come out exact."""
    if trace.samples is None:
        raise MissingField("samples", trace.id)
    m, degree_sum = _jaccard_degree_sum(trace.samples)
    return ConfidenceScore("jaccard_degree", degree_sum / (m * m), trace.id)


_NUMBER = re.compile(r"\d+\.\d+|\.\d+|\d+")
_CUE = re.compile(r"confidence", re.IGNORECASE)


def _normalize_confidence(raw: float) -> float:
    if 1.0 < raw <= 100.0:
        raw /= 100.0
    return min(max(raw, 0.0), 1.0)


def parse_verbalized(trace: InferenceTrace, variant: str = "one_step") -> ConfidenceScore:
    """Extract a numeric confidence from the model's own text.

    Takes the last number following a "confidence" cue; if the cue is absent
    (or nothing follows it) and the text holds exactly one number, that one is
    used. Percent-scale values in (1, 100] are divided by 100; the result is
    clamped to [0, 1]. Anything else raises NonCompliant: the record must be
    discarded, not scored 0.
    """
    if variant not in ("one_step", "two_step"):
        raise InvalidArgument(f"unknown variant {variant!r}")
    if trace.verbal_confidence_text is None:
        raise MissingField("verbal_confidence_text", trace.id)
    text = trace.verbal_confidence_text
    cue = _CUE.search(text)
    raw: float | None = None
    if cue is not None:
        after = _NUMBER.findall(text[cue.end():])
        if after:
            raw = float(after[-1])
    if raw is None:
        numbers = _NUMBER.findall(text)
        if len(numbers) == 1:
            raw = float(numbers[0])
    if raw is None:
        raise NonCompliant(trace.id)
    method = "verbalization_1s" if variant == "one_step" else "verbalization_2s"
    return ConfidenceScore(method, _normalize_confidence(raw), trace.id)


def _scorer_for(method: str, probe=None) -> Callable[[InferenceTrace], ConfidenceScore]:
    if method == "avg_token_prob":
        return score_avg_token_prob
    if method == "perplexity":
        return score_perplexity
    if method == "p_true":
        return score_p_true
    if method == "jaccard_degree":
        return score_jaccard_degree
    if method == "verbalization_1s":
        return lambda t: parse_verbalized(t, "one_step")
    if method == "verbalization_2s":
        return lambda t: parse_verbalized(t, "two_step")
    if method in PROBE_METHODS:
        from .probe import probe_confidence

        return lambda t: probe_confidence(probe, t, method=method)
    raise InvalidArgument(f"unknown method {method!r}")


def score_batch(
    traces: TraceSet | Sequence[InferenceTrace],
    method: str,
    probe=None,
) -> tuple[list[ConfidenceScore], list[str]]:
    """Score every trace with one method.

    Records whose required evidence is absent (MissingField) or whose
    verbalized confidence is unparseable (NonCompliant) land in the returned
    discarded-id list; the score list preserves input order for the rest.
    A probe model must be supplied exactly for the probe methods.
    """
    if method not in METHODS:
        raise InvalidArgument(f"unknown method {method!r}")
    if (probe is not None) != (method in PROBE_METHODS):
        raise InvalidArgument(
            f"method {method!r} and probe argument do not match"
        )
    scorer = _scorer_for(method, probe)
    scores: list[ConfidenceScore] = []
    discarded: list[str] = []
    for trace in traces:
        try:
            scores.append(scorer(trace))
        except (MissingField, NonCompliant):
            discarded.append(trace.id)
    return scores, discarded

"""Canonical inference-trace records: validation, file IO, synthetic generation.

The on-disk format is UTF-8 JSON lines, one record per line, ``schema: 1``.
Lines starting with ``#`` are comments (capture harnesses use them to record
their configuration) and are skipped on load. Unknown fields are ignored so
capture-side extensions never break ingestion.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator

import numpy as np

from .errors import DuplicateId, InvalidArgument, MalformedRecord, MissingLabel

SCHEMA_VERSION = 1

ANSWER_KINDS = ("free_form", "multiple_choice", "true_false")

# Hidden states above this width must ship as separate artifacts, not inline.
MAX_HIDDEN_DIM = 8192


@dataclass
class InferenceTrace:
    """One query's logged evidence from a weak-model inference.

    ``token_logprobs`` are natural-log probabilities of the generated tokens
    (each finite and <= 0; may be empty when only black-box evidence was
    captured). The optional fields carry method-specific evidence; each
    scorer declares what it needs and fails per record when it is absent.
    """

    id: str
    dataset: str = ""
    prompt: str = ""
    response: str = ""
    answer_kind: str = "free_form"
    token_logprobs: list[float] = field(default_factory=list)
    chosen_option_logprob: float | None = None
    true_false_logprobs: tuple[float, float] | None = None
    hidden_state: list[float] | None = None
    samples: list[str] | None = None
    verbal_confidence_text: str | None = None
    correct: bool | None = None

    def validate(self) -> None:
        """Raise ValueError with a short reason on any invariant violation."""
        if not self.id:
            raise ValueError("missing field: id")
        if self.answer_kind not in ANSWER_KINDS:
            raise ValueError(f"unknown answer_kind {self.answer_kind!r}")
        for lp in self.token_logprobs:
            _check_logprob(lp)
        if self.chosen_option_logprob is not None:
            _check_logprob(self.chosen_option_logprob)
        if self.true_false_logprobs is not None:
            if len(self.true_false_logprobs) != 2:
                raise ValueError("true_false_logprobs must be a pair")
            for lp in self.true_false_logprobs:
                _check_logprob(lp)
        if self.samples is not None and len(self.samples) < 2:
            raise ValueError("samples must have length >= 2")
        if self.hidden_state is not None:
            if len(self.hidden_state) > MAX_HIDDEN_DIM:
                raise ValueError(
                    f"hidden_state dim {len(self.hidden_state)} exceeds {MAX_HIDDEN_DIM}"
                )
            for v in self.hidden_state:
                if not math.isfinite(v):
                    raise ValueError("hidden_state contains non-finite value")

    def to_dict(self) -> dict:
        out: dict = {
            "schema": SCHEMA_VERSION,
            "id": self.id,
            "dataset": self.dataset,
            "prompt": self.prompt,
            "response": self.response,
            "answer_kind": self.answer_kind,
            "token_logprobs": list(self.token_logprobs),
        }
        if self.chosen_option_logprob is not None:
            out["chosen_option_logprob"] = self.chosen_option_logprob
        if self.true_false_logprobs is not None:
            out["true_false_logprobs"] = list(self.true_false_logprobs)
        if self.hidden_state is not None:
            out["hidden_state"] = list(self.hidden_state)
        if self.samples is not None:
            out["samples"] = list(self.samples)
        if self.verbal_confidence_text is not None:
            out["verbal_confidence_text"] = self.verbal_confidence_text
        if self.correct is not None:
            out["correct"] = self.correct
        return out


def _check_logprob(lp: float) -> None:
    if not isinstance(lp, (int, float)) or isinstance(lp, bool):
        raise ValueError("logprob is not a number")
    if math.isnan(lp) or math.isinf(lp):
        raise ValueError("logprob not finite")
    if lp > 0:
        raise ValueError("logprob > 0")


@dataclass
class TraceSet:
    """An immutable, ordered collection of traces (file order is preserved)."""

    records: tuple[InferenceTrace, ...]
    source: str = "synthetic"

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self) -> Iterator[InferenceTrace]:
        return iter(self.records)

    def __getitem__(self, idx: int) -> InferenceTrace:
        return self.records[idx]

    def ids(self) -> list[str]:
        return [t.id for t in self.records]

    def labels(self) -> dict[str, bool]:
        """id -> correct for every labeled record."""
        return {t.id: t.correct for t in self.records if t.correct is not None}

    def group_by_dataset(self) -> dict[str, "TraceSet"]:
        groups: dict[str, list[InferenceTrace]] = {}
        for t in self.records:
            groups.setdefault(t.dataset, []).append(t)
        return {
            tag: TraceSet(tuple(recs), source=self.source)
            for tag, recs in groups.items()
        }


def _record_from_dict(obj: dict) -> InferenceTrace:
    if not isinstance(obj, dict):
        raise ValueError("record is not an object")
    schema = obj.get("schema", SCHEMA_VERSION)
    if schema != SCHEMA_VERSION:
        raise ValueError(f"unsupported schema {schema!r}")
    if "id" not in obj:
        raise ValueError("missing field: id")
    tfl = obj.get("true_false_logprobs")
    if tfl is not None:
        if not isinstance(tfl, (list, tuple)) or len(tfl) != 2:
            raise ValueError("true_false_logprobs must be a pair")
        tfl = (float(tfl[0]), float(tfl[1]))
    correct = obj.get("correct")
    if correct is not None and not isinstance(correct, bool):
        raise ValueError("correct must be a boolean")
    trace = InferenceTrace(
        id=str(obj["id"]),
        dataset=str(obj.get("dataset", "")),
        prompt=str(obj.get("prompt", "")),
        response=str(obj.get("response", "")),
        answer_kind=str(obj.get("answer_kind", "free_form")),
        token_logprobs=[float(x) for x in obj.get("token_logprobs", [])],
        chosen_option_logprob=(
            float(obj["chosen_option_logprob"])
            if obj.get("chosen_option_logprob") is not None
            else None
        ),
        true_false_logprobs=tfl,
        hidden_state=(
            [float(x) for x in obj["hidden_state"]]
            if obj.get("hidden_state") is not None
            else None
        ),
        samples=(
            [str(s) for s in obj["samples"]]
            if obj.get("samples") is not None
            else None
        ),
        verbal_confidence_text=obj.get("verbal_confidence_text"),
        correct=correct,
    )
    trace.validate()
    return trace


def load_traces(path: str | Path, require_labels: bool = False) -> TraceSet:
    """Read a trace file, validating every record.

    Raises MalformedRecord (with 1-based line number), DuplicateId, or
    MissingLabel (when ``require_labels``). Record order follows file order.
    """
    path = Path(path)
    records: list[InferenceTrace] = []
    seen: set[str] = set()
    with path.open("r", encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            stripped = line.strip()
            if not stripped or stripped.startswith("#"):
                continue
            try:
                obj = json.loads(stripped)
            except json.JSONDecodeError as e:
                raise MalformedRecord(lineno, f"invalid JSON: {e.msg}") from e
            try:
                trace = _record_from_dict(obj)
            except (ValueError, TypeError) as e:
                raise MalformedRecord(lineno, str(e)) from e
            if trace.id in seen:
                raise DuplicateId(trace.id)
            seen.add(trace.id)
            if require_labels and trace.correct is None:
                raise MissingLabel(trace.id)
            records.append(trace)
    return TraceSet(tuple(records), source=str(path))


def save_traces(traces: TraceSet | Iterable[InferenceTrace], path: str | Path) -> None:
    path = Path(path)
    with path.open("w", encoding="utf-8") as f:
        for t in traces:
            f.write(json.dumps(t.to_dict()) + "\n")


def append_trace(trace: InferenceTrace, path: str | Path) -> None:
    """Append a single record; used by the live gateway's trace log."""
    with Path(path).open("a", encoding="utf-8") as f:
        f.write(json.dumps(trace.to_dict()) + "\n")


def synth_traces(
    n: int,
    seed: int,
    difficulty_link: float,
    dataset: str = "synthetic",
) -> TraceSet:
    """Deterministically generate ``n`` labeled traces for testing.

    Each trace has a latent ease ``e`` uniform on (0, 1]; its token log-probs
    are constructed so the geometric-mean token probability equals ``e``
    (zero-mean noise around ln(e), scaled to keep every log-prob <= 0).
    ``correct`` is true with probability (1-difficulty_link)*0.5 +
    difficulty_link*e, so difficulty_link=1 couples labels to confidence and
    difficulty_link=0 decouples them entirely. Pure function of arguments.
    """
    if n < 1:
        raise InvalidArgument(f"n must be >= 1, got {n}")
    if not 0.0 <= difficulty_link <= 1.0:
        raise InvalidArgument("difficulty_link must lie in [0, 1]")
    rng = np.random.default_rng(seed)
    records = []
    for i in range(n):
        ease = 1.0 - rng.uniform()  # (0, 1]: keeps ln(ease) finite
        length = int(rng.integers(3, 13))
        noise = rng.normal(0.0, 0.5, size=length)
        noise -= noise.mean()
        target = math.log(ease)
        peak = noise.max()
        scale = min(1.0, -target / peak) if peak > 0 else 1.0
        logprobs = np.minimum(target + scale * noise, 0.0)
        p_correct = (1.0 - difficulty_link) * 0.5 + difficulty_link * ease
        correct = bool(rng.uniform() < p_correct)
        records.append(
            InferenceTrace(
                id=f"{dataset}-{seed}-{i:06d}",
                dataset=dataset,
                prompt=f"question {i}",
                response=f"answer {i}",
                answer_kind="free_form",
                token_logprobs=[float(lp) for lp in logprobs],
                correct=correct,
            )
        )
    return TraceSet(tuple(records), source="synthetic")

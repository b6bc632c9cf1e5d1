"""Capture configuration: model, evidence selection, decode parameters."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

from .errors import CaptureConfigError

POOLING_MODES = ("last_token", "mean")
VERBALIZATION_MODES = ("one_step", "two_step")

P_TRUE_TEMPLATE = (
    "Question: {question}\n"
    "Proposed answer: {answer}\n"
    "Is the proposed answer correct? Reply with exactly one word: True or False."
)

VERBALIZATION_1S_TEMPLATE = (
    "{question}\n\n"
    "Answer the question, then state how sure you are on its own line as\n"
    "Confidence: <number between 0 and 100>"
)

VERBALIZATION_2S_TEMPLATE = (
    "Question: {question}\n"
    "Your answer was: {answer}\n"
    "How confident are you that this answer is correct? Reply only as\n"
    "Confidence: <number between 0 and 100>"
)

JUDGE_TEMPLATE = (
    "Question: {question}\n"
    "Reference answer: {gold}\n"
    "Proposed answer: {answer}\n"
    "Is the proposed answer essentially equivalent to the reference answer?\n"
    "Reply with exactly one word: yes or no."
)


@dataclass
class CaptureConfig:
    model_path: str
    layer_index: int = -8  # eighth-to-last hidden representation
    pooling: str = "last_token"
    decode_temperature: float = 0.0  # greedy
    decode_top_p: float = 1.0
    max_new_tokens: int = 24
    resample_count: int = 5
    resample_temperature: float = 1.0
    verbalization: str = "two_step"
    seed: int = 0
    capture_hidden: bool = True
    capture_resamples: bool = True
    capture_p_true: bool = True
    capture_verbalized: bool = True
    judge_url: str | None = None
    judge_model: str = ""
    judge_api_key: str | None = None
    p_true_template: str = P_TRUE_TEMPLATE
    verbalization_1s_template: str = VERBALIZATION_1S_TEMPLATE
    verbalization_2s_template: str = VERBALIZATION_2S_TEMPLATE
    judge_template: str = JUDGE_TEMPLATE

    def validate(self) -> None:
        if self.capture_resamples and self.resample_count < 2:
            raise CaptureConfigError(
                f"resample_count must be >= 2, got {self.resample_count}"
            )
        if self.pooling not in POOLING_MODES:
            raise CaptureConfigError(f"unknown pooling {self.pooling!r}")
        if self.verbalization not in VERBALIZATION_MODES:
            raise CaptureConfigError(f"unknown verbalization {self.verbalization!r}")
        if self.max_new_tokens < 1:
            raise CaptureConfigError("max_new_tokens must be >= 1")


def load_template(path: str | Path | None, default: str) -> str:
    if path is None:
        return default
    return Path(path).read_text(encoding="utf-8")

"""Capture harness: run checkpoints over dataset files, grade the answers,
and emit inference-trace files for the routing engine."""

from .config import CaptureConfig
from .datasets import DatasetItem, read_dataset
from .errors import (
    CaptureConfigError,
    DatasetFormatError,
    JudgeUnavailable,
    ModelLoadError,
    UqcaptureError,
)
from .grading import JudgeClient, grade_exact, grade_item, grade_option, grade_true_false
from .runner import CaptureReport, CaptureRunner
from .tiny_checkpoint import build_tiny_checkpoint

__version__ = "0.1.0"

__all__ = [
    "CaptureConfig",
    "CaptureConfigError",
    "CaptureReport",
    "CaptureRunner",
    "DatasetFormatError",
    "DatasetItem",
    "JudgeClient",
    "JudgeUnavailable",
    "ModelLoadError",
    "UqcaptureError",
    "build_tiny_checkpoint",
    "grade_exact",
    "grade_item",
    "grade_option",
    "grade_true_false",
    "read_dataset",
]

"""Uncertainty-gated routing from small to large language models.

Scores a weak model's answers with pluggable confidence methods, evaluates
how well confidence ranks correctness, turns scores into routing decisions
at a target cost, and builds calibration sets whose thresholds transfer to
unseen datasets.
"""

from .alignment import AlignmentReport, RelAccPoint, alignment_report, relative_accuracy_curve, roc_auc
from .calibration import (
    CalibrationSet,
    ConfidenceHistogram,
    GeneralizationReport,
    build_histogram,
    generalization_report,
    leave_one_out_calibration,
    load_calibration,
    sample_calibration,
    save_calibration,
    transfer_threshold,
)
from .probe import (
    ProbeModel,
    ProbeTrainConfig,
    gradient_check,
    load_probe,
    probe_confidence,
    save_probe,
    train_probe,
)
from .routing import CurvePoint, RoutingPlan, oracle_curve, overall_accuracy, plan_for_ratio, routing_curve
from .scoring import (
    METHOD_INFO,
    METHODS,
    PROBE_METHODS,
    ConfidenceScore,
    MethodInfo,
    degree_uncertainty,
    parse_verbalized,
    score_avg_token_prob,
    score_batch,
    score_jaccard_degree,
    score_p_true,
    score_perplexity,
)
from .traces import InferenceTrace, TraceSet, load_traces, save_traces, synth_traces

__version__ = "0.1.0"

__all__ = [
    "AlignmentReport",
    "CalibrationSet",
    "ConfidenceHistogram",
    "ConfidenceScore",
    "CurvePoint",
    "GeneralizationReport",
    "InferenceTrace",
    "METHODS",
    "METHOD_INFO",
    "MethodInfo",
    "PROBE_METHODS",
    "ProbeModel",
    "ProbeTrainConfig",
    "RelAccPoint",
    "RoutingPlan",
    "TraceSet",
    "alignment_report",
    "build_histogram",
    "degree_uncertainty",
    "generalization_report",
    "gradient_check",
    "leave_one_out_calibration",
    "load_calibration",
    "load_probe",
    "load_traces",
    "oracle_curve",
    "overall_accuracy",
    "parse_verbalized",
    "plan_for_ratio",
    "probe_confidence",
    "relative_accuracy_curve",
    "roc_auc",
    "routing_curve",
    "sample_calibration",
    "save_calibration",
    "save_probe",
    "save_traces",
    "score_avg_token_prob",
    "score_batch",
    "score_jaccard_degree",
    "score_p_true",
    "score_perplexity",
    "synth_traces",
    "train_probe",
    "transfer_threshold",
]

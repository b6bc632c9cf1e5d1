"""Supervised correctness probes: a small feed-forward net over hidden states.

Four weight layers (three hidden + one output), leaky-rectifier activations
(negative slope 0.01), logistic output. Trained with adaptive moment
estimation on binary cross-entropy. Everything is plain numpy so training is
bit-reproducible from the seed and the analytic gradients can be checked
against finite differences.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import (
    DimensionMismatch,
    InvalidArgument,
    MissingField,
    SingleClassTrainingSet,
)
from .scoring import ConfidenceScore
from .traces import InferenceTrace, TraceSet

NEGATIVE_SLOPE = 0.01
DEFAULT_HIDDEN_DIMS = (256, 128, 64)

# Adam defaults; the moment estimates make small-probe training insensitive
# to feature scale.
ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8

_PROB_EPS = 1e-12  # keeps predicted probabilities strictly inside (0, 1)


@dataclass
class ProbeTrainConfig:
    epochs: int = 20
    learning_rate: float = 5e-4  # in-domain default; use 1e-4 out-of-domain
    batch_size: int = 64
    seed: int = 50
    hidden_dims: tuple[int, ...] = DEFAULT_HIDDEN_DIMS

    def validate(self) -> None:
        if self.epochs < 1:
            raise InvalidArgument("epochs must be >= 1")
        if self.learning_rate <= 0:
            raise InvalidArgument("learning_rate must be > 0")
        if self.batch_size < 1:
            raise InvalidArgument("batch_size must be >= 1")


class ProbeModel:
    """Weights/biases of the probe plus forward passes.

    Weight matrices are (fan_in, fan_out); biases start at zero and weights
    uniform in +-1/sqrt(fan_in), drawn from the seeded generator.
    """

    def __init__(self, dims: Sequence[int], rng: np.random.Generator | None = None):
        if len(dims) < 2 or dims[-1] != 1:
            raise InvalidArgument(f"bad layer dims {list(dims)}")
        self.dims = [int(d) for d in dims]
        self.weights: list[np.ndarray] = []
        self.biases: list[np.ndarray] = []
        for fan_in, fan_out in zip(self.dims[:-1], self.dims[1:]):
            if rng is None:
                w = np.zeros((fan_in, fan_out))
            else:
                bound = 1.0 / math.sqrt(fan_in)
                w = rng.uniform(-bound, bound, size=(fan_in, fan_out))
            self.weights.append(w)
            self.biases.append(np.zeros(fan_out))
        self.training_loss: list[float] = []

    @property
    def input_dim(self) -> int:
        return self.dims[0]

    def parameters(self) -> list[np.ndarray]:
        return self.weights + self.biases

    def logits(self, x: np.ndarray) -> np.ndarray:
        """Forward pass to the pre-squashing output, shape (n,)."""
        h = np.asarray(x, dtype=float)
        if h.ndim == 1:
            h = h[None, :]
        if h.shape[1] != self.input_dim:
            raise DimensionMismatch(
                f"input dim {h.shape[1]} != model dim {self.input_dim}"
            )
        for w, b in zip(self.weights[:-1], self.biases[:-1]):
            pre = h @ w + b
            h = np.where(pre > 0, pre, NEGATIVE_SLOPE * pre)
        return (h @ self.weights[-1] + self.biases[-1])[:, 0]

    def predict_proba(self, x: np.ndarray) -> np.ndarray:
        z = self.logits(x)
        p = np.empty_like(z)
        pos = z >= 0
        p[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
        ez = np.exp(z[~pos])
        p[~pos] = ez / (1.0 + ez)
        return np.clip(p, _PROB_EPS, 1.0 - _PROB_EPS)


def _bce_from_logits(z: np.ndarray, y: np.ndarray) -> float:
    # mean(softplus(z) - y*z), computed stably
    softplus = np.maximum(z, 0.0) + np.log1p(np.exp(-np.abs(z)))
    return float(np.mean(softplus - y * z))


def _forward_cache(model: ProbeModel, x: np.ndarray):
    h = x
    pres, acts = [], [h]
    for w, b in zip(model.weights[:-1], model.biases[:-1]):
        pre = h @ w + b
        h = np.where(pre > 0, pre, NEGATIVE_SLOPE * pre)
        pres.append(pre)
        acts.append(h)
    z = (h @ model.weights[-1] + model.biases[-1])[:, 0]
    return pres, acts, z


def _backward(model: ProbeModel, x: np.ndarray, y: np.ndarray):
    """Analytic gradients of mean BCE w.r.t. every weight and bias."""
    n = len(y)
    pres, acts, z = _forward_cache(model, x)
    p = 1.0 / (1.0 + np.exp(-np.clip(z, -500, 500)))
    delta = ((p - y) / n)[:, None]  # (n, 1)
    grads_w = [np.empty(0)] * len(model.weights)
    grads_b = [np.empty(0)] * len(model.biases)
    grads_w[-1] = acts[-1].T @ delta
    grads_b[-1] = delta.sum(axis=0)
    upstream = delta @ model.weights[-1].T
    for layer in range(len(model.weights) - 2, -1, -1):
        local = upstream * np.where(pres[layer] > 0, 1.0, NEGATIVE_SLOPE)
        grads_w[layer] = acts[layer].T @ local
        grads_b[layer] = local.sum(axis=0)
        if layer > 0:
            upstream = local @ model.weights[layer].T
    return grads_w, grads_b


def _extract_features(train: TraceSet | Sequence[InferenceTrace]):
    records = sorted(train, key=lambda t: t.id)
    if not records:
        raise InvalidArgument("empty training set")
    dim = None
    xs, ys = [], []
    for t in records:
        if t.hidden_state is None:
            raise MissingField("hidden_state", t.id)
        if t.correct is None:
            raise MissingField("correct", t.id)
        if dim is None:
            dim = len(t.hidden_state)
        elif len(t.hidden_state) != dim:
            raise DimensionMismatch(
                f"trace {t.id!r} has hidden dim {len(t.hidden_state)}, expected {dim}"
            )
        xs.append(t.hidden_state)
        ys.append(1.0 if t.correct else 0.0)
    x = np.asarray(xs, dtype=float)
    y = np.asarray(ys, dtype=float)
    if y.min() == y.max():
        raise SingleClassTrainingSet("training set holds a single class")
    return x, y


def train_probe(
    train: TraceSet | Sequence[InferenceTrace],
    config: ProbeTrainConfig | None = None,
) -> ProbeModel:
    """Fit the probe on labeled traces carrying hidden states.

    Deterministic given (train, config): records are keyed by id before the
    seeded shuffle, so file order never changes the result. The final-epoch
    model is returned with its per-epoch training loss recorded.
    """
    config = config or ProbeTrainConfig()
    config.validate()
    x, y = _extract_features(train)
    dims = [x.shape[1], *config.hidden_dims, 1]
    rng = np.random.default_rng(config.seed)
    model = ProbeModel(dims, rng=rng)

    moments_m = [np.zeros_like(p) for p in model.parameters()]
    moments_v = [np.zeros_like(p) for p in model.parameters()]
    step = 0
    n = len(y)
    for _ in range(config.epochs):
        order = rng.permutation(n)
        for start in range(0, n, config.batch_size):
            batch = order[start : start + config.batch_size]
            grads_w, grads_b = _backward(model, x[batch], y[batch])
            grads = grads_w + grads_b
            params = model.parameters()
            step += 1
            bias1 = 1.0 - ADAM_BETA1**step
            bias2 = 1.0 - ADAM_BETA2**step
            for p, g, m, v in zip(params, grads, moments_m, moments_v):
                m *= ADAM_BETA1
                m += (1.0 - ADAM_BETA1) * g
                v *= ADAM_BETA2
                v += (1.0 - ADAM_BETA2) * g * g
                p -= config.learning_rate * (m / bias1) / (np.sqrt(v / bias2) + ADAM_EPS)
        model.training_loss.append(_bce_from_logits(model.logits(x), y))
    return model


def probe_confidence(
    model: ProbeModel,
    trace: InferenceTrace,
    method: str = "trained_probe",
) -> ConfidenceScore:
    if trace.hidden_state is None:
        raise MissingField("hidden_state", trace.id)
    if len(trace.hidden_state) != model.input_dim:
        raise DimensionMismatch(
            f"trace {trace.id!r} hidden dim {len(trace.hidden_state)} "
            f"!= model dim {model.input_dim}"
        )
    value = float(model.predict_proba(np.asarray(trace.hidden_state))[0])
    return ConfidenceScore(method, value, trace.id)


def gradient_check(
    model: ProbeModel,
    batch: tuple[np.ndarray, np.ndarray],
    step: float = 1e-5,
) -> float:
    """Max relative error between analytic and central-difference gradients
    of the batch BCE over every parameter.

    The denominator is floored at 1e-6: components whose gradient is
    essentially zero carry only finite-difference cancellation noise
    (~1e-11), which would otherwise swamp the ratio.
    """
    x = np.asarray(batch[0], dtype=float)
    y = np.asarray(batch[1], dtype=float)
    if len(x) == 0:
        raise InvalidArgument("empty batch")
    grads_w, grads_b = _backward(model, x, y)
    analytic = grads_w + grads_b
    worst = 0.0
    for param, grad in zip(model.parameters(), analytic):
        flat = param.reshape(-1)
        gflat = grad.reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + step
            hi = _bce_from_logits(model.logits(x), y)
            flat[i] = orig - step
            lo = _bce_from_logits(model.logits(x), y)
            flat[i] = orig
            numeric = (hi - lo) / (2.0 * step)
            denom = max(abs(gflat[i]) + abs(numeric), 1e-6)
            worst = max(worst, abs(gflat[i] - numeric) / denom)
    return worst


PROBE_FORMAT_VERSION = 1


def save_probe(model: ProbeModel, path: str | Path) -> None:
    """Versioned flat text: dims then row-major parameters, exact via repr."""
    lines = [f"uqroute-probe {PROBE_FORMAT_VERSION}"]
    lines.append("dims " + " ".join(str(d) for d in model.dims))
    for i, (w, b) in enumerate(zip(model.weights, model.biases)):
        lines.append(f"W{i} " + " ".join(repr(float(v)) for v in w.reshape(-1)))
        lines.append(f"b{i} " + " ".join(repr(float(v)) for v in b))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_probe(path: str | Path) -> ProbeModel:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    if not lines or not lines[0].startswith("uqroute-probe "):
        raise InvalidArgument(f"{path}: not a probe file")
    version = lines[0].split()[1]
    if int(version) != PROBE_FORMAT_VERSION:
        raise InvalidArgument(f"unsupported probe format version {version}")
    if not lines[1].startswith("dims "):
        raise InvalidArgument("probe file missing dims line")
    dims = [int(d) for d in lines[1].split()[1:]]
    model = ProbeModel(dims)
    table = {}
    for line in lines[2:]:
        if not line.strip():
            continue
        name, *vals = line.split()
        table[name] = np.asarray([float(v) for v in vals])
    for i, (fan_in, fan_out) in enumerate(zip(dims[:-1], dims[1:])):
        model.weights[i] = table[f"W{i}"].reshape(fan_in, fan_out)
        model.biases[i] = table[f"b{i}"]
    return model


def make_hidden_state_traces(
    features: np.ndarray,
    labels: Sequence[bool],
    dataset: str = "toy",
) -> TraceSet:
    """Wrap feature rows as traces so array data can drive train_probe."""
    records = tuple(
        InferenceTrace(
            id=f"{dataset}-{i:06d}",
            dataset=dataset,
            hidden_state=[float(v) for v in row],
            correct=bool(lab),
        )
        for i, (row, lab) in enumerate(zip(features, labels))
    )
    return TraceSet(records, source="synthetic")

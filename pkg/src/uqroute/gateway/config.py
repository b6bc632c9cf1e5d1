"""Gateway configuration: YAML file plus environment overrides.

Exactly one threshold source must be configured: a literal ``threshold`` or
a calibration manifest with a target routing ratio (resolved at startup).
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from pathlib import Path

import yaml

from ..calibration import load_calibration, transfer_threshold
from ..errors import GatewayConfigError
from ..scoring import METHODS, PROBE_METHODS

FALLBACK_POLICIES = ("serve_weak", "error")

ENV_OVERRIDES = {
    ("weak", "url"): "UQROUTE_WEAK_URL",
    ("weak", "api_key"): "UQROUTE_WEAK_API_KEY",
    ("strong", "url"): "UQROUTE_STRONG_URL",
    ("strong", "api_key"): "UQROUTE_STRONG_API_KEY",
}


@dataclass
class EndpointConfig:
    url: str
    model: str
    api_key: str | None = None


@dataclass
class GatewayConfig:
    weak: EndpointConfig
    strong: EndpointConfig
    method: str = "perplexity"
    threshold: float | None = None
    calibration_manifest: str | None = None
    target_ratio: float | None = None
    resample_count: int = 5
    resample_temperature: float = 1.0
    decode_temperature: float = 0.0
    decode_top_p: float = 1.0
    timeout_s: float = 30.0
    fallback: str = "serve_weak"
    trace_log: str | None = None
    prompt_dir: str | None = None

    def validate(self) -> None:
        if self.method not in METHODS:
            raise GatewayConfigError(f"unknown method {self.method!r}")
        if self.method in PROBE_METHODS:
            raise GatewayConfigError(
                f"method {self.method!r} needs a hidden-state source, which the "
                "completion-endpoint dialect does not expose"
            )
        has_literal = self.threshold is not None
        has_manifest = self.calibration_manifest is not None
        if has_literal == has_manifest:
            raise GatewayConfigError(
                "configure exactly one of: threshold, calibration_manifest"
            )
        if has_manifest and self.target_ratio is None:
            raise GatewayConfigError("calibration_manifest requires target_ratio")
        if self.method == "jaccard_degree" and self.resample_count < 2:
            raise GatewayConfigError("jaccard_degree needs at least 2 resamples")
        if self.fallback not in FALLBACK_POLICIES:
            raise GatewayConfigError(f"unknown fallback policy {self.fallback!r}")

    def resolve_threshold(self) -> float:
        """The live routing threshold; reads the manifest when configured."""
        if self.threshold is not None:
            return float(self.threshold)
        cal = load_calibration(self.calibration_manifest)
        return transfer_threshold(cal, float(self.target_ratio))


def _endpoint_from(data: dict, name: str) -> EndpointConfig:
    if not isinstance(data, dict) or "url" not in data or "model" not in data:
        raise GatewayConfigError(f"{name}: needs url and model")
    return EndpointConfig(
        url=str(data["url"]),
        model=str(data["model"]),
        api_key=data.get("api_key"),
    )


def load_gateway_config(path: str | Path, env: dict | None = None) -> GatewayConfig:
    env = os.environ if env is None else env
    try:
        raw = yaml.safe_load(Path(path).read_text(encoding="utf-8"))
    except (OSError, yaml.YAMLError) as e:
        raise GatewayConfigError(f"cannot read config {path}: {e}") from e
    if not isinstance(raw, dict):
        raise GatewayConfigError(f"{path}: config must be a mapping")
    if "weak" not in raw or "strong" not in raw:
        raise GatewayConfigError(f"{path}: weak and strong endpoints are required")

    for (section, key), var in ENV_OVERRIDES.items():
        if var in env:
            raw.setdefault(section, {})[key] = env[var]

    resamples = raw.get("resamples", {}) or {}
    decode = raw.get("decode", {}) or {}
    config = GatewayConfig(
        weak=_endpoint_from(raw["weak"], "weak"),
        strong=_endpoint_from(raw["strong"], "strong"),
        method=str(raw.get("method", "perplexity")),
        threshold=raw.get("threshold"),
        calibration_manifest=raw.get("calibration_manifest"),
        target_ratio=raw.get("target_ratio"),
        resample_count=int(resamples.get("count", 5)),
        resample_temperature=float(resamples.get("temperature", 1.0)),
        decode_temperature=float(decode.get("temperature", 0.0)),
        decode_top_p=float(decode.get("top_p", 1.0)),
        timeout_s=float(raw.get("timeout_s", 30.0)),
        fallback=str(raw.get("fallback", "serve_weak")),
        trace_log=raw.get("trace_log"),
        prompt_dir=raw.get("prompt_dir"),
    )
    config.validate()
    return config

"""Live routing service.

POST /v1/route answers a query: the weak endpoint is asked first (greedy,
with log-probabilities), its answer is scored with the configured method,
and low-confidence queries are forwarded to the strong endpoint. POST
/v1/score is the dry-run variant that never touches the strong endpoint.
Every request's gathered evidence is appended to the trace log in the
standard trace format.
"""

from __future__ import annotations

import threading
import uuid
from dataclasses import dataclass, field

from fastapi import FastAPI, HTTPException
from pydantic import BaseModel

from ..errors import (
    MissingField,
    NonCompliant,
    ScoringFailed,
    StrongEndpointUnavailable,
    WeakEndpointUnavailable,
)
from ..routing import should_route
from ..scoring import ConfidenceScore, _scorer_for
from ..traces import ANSWER_KINDS, InferenceTrace, append_trace
from .client import ChatCompletion, CompletionClient, EndpointError
from .config import GatewayConfig
from .prompts import load_templates


@dataclass
class RouteResult:
    answer: str
    source: str  # slm | llm | slm_fallback
    confidence: float
    method: str
    latency_ms: dict[str, float]
    trace: InferenceTrace
    warning: str | None = None

    def to_dict(self) -> dict:
        out = {
            "answer": self.answer,
            "source": self.source,
            "confidence": self.confidence,
            "method": self.method,
            "latency_ms": self.latency_ms,
            "trace": self.trace.to_dict(),
        }
        if self.warning:
            out["warning"] = self.warning
        return out


@dataclass
class Evidence:
    trace: InferenceTrace
    latency_ms: dict[str, float] = field(default_factory=dict)


class Gateway:
    """Holds the clients, the resolved threshold, and the trace-log writer.

    Configuration is immutable after startup; per-request state stays local,
    and log appends are serialized through a single lock.
    """

    def __init__(self, config: GatewayConfig):
        config.validate()
        self.config = config
        self.method = config.method
        self.threshold = config.resolve_threshold()
        self.templates = load_templates(config.prompt_dir)
        self.weak = CompletionClient(
            config.weak.url, config.weak.model, config.weak.api_key, config.timeout_s
        )
        self.strong = CompletionClient(
            config.strong.url, config.strong.model, config.strong.api_key, config.timeout_s
        )
        self._log_lock = threading.Lock()

    def close(self) -> None:
        self.weak.close()
        self.strong.close()

    # -- evidence gathering -------------------------------------------------

    def _weak_chat(self, prompt: str, **kw) -> ChatCompletion:
        try:
            return self.weak.chat(prompt, **kw)
        except EndpointError as e:
            raise WeakEndpointUnavailable(str(e)) from e

    def gather_evidence(self, query: str, answer_kind: str) -> Evidence:
        """Run the primary greedy decode plus whatever follow-up calls the
        configured method needs, and assemble the trace."""
        if answer_kind not in ANSWER_KINDS:
            raise ScoringFailed(f"unknown answer_kind {answer_kind!r}")
        prompt = query
        if self.method == "verbalization_1s":
            prompt = self.templates["verbalization_1s"].format(question=query)
        primary = self._weak_chat(
            prompt,
            temperature=self.config.decode_temperature,
            top_p=self.config.decode_top_p,
            logprobs=True,
        )
        latency = {"slm": primary.latency_ms}
        trace = InferenceTrace(
            id=f"gw-{uuid.uuid4().hex[:12]}",
            dataset="gateway",
            prompt=query,
            response=primary.text,
            answer_kind=answer_kind,
            token_logprobs=list(primary.token_logprobs),
        )
        if answer_kind in ("multiple_choice", "true_false"):
            trace.chosen_option_logprob = _first_content_token_logprob(primary)

        if self.method == "p_true":
            follow = self._weak_chat(
                self.templates["p_true"].format(question=query, answer=primary.text),
                temperature=0.0,
                top_p=1.0,
                logprobs=True,
                top_logprobs=10,
                max_tokens=4,
            )
            latency["slm"] += follow.latency_ms
            trace.true_false_logprobs = _true_false_logprobs(follow)
        elif self.method == "verbalization_1s":
            trace.verbal_confidence_text = primary.text
        elif self.method == "verbalization_2s":
            follow = self._weak_chat(
                self.templates["verbalization_2s"].format(
                    question=query, answer=primary.text
                ),
                temperature=0.0,
                top_p=1.0,
                max_tokens=16,
            )
            latency["slm"] += follow.latency_ms
            trace.verbal_confidence_text = follow.text
        elif self.method == "jaccard_degree":
            samples = []
            for _ in range(self.config.resample_count):
                sample = self._weak_chat(
                    query,
                    temperature=self.config.resample_temperature,
                    top_p=self.config.decode_top_p,
                )
                latency["slm"] += sample.latency_ms
                samples.append(sample.text)
            trace.samples = samples
        return Evidence(trace=trace, latency_ms=latency)

    def score_trace(self, trace: InferenceTrace) -> ConfidenceScore:
        scorer = _scorer_for(self.method)
        try:
            return scorer(trace)
        except MissingField as e:
            raise ScoringFailed(f"{e.field} absent") from e
        except NonCompliant:
            raise ScoringFailed("confidence text non-compliant") from None

    def _log(self, trace: InferenceTrace) -> None:
        if self.config.trace_log is None:
            return
        with self._log_lock:
            append_trace(trace, self.config.trace_log)

    # -- request handlers ---------------------------------------------------

    def handle_score(self, query: str, answer_kind: str = "free_form") -> RouteResult:
        evidence = self.gather_evidence(query, answer_kind)
        self._log(evidence.trace)
        score = self.score_trace(evidence.trace)
        return RouteResult(
            answer=evidence.trace.response,
            source="slm",
            confidence=score.value,
            method=self.method,
            latency_ms=evidence.latency_ms,
            trace=evidence.trace,
        )

    def handle_route(self, query: str, answer_kind: str = "free_form") -> RouteResult:
        evidence = self.gather_evidence(query, answer_kind)
        self._log(evidence.trace)
        score = self.score_trace(evidence.trace)
        result = RouteResult(
            answer=evidence.trace.response,
            source="slm",
            confidence=score.value,
            method=self.method,
            latency_ms=evidence.latency_ms,
            trace=evidence.trace,
        )
        if not should_route(score.value, self.threshold):
            return result
        try:
            strong = self.strong.chat(
                query,
                temperature=self.config.decode_temperature,
                top_p=self.config.decode_top_p,
            )
        except EndpointError as e:
            if self.config.fallback == "serve_weak":
                result.source = "slm_fallback"
                result.warning = f"strong endpoint unavailable: {e}"
                return result
            raise StrongEndpointUnavailable(str(e)) from e
        result.answer = strong.text
        result.source = "llm"
        result.latency_ms["llm"] = strong.latency_ms
        return result


def _first_content_token_logprob(completion: ChatCompletion) -> float | None:
    for token, lp in zip(completion.tokens, completion.token_logprobs):
        if token.strip():
            return lp
    return None


def _true_false_logprobs(completion: ChatCompletion) -> tuple[float, float] | None:
    if not completion.top_logprobs:
        return None
    alts = completion.top_logprobs[0]
    lt = lf = None
    for token, lp in alts.items():
        word = token.strip().lower()
        if word == "true" and lt is None:
            lt = lp
        elif word == "false" and lf is None:
            lf = lp
    if lt is None or lf is None:
        return None
    return (lt, lf)


class RouteRequest(BaseModel):
    query: str
    answer_kind: str = "free_form"
    options: list[str] | None = None


def create_app(config: GatewayConfig) -> FastAPI:
    gateway = Gateway(config)
    app = FastAPI(title="uqroute gateway")
    app.state.gateway = gateway

    @app.get("/v1/health")
    def health():
        return {
            "status": "ok",
            "method": gateway.method,
            "threshold": gateway.threshold,
        }

    @app.post("/v1/route")
    def route(request: RouteRequest):
        try:
            return gateway.handle_route(request.query, request.answer_kind).to_dict()
        except WeakEndpointUnavailable as e:
            raise HTTPException(status_code=503, detail=str(e)) from e
        except StrongEndpointUnavailable as e:
            raise HTTPException(status_code=502, detail=str(e)) from e
        except ScoringFailed as e:
            raise HTTPException(status_code=502, detail=f"scoring failed: {e}") from e

    @app.post("/v1/score")
    def score(request: RouteRequest):
        try:
            result = gateway.handle_score(request.query, request.answer_kind)
        except WeakEndpointUnavailable as e:
            raise HTTPException(status_code=503, detail=str(e)) from e
        except ScoringFailed as e:
            raise HTTPException(status_code=502, detail=f"scoring failed: {e}") from e
        return {
            "confidence": result.confidence,
            "method": result.method,
            "trace": result.trace.to_dict(),
        }

    return app

"""Runs a checkpoint over a dataset and emits one trace record per item.

Evidence per record: greedy-decode response with per-token log-probs, the
chosen-option log-prob for option-style answers, True/False logits from the
self-check prompt, temperature-1.0 resamples, verbalized confidence text,
and a pooled hidden state from the configured transformer layer. The output
is the standard trace format; the pooling choice is recorded in a header
comment line.
"""

from __future__ import annotations

import json
import sys
from dataclasses import dataclass, field
from pathlib import Path

import torch

from .config import CaptureConfig
from .datasets import DatasetItem, read_dataset
from .errors import CaptureConfigError, JudgeUnavailable, ModelLoadError
from .grading import JudgeClient, grade_item

TRACE_SCHEMA = 1


@dataclass
class CaptureReport:
    n_records: int = 0
    n_labeled: int = 0
    warnings: list[str] = field(default_factory=list)


@dataclass
class _Decode:
    text: str
    token_logprobs: list[float]
    sequence: torch.Tensor  # full prompt+generation ids, shape (1, len)


class CaptureRunner:
    def __init__(self, config: CaptureConfig):
        config.validate()
        self.config = config
        try:
            from transformers import AutoModelForCausalLM, AutoTokenizer

            self.tokenizer = AutoTokenizer.from_pretrained(config.model_path)
            self.model = AutoModelForCausalLM.from_pretrained(config.model_path)
        except Exception as e:
            raise ModelLoadError(f"cannot load {config.model_path}: {e}") from e
        self.model.eval()
        n_states = int(self.model.config.num_hidden_layers) + 1  # + embeddings
        if not -n_states <= config.layer_index < n_states:
            raise CaptureConfigError(
                f"layer index {config.layer_index} invalid for a model with "
                f"{n_states} hidden-state layers"
            )
        self._pad_id = self.tokenizer.pad_token_id
        if self._pad_id is None:
            self._pad_id = self.tokenizer.eos_token_id
        self.judge = None
        if config.judge_url:
            self.judge = JudgeClient(
                config.judge_url,
                config.judge_model,
                config.judge_template,
                config.judge_api_key,
            )

    # -- model calls ----------------------------------------------------------

    def _generate(self, prompt: str, do_sample: bool, temperature: float) -> _Decode:
        enc = self.tokenizer(prompt, return_tensors="pt")
        kwargs = dict(
            max_new_tokens=self.config.max_new_tokens,
            pad_token_id=self._pad_id,
            output_scores=True,
            return_dict_in_generate=True,
        )
        if do_sample:
            kwargs.update(
                do_sample=True,
                temperature=temperature,
                top_p=self.config.decode_top_p,
            )
        else:
            kwargs.update(do_sample=False)
        with torch.no_grad():
            out = self.model.generate(**enc, **kwargs)
            scores = self.model.compute_transition_scores(
                out.sequences, out.scores, normalize_logits=True
            )
        new_tokens = out.sequences[0][enc["input_ids"].shape[1]:]
        text = self.tokenizer.decode(new_tokens, skip_special_tokens=True)
        logprobs = [min(float(lp), 0.0) for lp in scores[0][: len(new_tokens)]]
        return _Decode(text=text, token_logprobs=logprobs, sequence=out.sequences)

    def _hidden_state(self, sequence: torch.Tensor) -> list[float]:
        with torch.no_grad():
            out = self.model(sequence, output_hidden_states=True)
        layer = out.hidden_states[self.config.layer_index][0]  # (seq, dim)
        if self.config.pooling == "mean":
            pooled = layer.mean(dim=0)
        else:
            pooled = layer[-1]
        return [float(v) for v in pooled]

    def _next_token_logprob(self, prompt: str, word: str) -> float:
        enc = self.tokenizer(prompt, return_tensors="pt")
        with torch.no_grad():
            logits = self.model(**enc).logits[0, -1]
        logprobs = torch.log_softmax(logits, dim=-1)
        token_id = self.tokenizer.encode(word, add_special_tokens=False)[0]
        return min(float(logprobs[token_id]), 0.0)

    # -- per-item capture -------------------------------------------------------

    def capture_item(self, item: DatasetItem, index: int,
                     report: CaptureReport) -> dict:
        cfg = self.config
        question = item.question_text()
        primary_prompt = question
        if cfg.capture_verbalized and cfg.verbalization == "one_step":
            primary_prompt = cfg.verbalization_1s_template.format(question=question)
        primary = self._generate(primary_prompt, do_sample=False, temperature=0.0)

        record: dict = {
            "schema": TRACE_SCHEMA,
            "id": item.id,
            "dataset": "",  # filled by capture()
            "prompt": question,
            "response": primary.text,
            "answer_kind": item.answer_kind,
            "token_logprobs": primary.token_logprobs,
        }
        if item.answer_kind in ("multiple_choice", "true_false"):
            if primary.token_logprobs:
                record["chosen_option_logprob"] = primary.token_logprobs[0]

        if cfg.capture_p_true:
            prompt = cfg.p_true_template.format(question=question, answer=primary.text)
            record["true_false_logprobs"] = [
                self._next_token_logprob(prompt, "True"),
                self._next_token_logprob(prompt, "False"),
            ]

        if cfg.capture_verbalized:
            if cfg.verbalization == "one_step":
                record["verbal_confidence_text"] = primary.text
            else:
                follow = cfg.verbalization_2s_template.format(
                    question=question, answer=primary.text
                )
                record["verbal_confidence_text"] = self._generate(
                    follow, do_sample=False, temperature=0.0
                ).text

        if cfg.capture_resamples:
            torch.manual_seed(cfg.seed * 100003 + index)
            record["samples"] = [
                self._generate(
                    question, do_sample=True, temperature=cfg.resample_temperature
                ).text
                for _ in range(cfg.resample_count)
            ]

        if cfg.capture_hidden:
            record["hidden_state"] = self._hidden_state(primary.sequence)

        try:
            verdict = grade_item(item, primary.text, judge=self.judge)
        except JudgeUnavailable as e:
            verdict = None
            report.warnings.append(f"{item.id}: judge unavailable ({e}); unlabeled")
        if verdict is not None:
            record["correct"] = bool(verdict)
            report.n_labeled += 1
        return record

    # -- file-level capture -------------------------------------------------------

    def capture(self, dataset_path: str | Path, out_path: str | Path,
                dataset_tag: str | None = None) -> CaptureReport:
        items = read_dataset(dataset_path)
        tag = dataset_tag or Path(dataset_path).stem
        report = CaptureReport()
        header = (
            f"# uqcapture schema={TRACE_SCHEMA} model={self.config.model_path} "
            f"layer={self.config.layer_index} pooling={self.config.pooling} "
            f"seed={self.config.seed}"
        )
        with Path(out_path).open("w", encoding="utf-8") as f:
            f.write(header + "\n")
            for index, item in enumerate(items):
                record = self.capture_item(item, index, report)
                record["dataset"] = tag
                f.write(json.dumps(record) + "\n")
                report.n_records += 1
        for warning in report.warnings:
            print(f"warning: {warning}", file=sys.stderr)
        return report

    def close(self) -> None:
        if self.judge is not None:
            self.judge.close()

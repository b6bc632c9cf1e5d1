"""Correctness grading: exact/option match, plus an optional external judge
for free-form answers."""

from __future__ import annotations

import re
import string

import httpx

from .datasets import DatasetItem
from .errors import JudgeUnavailable

_LABEL = re.compile(r"[A-Za-z]")


def _normalize(text: str) -> str:
    text = text.strip().casefold()
    text = text.strip(string.punctuation + string.whitespace)
    return " ".join(text.split())


def grade_option(response: str, gold: str) -> bool:
    """The first letter of the response must match the gold option label."""
    match = _LABEL.search(response)
    if match is None:
        return False
    return match.group(0).upper() == gold.strip().upper()[:1]


def grade_true_false(response: str, gold: str) -> bool:
    token = _normalize(response).split()[0] if _normalize(response) else ""
    return token == gold.strip().lower()


def grade_exact(response: str, gold: str) -> bool:
    return _normalize(response) == _normalize(gold)


class JudgeClient:
    """Yes/no equivalence judging over an OpenAI-compatible endpoint."""

    def __init__(self, url: str, model: str, template: str,
                 api_key: str | None = None, timeout: float = 30.0):
        self.url = url.rstrip("/")
        self.model = model
        self.template = template
        headers = {"Authorization": f"Bearer {api_key}"} if api_key else {}
        self._http = httpx.Client(timeout=timeout, headers=headers)

    def close(self) -> None:
        self._http.close()

    def grade(self, question: str, gold: str, answer: str) -> bool | None:
        """True/False verdict, or None when the judge's reply is unusable."""
        prompt = self.template.format(question=question, gold=gold, answer=answer)
        body = {
            "model": self.model,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": 0.0,
        }
        try:
            resp = self._http.post(f"{self.url}/chat/completions", json=body)
        except httpx.HTTPError as e:
            raise JudgeUnavailable(f"{self.url}: {e}") from e
        if resp.status_code != 200:
            raise JudgeUnavailable(f"{self.url}: HTTP {resp.status_code}")
        try:
            verdict = resp.json()["choices"][0]["message"]["content"]
        except (KeyError, IndexError, ValueError) as e:
            raise JudgeUnavailable(f"{self.url}: malformed judge reply") from e
        word = _normalize(verdict).split()[0] if _normalize(verdict) else ""
        if word in ("yes", "y"):
            return True
        if word in ("no", "n"):
            return False
        return None


def grade_item(item: DatasetItem, response: str,
               judge: JudgeClient | None = None) -> bool | None:
    """Correctness label for one captured response.

    Free-form answers go to the judge when one is configured; otherwise
    normalized exact match. Raises JudgeUnavailable on judge transport
    failure so the caller can degrade to unlabeled traces.
    """
    if item.answer_kind == "multiple_choice":
        return grade_option(response, item.gold)
    if item.answer_kind == "true_false":
        return grade_true_false(response, item.gold)
    if judge is not None:
        return judge.grade(item.question_text(), item.gold, response)
    return grade_exact(response, item.gold)

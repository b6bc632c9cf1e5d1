"""Dataset files: UTF-8 JSON lines of {id, prompt, options?, gold}.

The answer kind is taken from an explicit ``answer_kind`` field when present,
otherwise inferred: records with options are multiple choice, gold values of
true/false are true/false questions, everything else is free form.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from .errors import DatasetFormatError

ANSWER_KINDS = ("free_form", "multiple_choice", "true_false")


@dataclass(frozen=True)
class DatasetItem:
    id: str
    prompt: str
    gold: str
    options: tuple[str, ...] | None
    answer_kind: str

    def question_text(self) -> str:
        """Prompt with enumerated options appended for option-style items."""
        if self.options:
            lines = [self.prompt]
            for label, text in zip("ABCDEFGH", self.options):
                lines.append(f"{label}. {text}")
            return "\n".join(lines)
        return self.prompt


def _infer_kind(obj: dict) -> str:
    if obj.get("options"):
        return "multiple_choice"
    if str(obj.get("gold", "")).strip().lower() in ("true", "false"):
        return "true_false"
    return "free_form"


def read_dataset(path: str | Path) -> list[DatasetItem]:
    items: list[DatasetItem] = []
    seen: set[str] = set()
    with Path(path).open("r", encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            stripped = line.strip()
            if not stripped or stripped.startswith("#"):
                continue
            try:
                obj = json.loads(stripped)
            except json.JSONDecodeError as e:
                raise DatasetFormatError(lineno, f"invalid JSON: {e.msg}") from e
            if not isinstance(obj, dict):
                raise DatasetFormatError(lineno, "record is not an object")
            for field in ("id", "prompt", "gold"):
                if field not in obj:
                    raise DatasetFormatError(lineno, f"missing field: {field}")
            item_id = str(obj["id"])
            if item_id in seen:
                raise DatasetFormatError(lineno, f"duplicate id {item_id!r}")
            seen.add(item_id)
            kind = str(obj.get("answer_kind", _infer_kind(obj)))
            if kind not in ANSWER_KINDS:
                raise DatasetFormatError(lineno, f"unknown answer_kind {kind!r}")
            options = obj.get("options")
            items.append(
                DatasetItem(
                    id=item_id,
                    prompt=str(obj["prompt"]),
                    gold=str(obj["gold"]),
                    options=tuple(str(o) for o in options) if options else None,
                    answer_kind=kind,
                )
            )
    return items

"""Follow-up prompt templates the gateway sends to the weak endpoint.

Each template is a plain text file with ``{question}`` / ``{answer}``
placeholders; a config-supplied directory overrides any of them by name.
"""

from __future__ import annotations

from pathlib import Path

P_TRUE = (
    "Question: {question}\n"
    "Proposed answer: {answer}\n"
    "Is the proposed answer correct? Reply with exactly one word: True or False."
)

VERBALIZATION_1S = (
    "{question}\n\n"
    "Answer the question, then state how sure you are on its own line as\n"
    "Confidence: <number between 0 and 100>"
)

VERBALIZATION_2S = (
    "Question: {question}\n"
    "Your answer was: {answer}\n"
    "How confident are you that this answer is correct? Reply only as\n"
    "Confidence: <number between 0 and 100>"
)

_FILES = {
    "p_true": "p_true.txt",
    "verbalization_1s": "verbalization_1s.txt",
    "verbalization_2s": "verbalization_2s.txt",
}

_DEFAULTS = {
    "p_true": P_TRUE,
    "verbalization_1s": VERBALIZATION_1S,
    "verbalization_2s": VERBALIZATION_2S,
}


def load_templates(prompt_dir: str | Path | None = None) -> dict[str, str]:
    templates = dict(_DEFAULTS)
    if prompt_dir is not None:
        base = Path(prompt_dir)
        for key, filename in _FILES.items():
            path = base / filename
            if path.exists():
                templates[key] = path.read_text(encoding="utf-8")
    return templates

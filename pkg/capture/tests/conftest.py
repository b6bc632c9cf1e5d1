import json

import pytest

from uqcapture import build_tiny_checkpoint


@pytest.fixture(scope="session")
def tiny_checkpoint(tmp_path_factory):
    path = tmp_path_factory.mktemp("model") / "tiny"
    build_tiny_checkpoint(path, seed=0)
    return str(path)


def write_dataset(path, items):
    with open(path, "w", encoding="utf-8") as f:
        for item in items:
            f.write(json.dumps(item) + "\n")
    return path


@pytest.fixture
def mc_dataset(tmp_path):
    items = [
        {"id": "mc1", "prompt": "what color is the sky",
         "options": ["red", "blue", "green"], "gold": "B"},
        {"id": "mc2", "prompt": "which animal sat",
         "options": ["cat", "dog"], "gold": "A"},
    ]
    return write_dataset(tmp_path / "mc.jsonl", items)

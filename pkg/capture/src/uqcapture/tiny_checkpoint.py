"""Build a tiny local causal-LM checkpoint (~0.1M params) for offline runs.

The sandbox has no model-hub access, so fixtures use a randomly initialized
8-layer decoder with a word-level tokenizer covering the fixture vocabulary.
Eight layers keep the default eighth-to-last hidden-state index valid.
"""

from __future__ import annotations

from pathlib import Path

import click

_WORDS = (
    "the a an is are was of to in on and or not for with what which who how "
    "many much question answer True False yes no A B C D E sat ran cat dog "
    "sky water sun moon red blue green two three four five six seven eight "
    "nine ten first last number color animal confidence sure percent"
).split()


def build_tiny_checkpoint(
    out_dir: str | Path,
    seed: int = 0,
    n_layer: int = 8,
    n_embd: int = 32,
    n_head: int = 4,
) -> Path:
    import torch
    from tokenizers import Tokenizer, models, pre_tokenizers
    from transformers import GPT2Config, GPT2LMHeadModel, PreTrainedTokenizerFast

    out_dir = Path(out_dir)
    vocab = {"<unk>": 0, "<pad>": 1, "<eos>": 2}
    for word in _WORDS:
        vocab.setdefault(word, len(vocab))
    for digit in "0123456789":
        vocab.setdefault(digit, len(vocab))
    tokenizer = Tokenizer(models.WordLevel(vocab, unk_token="<unk>"))
    tokenizer.pre_tokenizer = pre_tokenizers.Whitespace()
    fast = PreTrainedTokenizerFast(
        tokenizer_object=tokenizer,
        unk_token="<unk>",
        pad_token="<pad>",
        eos_token="<eos>",
    )

    torch.manual_seed(seed)
    config = GPT2Config(
        vocab_size=len(vocab),
        n_positions=256,
        n_embd=n_embd,
        n_layer=n_layer,
        n_head=n_head,
        bos_token_id=vocab["<eos>"],
        eos_token_id=vocab["<eos>"],
        pad_token_id=vocab["<pad>"],
    )
    model = GPT2LMHeadModel(config)
    out_dir.mkdir(parents=True, exist_ok=True)
    model.save_pretrained(out_dir)
    fast.save_pretrained(out_dir)
    return out_dir


@click.command()
@click.argument("out_dir", type=click.Path(path_type=Path))
@click.option("--seed", default=0, show_default=True)
@click.option("--layers", default=8, show_default=True)
def main(out_dir: Path, seed: int, layers: int) -> None:
    """Write a tiny random-weight checkpoint usable by the capture harness."""
    path = build_tiny_checkpoint(out_dir, seed=seed, n_layer=layers)
    click.echo(f"tiny checkpoint written to {path}")


if __name__ == "__main__":
    main()

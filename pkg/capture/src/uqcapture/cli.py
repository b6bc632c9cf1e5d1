"""Capture CLI; flags mirror the capture configuration."""

from __future__ import annotations

import sys
from pathlib import Path

import click

from .config import (
    POOLING_MODES,
    VERBALIZATION_MODES,
    CaptureConfig,
    load_template,
)
from .errors import UqcaptureError
from .runner import CaptureRunner


@click.command()
@click.option("--dataset", "dataset_path", required=True,
              type=click.Path(exists=True, path_type=Path))
@click.option("--model", "model_path", required=True)
@click.option("--out", "out_path", required=True, type=click.Path(path_type=Path))
@click.option("--dataset-tag", default=None,
              help="Dataset tag stamped on every record (default: file stem).")
@click.option("--layer", "layer_index", default=-8, show_default=True,
              help="Hidden-state layer index for probe features.")
@click.option("--pooling", type=click.Choice(POOLING_MODES),
              default="last_token", show_default=True)
@click.option("--max-new-tokens", default=24, show_default=True)
@click.option("--resamples", "resample_count", default=5, show_default=True)
@click.option("--resample-temperature", default=1.0, show_default=True)
@click.option("--temperature", "decode_temperature", default=0.0, show_default=True)
@click.option("--top-p", "decode_top_p", default=1.0, show_default=True)
@click.option("--verbalization", type=click.Choice(VERBALIZATION_MODES),
              default="two_step", show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--no-hidden", is_flag=True, help="Skip hidden-state capture.")
@click.option("--no-resamples", is_flag=True, help="Skip stochastic resamples.")
@click.option("--no-p-true", is_flag=True, help="Skip the True/False self-check.")
@click.option("--no-verbalized", is_flag=True, help="Skip verbalized confidence.")
@click.option("--judge-url", default=None, help="Free-form grading endpoint.")
@click.option("--judge-model", default="")
@click.option("--judge-api-key", default=None)
@click.option("--p-true-template", type=click.Path(exists=True, path_type=Path))
@click.option("--verbalization-1s-template", type=click.Path(exists=True, path_type=Path))
@click.option("--verbalization-2s-template", type=click.Path(exists=True, path_type=Path))
def main(dataset_path, model_path, out_path, dataset_tag, layer_index, pooling,
         max_new_tokens, resample_count, resample_temperature, decode_temperature,
         decode_top_p, verbalization, seed, no_hidden, no_resamples, no_p_true,
         no_verbalized, judge_url, judge_model, judge_api_key, p_true_template,
         verbalization_1s_template, verbalization_2s_template) -> None:
    """Run a checkpoint over a dataset file and emit an inference-trace file."""
    from .config import (
        P_TRUE_TEMPLATE,
        VERBALIZATION_1S_TEMPLATE,
        VERBALIZATION_2S_TEMPLATE,
    )

    config = CaptureConfig(
        model_path=model_path,
        layer_index=layer_index,
        pooling=pooling,
        decode_temperature=decode_temperature,
        decode_top_p=decode_top_p,
        max_new_tokens=max_new_tokens,
        resample_count=resample_count,
        resample_temperature=resample_temperature,
        verbalization=verbalization,
        seed=seed,
        capture_hidden=not no_hidden,
        capture_resamples=not no_resamples,
        capture_p_true=not no_p_true,
        capture_verbalized=not no_verbalized,
        judge_url=judge_url,
        judge_model=judge_model,
        judge_api_key=judge_api_key,
        p_true_template=load_template(p_true_template, P_TRUE_TEMPLATE),
        verbalization_1s_template=load_template(
            verbalization_1s_template, VERBALIZATION_1S_TEMPLATE
        ),
        verbalization_2s_template=load_template(
            verbalization_2s_template, VERBALIZATION_2S_TEMPLATE
        ),
    )
    try:
        runner = CaptureRunner(config)
        try:
            report = runner.capture(dataset_path, out_path, dataset_tag)
        finally:
            runner.close()
    except UqcaptureError as e:
        click.echo(f"error: {type(e).__name__}: {e}", err=True)
        sys.exit(1)
    click.echo(
        f"captured {report.n_records} traces "
        f"({report.n_labeled} labeled) -> {out_path}"
    )


if __name__ == "__main__":
    main()

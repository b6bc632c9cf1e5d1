"""Batch front door: score trace files, evaluate alignment, sweep routing
curves, build calibration manifests, train probes, and serve the gateway.

Every command is deterministic given identical inputs and seeds, writes
UTF-8 tab-separated tables with a header row, and exits nonzero with a
one-line ``error: <Type>: <message>`` on failure.
"""

from __future__ import annotations

import sys
from pathlib import Path

import click

from . import alignment as alignment_mod
from . import calibration as calibration_mod
from . import probe as probe_mod
from . import routing as routing_mod
from .errors import UqrouteError
from .scoring import METHODS, PROBE_METHODS, ConfidenceScore, score_batch
from .traces import load_traces, save_traces, synth_traces


def _fail(exc: BaseException) -> None:
    click.echo(f"error: {type(exc).__name__}: {exc}", err=True)
    sys.exit(1)


def _write_table(out: Path | None, header: list[str], rows: list[list]) -> None:
    lines = ["\t".join(header)]
    for row in rows:
        lines.append("\t".join(repr(v) if isinstance(v, float) else str(v) for v in row))
    text = "\n".join(lines) + "\n"
    if out is None:
        click.echo(text, nl=False)
    else:
        out.write_text(text, encoding="utf-8")


def _parse_grid(text: str) -> list[float]:
    return [float(tok) for tok in text.split(",") if tok.strip()]


def _parse_bool(token: str) -> bool:
    t = token.strip().lower()
    if t in ("1", "true", "t", "yes"):
        return True
    if t in ("0", "false", "f", "no"):
        return False
    raise ValueError(f"not a boolean: {token!r}")


def _read_scores(path: Path) -> list[ConfidenceScore]:
    lines = path.read_text(encoding="utf-8").splitlines()
    if not lines or lines[0].split("\t") != ["id", "method", "confidence"]:
        raise click.UsageError(f"{path}: expected header 'id\\tmethod\\tconfidence'")
    scores = []
    for line in lines[1:]:
        if not line.strip():
            continue
        tid, method, conf = line.split("\t")
        scores.append(ConfidenceScore(method, float(conf), tid))
    return scores


def _read_labels(path: Path) -> tuple[dict[str, bool], dict[str, bool] | None]:
    """Labels table: id, slm_correct and optionally llm_correct columns."""
    lines = path.read_text(encoding="utf-8").splitlines()
    if not lines:
        raise click.UsageError(f"{path}: empty labels file")
    header = lines[0].split("\t")
    if header[:2] != ["id", "slm_correct"]:
        raise click.UsageError(
            f"{path}: expected header starting 'id\\tslm_correct'"
        )
    has_llm = len(header) > 2 and header[2] == "llm_correct"
    slm: dict[str, bool] = {}
    llm: dict[str, bool] = {}
    for line in lines[1:]:
        if not line.strip():
            continue
        parts = line.split("\t")
        slm[parts[0]] = _parse_bool(parts[1])
        if has_llm:
            llm[parts[0]] = _parse_bool(parts[2])
    return slm, (llm if has_llm else None)


def _discarded_sidecar(scores_path: Path) -> Path:
    return scores_path.with_name(scores_path.name + ".discarded")


@click.group()
def main() -> None:
    """Uncertainty-gated routing toolkit."""


@main.command()
@click.option("--traces", "traces_path", required=True, type=click.Path(exists=True, path_type=Path))
@click.option("--method", required=True, type=click.Choice(METHODS))
@click.option("--probe", "probe_path", type=click.Path(exists=True, path_type=Path))
@click.option("--out", "out_path", required=True, type=click.Path(path_type=Path))
def score(traces_path: Path, method: str, probe_path: Path | None, out_path: Path) -> None:
    """Score every trace with one method; discards go to a sidecar table."""
    if (probe_path is not None) != (method in PROBE_METHODS):
        raise click.UsageError("--probe is required for (and only for) probe methods")
    try:
        traces = load_traces(traces_path)
        model = probe_mod.load_probe(probe_path) if probe_path else None
        scores, discarded = score_batch(traces, method, probe=model)
    except UqrouteError as e:
        _fail(e)
    _write_table(
        out_path,
        ["id", "method", "confidence"],
        [[s.trace_id, s.method, s.value] for s in scores],
    )
    _write_table(_discarded_sidecar(out_path), ["id"], [[tid] for tid in discarded])
    click.echo(f"scored {len(scores)} traces, discarded {len(discarded)}")


@main.command("eval")
@click.option("--scores", "scores_path", required=True, type=click.Path(exists=True, path_type=Path))
@click.option("--labels", "labels_path", required=True, type=click.Path(exists=True, path_type=Path))
@click.option("--grid", default="0,0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9", show_default=True)
@click.option("--out", "out_prefix", type=click.Path(path_type=Path))
def eval_cmd(scores_path: Path, labels_path: Path, grid: str, out_prefix: Path | None) -> None:
    """Alignment report (ROC AUC) and, with llm labels, relative accuracy."""
    try:
        all_scores = _read_scores(scores_path)
        slm, llm = _read_labels(labels_path)
        n_discarded = 0
        sidecar = _discarded_sidecar(scores_path)
        if sidecar.exists():
            n_discarded = max(0, len(sidecar.read_text().splitlines()) - 1)
        fractions = _parse_grid(grid)

        methods = sorted({s.method for s in all_scores})
        auc_rows = []
        rel_rows = []
        for method in methods:
            scores = [s for s in all_scores if s.method == method]
            labels = [slm[s.trace_id] for s in scores]
            report = alignment_mod.alignment_report(method, scores, labels, n_discarded)
            auc_rows.append([report.method, report.auc, report.n_used, report.n_discarded])
            if llm is not None:
                pts = alignment_mod.relative_accuracy_curve(
                    scores,
                    labels,
                    [llm[s.trace_id] for s in scores],
                    fractions,
                )
                rel_rows.extend(
                    [method, p.excluded_fraction, p.slm_accuracy, p.llm_accuracy,
                     p.relative_accuracy, p.n_kept]
                    for p in pts
                )
    except (UqrouteError, KeyError, ValueError) as e:
        _fail(e)

    auc_header = ["method", "auc", "n_used", "n_discarded"]
    rel_header = ["method", "excluded_fraction", "slm_accuracy", "llm_accuracy",
                  "relative_accuracy", "n_kept"]
    if out_prefix is None:
        _write_table(None, auc_header, auc_rows)
        if rel_rows:
            click.echo("")
            _write_table(None, rel_header, rel_rows)
    else:
        _write_table(out_prefix.with_suffix(".alignment.tsv"), auc_header, auc_rows)
        if rel_rows:
            _write_table(out_prefix.with_suffix(".relacc.tsv"), rel_header, rel_rows)


@main.command()
@click.option("--scores", "scores_path", required=True, type=click.Path(exists=True, path_type=Path))
@click.option("--labels", "labels_path", required=True, type=click.Path(exists=True, path_type=Path))
@click.option("--grid", default=",".join(str(r) for r in routing_mod.DEFAULT_GRID), show_default=False)
@click.option("--out", "out_path", type=click.Path(path_type=Path))
def sweep(scores_path: Path, labels_path: Path, grid: str, out_path: Path | None) -> None:
    """Accuracy-vs-routing-ratio table per method, plus the oracle curve."""
    try:
        all_scores = _read_scores(scores_path)
        slm, llm = _read_labels(labels_path)
        if llm is None:
            raise click.UsageError("sweep needs an llm_correct column in --labels")
        ratios = _parse_grid(grid)
        rows = []
        for method in sorted({s.method for s in all_scores}):
            scores = [s for s in all_scores if s.method == method]
            curve = routing_mod.routing_curve(scores, slm, llm, ratios)
            rows.extend([method, pt.ratio, pt.overall_accuracy] for pt in curve)
        ids = {s.trace_id for s in all_scores}
        oracle = routing_mod.oracle_curve(
            {i: slm[i] for i in ids}, {i: llm[i] for i in ids}, ratios
        )
        rows.extend(["oracle", pt.ratio, pt.overall_accuracy] for pt in oracle)
    except (UqrouteError, KeyError, ValueError) as e:
        _fail(e)
    _write_table(out_path, ["method", "ratio", "overall_accuracy"], rows)


@main.command()
@click.option("--traces", "trace_paths", required=True, multiple=True,
              type=click.Path(exists=True, path_type=Path))
@click.option("--target", required=True)
@click.option("--method", required=True, type=click.Choice(METHODS))
@click.option("--probe", "probe_path", type=click.Path(exists=True, path_type=Path))
@click.option("--bins", default=calibration_mod.DEFAULT_BINS, show_default=True)
@click.option("--rate", default=calibration_mod.DEFAULT_RATE, show_default=True)
@click.option("--seed", default=calibration_mod.DEFAULT_SEED, show_default=True)
@click.option("--grid", default="0,0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9,1.0", show_default=True)
@click.option("--labels", "labels_path", type=click.Path(exists=True, path_type=Path),
              help="Target llm labels; enables the generalization report.")
@click.option("--out", "out_path", required=True, type=click.Path(path_type=Path))
def calibrate(trace_paths, target, method, probe_path, bins, rate, seed, grid,
              labels_path, out_path: Path) -> None:
    """Build a leave-one-out calibration manifest; optionally report how its
    thresholds transfer to the held-out target."""
    if (probe_path is not None) != (method in PROBE_METHODS):
        raise click.UsageError("--probe is required for (and only for) probe methods")
    try:
        from .errors import DuplicateId
        from .traces import TraceSet

        records = []
        seen: set[str] = set()
        for path in trace_paths:
            for trace in load_traces(path):
                if trace.id in seen:
                    raise DuplicateId(trace.id)
                seen.add(trace.id)
                records.append(trace)
        groups = TraceSet(tuple(records), source="cli").group_by_dataset()
        model = probe_mod.load_probe(probe_path) if probe_path else None
        cal = calibration_mod.leave_one_out_calibration(
            groups, target, method, probe=model,
            bin_count=bins, rate=rate, seed=seed,
        )
        calibration_mod.save_calibration(cal, out_path)
        click.echo(
            f"calibration set: {len(cal)} entries from "
            f"{len(cal.datasets())} datasets -> {out_path}"
        )
        if labels_path is not None:
            target_scores, _ = score_batch(groups[target], method, probe=model)
            slm = groups[target].labels()
            _, llm = _read_labels(labels_path)
            if llm is None:
                raise click.UsageError("labels file needs an llm_correct column")
            report = calibration_mod.generalization_report(
                cal, target_scores, slm, llm, _parse_grid(grid)
            )
            _write_table(
                out_path.with_suffix(".report.tsv"),
                ["target_ratio", "threshold", "achieved_ratio",
                 "accuracy_transfer", "accuracy_direct"],
                [[p.target_ratio, p.threshold, p.achieved_ratio,
                  p.accuracy_transfer, p.accuracy_direct] for p in report.points],
            )
            click.echo(
                f"max |achieved-target| ratio gap {report.max_ratio_gap:.4f}, "
                f"max accuracy gap {report.max_accuracy_gap:.4f}"
            )
    except (UqrouteError, KeyError, ValueError) as e:
        _fail(e)


@main.command("train-probe")
@click.option("--traces", "traces_path", required=True, type=click.Path(exists=True, path_type=Path))
@click.option("--epochs", default=20, show_default=True)
@click.option("--lr", default=5e-4, show_default=True)
@click.option("--batch-size", default=64, show_default=True)
@click.option("--seed", default=50, show_default=True)
@click.option("--out", "out_path", required=True, type=click.Path(path_type=Path))
def train_probe_cmd(traces_path: Path, epochs: int, lr: float, batch_size: int,
                    seed: int, out_path: Path) -> None:
    """Train the hidden-state correctness probe and save it."""
    try:
        traces = load_traces(traces_path)
        config = probe_mod.ProbeTrainConfig(
            epochs=epochs, learning_rate=lr, batch_size=batch_size, seed=seed
        )
        model = probe_mod.train_probe(traces, config)
        probe_mod.save_probe(model, out_path)
    except UqrouteError as e:
        _fail(e)
    click.echo(
        f"trained probe {model.dims} for {epochs} epochs, "
        f"final loss {model.training_loss[-1]:.6f} -> {out_path}"
    )


@main.command()
@click.option("--n", required=True, type=int)
@click.option("--seed", default=50, show_default=True)
@click.option("--difficulty-link", default=1.0, show_default=True)
@click.option("--dataset", default="synthetic", show_default=True)
@click.option("--out", "out_path", required=True, type=click.Path(path_type=Path))
def synth(n: int, seed: int, difficulty_link: float, dataset: str, out_path: Path) -> None:
    """Generate a deterministic synthetic trace file (testing substrate)."""
    try:
        save_traces(synth_traces(n, seed, difficulty_link, dataset=dataset), out_path)
    except UqrouteError as e:
        _fail(e)
    click.echo(f"wrote {n} synthetic traces -> {out_path}")


@main.command()
@click.option("--config", "config_path", required=True, type=click.Path(exists=True, path_type=Path))
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8080, show_default=True)
def gateway(config_path: Path, host: str, port: int) -> None:
    """Serve the live routing gateway."""
    import uvicorn

    from .gateway import create_app, load_gateway_config

    try:
        app = create_app(load_gateway_config(config_path))
    except UqrouteError as e:
        _fail(e)
    uvicorn.run(app, host=host, port=port)


if __name__ == "__main__":
    main()

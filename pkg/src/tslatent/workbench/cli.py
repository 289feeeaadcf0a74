"""Command-line face of the workbench: thin client of the same facade the
HTTP service uses.  Exit codes: 0 success, 2 validation error, 3 job
failure."""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from ..errors import NotFound, ValidationError
from . import Workbench

EXIT_VALIDATION = 2
EXIT_JOB_FAILURE = 3


class Context:
    def __init__(self, store_dir: str, seed: int):
        self.store_dir = store_dir
        self.seed = seed
        self._workbench: Workbench | None = None

    @property
    def workbench(self) -> Workbench:
        if self._workbench is None:
            self._workbench = Workbench(self.store_dir)
        return self._workbench


@click.group()
@click.option("--store-dir", default="./tslatent-store", show_default=True,
              help="Run/dataset store directory.")
@click.option("--seed", default=0, show_default=True, help="Master seed for seeded commands.")
@click.pass_context
def main(ctx, store_dir, seed):
    """Train, embed, project and analyze time-series latent spaces."""
    ctx.obj = Context(store_dir, seed)


def _fail_validation(message: str):
    click.echo(f"error: {message}", err=True)
    sys.exit(EXIT_VALIDATION)


def _fail_job(message: str):
    click.echo(f"job failed: {message}", err=True)
    sys.exit(EXIT_JOB_FAILURE)


def _run_job(wb: Workbench, kind: str, params: dict) -> str:
    try:
        run_id = wb.submit_job(kind, params)
    except (ValidationError, NotFound) as exc:
        _fail_validation(str(exc))
    job = wb.wait_job(run_id)
    if job.status != "done":
        _fail_job(f"{run_id}: {job.error}")
    return run_id


@main.command()
@click.argument("kind", type=click.Choice(["s1", "s2", "s3", "mtoy"]))
@click.option("--length", default=10_000, show_default=True)
@click.option("--noise-std", default=0.05, show_default=True)
@click.option("--csv-out", type=click.Path(), default=None,
              help="Also write series.csv + annotations.json next to this path.")
@click.option("--option", "-o", "options", multiple=True,
              help="Extra generator option as key=json, e.g. -o trend_slope=0.002")
@click.pass_obj
def gen(ctx: Context, kind, length, noise_std, csv_out, options):
    """Generate a synthetic dataset into the store."""
    overrides = {"total_length": length, "noise_std": noise_std, "seed": ctx.seed}
    for item in options:
        if "=" not in item:
            _fail_validation(f"bad --option {item!r}, expected key=json")
        key, raw = item.split("=", 1)
        try:
            overrides[key] = json.loads(raw)
        except json.JSONDecodeError:
            overrides[key] = raw
    try:
        dataset_id = ctx.workbench.generate_dataset(kind, overrides)
    except ValidationError as exc:
        _fail_validation(str(exc))
    if csv_out:
        from ..core import save_series_csv
        from ..synth import save_annotations

        ts, truth, _meta = ctx.workbench.store.get_dataset(dataset_id)
        out = Path(csv_out)
        save_series_csv(ts, out)
        if truth is not None:
            save_annotations(truth, out.with_suffix(".annotations.json"))
    click.echo(dataset_id)


@main.command()
@click.option("--dataset", "dataset_id", required=True)
@click.option("--preset", default="small", show_default=True)
@click.option("--epochs", default=20, show_default=True)
@click.option("--train-percent", default=0.15, show_default=True)
@click.option("--valid-percent", default=0.3, show_default=True)
@click.option("--mask-percent", default=0.25, show_default=True)
@click.option("--mix/--fixed", "mix_windows", default=True, show_default=True,
              help="Temporal-split mixed-length batches vs per-length random windows.")
@click.option("--n-windows", default=1, show_default=True,
              help="Dominant window lengths added on top of the base window.")
@click.option("--window-lengths", default=None, help="Comma list overriding --n-windows.")
@click.option("--learning-rate", default=1e-3, show_default=True)
@click.option("--batch-size", default=32, show_default=True)
@click.pass_obj
def train(ctx: Context, dataset_id, preset, epochs, train_percent, valid_percent, mask_percent,
          mix_windows, n_windows, window_lengths, learning_rate, batch_size):
    """Fine-tune an encoder on a stored dataset."""
    params = {
        "dataset_id": dataset_id,
        "preset": preset,
        "epochs": epochs,
        "training_percent": train_percent,
        "valid_percent": valid_percent,
        "mask_percent": mask_percent,
        "mix_windows": mix_windows,
        "n_windows": n_windows,
        "learning_rate": learning_rate,
        "batch_size": batch_size,
        "seed": ctx.seed,
    }
    if window_lengths:
        params["window_lengths"] = [int(w) for w in window_lengths.split(",")]
    run_id = _run_job(ctx.workbench, "finetune", params)
    record = ctx.workbench.manifest(run_id)["record"]
    click.echo(run_id)
    click.echo(
        f"loss {record['loss_first']:.6g} -> {record['loss_final']:.6g} "
        f"({record['improvement_percent']:.2f}% improvement, best epoch {record['best_epoch']})"
    )


@main.command()
@click.option("--dataset", "dataset_id", required=True)
@click.option("--run", "model_run", default=None, help="Trained run to embed with (else zero-shot).")
@click.option("--preset", default="small", show_default=True, help="Preset for zero-shot embedding.")
@click.option("--window", default=54, show_default=True)
@click.option("--stride", default=2, show_default=True)
@click.option("--bucket", default=1, show_default=True, help="Mean-downsample bucket before windowing.")
@click.pass_obj
def embed(ctx: Context, dataset_id, model_run, preset, window, stride, bucket):
    """Extract sliding-window embeddings (zero-shot or from a trained run)."""
    params = {
        "dataset_id": dataset_id,
        "model_run": model_run,
        "preset": preset,
        "model_seed": ctx.seed,
        "window": window,
        "stride": stride,
        "bucket": bucket,
    }
    run_id = _run_job(ctx.workbench, "embed", params)
    record = ctx.workbench.manifest(run_id)["record"]
    click.echo(run_id)
    click.echo(f"{record['n_windows']} windows x {record['dim']} dims")


@main.command()
@click.option("--run", "embed_run", required=True, help="Embedding run to project.")
@click.option("--method", default="pca_then_tsne", show_default=True,
              type=click.Choice(["pca", "tsne", "pca_then_tsne"]))
@click.option("--perplexity", default=30.0, show_default=True)
@click.option("--iterations", default=1000, show_default=True)
@click.option("--pca-dims", default=50, show_default=True)
@click.pass_obj
def project(ctx: Context, embed_run, method, perplexity, iterations, pca_dims):
    """Project stored embeddings to 2D."""
    params = {
        "embed_run": embed_run,
        "method": method,
        "perplexity": perplexity,
        "iterations": iterations,
        "pca_dims": pca_dims,
        "seed": ctx.seed,
    }
    run_id = _run_job(ctx.workbench, "project", params)
    click.echo(run_id)


@main.command()
@click.option("--dataset", "dataset_id", required=True)
@click.option("--preset", default="small", show_default=True)
@click.option("--epochs", default=20, show_default=True)
@click.option("--dataset-percents", default="0.15,0.2,0.3", show_default=True)
@click.option("--mask-percents", default="0.25,0.5,0.75", show_default=True)
@click.option("--n-windows-options", default="1,5", show_default=True)
@click.option("--valid-percent", default=0.3, show_default=True)
@click.option("--learning-rate", default=1e-3, show_default=True)
@click.pass_obj
def sweep(ctx: Context, dataset_id, preset, epochs, dataset_percents, mask_percents,
          n_windows_options, valid_percent, learning_rate):
    """Run the fine-tuning parameter grid and store the analysis report."""
    params = {
        "dataset_id": dataset_id,
        "preset": preset,
        "epochs": epochs,
        "dataset_percents": [float(x) for x in dataset_percents.split(",")],
        "mask_percents": [float(x) for x in mask_percents.split(",")],
        "n_windows_options": [int(x) for x in n_windows_options.split(",")],
        "valid_percent": valid_percent,
        "learning_rate": learning_rate,
        "master_seed": ctx.seed,
    }
    run_id = _run_job(ctx.workbench, "sweep", params)
    report = ctx.workbench.sweep_report(run_id)
    click.echo(run_id)
    click.echo(
        f"{report['n_cells']} cells, {report['n_failed']} failed, "
        f"best improvement {report['best_improvement']:.2f}%"
    )


@main.command()
@click.option("--sweep", "sweep_run", required=True, help="Sweep run to summarize.")
@click.pass_obj
def report(ctx: Context, sweep_run):
    """Print the stored sweep analysis."""
    try:
        doc = ctx.workbench.sweep_report(sweep_run)
    except (NotFound, ValidationError) as exc:
        _fail_validation(str(exc))
    click.echo(f"cells: {doc['n_cells']}  failed: {doc['n_failed']}")
    click.echo(f"epoch budget: {doc['epoch_budget']}")
    if doc.get("correlation"):
        click.echo("\ncorrelation matrix (" + ", ".join(doc["columns"]) + "):")
        for name, row in zip(doc["columns"], doc["correlation"]):
            cells = "  ".join("  nan" if v is None else f"{v:+.2f}" for v in row)
            click.echo(f"  {name:>16}  {cells}")
    if doc.get("f_scores"):
        click.echo("\nunivariate F scores:")
        for name, f, pct in zip(doc["f_scores"]["features"], doc["f_scores"]["f_values"],
                                doc["f_scores"]["percents"]):
            f_text = "inf" if f is None else f"{f:.3f}"
            click.echo(f"  {name:>16}  F={f_text:<10} {pct:.1f}%")
    if doc.get("permutation_importance"):
        click.echo("\npermutation importance:")
        for name, pct in zip(doc["permutation_importance"]["features"],
                             doc["permutation_importance"]["percents"]):
            click.echo(f"  {name:>16}  {pct:.1f}%")


@main.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8800, show_default=True)
@click.option("--workers", default=2, show_default=True, help="Job worker threads.")
@click.option("--ui-dir", default=None, help="Directory with the built frontend to serve at /ui.")
@click.pass_obj
def serve(ctx: Context, host, port, workers, ui_dir):
    """Serve the HTTP API (and the UI, if built)."""
    import uvicorn

    from .service import create_app

    workbench = Workbench(ctx.store_dir, workers=workers)
    app = create_app(workbench, ui_dir=ui_dir)
    uvicorn.run(app, host=host, port=port)


if __name__ == "__main__":
    main()

"""segbench command line: dataset generation, benchmark runs, eval, serving."""

from __future__ import annotations

import csv
import json
import sys
from pathlib import Path

import click

from .errors import ConfigError, SegbenchError
from .harness import (
    DEFAULT_RUN_CONFIG,
    DEFAULT_SYNTHETIC,
    export_reports,
    generate_synthetic_dataset,
    run_matrix,
)
from .metrics import alpha_beta, iou
from .raster import load_mask


@click.group()
def main():
    """Interactive image-segmentation workbench."""


@main.command()
@click.option("--spec", "spec_path", type=click.Path(exists=True), default=None,
              help="Synthetic dataset spec JSON (defaults to the bundled disk set).")
@click.option("--out", "out_dir", type=click.Path(), required=True)
def gen(spec_path, out_dir):
    """Generate a synthetic dataset with ground-truth masks."""
    spec = json.loads(Path(spec_path).read_text()) if spec_path else DEFAULT_SYNTHETIC
    manifest = generate_synthetic_dataset(spec, out_dir)
    click.echo(f"wrote {len(manifest['images'])} image/gt pairs to {out_dir}")


@main.command()
@click.option("--config", "config_path", type=click.Path(exists=True), default=None,
              help="Run config JSON (defaults to the bundled three-algorithm experiment).")
@click.option("--out", "out_dir", type=click.Path(), default="results")
def run(config_path, out_dir):
    """Run the algorithm x protocol x image matrix and export reports."""
    try:
        cfg = json.loads(Path(config_path).read_text()) if config_path else dict(DEFAULT_RUN_CONFIG)
        cfg["output_dir"] = out_dir
        records, summary = run_matrix(cfg)
        export_reports(records, summary, out_dir)
    except (ConfigError, json.JSONDecodeError, OSError) as e:
        click.echo(f"config error: {e}", err=True)
        sys.exit(1)
    for row in summary.rows:
        click.echo(f"{row['algorithm']:>12}  n={row['n_images']:<3} "
                   f"iou_improvement={row['iou_improvement']:+.4f} "
                   f"initial={row['initial_iou_mean']:.4f} refined={row['refined_iou_mean']:.4f}")
    if summary.failures:
        click.echo(f"{len(summary.failures)} cell(s) failed; see summary.json", err=True)
        sys.exit(2)


@main.command("eval")
@click.option("--gt", "gt_dir", type=click.Path(exists=True), required=True)
@click.option("--pred", "pred_dir", type=click.Path(exists=True), required=True)
@click.option("--out", "out_path", type=click.Path(), required=True)
def eval_cmd(gt_dir, pred_dir, out_path):
    """IoU / alpha / beta over mask pairs matched by filename."""
    gt_dir, pred_dir = Path(gt_dir), Path(pred_dir)
    names = sorted(p.name for p in gt_dir.glob("*.png"))
    if not names:
        click.echo("no PNG masks in gt directory", err=True)
        sys.exit(1)
    rows = []
    for name in names:
        pred_path = pred_dir / name
        if not pred_path.exists():
            click.echo(f"missing prediction for {name}", err=True)
            sys.exit(1)
        gt = load_mask(gt_dir / name)
        pred = load_mask(pred_path, expect_shape=gt.shape)
        score = iou(gt, pred)
        try:
            a, b = alpha_beta(gt, pred)
        except SegbenchError:
            a = b = float("nan")
        rows.append((name, score, a, b))
    with open(out_path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["image", "iou", "alpha", "beta"])
        for name, score, a, b in rows:
            w.writerow([name, f"{score:.6f}", f"{a:.6f}", f"{b:.6f}"])
    click.echo(f"wrote {len(rows)} rows to {out_path}")


@main.command()
@click.option("--port", type=int, default=8000)
@click.option("--host", default="127.0.0.1")
@click.option("--data", "data_dir", type=click.Path(), default=None,
              help="Static directory to serve (the annotator UI build).")
@click.option("--persist", "persist_dir", type=click.Path(), default=None,
              help="Snapshot sessions to this directory after every mutation.")
@click.option("--cors-origin", default=None)
def serve(port, host, data_dir, persist_dir, cors_origin):
    """Start the interactive session service."""
    import uvicorn

    from .service import create_app

    app = create_app(persist_dir=persist_dir, cors_origin=cors_origin, static_dir=data_dir)
    uvicorn.run(app, host=host, port=port)


if __name__ == "__main__":
    main()

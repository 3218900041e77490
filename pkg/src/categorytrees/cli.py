from __future__ import annotations

import functools
from pathlib import Path
from typing import Any, Callable

import click

from .config import OUTPUT_FORMATS, RunConfig, load_run_config
from .errors import CategoryTreesError
from .metrics import render_variance_table
from .pipeline import UNCLASSIFIED, CategoryTreesPipeline
from .utils import configure_logging, dump_json

_OVERRIDES = (
    click.option("--data", "path", type=click.Path(path_type=Path), help="Dataset CSV (overrides dataset.path)."),
    click.option("--output-dir", type=click.Path(path_type=Path), help="Directory for output files."),
    click.option("--target", type=float, help="Classifier target value (> 0)."),
    click.option("--depth-cap", type=int, help="Maximum tree depth (1-64)."),
    click.option("--min-branch-size", type=int, help="Smallest row subset that may branch."),
    click.option("--max-iters", type=int, help="Recursive reclustering iterations (0-100)."),
    click.option("--min-changes", type=int, help="Stop reclustering when fewer rows move."),
    click.option("--feedback-passes", type=int, help="Rebuild trees from the clusters this many times."),
    click.option("--columns", help="Comma-separated report columns."),
    click.option("--weighted/--unweighted", default=None, help="Weight group variances by size."),
    click.option("--sample-variance/--population-variance", default=None, help="Variance divisor N-1 or N."),
    click.option("--format", "format", type=click.Choice(OUTPUT_FORMATS), help="Output format."),
    click.option("--cluster-label", help="Heading word used in cluster listings."),
    click.option("--seed", type=int, help="Shuffle seed; 0 keeps file order."),
    click.option("--holdout", type=float, help="Fraction of rows held out by bench."),
    click.option("--config", "config_path", required=True, type=click.Path(path_type=Path),
                 help="Run configuration (YAML)."),
)

_PASSTHROUGH = {"input_path", "forest_path"}


def run_options(func: Callable[..., Any]) -> Callable[..., Any]:
    """Attach --config and the override flags, and hand the command a RunConfig."""

    @functools.wraps(func)
    def wrapper(config_path: Path, columns: str | None, **kwargs: Any) -> Any:
        passthrough = {k: kwargs.pop(k) for k in list(kwargs) if k in _PASSTHROUGH}
        try:
            config = load_run_config(config_path).with_overrides(
                columns=tuple(c.strip() for c in columns.split(",") if c.strip()) if columns else None,
                **kwargs,
            )
            return func(config, **passthrough)
        except CategoryTreesError as exc:
            raise click.ClickException(str(exc)) from exc

    for option in reversed(_OVERRIDES):
        wrapper = option(wrapper)
    return wrapper


def _emit(text: str) -> None:
    click.echo(text, nl=not text.endswith("\n"))


def _lines(data: dict[str, Any], prefix: str = "") -> list[str]:
    out = []
    for key, value in data.items():
        if isinstance(value, dict):
            out.extend(_lines(value, f"{prefix}{key}."))
        else:
            out.append(f"{prefix}{key}: {value}")
    return out


@click.group()
@click.option("-v", "--verbose", is_flag=True, help="Log progress to stderr.")
def cli(verbose: bool) -> None:
    """Category Trees: exemplar clustering, secondary clusters and variance reports."""
    configure_logging(verbose)


@cli.command()
@run_options
def train(config: RunConfig) -> None:
    """Build the forest and write forest.json and summary.json."""
    _, summary = CategoryTreesPipeline(config).train()
    if config.report.format == "json":
        _emit(dump_json(summary))
    else:
        _emit("\n".join(_lines(summary)))


@cli.command()
@click.option("--forest", "forest_path", type=click.Path(path_type=Path, exists=True),
              help="Use a trained forest instead of training one.")
@run_options
def recluster(config: RunConfig, forest_path: Path | None = None) -> None:
    """Secondary clusters, recursive reclustering and the variance table."""
    pipeline = CategoryTreesPipeline(config)
    forest = pipeline.load_forest(forest_path) if forest_path else None
    result = pipeline.recluster(forest)
    if config.report.format == "json":
        _emit(dump_json({
            "clusters": result.final.to_dict(),
            "orphaned_clusters": result.orphaned,
            "variance": [r.to_dict() for r in result.reports],
        }))
    else:
        _emit(result.listing + "\n" + render_variance_table(result.reports))


@cli.command()
@click.option("--input", "input_path", required=True, type=click.Path(path_type=Path),
              help="CSV of rows to classify.")
@click.option("--forest", "forest_path", type=click.Path(path_type=Path),
              help="Trained forest (default: <output-dir>/forest.json).")
@run_options
def classify(config: RunConfig, input_path: Path, forest_path: Path | None = None) -> None:
    """Print one predicted category per input row, in input order.

    Rows with a missing feature print as "?" in table format and null in JSON.
    """
    pipeline = CategoryTreesPipeline(config)
    predictions = pipeline.classify(input_path, pipeline.load_forest(forest_path))
    if config.report.format == "json":
        _emit(dump_json([{"row_id": rid, "category": cat} for rid, cat in predictions]))
    elif predictions:
        _emit("\n".join(UNCLASSIFIED if cat is None else cat for _, cat in predictions))


@cli.command()
@run_options
def bench(config: RunConfig) -> None:
    """Train-set and optional hold-out accuracy with forest statistics."""
    summary = CategoryTreesPipeline(config).bench()
    if config.report.format == "json":
        _emit(dump_json(summary))
    else:
        _emit("\n".join(_lines(summary)))


def main() -> None:
    cli()


if __name__ == "__main__":
    main()

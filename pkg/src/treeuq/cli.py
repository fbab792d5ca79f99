"""Command-line interface: run experiments, fetch datasets, sample the benchmark."""

from __future__ import annotations

import sys

import click

from .data import make_benchmark_mixture, sample_mixture, write_csv
from .experiment import (
    ExperimentConfig,
    apply_preset,
    emit_report,
    load_config,
    render_config,
    run_experiment,
)
from .fetch import fetch_dataset


@click.group()
def main() -> None:
    """Compare randomised and Bayesian decision-tree ensembles."""


def _fail(message: str) -> None:
    click.echo(f"error: {message}", err=True)
    sys.exit(1)


@main.command()
@click.option("--config", "config_path", type=click.Path(), default=None, help="INI config file.")
@click.option("--preset", type=click.Choice(["desk", "paper"]), default=None,
              help="Scale run sizes: desk for quick runs, paper for the full protocol.")
@click.option("--seed", type=int, default=None, help="Override the master seed.")
@click.option("--format", "fmt", type=click.Choice(["csv", "markdown"]), default="csv")
@click.option("--out", "out_path", type=click.Path(), default=None, help="Write the report here instead of stdout.")
@click.option("--trace", "trace_path", type=click.Path(), default=None, help="Write an MCMC chain trace file.")
@click.option("--print-config", is_flag=True, help="Echo the fully resolved config and exit.")
def run(config_path, preset, seed, fmt, out_path, trace_path, print_config) -> None:
    """Run the configured experiment and emit a report table."""
    try:
        config = load_config(config_path) if config_path else ExperimentConfig()
        if preset:
            config = apply_preset(config, preset)
        if seed is not None:
            from dataclasses import replace

            config = replace(config, seed=seed)
        if print_config:
            click.echo(render_config(config), nl=False)
            return
        report = run_experiment(config, mcmc_trace_path=trace_path)
        text = emit_report(report, format=fmt)
        if out_path:
            with open(out_path, "w", encoding="utf-8") as fh:
                fh.write(text)
        else:
            click.echo(text, nl=False)
    except Exception as exc:  # noqa: BLE001 - one-line diagnostic contract
        _fail(str(exc))


@main.command()
@click.argument("dataset_id")
@click.option("--url", default=None, help="Override the source URL.")
@click.option("--checksum", default=None, help="sha256 of the raw download.")
@click.option("--dest", type=click.Path(), default=None, help="Converted CSV destination.")
def fetch(dataset_id, url, checksum, dest) -> None:
    """Download DATASET_ID, verify it, and convert it to the CSV schema."""
    try:
        path = fetch_dataset(dataset_id, url=url, checksum=checksum, dest=dest)
    except Exception as exc:  # noqa: BLE001
        _fail(str(exc))
    else:
        click.echo(str(path))


@main.command()
@click.option("--n", "count", type=int, required=True, help="Number of points to draw.")
@click.option("--seed", type=int, default=0)
@click.option("--out", "out_path", type=click.Path(), required=True)
def synth(count, seed, out_path) -> None:
    """Sample the five-Gaussian benchmark mixture to a CSV file."""
    try:
        data = sample_mixture(make_benchmark_mixture(), count, seed)
        write_csv(data, out_path)
    except Exception as exc:  # noqa: BLE001
        _fail(str(exc))
    else:
        click.echo(f"wrote {count} points to {out_path}")


if __name__ == "__main__":
    main()

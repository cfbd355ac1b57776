"""Command line interface.

Subcommands: ``run`` (batch experiment from a config file), ``metrics``
(recompute reports from a trajectory archive), ``sample-fidelity``
(simulator-vs-dataset distribution metrics), ``bootstrap`` (interval
from a values file), and ``serve`` (the live session service).
"""

from __future__ import annotations

import json
import logging
from pathlib import Path

import click

from .data import load_dataset_dir
from .harness import (
    ExperimentConfig,
    report_from_trajectories,
    run_experiment,
    sample_fidelity,
    write_report,
    _write_csv,
)
from .metrics import bayesian_bootstrap
from .surrogate import SurrogateConfig, build_surrogate


def _surrogate_config(path: str | None) -> SurrogateConfig | None:
    if path is None:
        return None
    return SurrogateConfig.from_mapping(json.loads(Path(path).read_text(encoding="utf-8")))


@click.group()
@click.option("--verbose", is_flag=True, help="Enable debug logging.")
def main(verbose: bool) -> None:
    logging.basicConfig(level=logging.DEBUG if verbose else logging.INFO)


@main.command()
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
@click.option("--seed", "seeds", multiple=True, type=int, help="Override config seeds.")
@click.option("--method", "methods", multiple=True, help="Override config methods.")
@click.option("--gamma", "gammas", multiple=True, type=float, help="Override config gammas.")
@click.option("--out", type=click.Path(), help="Override the output directory.")
@click.option("--surrogate", "surrogate_path", type=click.Path(exists=True))
def run(config_path, seeds, methods, gammas, out, surrogate_path) -> None:
    """Run a batch experiment described by a JSON config file."""
    config = ExperimentConfig.from_json(config_path)
    if seeds:
        config.seeds = list(seeds)
    if methods:
        config.methods = list(methods)
    if gammas:
        config.gammas = list(gammas)
    if out:
        config.out = out
    surrogate = None
    override = _surrogate_config(surrogate_path)
    if override is not None:
        surrogate = build_surrogate(override, Path(surrogate_path).parent)
    report = run_experiment(config, surrogate=surrogate)
    click.echo(f"wrote {config.out}/report.csv and report.txt")
    for entry in report.aggregates:
        gamma = "" if entry["gamma"] is None else f" gamma={entry['gamma']:g}"
        click.echo(
            f"{entry['method']}{gamma}: accuracy "
            f"{entry['accuracy_mean']:.4f} +/- {entry['accuracy_std']:.4f}"
        )


@main.command()
@click.option("--trajectories", required=True, type=click.Path(exists=True))
@click.option("--out", required=True, type=click.Path())
@click.option("--theta", default=0.5, type=float)
def metrics(trajectories, out, theta) -> None:
    """Recompute the metrics report from an emitted trajectory archive."""
    report = report_from_trajectories(trajectories, theta)
    write_report(report, out)
    click.echo(f"wrote {out}/report.csv and report.txt")


@main.command("sample-fidelity")
@click.option("--dataset", required=True, type=click.Path(exists=True))
@click.option("--surrogate", "surrogate_path", required=True, type=click.Path(exists=True))
@click.option("--m", default=10, type=int)
@click.option("--seed", default=0, type=int)
@click.option("--out", type=click.Path(), help="CSV output path (default: stdout).")
def sample_fidelity_cmd(dataset, surrogate_path, m, seed, out) -> None:
    """Distribution metrics for a simulator against a dataset."""
    schema, records = load_dataset_dir(dataset)
    config = _surrogate_config(surrogate_path)
    surrogate = build_surrogate(config, Path(surrogate_path).parent)
    rows = sample_fidelity(schema, records, surrogate, m=m, seed=seed)
    if out:
        _write_csv(Path(out), rows)
        click.echo(f"wrote {out}")
    else:
        for row in rows:
            click.echo(
                f"{row['feature']}: wasserstein={row['wasserstein']:.4f} "
                f"energy={row['energy']:.4f} best_mae_pct={row['best_mae_pct']:.2f}"
            )


@main.command()
@click.option("--values", "values_path", required=True, type=click.Path(exists=True))
@click.option("--draws", default=2000, type=int)
@click.option("--seed", default=0, type=int)
def bootstrap(values_path, draws, seed) -> None:
    """95% interval for the mean of a newline-separated values file."""
    values = [
        float(line)
        for line in Path(values_path).read_text(encoding="utf-8").split()
        if line.strip()
    ]
    mean, std, (low, high) = bayesian_bootstrap(values, draws=draws, rng_seed=seed)
    click.echo(f"mean={mean:.6f} std={std:.6f} ci95=[{low:.6f}, {high:.6f}]")


@main.command()
@click.option("--datasets", "dataset_dir", required=True, type=click.Path(exists=True))
@click.option("--surrogate", "surrogate_path", required=True, type=click.Path(exists=True))
@click.option("--host", default="127.0.0.1")
@click.option("--port", default=8694, type=int)
@click.option("--store", default="sessions.db", type=click.Path())
@click.option("--m", default=10, type=int)
@click.option("--token", envvar="SERVICE_BEARER_TOKEN", default=None)
@click.option("--ui", "ui_dir", type=click.Path(exists=True), default=None)
def serve(dataset_dir, surrogate_path, host, port, store, m, token, ui_dir) -> None:
    """Serve the live clinician-in-the-loop session API."""
    import uvicorn

    from .service import ServiceConfig, create_app

    config = ServiceConfig(
        dataset_dir=dataset_dir,
        surrogate=_surrogate_config(surrogate_path),
        surrogate_base_dir=str(Path(surrogate_path).parent),
        store_path=store,
        m=m,
        bearer_token=token,
        ui_dir=ui_dir,
    )
    uvicorn.run(create_app(config), host=host, port=port, log_level="info")


if __name__ == "__main__":
    main()

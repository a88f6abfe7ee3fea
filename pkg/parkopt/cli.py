import functools
import json
import os

import click
import numpy as np
import pandas as pd

from parkopt.app import ParkOpt
from parkopt.conf import settings
from parkopt.errors import ParkOptError, SchemaError
from parkopt.experiment import (
    SWEEPABLE,
    Experiment,
    Report,
    emit_report,
    run_experiment,
    run_sweep,
    verify_oracle,
)
from parkopt.incentive import fit_shift_models
from parkopt.scheduler import ABLATIONS
from parkopt.scheduler.states import mode_map


def _rho(value):
    if value is None or value == "auto":
        return value
    try:
        return float(value)
    except ValueError:
        raise click.BadParameter(f"{value!r} is neither 'auto' nor a number")


def handle_errors(f):
    """
    Turns parkopt errors into a click error carrying the error code.
    """

    @functools.wraps(f)
    def wrapper(*args, **kwargs):
        try:
            return f(*args, **kwargs)
        except ParkOptError as e:
            raise click.ClickException(str(e))

    return wrapper


def experiment_options(f):
    options = [
        click.option("--name", default="run", show_default=True, help="Experiment name, used in file names."),
        click.option("--scenario", default="sample", show_default=True, help="Scenario CSV, 'sample' or 'iid:<slots>'."),
        click.option("--config", default="sample", show_default=True, help="Park YAML file or 'sample'."),
        click.option("--mode", type=click.Choice(sorted(mode_map)), default=None, help="Mini-slot iteration mode."),
        click.option("--ablation", type=click.Choice(ABLATIONS), default="full", show_default=True),
        click.option("--rho", default=None, help="Slow stepsize, 'auto' or a number."),
        click.option("--sigma", type=float, default=None, help="Fast stepsize."),
        click.option("--tol", "tolerance", type=float, default=None, help="Mini-slot stopping tolerance."),
        click.option("--seed", type=int, default=None, help="Seed for generated scenarios."),
        click.option("--out-dir", default="out", show_default=True, type=click.Path(file_okay=False)),
        click.option("--format", "fmt", type=click.Choice(["csv", "json"]), default=None),
    ]
    for option in reversed(options):
        f = option(f)
    return f


def _experiment(name, scenario, config, mode, ablation, rho, sigma, tolerance, seed, sweep=None):
    return Experiment(
        name=name,
        scenario=scenario,
        config=config,
        mode=mode or settings.PARKOPT_MODE,
        ablation=ablation,
        rho=_rho(rho),
        sigma=sigma,
        tolerance=tolerance,
        seed=settings.PARKOPT_SEED if seed is None else seed,
        sweep=sweep,
    )


def _finish(reports, out_dir, fmt):
    files = emit_report(reports, out_dir, fmt)
    for report in reports:
        click.echo(
            f"{report.name}: total cost {report.total_cost:.2f}, "
            f"median iterations {report.summary()['median_iterations']:g}, "
            f"violations {report.violations}"
        )
    click.echo(f"wrote {len(files)} files to {out_dir}")
    if any(r.violations for r in reports):
        click.get_current_context().exit(1)


@click.group()
@click.option("--settings", "settings_file", type=click.Path(exists=True, dir_okay=False), default=None, help="YAML file overriding PARKOPT_* settings.")
def cli(settings_file):
    """
    Two-timescale energy scheduling for multi-energy industrial parks.
    """
    ParkOpt.init_app(settings, settings_file=settings_file)


@cli.command()
@experiment_options
@handle_errors
def run(name, scenario, config, mode, ablation, rho, sigma, tolerance, seed, out_dir, fmt):
    """
    Runs one experiment and writes its report.
    """
    e = _experiment(name, scenario, config, mode, ablation, rho, sigma, tolerance, seed)
    _finish([run_experiment(e)], out_dir, fmt)


@cli.command()
@experiment_options
@click.option("--param", type=click.Choice(SWEEPABLE), required=True, help="Parameter to sweep.")
@click.option("--values", "raw_values", required=True, help="Comma separated values.")
@click.option("--threads", type=int, default=None, help="Experiments run at the same time.")
@handle_errors
def sweep(name, scenario, config, mode, ablation, rho, sigma, tolerance, seed, out_dir, fmt, param, raw_values, threads):
    """
    Runs one experiment per value of a parameter.
    """
    values = [v.strip() for v in raw_values.split(",") if v.strip()]
    if param in ("price_ratio", "renewable_scale", "sigma"):
        try:
            values = [float(v) for v in values]
        except ValueError:
            raise click.BadParameter(f"{param} values must be numbers")
    elif param == "rho":
        values = [_rho(v) for v in values]
    e = _experiment(
        name, scenario, config, mode, ablation, rho, sigma, tolerance, seed,
        sweep=(param, tuple(values)),
    )
    _finish(run_sweep(e, threads), out_dir, fmt)


@cli.command()
@click.option("--count", type=int, default=200, show_default=True, help="Random instances to check.")
@click.option("--seed", type=int, default=None)
@click.option("--gap", type=float, default=1e-3, show_default=True, help="Largest relative objective gap accepted.")
@handle_errors
def verify(count, seed, gap):
    """
    Checks the scheduler against the centralized oracle on random
    small slots.
    """
    seed = settings.PARKOPT_SEED if seed is None else seed
    outcome = verify_oracle(count, seed=seed, tolerance=gap)
    click.echo(
        json.dumps(
            {
                "instances": outcome.instances,
                "mismatches": outcome.mismatches,
                "worst_gap": outcome.worst_gap,
                "certified": outcome.certified,
            },
            sort_keys=True,
        )
    )
    if outcome.mismatches:
        click.get_current_context().exit(1)


@cli.command()
@click.option("--matrix", "matrices", multiple=True, required=True, type=click.Path(exists=True, dir_okay=False), help="Shift matrix CSV without header; repeat once per user.")
@click.option("--series", required=True, type=click.Path(exists=True, dir_okay=False), help="CSV with a price column p and load columns X or X_1..X_I.")
@click.option("--eta", type=float, default=None)
@click.option("--window", type=int, default=None)
@handle_errors
def estimate(matrices, series, eta, window):
    """
    Fits shifting parameters from observed shift matrices.
    """
    frame = pd.read_csv(series)
    if "p" not in frame.columns:
        raise SchemaError("missing column p", column="p")
    prices = frame["p"].to_numpy(dtype=float)
    values = [pd.read_csv(path, header=None).to_numpy(dtype=float) for path in matrices]
    if len(values) == 1:
        if "X" in frame.columns:
            loads = frame["X"].to_numpy(dtype=float)
        else:
            loads = frame.filter(regex=r"^X_\d+$").sum(axis=1).to_numpy(dtype=float)
        a = values[0]
    else:
        columns = [f"X_{i}" for i in range(1, len(values) + 1)]
        missing = [c for c in columns if c not in frame.columns]
        if missing:
            raise SchemaError(f"missing column {missing[0]}", column=missing[0])
        loads = frame[columns].to_numpy(dtype=float).T
        a = np.stack(values)
    model = fit_shift_models(
        a,
        prices,
        loads,
        ridge=settings.PARKOPT_LSQ_RIDGE,
        eta=settings.PARKOPT_SHIFT_CAP if eta is None else eta,
        window=settings.PARKOPT_SHIFT_WINDOW if window is None else window,
    )
    click.echo(
        json.dumps(
            {
                "alpha": [float(v) for v in model.alpha],
                "gamma": [float(v) for v in model.gamma],
                "beta": None if model.beta is None else [float(v) for v in model.beta],
                "eta": model.eta,
                "window": model.window,
            },
            sort_keys=True,
        )
    )


@cli.command()
@click.argument("trajectories", nargs=-1, type=click.Path(exists=True, dir_okay=False))
@click.option("--out-dir", default="out", show_default=True, type=click.Path(file_okay=False))
@click.option("--format", "fmt", type=click.Choice(["csv", "json"]), default=None)
@handle_errors
def report(trajectories, out_dir, fmt):
    """
    Rebuilds cost tables and iteration CDFs from trajectory files.
    """
    reports = []
    for path in trajectories:
        frame = pd.read_csv(path)
        for column in ("t", "cost", "iterations"):
            if column not in frame.columns:
                raise SchemaError(f"{path}: missing column {column}", column=column)
        name = os.path.splitext(os.path.basename(path))[0]
        if name.endswith("_trajectory"):
            name = name[: -len("_trajectory")]
        costs = frame["cost"].to_numpy(dtype=float)
        iterations = frame["iterations"].to_numpy(dtype=int)
        reports.append(
            Report(
                name=name,
                mode="",
                ablation="",
                rho=0.0,
                total_cost=float(costs.sum()),
                costs=costs,
                iterations=iterations,
                converged=np.ones(len(costs), dtype=bool),
                bound_violations=0,
                bound_margin=0.0,
                trajectory=frame,
            )
        )
    files = emit_report(reports, out_dir, fmt)
    click.echo(f"wrote {len(files)} files to {out_dir}")

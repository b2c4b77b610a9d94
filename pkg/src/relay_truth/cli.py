"""Command-line interface: relay-truth <subcommand> --scenario FILE [...].

Seed and sample count can also come from the RELAY_TRUTH_SEED and
RELAY_TRUTH_SAMPLES environment variables; explicit flags win.
"""

from __future__ import annotations

import dataclasses
import sys

import click

from .channels import ChannelError
from .mechanisms import MechanismError
from .runner import SUBCOMMANDS, UsageError, run, write_outputs
from .scenario import GridSpec, ScenarioError, load_scenario
from .selection import SelectionError


def _parse_grid(text: str) -> GridSpec:
    try:
        lo, hi, step = (float(x) for x in text.split(":"))
    except ValueError:
        raise click.BadParameter("grid must be MIN:MAX:STEP") from None
    return GridSpec(start=lo, stop=hi, step=step)


def _common_options(f):
    opts = [
        click.option("--scenario", "scenario_path", required=True,
                     type=click.Path(exists=True, dir_okay=False),
                     help="Scenario YAML file."),
        click.option("--seed", type=int, default=None,
                     envvar="RELAY_TRUTH_SEED", show_envvar=True,
                     help="Override the scenario's Monte-Carlo seed."),
        click.option("--samples", type=int, default=None,
                     envvar="RELAY_TRUTH_SAMPLES", show_envvar=True,
                     help="Override the scenario's Monte-Carlo sample count."),
        click.option("--workers", type=int, default=None,
                     help="Worker threads for the sampling engine."),
        click.option("--out", "out_dir", type=click.Path(file_okay=False),
                     default=".", help="Output directory."),
        click.option("--grid", "grid_text", default=None,
                     help="Report grid as MIN:MAX:STEP."),
        click.option("--plot/--no-plot", default=False,
                     help="Also render a PNG figure next to the CSV."),
    ]
    for opt in reversed(opts):
        f = opt(f)
    return f


@click.group()
def main():
    """Truthful VCG/AGV relay-selection simulator."""


def _execute(subcommand, scenario_path, seed, samples, workers, out_dir,
             grid_text, plot):
    try:
        scenario = load_scenario(scenario_path)
        mc = scenario.mc
        overrides = {}
        if seed is not None:
            overrides["seed"] = seed
        if samples is not None:
            overrides["samples"] = samples
        if workers is not None:
            overrides["workers"] = workers
        if overrides:
            mc = dataclasses.replace(mc, **overrides)
        if grid_text is not None:
            scenario = dataclasses.replace(scenario, mc=mc, grid=_parse_grid(grid_text))
        else:
            scenario = dataclasses.replace(scenario, mc=mc)
        report = run(scenario, subcommand)
        paths = write_outputs(report, out_dir, scenario.name, plot=plot)
    except (ScenarioError, SelectionError, MechanismError, ChannelError,
            UsageError) as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(2)

    for verdict in report.verdicts:
        label = verdict.mechanism or "selection"
        status = "PASS" if verdict.holds else "FAIL"
        click.echo(f"{status} {label}/{verdict.property} (margin={verdict.margin:.3g})")
    for kind, path in paths.items():
        click.echo(f"wrote {kind}: {path}")
    if not report.ok:
        sys.exit(1)


def _register(subcommand: str):
    @main.command(name=subcommand)
    @_common_options
    def _cmd(scenario_path, seed, samples, workers, out_dir, grid_text, plot):
        _execute(subcommand, scenario_path, seed, samples, workers, out_dir,
                 grid_text, plot)

    _cmd.__doc__ = f"Run the {subcommand} experiment for a scenario."


for _sub in SUBCOMMANDS:
    _register(_sub)


if __name__ == "__main__":
    main()

"""Command-line entry point.

    instascope <experiment> [--config FILE] [--profile desk|paper]
               [--fids 1,2,5] [--dim N] [--out DIR] [--workers N] [--seed N]

Exit codes: 0 success, 1 configuration error, 2 partial failure (the
metadata sidecar lists the failed units).
"""

import sys

import click

from .config import ConfigError, EXPERIMENTS, build_config
from .experiments import EXPERIMENT_RUNNERS


def _parse_fids(_ctx, _param, value):
    if value is None:
        return None
    try:
        return tuple(int(v) for v in value.replace(" ", "").split(",") if v)
    except ValueError as exc:
        raise click.BadParameter(f"fids must be comma-separated integers: {exc}")


def _experiment_command(name):
    @click.command(name=name, help=f"Run the {name} experiment.")
    @click.option("--config", "config_file", type=click.Path(), default=None,
                  help="Flat key = value configuration file.")
    @click.option("--profile", type=click.Choice(["desk", "paper"]), default=None,
                  help="Scale preset; file and flags override it.")
    @click.option("--fids", callback=_parse_fids, default=None,
                  help="Comma-separated function ids (subset of 1..24).")
    @click.option("--dim", type=int, default=None, help="Problem dimension.")
    @click.option("--iids", type=int, default=None, help="Number of instances.")
    @click.option("--out", "output_dir", type=click.Path(), default=None,
                  help="Output directory (resumable).")
    @click.option("--workers", type=int, default=None, help="Worker processes.")
    @click.option("--seed", "base_seed", type=int, default=None,
                  help="Base seed of the experiment.")
    def command(config_file, profile, fids, dim, iids, output_dir, workers,
                base_seed):
        try:
            config = build_config(
                name, profile=profile, config_file=config_file, fids=fids,
                dim=dim, iids=iids, output_dir=output_dir, workers=workers,
                base_seed=base_seed,
            )
            result = EXPERIMENT_RUNNERS[name](config)
        except ConfigError as exc:
            click.echo(f"configuration error: {exc}", err=True)
            sys.exit(1)
        for path in result.outputs:
            click.echo(path)
        if result.failures:
            click.echo(f"{len(result.failures)} unit(s) failed; see the metadata "
                       "sidecar", err=True)
        sys.exit(result.exit_code)

    return command


@click.group()
@click.version_option()
def main():
    """Benchmark-instance analysis experiments."""


for _name in EXPERIMENTS:
    main.add_command(_experiment_command(_name))


if __name__ == "__main__":
    main()

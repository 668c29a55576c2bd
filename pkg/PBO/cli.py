"""
Command Line Interface

Entry point of the ``pbo`` command:

    pbo optimize    --config run.json [--seed S] [--out DIR] [--threads T]
    pbo brute-force --config run.json
    pbo sample      --config run.json
    pbo check       --config run.json

Exit codes: 0 success, 2 configuration error, 3 infeasible constraint,
4 objective failure, 1 anything else (including failed checks).
"""

import logging
import sys
from typing import TYPE_CHECKING, Callable, Optional

import click

from PBO import __version__, get_system_class
from PBO.exceptions import EXIT_SUCCESS, PBOException, exit_code_for

if TYPE_CHECKING:
    from PBO.pbo_system import ProbabilisticBinaryOptimizationSystem

logger = logging.getLogger(__name__)


def _run_command(command: Callable[["ProbabilisticBinaryOptimizationSystem"], int],
                 config_path: str, seed: Optional[int], out: Optional[str], threads: Optional[int]) -> None:
    try:
        with get_system_class()(
            config_path=config_path,
            seed=seed,
            threads=threads,
            out=out
        ) as system:
            code = command(system)
    except PBOException as err:
        code = exit_code_for(err)
        logger.error(f"{type(err).__name__}: {err}")
        click.echo(f"error: {err}", err=True)
    sys.exit(code)


def _common_options(function):
    function = click.option("--threads", type=click.IntRange(min=1), default=None,
                            help="Evaluation threads (overrides PBO_THREADS and the config)")(function)
    function = click.option("--out", type=click.Path(file_okay=False), default=None,
                            help="Output directory")(function)
    function = click.option("--seed", type=click.IntRange(min=0), default=None,
                            help="Seed overriding the configured one")(function)
    function = click.option("--config", "config_path", type=click.Path(dir_okay=False),
                            default="config.json", show_default=True,
                            help="JSON run configuration")(function)
    return function


@click.group()
@click.version_option(version=__version__, prog_name="pbo")
def cli() -> None:
    """Probabilistic binary optimization under budget constraints."""


@cli.command()
@_common_options
def optimize(config_path, seed, out, threads):
    """Run the optimizer and write the trace and result files."""
    def command(system: "ProbabilisticBinaryOptimizationSystem") -> int:
        result = system.optimize()
        click.echo(f"d* value {result.design.value}, best along route {result.best_along_route.value}, "
                   f"{result.iterations} iterations")
        return EXIT_SUCCESS

    _run_command(command, config_path, seed, out, threads)


@cli.command(name="brute-force")
@_common_options
def brute_force(config_path, seed, out, threads):
    """Evaluate every feasible design and write the (index, value) table."""
    def command(system: "ProbabilisticBinaryOptimizationSystem") -> int:
        table = system.brute_force()
        click.echo(f"{len(table)} feasible designs")
        return EXIT_SUCCESS

    _run_command(command, config_path, seed, out, threads)


@cli.command()
@_common_options
def sample(config_path, seed, out, threads):
    """Draw designs from the initial policy and verify the constraint."""
    def command(system: "ProbabilisticBinaryOptimizationSystem") -> int:
        batch = system.sample()
        click.echo(f"{batch.size} designs sampled")
        return EXIT_SUCCESS

    _run_command(command, config_path, seed, out, threads)


@cli.command()
@_common_options
def check(config_path, seed, out, threads):
    """Run the derivative and normalization check suite."""
    def command(system: "ProbabilisticBinaryOptimizationSystem") -> int:
        report = system.check()
        click.echo(f"{report.passed} passed, {report.failed} failed")
        return EXIT_SUCCESS if report.failed == 0 else 1

    _run_command(command, config_path, seed, out, threads)


def main() -> None:
    cli()


if __name__ == "__main__":
    main()

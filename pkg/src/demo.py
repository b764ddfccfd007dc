"""Command line for the inpainting demo and the oracle self-test.

Run from project root:
    python -m src.demo inpaint --seed 0 --outdir out
    python -m src.demo selftest

Exit codes: 0 success, 1 a check failed, 2 invalid arguments.
"""

import sys
from pathlib import Path

import click
from pydantic import ValidationError

from src.config import DEFAULT_OUTDIR, DEFAULT_SEED, DEFAULT_VERBOSITY, configure_logging
from src.core import InvalidArgumentError
from src.inpainting import DemoConfig, run_inpainting, write_outputs
from src.selftest import run_selftest


def _report(checks) -> bool:
    ok = True
    for name, passed, detail in checks:
        click.echo(f"{'PASS' if passed else 'FAIL'} {name}: {detail}")
        ok = ok and passed
    return ok


@click.group()
def demo():
    """Proximal splitting demos."""


@demo.command()
@click.option("--rows", type=int, default=64, show_default=True)
@click.option("--cols", type=int, default=64, show_default=True)
@click.option("--p", "p", type=float, default=0.5, show_default=True, help="Pixel keep-probability.")
@click.option("--sigma", type=float, default=20 / 255, show_default=True, help="Noise standard deviation.")
@click.option("--lambda", "lambda_", type=float, default=10.0, show_default=True,
              help="Regularization weight of Problem II.")
@click.option("--maxit", type=int, default=100, show_default=True)
@click.option("--tol", type=float, default=1e-5, show_default=True)
@click.option("--seed", type=int, default=DEFAULT_SEED, show_default=True)
@click.option("--outdir", type=click.Path(file_okay=False, path_type=Path), default=DEFAULT_OUTDIR,
              show_default=True)
@click.option("--verbosity", type=click.IntRange(0, 2), default=DEFAULT_VERBOSITY, show_default=True,
              help="0 silent, 1 summary, 2 per-iteration.")
def inpaint(rows, cols, p, sigma, lambda_, maxit, tol, seed, outdir, verbosity):
    """Degrade a synthetic image and restore it three ways."""
    configure_logging(verbosity)
    try:
        cfg = DemoConfig(rows=rows, cols=cols, p=p, sigma=sigma, lambda_=lambda_, maxit=maxit,
                         tol=tol, seed=seed, outdir=outdir, verbosity=verbosity)
    except ValidationError as e:
        raise click.UsageError(str(e))

    try:
        report = run_inpainting(cfg)
    except InvalidArgumentError as e:
        raise click.UsageError(str(e))
    write_outputs(report, cfg.outdir)

    click.echo(f"Outputs written to {cfg.outdir}")
    if not _report(report.checks()):
        sys.exit(1)


@demo.command()
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--quick", is_flag=True, help="Fewer random trials per suite.")
@click.option("--verbosity", type=click.IntRange(0, 2), default=0, show_default=True)
def selftest(seed, quick, verbosity):
    """Run the operator, projection and solver oracle suites."""
    configure_logging(verbosity)
    results = run_selftest(seed=seed, quick=quick)
    if not _report((r.name, r.passed, r.detail) for r in results):
        sys.exit(1)


if __name__ == "__main__":
    demo()

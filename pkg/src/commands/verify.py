import logging

import click
from rich.markup import escape
from rich.table import Table

from src.commands.common import EXIT_NEGATIVE, EXIT_OK, console
from src.services.verification import SUITES, run_suite
from src.utils.config import DEFAULT_SEED
from src.utils.run_log import log_run

logger = logging.getLogger(__name__)


@click.command("verify")
@click.argument("suite", type=click.Choice([*SUITES, "all"]))
@click.option("--seed", type=int, default=DEFAULT_SEED, show_default=True)
@click.pass_context
def verify_cmd(ctx, suite, seed):
    """Run a numerical acceptance suite and report tolerances and deviations."""
    results = run_suite(suite, seed)

    table = Table(title=f"verify {suite} (seed {seed})")
    for column in ("suite", "check", "result", "tolerance", "deviation", "seconds"):
        table.add_column(column, justify="left" if column in ("suite", "check") else "right")
    for result in results:
        table.add_row(
            result.suite,
            escape(result.name + (f" [{result.detail}]" if result.detail else "")),
            "PASS" if result.passed else "FAIL",
            f"{result.tolerance:.1e}",
            f"{result.deviation:.3e}",
            f"{result.seconds:.1f}",
        )
    console().print(table)

    failed = [r for r in results if not r.passed]
    if failed:
        logger.warning("%d of %d checks failed in suite %s", len(failed), len(results), suite)
    log_run("verify", "suite", {"suite": suite, "seed": seed, "checks": len(results), "failed": len(failed)})
    click.echo(f"{len(results) - len(failed)}/{len(results)} checks passed")
    ctx.exit(EXIT_NEGATIVE if failed else EXIT_OK)

import logging

import click
from rich.table import Table

from src.commands.common import console, echo_json, format_number
from src.services.thermo_core import PhotoisomerInstance
from src.services.yield_bounds import DEFAULT_EMBED_GRID, YieldReport, report
from src.utils.run_log import log_run
from src.utils.validators import ENERGY, validate_instance_params

logger = logging.getLogger(__name__)


def render_report_text(result: YieldReport) -> None:
    table = Table(title=f"Yield bounds (delta={result.delta:g}, W={format_number(result.w)}, q={result.q:g})")
    table.add_column("quantity")
    table.add_column("value", justify="right")
    rows = [
        ("gamma_star", result.gamma_star),
        ("gamma_markov", result.gamma_markov),
        ("gamma_embed", result.gamma_embed),
        ("gamma_th", result.gamma_th),
        ("q_tilde", result.q_tilde),
        ("gamma_star - gamma_markov", result.gap_star_markov),
        ("gamma_markov - gamma_embed", result.gap_markov_embed),
    ]
    for name, value in rows:
        table.add_row(name, "unavailable (finite W)" if value is None else f"{value:.6f}")
    table.add_row("branch", "q >= q_tilde" if result.upper_branch else "q < q_tilde")
    console().print(table)


@click.command("bounds")
@click.option("--delta", type=float, required=True, help="Cis-trans gap, in units of 1/beta.")
@click.option("--w", "w", type=ENERGY, required=True, help="Excited level W, or 'inf'.")
@click.option("--q", type=float, required=True, help="Photoexcitation factor in [0, 1].")
@click.option("--format", "output_format", type=click.Choice(["text", "json"]), default="text", show_default=True)
@click.option("--embed-grid", type=click.IntRange(min=2), default=DEFAULT_EMBED_GRID, show_default=True)
def bounds_cmd(delta, w, q, output_format, embed_grid):
    """Compute gamma*, gamma_M, gamma_E and gamma_th for one instance."""
    error = validate_instance_params(delta, w, q)
    if error:
        logger.warning("Rejected bounds instance delta=%s w=%s q=%s: %s", delta, w, q, error)
        raise click.UsageError(error)

    result = report(PhotoisomerInstance(delta=delta, w=w, q=q), embed_grid=embed_grid)
    log_run("bounds", "instance", {"delta": delta, "w": w, "q": q})

    if output_format == "json":
        echo_json(result.to_dict())
    else:
        render_report_text(result)

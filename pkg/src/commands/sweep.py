import csv
import io
import logging
import math
from concurrent.futures import ThreadPoolExecutor

import click
import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from src.commands.common import OutputError, format_number
from src.services.thermo_core import PhotoisomerInstance
from src.services.yield_bounds import DEFAULT_EMBED_GRID, gamma_embed_optimize, gamma_markov, gamma_star, gamma_th
from src.utils.config import MAX_WORKERS
from src.utils.run_log import log_run
from src.utils.validators import ENERGY, PROBABILITY_LIST

logger = logging.getLogger(__name__)

CSV_HEADER = ["delta", "q", "w", "gamma_star", "gamma_markov", "gamma_embed", "gamma_th"]
BOUND_COLUMNS = ("gamma_star", "gamma_markov", "gamma_embed", "gamma_th")


class SweepSpec(BaseModel):
    model_config = ConfigDict(frozen=True)

    delta_min: float = Field(ge=0.0)
    delta_max: float
    steps: int = Field(ge=2)
    q_list: list[float] = Field(min_length=1)
    w: float
    outputs: tuple[str, ...] = BOUND_COLUMNS
    embed_grid: int = Field(default=DEFAULT_EMBED_GRID, ge=2)

    @model_validator(mode="after")
    def _consistent(self):
        if not math.isfinite(self.delta_max) or self.delta_min > self.delta_max:
            raise ValueError("delta-min must not exceed delta-max")
        if self.w < self.delta_max:
            raise ValueError("w must be at least delta-max")
        if any(not 0.0 <= q <= 1.0 for q in self.q_list):
            raise ValueError("every q must lie in [0, 1]")
        unknown = set(self.outputs) - set(BOUND_COLUMNS)
        if unknown:
            raise ValueError(f"unknown outputs: {', '.join(sorted(unknown))}")
        if "gamma_embed" in self.outputs and not math.isinf(self.w):
            raise ValueError("gamma_embed is only available for w = inf")
        return self

    def deltas(self) -> list[float]:
        return [float(d) for d in np.linspace(self.delta_min, self.delta_max, self.steps)]

    def cells(self) -> list[tuple[float, float]]:
        return [(delta, q) for delta in self.deltas() for q in self.q_list]


def compute_row(spec: SweepSpec, delta: float, q: float) -> list[str]:
    instance = PhotoisomerInstance(delta=delta, w=spec.w, q=q)
    values = {
        "gamma_star": lambda: gamma_star(instance),
        "gamma_markov": lambda: gamma_markov(instance),
        "gamma_embed": lambda: gamma_embed_optimize(delta, q, grid_n=spec.embed_grid),
        "gamma_th": lambda: gamma_th(instance),
    }
    row = [format_number(delta), format_number(q), format_number(spec.w)]
    for column in BOUND_COLUMNS:
        row.append(format_number(values[column]()) if column in spec.outputs else "")
    return row


def run_sweep(spec: SweepSpec, max_workers: int = MAX_WORKERS) -> list[list[str]]:
    """Rows in delta-major, then q-list order, whatever the worker schedule."""
    cells = spec.cells()
    with ThreadPoolExecutor(max_workers=max_workers) as executor:
        return list(executor.map(lambda cell: compute_row(spec, *cell), cells))


def render_csv(rows: list[list[str]]) -> str:
    output = io.StringIO()
    writer = csv.writer(output, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    writer.writerows(rows)
    return output.getvalue()


@click.command("sweep")
@click.option("--delta-min", type=float, required=True)
@click.option("--delta-max", type=float, required=True)
@click.option("--steps", type=int, required=True, help="Number of delta values (at least 2).")
@click.option("--q-list", type=PROBABILITY_LIST, required=True, help="Comma-separated q values.")
@click.option("--w", "w", type=ENERGY, default="inf", show_default=True)
@click.option("--outputs", default=None, help="Comma-separated subset of gamma_star,gamma_markov,gamma_embed,gamma_th.")
@click.option("--embed-grid", type=int, default=DEFAULT_EMBED_GRID, show_default=True)
@click.option("--out", "out_path", type=click.Path(dir_okay=False, allow_dash=True), default="-", show_default=True)
def sweep_cmd(delta_min, delta_max, steps, q_list, w, outputs, embed_grid, out_path):
    """Tabulate yield bounds over a delta grid for several q values (CSV)."""
    if outputs is None:
        selected = tuple(c for c in BOUND_COLUMNS if c != "gamma_embed" or math.isinf(w))
    else:
        selected = tuple(item.strip() for item in outputs.split(",") if item.strip())
    try:
        spec = SweepSpec(
            delta_min=delta_min,
            delta_max=delta_max,
            steps=steps,
            q_list=q_list,
            w=w,
            outputs=selected,
            embed_grid=embed_grid,
        )
    except ValidationError as exc:
        raise click.UsageError("; ".join(error["msg"] for error in exc.errors()))

    rows = run_sweep(spec)
    text = render_csv(rows)
    if out_path == "-":
        click.echo(text, nl=False)
    else:
        try:
            with open(out_path, "w", encoding="utf-8", newline="") as handle:
                handle.write(text)
        except OSError as exc:
            logger.error("Sweep output to %s failed: %s", out_path, exc)
            raise OutputError(f"cannot write {out_path}: {exc.strerror or exc}")
        click.echo(f"Wrote {len(rows)} rows to {out_path}", err=True)

    log_run("sweep", "grid", {"rows": len(rows), "w": w, "outputs": list(spec.outputs), "out": out_path})

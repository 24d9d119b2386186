import logging

import click
from pydantic import ValidationError

from src.commands.common import (
    EXIT_NEGATIVE,
    EXIT_OK,
    EXIT_UNDETERMINED,
    InputError,
    OutputError,
    console,
    echo_json,
)
from src.services.gibbs_maps import EmbeddabilityVerdict, Verdict, embeddability_check, matrix_from_json, validate
from src.utils.formats import read_json
from src.utils.run_log import log_run

logger = logging.getLogger(__name__)

EXIT_CODES = {
    Verdict.EMBEDDABLE: EXIT_OK,
    Verdict.NOT_EMBEDDABLE: EXIT_NEGATIVE,
    Verdict.UNDETERMINED: EXIT_UNDETERMINED,
}


def _format_eigenvalue(value) -> str:
    value = complex(value)
    if value.imag == 0.0:
        return f"{value.real:.9g}"
    return f"{value.real:.9g}{value.imag:+.9g}j"


def verdict_to_json(verdict: EmbeddabilityVerdict) -> dict:
    return {
        "verdict": verdict.verdict.value,
        "clause": verdict.clause,
        "reason": verdict.reason,
        "spectrum": [_format_eigenvalue(v) for v in verdict.spectrum],
    }


@click.command("check-embeddable")
@click.argument("matrix_file", type=click.Path(exists=True, dir_okay=False))
@click.option("--format", "output_format", type=click.Choice(["text", "json"]), default="text", show_default=True)
@click.pass_context
def check_embeddable_cmd(ctx, matrix_file, output_format):
    """Classify a 3x3 Gibbs-stochastic matrix as embeddable or not."""
    try:
        payload = read_json(matrix_file)
    except OSError as exc:
        logger.error("Reading matrix file %s failed: %s", matrix_file, exc)
        raise OutputError(f"cannot read {matrix_file}: {exc.strerror or exc}")
    except ValueError as exc:
        raise InputError(str(exc))

    try:
        entries, system = matrix_from_json(payload)
    except (ValidationError, ValueError) as exc:
        raise InputError(f"{matrix_file}: {exc}")
    if system.size != 3:
        raise InputError(f"{matrix_file}: embeddability is decided for three-level matrices only")
    diagnostics = validate(entries, system)
    if not diagnostics.ok:
        raise InputError(f"{matrix_file}: not Gibbs-stochastic ({'; '.join(diagnostics.failures)})")

    verdict = embeddability_check(entries, system)
    log_run("check_embeddable", "matrix", {"file": matrix_file, "verdict": verdict.verdict.value})

    if output_format == "json":
        echo_json(verdict_to_json(verdict))
    else:
        out = console()
        out.print(f"verdict:  {verdict.verdict.value}")
        out.print(f"clause:   {verdict.clause or '-'}")
        out.print(f"reason:   {verdict.reason}")
        out.print(f"spectrum: {', '.join(_format_eigenvalue(v) for v in verdict.spectrum)}")
    ctx.exit(EXIT_CODES[verdict.verdict])

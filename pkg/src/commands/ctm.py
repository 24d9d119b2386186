import logging

import click
import numpy as np
from pydantic import ValidationError

from src.commands.common import EXIT_NEGATIVE, EXIT_OK, InputError, OutputError, echo_json
from src.services.markov_reach import (
    DEFAULT_LAMBDA_STEP,
    DEFAULT_MAX_STEPS,
    MATCH,
    YIELD,
    ctm_reachable,
    witness_to_json,
)
from src.utils.formats import StateFile, load_state_file, write_json
from src.utils.run_log import log_run

logger = logging.getLogger(__name__)


def _load_state(path: str) -> StateFile:
    try:
        return load_state_file(path)
    except OSError as exc:
        logger.error("Reading state file %s failed: %s", path, exc)
        raise OutputError(f"cannot read {path}: {exc.strerror or exc}")
    except (ValidationError, ValueError) as exc:
        raise InputError(f"{path}: {exc}")


@click.command("check-ctm")
@click.argument("initial", type=click.Path(exists=True, dir_okay=False))
@click.argument("target", type=click.Path(exists=True, dir_okay=False))
@click.option("--yield-level", type=int, default=None, help="Only require the target population on this level.")
@click.option("--max-steps", type=click.IntRange(min=1), default=DEFAULT_MAX_STEPS, show_default=True)
@click.option("--lambda-step", type=click.FloatRange(min=0.0, max=1.0, min_open=True), default=DEFAULT_LAMBDA_STEP, show_default=True)
@click.option("--witness-out", type=click.Path(dir_okay=False), default=None, help="Write the witness JSON here.")
@click.pass_context
def check_ctm_cmd(ctx, initial, target, yield_level, max_steps, lambda_step, witness_out):
    """Search for a sequence of two-level thermalizations taking INITIAL to TARGET."""
    initial_file = _load_state(initial)
    target_file = _load_state(target)
    try:
        system = initial_file.system()
        if target_file.system() != system:
            raise ValueError("initial and target files must use the same energies")
        p0 = initial_file.state()
        goal = target_file.state()
        if yield_level is not None and not 0 <= yield_level < system.size:
            raise ValueError(f"yield level {yield_level} is out of range")
    except ValueError as exc:
        raise InputError(str(exc))

    mode = MATCH if yield_level is None else YIELD
    result = ctm_reachable(p0, goal, system, max_steps=max_steps, lambda_step=lambda_step, mode=mode, level=yield_level)
    log_run(
        "check_ctm",
        "states",
        {"initial": initial, "target": target, "mode": mode, "reachable": result.reachable, "explored": result.explored},
    )

    payload = {
        "reachable": result.reachable,
        "mode": result.mode,
        "witness": witness_to_json(result.witness),
        "achieved_state": result.achieved_state.tolist(),
        "l1_distance": float(np.abs(result.achieved_state.probs - goal.probs).sum()),
        "resolution": {"max_steps": result.max_steps, "lambda_step": result.lambda_step},
    }
    echo_json(payload)

    if not result.reachable:
        logger.info("No witness within %s steps at lambda step %s", max_steps, lambda_step)
        click.echo(f"not found at resolution {result.resolution}", err=True)
        ctx.exit(EXIT_NEGATIVE)

    if witness_out:
        try:
            write_json(witness_out, witness_to_json(result.witness))
        except OSError as exc:
            raise OutputError(f"cannot write {witness_out}: {exc.strerror or exc}")
    ctx.exit(EXIT_OK)

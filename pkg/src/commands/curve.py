import click
from pydantic import ValidationError

from src.commands.common import InputError, OutputError, echo_json
from src.services.thermomaj import build_curve, curve_to_json
from src.utils.formats import load_state_file
from src.utils.run_log import log_run


@click.command("curve")
@click.argument("state_file", type=click.Path(exists=True, dir_okay=False))
def curve_cmd(state_file):
    """Print the thermomajorization curve of a state file as JSON."""
    try:
        parsed = load_state_file(state_file)
        curve = build_curve(parsed.state(), parsed.system())
    except OSError as exc:
        raise OutputError(f"cannot read {state_file}: {exc.strerror or exc}")
    except (ValidationError, ValueError) as exc:
        raise InputError(f"{state_file}: {exc}")

    log_run("curve", "state", {"file": state_file, "elbows": len(curve.xs)})
    echo_json(curve_to_json(curve))

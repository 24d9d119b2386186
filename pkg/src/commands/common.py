from __future__ import annotations

import json
import math
from typing import Any

import click
from rich.console import Console

EXIT_OK = 0
EXIT_NEGATIVE = 1
EXIT_USAGE = 2
EXIT_IO = 3
EXIT_UNDETERMINED = 4


class OutputError(click.ClickException):
    """Reading or writing a file failed."""

    exit_code = EXIT_IO


class InputError(click.ClickException):
    """A file was readable but its content is malformed."""

    exit_code = EXIT_USAGE


def format_number(value: float | None) -> str:
    if value is None:
        return ""
    if math.isinf(value):
        return "inf" if value > 0 else "-inf"
    return f"{value:.15g}"


def echo_json(payload: Any) -> None:
    click.echo(json.dumps(payload, indent=2, default=str))


def console() -> Console:
    # created per call so output follows whatever stream click is using
    return Console(highlight=False, soft_wrap=True)

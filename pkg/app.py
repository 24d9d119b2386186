import logging

import click

from src.commands.bounds import bounds_cmd
from src.commands.ctm import check_ctm_cmd
from src.commands.curve import curve_cmd
from src.commands.embeddability import check_embeddable_cmd
from src.commands.sweep import sweep_cmd
from src.commands.verify import verify_cmd
from src.utils.config import LOG_LEVEL

logging.basicConfig(
    level=LOG_LEVEL,
    format="%(asctime)s | %(levelname)s | %(message)s"
)


@click.group()
@click.version_option("1.0.0", prog_name="photoyield")
def app():
    """Photoisomerization yield bounds under thermal, Markovian and embeddable operations."""


# Commands
app.add_command(bounds_cmd)
app.add_command(sweep_cmd)
app.add_command(check_embeddable_cmd)
app.add_command(check_ctm_cmd)
app.add_command(verify_cmd)
app.add_command(curve_cmd)


if __name__ == "__main__":
    app()

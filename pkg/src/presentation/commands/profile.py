from pathlib import Path

import click

from src.business.models import RegistrationModel
from src.business.services import profile_model
from src.data.repositories import load_run_config
from src.data.repositories.reports import PROFILE_HEADER, format_csv, profile_rows
from src.data.repositories.run_config import run_config_text
from src.presentation.commands.common import echo_config, options_text, parse_dims


@click.command("profile")
@click.option("--config", "config_path", type=click.Path(dir_okay=False, path_type=Path), default=None)
@click.option("--dims", default="32", show_default=True)
@click.option("--repeats", type=click.IntRange(min=1), default=None)
def profile_command(config_path, dims, repeats):
    """Parameter count, GMACs and forward time of the configured network."""
    run_config = load_run_config(config_path)
    volume_dims = parse_dims(dims)
    echo_config(
        run_config_text(run_config) + options_text(dims=",".join(map(str, volume_dims)), repeats=repeats),
        run_config.out,
    )
    model = RegistrationModel(run_config.network)
    profile = profile_model(model, volume_dims, repeats)
    click.echo(format_csv(PROFILE_HEADER, profile_rows(profile)))

from pathlib import Path

import click

from src.business.services import register_pair
from src.data.repositories import read_checkpoint, read_volume, write_volume
from src.data.repositories.run_config import network_config_text
from src.data.schemas import RVFKind
from src.presentation.commands.common import echo_config, options_text

WARPED_FILENAME = "warped.rvf"
FIELD_FILENAME = "field.rvf"


@click.command("register")
@click.option("--checkpoint", type=click.Path(dir_okay=False, path_type=Path), required=True)
@click.option("--moving", type=click.Path(dir_okay=False, path_type=Path), required=True)
@click.option("--fixed", type=click.Path(dir_okay=False, path_type=Path), required=True)
@click.option("--out", type=click.Path(file_okay=False, path_type=Path), required=True)
def register_command(checkpoint, moving, fixed, out):
    """Register MOVING to FIXED with a trained checkpoint; writes the warped volume and field."""
    model = read_checkpoint(checkpoint)
    echo_config(
        network_config_text(model.config)
        + options_text(checkpoint=checkpoint, moving=moving, fixed=fixed),
        out,
    )
    moving_volume = read_volume(moving, RVFKind.INTENSITY)
    fixed_volume = read_volume(fixed, RVFKind.INTENSITY)
    warped, field, wall_s = register_pair(model, moving_volume, fixed_volume)
    write_volume(out / WARPED_FILENAME, warped, RVFKind.INTENSITY)
    write_volume(out / FIELD_FILENAME, field, RVFKind.FIELD)
    click.echo(f"wall_s={wall_s:.6f}")

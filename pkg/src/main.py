import os

from src.config import Config, logger

# BLAS thread pools are sized when numpy is first imported.
for _variable in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
    os.environ.setdefault(_variable, str(Config.NUM_THREADS))

import click  # noqa: E402

from src.errors import register_exception_handlers  # noqa: E402
from src.presentation.commands import (  # noqa: E402
    bench_command,
    eval_command,
    gen_data,
    grad_check_command,
    profile_command,
    register_command,
    sweep_k_command,
    train_command,
)

version = "v1"


@click.group()
@click.version_option(version, prog_name="hsganet")
def cli():
    """Deformable 3D registration with sparse graph attention and separable self-attention."""


cli.add_command(gen_data)
cli.add_command(train_command)
cli.add_command(register_command)
cli.add_command(eval_command)
cli.add_command(bench_command)
cli.add_command(sweep_k_command)
cli.add_command(grad_check_command)
cli.add_command(profile_command)

# Error handlers
register_exception_handlers(cli)

logger.debug(f"CLI assembled - version: {version}")

if __name__ == "__main__":
    cli()

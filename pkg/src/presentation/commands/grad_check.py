import click

from src.business.services import run_grad_checks
from src.config import Config
from src.data.schemas import GradCheckTarget
from src.presentation.commands.common import echo_config, options_text


@click.command("grad-check")
@click.option("--module", "target", type=click.Choice([t.value for t in GradCheckTarget]),
              default="all", show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
def grad_check_command(target, seed):
    """Finite-difference gradient checks; exits non-zero when any check fails."""
    echo_config(
        options_text(module=target, seed=seed, eps=Config.GRADCHECK_EPS, tol=Config.GRADCHECK_TOL)
    )
    results = run_grad_checks(GradCheckTarget(target), seed)
    for result in results:
        click.echo(f"{result.name}: {result.checked} entries, max rel err {result.max_rel_error:.3e} ok")

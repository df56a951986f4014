from pathlib import Path

import click

from src.business.models import RegistrationModel
from src.business.services import train
from src.config import logger
from src.data.repositories import load_dataset, load_run_config, write_checkpoint, write_loss_history
from src.data.repositories.run_config import run_config_text
from src.presentation.commands.common import echo_config, require

train_logger = logger.getChild("cli.train")

CHECKPOINT_FILENAME = "model.hsgk"
LOSS_FILENAME = "loss.csv"


@click.command("train")
@click.option("--config", "config_path", type=click.Path(dir_okay=False, path_type=Path), default=None)
@click.option("--data", type=click.Path(file_okay=False, path_type=Path), default=None)
@click.option("--val-data", type=click.Path(file_okay=False, path_type=Path), default=None)
@click.option("--out", type=click.Path(file_okay=False, path_type=Path), default=None)
@click.option("--epochs", type=click.IntRange(min=0), default=None)
@click.option("--seed", type=int, default=None)
@click.option("--lr", type=float, default=None)
@click.option("--lambda-reg", type=float, default=None)
@click.option("--sim-kind", type=click.Choice(["lncc", "mse"]), default=None)
@click.option("--stride-k", default=None, help="SGA stride per stage, or one value for all stages.")
def train_command(config_path, data, val_data, out, epochs, seed, lr, lambda_reg, sim_kind, stride_k):
    """Train the registration network; writes a checkpoint and the loss history."""
    run_config = load_run_config(
        config_path,
        {
            "data": data,
            "val_data": val_data,
            "out": out,
            "epochs": epochs,
            "seed": seed,
            "lr": lr,
            "lambda_reg": lambda_reg,
            "sim_kind": sim_kind,
            "stride_k": stride_k,
        },
    )
    data_dir = require(run_config.data, "data")
    out_dir = require(run_config.out, "out")
    echo_config(run_config_text(run_config), out_dir)

    pairs = load_dataset(data_dir)
    val_pairs = load_dataset(run_config.val_data) if run_config.val_data else None
    model = RegistrationModel(run_config.network)
    result = train(model, pairs, run_config.network, run_config.epochs, val_pairs=val_pairs)

    write_checkpoint(out_dir / CHECKPOINT_FILENAME, model)
    write_loss_history(out_dir / LOSS_FILENAME, result.history)
    if result.best_epoch is not None:
        click.echo(f"Best epoch {result.best_epoch} (val dice {result.best_val_dice:.4f})")
    train_logger.info(f"Training finished, outputs in {out_dir}")
    click.echo(f"Wrote {out_dir / CHECKPOINT_FILENAME} and {out_dir / LOSS_FILENAME}")

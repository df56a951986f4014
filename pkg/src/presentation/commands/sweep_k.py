from pathlib import Path

import click

from src.business.services import sweep_k
from src.data.repositories import load_dataset, load_run_config, write_rows
from src.data.repositories.reports import SWEEP_HEADER, format_csv, sweep_rows
from src.data.repositories.run_config import run_config_text
from src.presentation.commands.common import echo_config, options_text, parse_int_list, require

SWEEP_FILENAME = "sweep_k.csv"


@click.command("sweep-k")
@click.option("--k-list", default="1,2,3,4", show_default=True, help="SGA strides to compare.")
@click.option("--config", "config_path", type=click.Path(dir_okay=False, path_type=Path), default=None)
@click.option("--data", type=click.Path(file_okay=False, path_type=Path), default=None)
@click.option("--val-data", type=click.Path(file_okay=False, path_type=Path), default=None,
              help="Evaluation pairs; the training pairs are used when omitted.")
@click.option("--epochs", type=click.IntRange(min=0), default=None)
@click.option("--out", type=click.Path(file_okay=False, path_type=Path), default=None)
def sweep_k_command(k_list, config_path, data, val_data, epochs, out):
    """Train and evaluate one model per SGA stride K; emits a Dice-vs-K table."""
    run_config = load_run_config(
        config_path, {"data": data, "val_data": val_data, "epochs": epochs, "out": out}
    )
    k_values = parse_int_list(k_list, "--k-list")
    echo_config(
        run_config_text(run_config) + options_text(k_list=",".join(map(str, k_values))),
        run_config.out,
    )
    train_pairs = load_dataset(require(run_config.data, "data"))
    eval_pairs = load_dataset(run_config.val_data) if run_config.val_data else train_pairs
    rows = sweep_rows(sweep_k(k_values, run_config.network, train_pairs, eval_pairs, run_config.epochs))
    click.echo(format_csv(SWEEP_HEADER, rows))
    if run_config.out is not None:
        write_rows(run_config.out / SWEEP_FILENAME, SWEEP_HEADER, rows)

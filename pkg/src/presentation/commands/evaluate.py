from pathlib import Path

import click
import numpy as np

from src.business.services import evaluate_pairs, evaluate_registration, predict_field
from src.config import Config
from src.data.repositories import load_dataset, read_checkpoint, read_volume, write_metric_reports
from src.data.repositories.reports import METRIC_HEADER, format_csv, metric_report_rows
from src.data.schemas import RVFKind
from src.errors import ConfigException
from src.presentation.commands.common import echo_config, options_text


@click.command("eval")
@click.option("--fixed-labels", type=click.Path(dir_okay=False, path_type=Path), default=None)
@click.option("--moving-labels", type=click.Path(dir_okay=False, path_type=Path), default=None)
@click.option("--field", type=click.Path(dir_okay=False, path_type=Path), default=None)
@click.option("--pair-id", default="pair", show_default=True)
@click.option("--data", type=click.Path(file_okay=False, path_type=Path), default=None,
              help="Evaluate every pair of a dataset instead of three single files.")
@click.option("--checkpoint", type=click.Path(dir_okay=False, path_type=Path), default=None,
              help="With --data: predict fields with this model (identity field otherwise).")
@click.option("--workers", type=click.IntRange(min=1), default=None)
@click.option("--out", type=click.Path(dir_okay=False, path_type=Path), default=None, help="CSV report path.")
def eval_command(fixed_labels, moving_labels, field, pair_id, data, checkpoint, workers, out):
    """Dice and folding (NJD%) report as CSV: pair_id,label,dice,njd_percent."""
    echo_config(
        options_text(
            fixed_labels=fixed_labels, moving_labels=moving_labels, field=field, pair_id=pair_id,
            data=data, checkpoint=checkpoint, workers=workers or Config.EVAL_WORKERS, out=out,
        )
    )
    if data is not None:
        pairs = load_dataset(data)
        model = read_checkpoint(checkpoint) if checkpoint else None
        items = []
        for pair in pairs:
            pair_field = (
                predict_field(model, pair.moving, pair.fixed) if model else np.zeros((3,) + pair.moving.shape)
            )
            items.append((pair.pair_id, pair.fixed_labels, pair.moving_labels, pair_field))
        reports = evaluate_pairs(items, workers or Config.EVAL_WORKERS)
    else:
        if fixed_labels is None or moving_labels is None or field is None:
            raise ConfigException("eval needs --fixed-labels, --moving-labels and --field, or --data")
        report = evaluate_registration(
            read_volume(fixed_labels, RVFKind.LABELS).astype(np.int64),
            read_volume(moving_labels, RVFKind.LABELS).astype(np.int64),
            read_volume(field, RVFKind.FIELD).astype(np.float64),
            pair_id,
        )
        reports = [report]
    click.echo(format_csv(METRIC_HEADER, metric_report_rows(reports)))
    if out is not None:
        write_metric_reports(out, reports)

import csv
import math
from pathlib import Path
from typing import Iterable, List, Sequence, Union

from src.config import logger
from src.data.schemas import BenchRow, EpochRecord, MetricReport, ModelProfile, SweepRow

reports_logger = logger.getChild("reports")

PathLike = Union[str, Path]

LOSS_HEADER = ["epoch", "sim_loss", "reg_loss", "total"]
METRIC_HEADER = ["pair_id", "label", "dice", "njd_percent"]
BENCH_HEADER = ["kind", "k", "d", "flops", "wall_ns"]
SWEEP_HEADER = ["stride_k", "dice_before", "dice_after", "njd_percent"]
PROFILE_HEADER = ["params", "macs", "gmacs", "mean_forward_s"]


def _cell(value) -> str:
    if value is None or (isinstance(value, float) and math.isnan(value)):
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(getattr(value, "value", value))


def write_rows(path: PathLike, header: Sequence[str], rows: Iterable[Sequence]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(header)
        count = 0
        for row in rows:
            writer.writerow([_cell(value) for value in row])
            count += 1
    reports_logger.debug(f"Wrote {count} rows to {path}")
    return path


def read_rows(path: PathLike) -> List[dict]:
    with Path(path).open(newline="", encoding="utf-8") as handle:
        return list(csv.DictReader(handle))


def loss_history_rows(history: Sequence[EpochRecord]) -> tuple:
    with_validation = any(record.val_dice is not None for record in history)
    header = LOSS_HEADER + (["val_dice"] if with_validation else [])
    rows = []
    for record in history:
        row = [record.epoch, record.sim_loss, record.reg_loss, record.total]
        if with_validation:
            row.append(record.val_dice)
        rows.append(row)
    return header, rows


def write_loss_history(path: PathLike, history: Sequence[EpochRecord]) -> Path:
    header, rows = loss_history_rows(history)
    return write_rows(path, header, rows)


def metric_report_rows(reports: Sequence[MetricReport]) -> List[list]:
    """One row per (pair, label) plus a 'mean' row per pair."""
    rows = []
    for report in reports:
        for label, score in report.dice_per_label.items():
            rows.append([report.pair_id, label, score, report.njd_percent])
        rows.append([report.pair_id, "mean", report.dice_mean, report.njd_percent])
    return rows


def write_metric_reports(path: PathLike, reports: Sequence[MetricReport]) -> Path:
    return write_rows(path, METRIC_HEADER, metric_report_rows(reports))


def bench_rows(rows: Sequence[BenchRow]) -> List[list]:
    return [[row.kind, row.k, row.d, row.flops, row.wall_ns] for row in rows]


def sweep_rows(rows: Sequence[SweepRow]) -> List[list]:
    return [[row.stride_k, row.dice_before, row.dice_after, row.njd_percent] for row in rows]


def profile_rows(profile: ModelProfile) -> List[list]:
    return [[profile.params, profile.macs, profile.gmacs, profile.mean_forward_s]]


def format_csv(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    """CSV text for stdout."""
    lines = [",".join(header)]
    lines.extend(",".join(_cell(value) for value in row) for row in rows)
    return "\n".join(lines)

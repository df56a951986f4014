from .checkpoint import read_checkpoint, write_checkpoint
from .dataset import load_dataset, load_pair, save_dataset, save_pair
from .reports import (
    write_loss_history,
    write_metric_reports,
    write_rows,
)
from .run_config import load_run_config, write_effective_config
from .volume import read_volume, write_volume

__all__ = [
    "read_checkpoint",
    "write_checkpoint",
    "load_dataset",
    "load_pair",
    "save_dataset",
    "save_pair",
    "write_loss_history",
    "write_metric_reports",
    "write_rows",
    "load_run_config",
    "write_effective_config",
    "read_volume",
    "write_volume",
]

from pathlib import Path
from typing import List, Optional, Sequence, Union

import numpy as np

from src.config import logger
from src.data.repositories.reports import read_rows, write_rows
from src.data.repositories.volume import read_volume, write_volume
from src.data.schemas import RegistrationPair, RVFKind
from src.errors import ResourceNotFoundException

dataset_logger = logger.getChild("dataset")

PathLike = Union[str, Path]

INDEX_FILENAME = "pairs.csv"
INDEX_HEADER = ["pair_id", "baseline_dice"]

MOVING = "moving.rvf"
MOVING_LABELS = "moving_labels.rvf"
FIXED = "fixed.rvf"
FIXED_LABELS = "fixed_labels.rvf"
FIELD = "field.rvf"


def save_pair(directory: PathLike, pair: RegistrationPair) -> Path:
    directory = Path(directory)
    write_volume(directory / MOVING, pair.moving, RVFKind.INTENSITY)
    write_volume(directory / MOVING_LABELS, pair.moving_labels, RVFKind.LABELS)
    write_volume(directory / FIXED, pair.fixed, RVFKind.INTENSITY)
    write_volume(directory / FIXED_LABELS, pair.fixed_labels, RVFKind.LABELS)
    if pair.gt_field is not None:
        write_volume(directory / FIELD, pair.gt_field, RVFKind.FIELD)
    return directory


def load_pair(directory: PathLike, baseline_dice: Optional[float] = None) -> RegistrationPair:
    """Volumes come back as float64, labels as int64."""
    directory = Path(directory)
    if not directory.is_dir():
        raise ResourceNotFoundException(f"Pair directory not found: {directory}")
    field_path = directory / FIELD
    return RegistrationPair(
        pair_id=directory.name,
        moving=read_volume(directory / MOVING, RVFKind.INTENSITY).astype(np.float64),
        fixed=read_volume(directory / FIXED, RVFKind.INTENSITY).astype(np.float64),
        moving_labels=read_volume(directory / MOVING_LABELS, RVFKind.LABELS).astype(np.int64),
        fixed_labels=read_volume(directory / FIXED_LABELS, RVFKind.LABELS).astype(np.int64),
        gt_field=(
            read_volume(field_path, RVFKind.FIELD).astype(np.float64) if field_path.is_file() else None
        ),
        baseline_dice=baseline_dice,
    )


def save_dataset(root: PathLike, pairs: Sequence[RegistrationPair]) -> Path:
    root = Path(root)
    for pair in pairs:
        save_pair(root / pair.pair_id, pair)
    write_rows(root / INDEX_FILENAME, INDEX_HEADER, [[p.pair_id, p.baseline_dice] for p in pairs])
    dataset_logger.info(f"Wrote {len(pairs)} pairs to {root}")
    return root


def load_dataset(root: PathLike) -> List[RegistrationPair]:
    """Pairs listed in pairs.csv, or every pair_* directory when there is no index."""
    root = Path(root)
    if not root.is_dir():
        raise ResourceNotFoundException(f"Dataset directory not found: {root}")
    index = root / INDEX_FILENAME
    if index.is_file():
        pairs = [
            load_pair(root / row["pair_id"], float(row["baseline_dice"]) if row["baseline_dice"] else None)
            for row in read_rows(index)
        ]
    else:
        pairs = [load_pair(path) for path in sorted(root.glob("pair_*")) if path.is_dir()]
    if not pairs:
        raise ResourceNotFoundException(f"No registration pairs found in {root}")
    dataset_logger.info(f"Loaded {len(pairs)} pairs from {root}")
    return pairs

from concurrent.futures import ThreadPoolExecutor
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from src.business.services.transform import label_transform
from src.config import Config, logger
from src.data.schemas import MetricReport
from src.errors import ShapeException

metrics_logger = logger.getChild("metrics")

# (pair_id, fixed_labels, moving_labels, field)
EvalItem = Tuple[str, np.ndarray, np.ndarray, np.ndarray]


def dice(
    fixed_labels: np.ndarray,
    warped_labels: np.ndarray,
    labels: Optional[Iterable[int]] = None,
) -> Dict[int, Optional[float]]:
    """
    Per-label Dice overlap 2|A n B| / (|A| + |B|).

    Args:
        fixed_labels: Reference segmentation
        warped_labels: Segmentation to compare, same dims
        labels: Labels to score; defaults to every non-background label present in either map

    Returns:
        Mapping label -> Dice, or None when the label is absent from both maps
    """
    if fixed_labels.shape != warped_labels.shape:
        raise ShapeException(
            f"Label maps differ in shape: {fixed_labels.shape} vs {warped_labels.shape}"
        )
    if labels is None:
        present = np.union1d(np.unique(fixed_labels), np.unique(warped_labels))
        labels = [int(label) for label in present if label != 0]
    scores: Dict[int, Optional[float]] = {}
    for label in labels:
        in_fixed = fixed_labels == label
        in_warped = warped_labels == label
        size = int(in_fixed.sum()) + int(in_warped.sum())
        if size == 0:
            scores[int(label)] = None
            continue
        overlap = int(np.logical_and(in_fixed, in_warped).sum())
        scores[int(label)] = 2.0 * overlap / size
    return scores


def mean_dice(scores: Dict[int, Optional[float]]) -> float:
    defined = [value for value in scores.values() if value is not None]
    if not defined:
        metrics_logger.warning("No label present in either map; mean Dice is undefined")
        return float("nan")
    return float(np.mean(defined))


def _partials(component: np.ndarray) -> List[np.ndarray]:
    """d/d(depth, height, width) of one scalar grid; axes of length 1 have zero derivative."""
    partials = []
    for axis, size in enumerate(component.shape):
        if size < 2:
            partials.append(np.zeros_like(component))
        else:
            partials.append(np.gradient(component, axis=axis))
    return partials


def jacobian_determinant(field: np.ndarray) -> np.ndarray:
    """det(d phi / d p) per voxel for phi(p) = p + u(p); central differences inside, one-sided at the border."""
    if field.ndim != 4 or field.shape[0] != 3:
        raise ShapeException(f"Deformation field must be [3,D,H,W], got {field.shape}")
    field = np.asarray(field, dtype=np.float64)
    jacobian = np.empty(field.shape[1:] + (3, 3))
    for row in range(3):
        for col, partial in enumerate(_partials(field[row])):
            jacobian[..., row, col] = partial + (1.0 if row == col else 0.0)
    return np.linalg.det(jacobian)


def njd_percent(field: np.ndarray) -> float:
    """Percentage of voxels whose Jacobian determinant is <= 0."""
    determinant = jacobian_determinant(field)
    return 100.0 * float(np.count_nonzero(determinant <= 0.0)) / determinant.size


def evaluate_registration(
    fixed_labels: np.ndarray,
    moving_labels: np.ndarray,
    field: np.ndarray,
    pair_id: str = "",
    labels: Optional[Iterable[int]] = None,
) -> MetricReport:
    warped_labels = label_transform(moving_labels, field)
    scores = dice(fixed_labels, warped_labels, labels)
    report = MetricReport(
        pair_id=pair_id,
        dice_per_label=scores,
        dice_mean=mean_dice(scores),
        njd_percent=njd_percent(field),
    )
    metrics_logger.debug(
        f"Pair {pair_id or '-'}: dice_mean={report.dice_mean:.4f}, njd={report.njd_percent:.3f}%"
    )
    return report


def evaluate_pairs(items: Sequence[EvalItem], workers: Optional[int] = None) -> List[MetricReport]:
    """Evaluate many pairs in a thread pool; reports come back in input order."""
    workers = workers or Config.EVAL_WORKERS
    metrics_logger.info(f"Evaluating {len(items)} pairs with {workers} workers")
    with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
        futures = [
            pool.submit(evaluate_registration, fixed, moving, field, pair_id)
            for pair_id, fixed, moving, field in items
        ]
        return [future.result() for future in futures]

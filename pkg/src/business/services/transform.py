import numpy as np

from src.business.autodiff import Tensor, no_grad, ops
from src.errors import ShapeException


def spatial_transform(moving: Tensor, flow: Tensor) -> Tensor:
    """Differentiable trilinear warp of a [N,C,D,H,W] volume by a [N,3,D,H,W] displacement."""
    return ops.warp3d(moving, flow)


def _check_field(volume: np.ndarray, field: np.ndarray) -> None:
    if volume.ndim != 3:
        raise ShapeException(f"Expected a [D,H,W] volume, got shape {volume.shape}")
    if field.shape != (3,) + volume.shape:
        raise ShapeException(
            f"Deformation field shape {field.shape} does not match volume {volume.shape}"
        )


def warp_volume(volume: np.ndarray, field: np.ndarray) -> np.ndarray:
    """Array convenience around spatial_transform for a single [D,H,W] volume."""
    _check_field(volume, field)
    with no_grad():
        warped = spatial_transform(Tensor(volume[None, None]), Tensor(field[None]))
    return warped.data[0, 0]


def label_transform(labels: np.ndarray, field: np.ndarray) -> np.ndarray:
    """Nearest-neighbour resampling of a label map at p + u(p), clamped to the border."""
    _check_field(labels, field)
    grid = np.indices(labels.shape, dtype=np.float64)
    coords = np.rint(grid + field).astype(np.int64)
    for axis, size in enumerate(labels.shape):
        np.clip(coords[axis], 0, size - 1, out=coords[axis])
    return labels[coords[0], coords[1], coords[2]]

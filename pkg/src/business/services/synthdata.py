"""
Deterministic synthetic phantoms and smooth ground-truth deformations.
"""

from typing import Tuple

import numpy as np
from scipy.ndimage import gaussian_filter
from scipy.special import expit

from src.business.services.metrics import dice, mean_dice, njd_percent
from src.business.services.transform import label_transform, warp_volume
from src.config import logger
from src.data.schemas import Dims, Phantom, RegistrationPair, SmoothField
from src.errors import ConfigException

synth_logger = logger.getChild("synthdata")

MIN_LABEL_FRACTION = 0.01
MAX_PLACEMENT_ATTEMPTS = 50
EDGE_SOFTNESS = 0.6
MAX_FIELD_SHRINKS = 20


def _check_dims(dims: Dims) -> Tuple[int, int, int]:
    dims = tuple(int(d) for d in dims)
    if len(dims) != 3 or any(d < 2 for d in dims):
        raise ConfigException(f"Phantom dims must be three extents >= 2, got {dims}")
    return dims


def _place_blobs(rng: np.random.Generator, dims: Tuple[int, int, int], num_labels: int):
    grid = np.indices(dims, dtype=np.float64)
    extent = np.array(dims, dtype=np.float64)
    labels = np.zeros(dims, dtype=np.int64)
    volume = np.zeros(dims)
    for label in range(1, num_labels + 1):
        centre = rng.uniform(0.2, 0.8, size=3) * extent
        radii = rng.uniform(0.12, 0.3, size=3) * extent
        offsets = (grid - centre[:, None, None, None]) / radii[:, None, None, None]
        distance = np.sqrt((offsets**2).sum(axis=0))
        # soft membership: 1 deep inside, 0.5 on the ellipsoid surface
        membership = expit((1.0 - distance) * radii.min() / EDGE_SOFTNESS)
        inside = membership > 0.5
        labels[inside] = label
        band = 0.2 + 0.8 * label / num_labels
        volume = volume * (1.0 - membership) + band * membership
    return volume, labels


def make_phantom(
    seed: int, dims: Dims = (32, 32, 32), num_labels: int = 6, noise: float = 0.0
) -> Phantom:
    """
    Ellipsoid blobs with soft edges, one intensity band per label, over a zero background.

    Blob placement is redrawn until background and every label cover at least 1% of the voxels.
    """
    dims = _check_dims(dims)
    if num_labels < 1:
        raise ConfigException(f"num_labels must be >= 1, got {num_labels}")
    rng = np.random.default_rng(seed)
    voxels = int(np.prod(dims))
    for attempt in range(1, MAX_PLACEMENT_ATTEMPTS + 1):
        volume, labels = _place_blobs(rng, dims, num_labels)
        counts = np.bincount(labels.ravel(), minlength=num_labels + 1)
        if counts.min() >= MIN_LABEL_FRACTION * voxels:
            break
        synth_logger.debug(
            f"Phantom seed {seed} attempt {attempt}: label coverage {counts.tolist()} too small, redrawing"
        )
    else:
        raise ConfigException(
            f"Could not place {num_labels} labels at >= 1% coverage each in dims {dims}"
        )
    if noise > 0.0:
        volume = volume + rng.normal(0.0, noise, size=dims)
    volume = np.clip(volume, 0.0, 1.0)
    return Phantom(volume=volume, labels=labels, seed=seed, num_labels=num_labels)


def random_smooth_field(
    seed: int, dims: Dims = (32, 32, 32), amplitude: float = 2.0, smoothness: float = 4.0
) -> SmoothField:
    """Gaussian-blurred white noise per axis, rescaled so the largest displacement norm equals amplitude."""
    dims = _check_dims(dims)
    if amplitude < 0.0 or smoothness < 0.0:
        raise ConfigException(
            f"amplitude and smoothness must be non-negative, got {amplitude} and {smoothness}"
        )
    rng = np.random.default_rng(seed)
    noise = rng.standard_normal((3,) + dims)
    u = np.stack([gaussian_filter(component, sigma=smoothness, mode="wrap") for component in noise])
    peak = np.sqrt((u**2).sum(axis=0)).max()
    if amplitude == 0.0 or peak == 0.0:
        return SmoothField(u=np.zeros((3,) + dims), amplitude=amplitude, smoothness=smoothness)
    return SmoothField(u=u * (amplitude / peak), amplitude=amplitude, smoothness=smoothness)


def folding_free_field(
    seed: int, dims: Dims, amplitude: float, smoothness: float
) -> SmoothField:
    """random_smooth_field, with the amplitude shrunk by 0.8 until no voxel folds."""
    field = random_smooth_field(seed, dims, amplitude, smoothness)
    for _ in range(MAX_FIELD_SHRINKS):
        if njd_percent(field.u) == 0.0:
            return field
        synth_logger.warning(
            f"Field seed {seed} folds at amplitude {field.amplitude:.3f}; shrinking"
        )
        field = random_smooth_field(seed, dims, field.amplitude * 0.8, smoothness)
    raise ConfigException(f"Could not generate a folding-free field for seed {seed}")


def make_pair(
    seed: int,
    dims: Dims = (32, 32, 32),
    amplitude: float = 2.0,
    smoothness: float = 4.0,
    num_labels: int = 6,
    noise: float = 0.0,
    pair_id: str = "",
) -> RegistrationPair:
    """Moving phantom plus fixed = moving warped by a smooth ground-truth field."""
    moving = make_phantom(seed, dims, num_labels, noise)
    field = folding_free_field(seed + 1_000_003, dims, amplitude, smoothness)
    fixed_volume = warp_volume(moving.volume, field.u)
    fixed_labels = label_transform(moving.labels, field.u)
    baseline = mean_dice(dice(fixed_labels, moving.labels))
    return RegistrationPair(
        pair_id=pair_id or f"pair_{seed:03d}",
        moving=moving.volume,
        fixed=fixed_volume,
        moving_labels=moving.labels,
        fixed_labels=fixed_labels,
        gt_field=field.u,
        baseline_dice=baseline,
    )

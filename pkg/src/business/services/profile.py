import time
from typing import Optional, Tuple

import numpy as np

from src.business.autodiff import Tensor, no_grad
from src.business.models import RegistrationModel, count_macs, forward
from src.config import Config, logger
from src.data.schemas import ModelProfile

profile_logger = logger.getChild("profile")


def profile_model(
    model: RegistrationModel, dims: Tuple[int, int, int], repeats: Optional[int] = None
) -> ModelProfile:
    """Parameter count, forward multiply-accumulates and mean forward wall time."""
    repeats = max(1, repeats or Config.BENCH_REPEATS)
    macs = count_macs(model, dims)
    rng = np.random.default_rng(model.config.seed)
    moving = Tensor(rng.uniform(0.0, 1.0, (1, 1) + tuple(dims)))
    fixed = Tensor(rng.uniform(0.0, 1.0, (1, 1) + tuple(dims)))
    elapsed = 0.0
    with no_grad():
        for _ in range(repeats):
            start = time.perf_counter()
            forward(model, moving, fixed)
            elapsed += time.perf_counter() - start
    profile = ModelProfile(
        params=model.param_count(),
        macs=macs,
        gmacs=macs / 1e9,
        mean_forward_s=elapsed / repeats,
    )
    profile_logger.info(
        f"Profile at {tuple(dims)}: {profile.params} params, {profile.gmacs:.4f} GMACs, "
        f"{profile.mean_forward_s:.3f}s per forward"
    )
    return profile

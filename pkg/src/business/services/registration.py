import time
from typing import Tuple

import numpy as np

from src.business.autodiff import no_grad
from src.business.models import RegistrationModel, forward
from src.business.services.training import volume_tensor
from src.config import logger

registration_logger = logger.getChild("registration")


def register_pair(
    model: RegistrationModel, moving: np.ndarray, fixed: np.ndarray
) -> Tuple[np.ndarray, np.ndarray, float]:
    """
    Register one moving volume to a fixed volume.

    Returns:
        (warped [D,H,W], field [3,D,H,W], wall time in seconds)
    """
    start = time.perf_counter()
    with no_grad():
        warped, flow = forward(model, volume_tensor(moving), volume_tensor(fixed))
    wall_s = time.perf_counter() - start
    registration_logger.info(f"Registered {moving.shape} pair in {wall_s:.3f}s")
    return warped.data[0, 0], flow.data[0], wall_s

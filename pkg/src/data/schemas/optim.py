from typing import List

import numpy as np
from pydantic import Field

from src.data.schemas.base import ArrayModel


class AdamState(ArrayModel):
    """Adam moment estimates, one entry per parameter in model order."""

    step: int = Field(default=0, ge=0)
    lr: float = Field(default=1e-4, ge=0.0)
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    m: List[np.ndarray] = Field(default_factory=list)
    v: List[np.ndarray] = Field(default_factory=list)

from typing import Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator

from .base import ArrayModel
from .enums import RVFKind

Dims = Tuple[int, int, int]

RVF_MAGIC = b"RVF1"


class RVFHeader(BaseModel):
    """Fixed 33-byte header of an RVF file."""

    model_config = ConfigDict(frozen=True)

    magic: bytes = RVF_MAGIC
    kind: RVFKind
    dims: Dims
    reserved: bytes = Field(default=b"\x00" * 16)

    @field_validator("dims")
    @classmethod
    def positive_dims(cls, value: Dims) -> Dims:
        if any(d < 1 for d in value):
            raise ValueError(f"dims must be positive, got {value}")
        return value

    @property
    def channels(self) -> int:
        return 3 if self.kind == RVFKind.FIELD else 1

    @property
    def element_size(self) -> int:
        return 2 if self.kind == RVFKind.LABELS else 4

    @property
    def payload_bytes(self) -> int:
        return int(np.prod(self.dims)) * self.element_size * self.channels


class Phantom(ArrayModel):
    """Synthetic intensity volume with its segmentation."""

    volume: np.ndarray
    labels: np.ndarray
    seed: int
    num_labels: int = Field(ge=1)


class SmoothField(ArrayModel):
    """Displacement field u[3,D,H,W] with the generator settings that produced it."""

    u: np.ndarray
    amplitude: float = Field(ge=0.0)
    smoothness: float = Field(ge=0.0)


class RegistrationPair(ArrayModel):
    """Moving/fixed volumes and label maps, optionally with the field that relates them."""

    pair_id: str
    moving: np.ndarray
    fixed: np.ndarray
    moving_labels: np.ndarray
    fixed_labels: np.ndarray
    gt_field: Optional[np.ndarray] = None
    baseline_dice: Optional[float] = None

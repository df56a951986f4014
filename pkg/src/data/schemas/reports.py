from pydantic import BaseModel, Field

from .enums import MixerKind


class BenchRow(BaseModel):
    kind: MixerKind
    k: int = Field(ge=1)
    d: int = Field(ge=1)
    flops: int
    wall_ns: int


class SweepRow(BaseModel):
    stride_k: int = Field(ge=1)
    dice_before: float
    dice_after: float
    njd_percent: float


class GradCheckResult(BaseModel):
    """Worst finite-difference disagreement seen for one checked function."""

    name: str
    checked: int
    max_rel_error: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return self.max_rel_error < self.tolerance


class ModelProfile(BaseModel):
    params: int
    macs: int
    gmacs: float
    mean_forward_s: float


class RegistrationTiming(BaseModel):
    pair_id: str
    wall_s: float

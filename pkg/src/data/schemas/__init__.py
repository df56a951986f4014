from .base import ArrayModel
from .config import NetworkConfig, RunConfig
from .enums import GradCheckTarget, MixerKind, RVFKind
from .graph import GraphSpec
from .metrics import EpochRecord, LossBreakdown, MetricReport, TrainingResult
from .optim import AdamState
from .reports import (
    BenchRow,
    GradCheckResult,
    ModelProfile,
    RegistrationTiming,
    SweepRow,
)
from .volume import (
    RVF_MAGIC,
    Dims,
    Phantom,
    RegistrationPair,
    RVFHeader,
    SmoothField,
)

__all__ = [
    "ArrayModel",
    "NetworkConfig",
    "RunConfig",
    "GradCheckTarget",
    "MixerKind",
    "RVFKind",
    "GraphSpec",
    "EpochRecord",
    "LossBreakdown",
    "MetricReport",
    "TrainingResult",
    "AdamState",
    "BenchRow",
    "GradCheckResult",
    "ModelProfile",
    "RegistrationTiming",
    "SweepRow",
    "RVF_MAGIC",
    "Dims",
    "Phantom",
    "RegistrationPair",
    "RVFHeader",
    "SmoothField",
]

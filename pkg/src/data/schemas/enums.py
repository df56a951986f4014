from enum import Enum, IntEnum


class RVFKind(IntEnum):
    """Payload kinds of an RVF volume file."""

    INTENSITY = 0
    LABELS = 1
    FIELD = 2


class MixerKind(str, Enum):
    """Token mixers available for the bottleneck and the benchmark."""

    SSA = "ssa"
    MHA = "mha"


class GradCheckTarget(str, Enum):
    ALL = "all"
    SGA = "sga"
    SSA = "ssa"
    NETWORK = "network"

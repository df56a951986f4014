from pathlib import Path
from typing import Any, List, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator


def _split_ints(value: Any) -> Any:
    if isinstance(value, str):
        return [int(part) for part in value.split(",") if part.strip()]
    if isinstance(value, int):
        return [value]
    return value


class NetworkConfig(BaseModel):
    """Layout and optimisation hyper-parameters of the registration network."""

    model_config = ConfigDict(extra="forbid")

    stages: int = Field(default=4, ge=1)
    channels: List[int] = Field(default_factory=lambda: [8, 16, 16, 32])
    stride_k: List[int] = Field(default_factory=lambda: [2, 2, 1, 1])
    bottleneck_d: int = Field(default=32, ge=1)
    lncc_window: int = Field(default=9, ge=1)
    lambda_reg: float = Field(default=1.0, ge=0.0)
    lr: float = Field(default=1e-4, ge=0.0)
    sim_kind: Literal["lncc", "mse"] = "lncc"
    encoder_block: Literal["sga", "pool"] = "sga"
    grapher_fc: bool = True
    use_ffn: bool = True
    ffn_expansion: int = Field(default=4, ge=1)
    bottleneck_mixer: Literal["ssa", "mha"] = "ssa"
    mha_heads: int = Field(default=4, ge=1)
    zero_flow_init: bool = True
    seed: int = 0

    @model_validator(mode="before")
    @classmethod
    def broadcast_stride(cls, data: Any) -> Any:
        if isinstance(data, dict) and "stride_k" in data:
            strides = _split_ints(data["stride_k"])
            stages = int(data.get("stages", cls.model_fields["stages"].default))
            if isinstance(strides, list) and len(strides) == 1:
                data = {**data, "stride_k": strides * stages}
        return data

    @field_validator("channels", "stride_k", mode="before")
    @classmethod
    def parse_int_list(cls, value: Any) -> Any:
        return _split_ints(value)

    @field_validator("channels")
    @classmethod
    def positive_channels(cls, value: List[int]) -> List[int]:
        if any(c < 1 for c in value):
            raise ValueError(f"channel widths must be positive, got {value}")
        return value

    @field_validator("stride_k")
    @classmethod
    def positive_strides(cls, value: List[int]) -> List[int]:
        if any(k < 1 for k in value):
            raise ValueError(f"stride_k values must be >= 1, got {value}")
        return value

    @field_validator("lncc_window")
    @classmethod
    def odd_window(cls, value: int) -> int:
        if value % 2 == 0:
            raise ValueError(f"lncc_window must be odd, got {value}")
        return value

    @model_validator(mode="after")
    def stage_lengths(self) -> "NetworkConfig":
        if len(self.channels) != self.stages:
            raise ValueError(
                f"channels has {len(self.channels)} entries but stages is {self.stages}"
            )
        if len(self.stride_k) != self.stages:
            raise ValueError(
                f"stride_k has {len(self.stride_k)} entries but stages is {self.stages}"
            )
        if self.bottleneck_mixer == "mha" and self.bottleneck_d % self.mha_heads:
            raise ValueError(
                f"bottleneck_d {self.bottleneck_d} is not divisible by mha_heads {self.mha_heads}"
            )
        return self


class RunConfig(BaseModel):
    """Everything a CLI run needs: the network plus paths and schedule."""

    model_config = ConfigDict(extra="forbid")

    network: NetworkConfig = Field(default_factory=NetworkConfig)
    epochs: int = Field(default=200, ge=0)
    data: Optional[Path] = None
    val_data: Optional[Path] = None
    out: Optional[Path] = None

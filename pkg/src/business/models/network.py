"""
U-shaped registration network.

Moving and fixed volumes are stacked on the channel axis and encoded by
per-stage (stride-2 conv downsample, instance norm, SGA block) stages. The
deepest features are projected to the bottleneck width, mixed by an
SSAFormer block and projected back. Each decoder stage upsamples
trilinearly, concatenates the matching encoder features and applies a
3^3 conv. A zero-initialised 3^3 conv head predicts the displacement.
"""

from typing import List, Optional, Tuple

import numpy as np

from src.business.autodiff import Tensor, mac_counter, no_grad, ops
from src.business.models.base import Module, ModuleList
from src.business.models.layers import ChannelLinear, Conv3d, InstanceNorm
from src.business.models.sga import PoolBlock, SGABlock
from src.business.models.ssaformer import SSAFormerParams, ssaformer_block
from src.config import logger
from src.data.schemas import NetworkConfig
from src.errors import ConfigException, ShapeException

network_logger = logger.getChild("network")

INPUT_CHANNELS = 2


class EncoderStage(Module):
    def __init__(self, c_in: int, c_out: int, stride_k: int, config: NetworkConfig, rng: np.random.Generator):
        super().__init__()
        self.down = Conv3d(c_in, c_out, 2, rng, stride=2)
        self.norm = InstanceNorm(c_out)
        if config.encoder_block == "pool":
            self.block = PoolBlock(c_out, rng, config.use_ffn, config.ffn_expansion)
        else:
            self.block = SGABlock(
                c_out,
                stride_k,
                rng,
                fc=config.grapher_fc,
                use_ffn=config.use_ffn,
                ffn_expansion=config.ffn_expansion,
            )

    def __call__(self, x: Tensor) -> Tensor:
        return self.block(self.norm(self.down(x)))


class Bottleneck(Module):
    def __init__(self, channels: int, config: NetworkConfig, rng: np.random.Generator):
        super().__init__()
        self.proj_in = ChannelLinear(channels, config.bottleneck_d, rng)
        self.block = SSAFormerParams(
            config.bottleneck_d, rng, mixer=config.bottleneck_mixer, heads=config.mha_heads
        )
        self.proj_out = ChannelLinear(config.bottleneck_d, channels, rng)

    def __call__(self, x: Tensor) -> Tensor:
        return self.proj_out(ssaformer_block(self.proj_in(x), self.block))


class DecoderStage(Module):
    def __init__(self, c_in: int, c_skip: int, c_out: int, rng: np.random.Generator):
        super().__init__()
        self.conv = Conv3d(c_in + c_skip, c_out, 3, rng, padding=1)
        self.norm = InstanceNorm(c_out)

    def __call__(self, x: Tensor, skip: Tensor) -> Tensor:
        up = ops.upsample_trilinear(x, 2)
        if up.shape[2:] != skip.shape[2:]:
            raise ShapeException(f"Skip features {skip.shape} do not match upsampled {up.shape}")
        return ops.gelu(self.norm(self.conv(ops.concat([up, skip], axis=1))))


def decoder_channels(config: NetworkConfig) -> List[int]:
    return list(reversed(config.channels[:-1])) + [config.channels[0]]


def skip_channels(config: NetworkConfig) -> List[int]:
    """Channel count of the encoder features feeding each decoder stage, deepest first."""
    feature_channels = [INPUT_CHANNELS] + list(config.channels[:-1])
    return [feature_channels[config.stages - 1 - t] for t in range(config.stages)]


class RegistrationModel(Module):
    def __init__(self, config: NetworkConfig, rng: Optional[np.random.Generator] = None):
        super().__init__()
        self.config = config
        rng = np.random.default_rng(config.seed) if rng is None else rng

        self.encoder = ModuleList()
        c_in = INPUT_CHANNELS
        for stage in range(config.stages):
            c_out = config.channels[stage]
            self.encoder.append(EncoderStage(c_in, c_out, config.stride_k[stage], config, rng))
            c_in = c_out

        self.bottleneck = Bottleneck(config.channels[-1], config, rng)

        self.decoder = ModuleList()
        for c_skip, c_out in zip(skip_channels(config), decoder_channels(config)):
            self.decoder.append(DecoderStage(c_in, c_skip, c_out, rng))
            c_in = c_out

        self.flow_head = Conv3d(c_in, 3, 3, rng, padding=1, zero_init=config.zero_flow_init)
        self.assign_names()
        network_logger.debug(
            f"Built network with {config.stages} stages, {self.param_count()} parameters"
        )


def check_input_dims(config: NetworkConfig, dims: Tuple[int, ...]) -> None:
    """Spatial dims must halve cleanly at every stage and leave >= 2 bottleneck voxels."""
    factor = 2**config.stages
    if len(dims) != 3 or any(d % factor for d in dims):
        raise ConfigException(
            f"Input dims {tuple(dims)} must be divisible by 2^stages = {factor}"
        )
    if int(np.prod([d // factor for d in dims])) < 2:
        raise ConfigException(
            f"Input dims {tuple(dims)} leave fewer than 2 bottleneck voxels after {config.stages} stages"
        )


def predict_flow(model: RegistrationModel, moving: Tensor, fixed: Tensor) -> Tensor:
    """Displacement field [N,3,D,H,W] for a moving/fixed pair of [N,1,D,H,W] tensors."""
    if moving.ndim != 5 or moving.shape != fixed.shape or moving.shape[1] != 1:
        raise ShapeException(
            f"Moving {moving.shape} and fixed {fixed.shape} must both be [N,1,D,H,W]"
        )
    check_input_dims(model.config, moving.shape[2:])
    x = ops.concat([moving, fixed], axis=1)
    features = [x]
    for stage in model.encoder:
        x = stage(x)
        features.append(x)
    x = model.bottleneck(x)
    for t, stage in enumerate(model.decoder):
        x = stage(x, features[model.config.stages - 1 - t])
    return model.flow_head(x)


def forward(model: RegistrationModel, moving: Tensor, fixed: Tensor) -> Tuple[Tensor, Tensor]:
    """Returns (warped moving, displacement field)."""
    flow = predict_flow(model, moving, fixed)
    return ops.warp3d(moving, flow), flow


def param_count(model: Module) -> int:
    return model.param_count()


def count_macs(model: RegistrationModel, dims: Tuple[int, int, int]) -> int:
    """Multiply-accumulates of one forward pass on zero volumes of the given dims."""
    volume = Tensor(np.zeros((1, 1) + tuple(dims)))
    with no_grad(), mac_counter() as counter:
        forward(model, volume, volume)
    return counter.total

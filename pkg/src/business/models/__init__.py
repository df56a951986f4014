from .base import Module, ModuleList, uniform_fan_in
from .layers import ChannelLinear, Conv3d, InstanceNorm
from .network import (
    RegistrationModel,
    check_input_dims,
    count_macs,
    forward,
    param_count,
    predict_flow,
)
from .sga import (
    FFNParams,
    GrapherParams,
    PoolBlock,
    SGABlock,
    ffn,
    grapher,
    make_graph_spec,
    mrconv_sga,
    relative_max,
    sga_block,
    sga_neighbors,
    sga_oracle,
)
from .ssaformer import (
    DCSParams,
    MHAParams,
    SSAFormerParams,
    SSAParams,
    context_scores,
    context_vector,
    count_mixer_flops,
    dcs,
    mha_reference,
    mixer_flop_terms,
    ssa,
    ssaformer_block,
)

__all__ = [
    "Module",
    "ModuleList",
    "uniform_fan_in",
    "ChannelLinear",
    "Conv3d",
    "InstanceNorm",
    "RegistrationModel",
    "check_input_dims",
    "count_macs",
    "forward",
    "param_count",
    "predict_flow",
    "FFNParams",
    "GrapherParams",
    "PoolBlock",
    "SGABlock",
    "ffn",
    "grapher",
    "make_graph_spec",
    "mrconv_sga",
    "relative_max",
    "sga_block",
    "sga_neighbors",
    "sga_oracle",
    "DCSParams",
    "MHAParams",
    "SSAFormerParams",
    "SSAParams",
    "context_scores",
    "context_vector",
    "count_mixer_flops",
    "dcs",
    "mha_reference",
    "mixer_flop_terms",
    "ssa",
    "ssaformer_block",
]

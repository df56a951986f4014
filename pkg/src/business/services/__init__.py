from .benchmark import bench_mixers, time_mixer
from .gradcheck import check_gradients, run_grad_checks
from .losses import lncc, loss_terms, mse, reg_loss, sim_loss, total_loss
from .metrics import (
    dice,
    evaluate_pairs,
    evaluate_registration,
    jacobian_determinant,
    mean_dice,
    njd_percent,
)
from .profile import profile_model
from .registration import register_pair
from .sweep import sweep_k
from .synthdata import folding_free_field, make_pair, make_phantom, random_smooth_field
from .training import predict_field, train, volume_tensor
from .transform import label_transform, spatial_transform, warp_volume

__all__ = [
    "bench_mixers",
    "time_mixer",
    "check_gradients",
    "run_grad_checks",
    "lncc",
    "loss_terms",
    "mse",
    "reg_loss",
    "sim_loss",
    "total_loss",
    "dice",
    "evaluate_pairs",
    "evaluate_registration",
    "jacobian_determinant",
    "mean_dice",
    "njd_percent",
    "profile_model",
    "register_pair",
    "sweep_k",
    "folding_free_field",
    "make_pair",
    "make_phantom",
    "random_smooth_field",
    "predict_field",
    "train",
    "volume_tensor",
    "label_transform",
    "spatial_transform",
    "warp_volume",
]

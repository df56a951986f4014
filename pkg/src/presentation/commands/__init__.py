from .bench import bench_command
from .evaluate import eval_command
from .gen_data import gen_data
from .grad_check import grad_check_command
from .profile import profile_command
from .register import register_command
from .sweep_k import sweep_k_command
from .train import train_command

__all__ = [
    "bench_command",
    "eval_command",
    "gen_data",
    "grad_check_command",
    "profile_command",
    "register_command",
    "sweep_k_command",
    "train_command",
]

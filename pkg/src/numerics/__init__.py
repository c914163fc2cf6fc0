"""Differentiable array engine: tensors, ops, layers, optimizers, gradient checks"""

from .tensor import (
    NonFiniteError,
    ShapeError,
    Tape,
    Tensor,
    backward,
    default_dtype,
    get_default_dtype,
    no_grad,
)
from .optim import Optimizer, OptimizerKind, OptimizerState, multistep_lr, optimizer_step
from .gradcheck import grad_check
from .checkpoint import load_checkpoint, save_checkpoint

__all__ = [
    "NonFiniteError",
    "ShapeError",
    "Tape",
    "Tensor",
    "backward",
    "default_dtype",
    "get_default_dtype",
    "no_grad",
    "Optimizer",
    "OptimizerKind",
    "OptimizerState",
    "multistep_lr",
    "optimizer_step",
    "grad_check",
    "load_checkpoint",
    "save_checkpoint",
]

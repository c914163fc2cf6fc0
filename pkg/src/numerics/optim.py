"""SGD-momentum and Adam with decoupled weight decay, plus step-wise LR schedules."""

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, Mapping, Sequence, Tuple

import numpy as np

from src.numerics.tensor import Tensor

logger = logging.getLogger(__name__)


class OptimizerKind(str, Enum):
    SGD = "sgd"
    ADAM = "adam"


@dataclass
class OptimizerState:
    """Hyperparameters, moment buffers and step counter of one optimizer."""

    kind: OptimizerKind
    lr: float
    momentum: float = 0.9
    betas: Tuple[float, float] = (0.9, 0.999)
    weight_decay: float = 0.0
    eps: float = 1e-8
    step: int = 0
    first_moment: Dict[str, np.ndarray] = field(default_factory=dict)
    second_moment: Dict[str, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        self.kind = OptimizerKind(self.kind)
        if self.lr < 0 or self.weight_decay < 0 or self.eps <= 0:
            raise ValueError(
                f"Invalid optimizer hyperparameters: lr={self.lr}, "
                f"weight_decay={self.weight_decay}, eps={self.eps}"
            )


def optimizer_step(state: OptimizerState, params: Mapping[str, Tensor]) -> None:
    """
    Apply one update in place to every parameter.

    Grads are left untouched; zero them with ``zero_grad`` before the next backward.
    """
    missing = [name for name, p in params.items() if p.grad is None]
    if missing:
        raise ValueError(f"optimizer_step called before gradients were populated: {missing}")

    state.step += 1
    if state.kind is OptimizerKind.ADAM:
        beta1, beta2 = state.betas
        bias1 = 1.0 - beta1**state.step
        bias2 = 1.0 - beta2**state.step

    for name, p in params.items():
        grad = p.grad
        m = state.first_moment.get(name)
        if m is None:
            m = state.first_moment[name] = np.zeros_like(p.data)
        decay = state.lr * state.weight_decay * p.data

        if state.kind is OptimizerKind.SGD:
            m *= state.momentum
            m += grad
            update = state.lr * m
        else:
            v = state.second_moment.get(name)
            if v is None:
                v = state.second_moment[name] = np.zeros_like(p.data)
            m *= beta1
            m += (1.0 - beta1) * grad
            v *= beta2
            v += (1.0 - beta2) * grad * grad
            update = state.lr * (m / bias1) / (np.sqrt(v / bias2) + state.eps)

        p.data = (p.data - update - decay).astype(p.dtype, copy=False)


def zero_grad(params: Mapping[str, Tensor]) -> None:
    for p in params.values():
        p.zero_grad()


class Optimizer:
    """Binds an OptimizerState to a fixed set of named parameters."""

    def __init__(self, params: Mapping[str, Tensor], state: OptimizerState):
        self.params = dict(params)
        self.state = state

    @classmethod
    def create(cls, params: Mapping[str, Tensor], kind: str, lr: float, **hyper) -> "Optimizer":
        return cls(params, OptimizerState(kind=OptimizerKind(kind), lr=lr, **hyper))

    @property
    def lr(self) -> float:
        return self.state.lr

    def set_lr(self, lr: float) -> None:
        if lr != self.state.lr:
            logger.debug(f"Learning rate {self.state.lr:g} -> {lr:g}")
        self.state.lr = lr

    def step(self) -> None:
        optimizer_step(self.state, self.params)

    def zero_grad(self) -> None:
        zero_grad(self.params)


def multistep_lr(base_lr: float, epoch: int, milestones: Sequence[int], gamma: float) -> float:
    """Learning rate for a 0-based epoch: multiplied by gamma at each milestone reached."""
    passed = sum(1 for m in milestones if epoch >= m)
    return base_lr * gamma**passed

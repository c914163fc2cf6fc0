"""Parameter containers for networks built on the tensor engine."""

from collections import OrderedDict
from typing import Dict, Mapping, Optional

import numpy as np

from src.numerics import functional as F
from src.numerics.tensor import ShapeError, Tensor


class Module:
    """Base class: collects parameters from attributes in definition order."""

    def forward(self, *args, **kwargs):
        raise NotImplementedError

    def __call__(self, *args, **kwargs):
        return self.forward(*args, **kwargs)

    def parameters(self) -> "OrderedDict[str, Tensor]":
        params: "OrderedDict[str, Tensor]" = OrderedDict()
        for name, value in vars(self).items():
            if isinstance(value, Tensor) and value.requires_grad:
                params[name] = value
            elif isinstance(value, Module):
                for sub, p in value.parameters().items():
                    params[f"{name}.{sub}"] = p
            elif isinstance(value, (list, tuple)):
                for i, item in enumerate(value):
                    if isinstance(item, Module):
                        for sub, p in item.parameters().items():
                            params[f"{name}.{i}.{sub}"] = p
        return params

    def zero_grad(self) -> None:
        for p in self.parameters().values():
            p.zero_grad()

    def num_parameters(self) -> int:
        return sum(p.size for p in self.parameters().values())

    def state_dict(self) -> Dict[str, np.ndarray]:
        return {name: p.data.copy() for name, p in self.parameters().items()}

    def load_state_dict(self, state: Mapping[str, np.ndarray]) -> None:
        params = self.parameters()
        missing = sorted(set(params) - set(state))
        unexpected = sorted(set(state) - set(params))
        if missing or unexpected:
            raise KeyError(f"State dict mismatch: missing={missing} unexpected={unexpected}")
        for name, p in params.items():
            value = np.asarray(state[name])
            if value.shape != p.shape:
                raise ShapeError(f"Parameter {name} has shape {p.shape}, state has {value.shape}")
            p.data = np.array(value, dtype=p.dtype, copy=True)
            p.grad = None


class Conv2d(Module):
    def __init__(
        self,
        in_channels: int,
        out_channels: int,
        rng: np.random.Generator,
        kernel_size: int = 3,
        stride: int = 1,
        pad: Optional[int] = None,
        init_std: Optional[float] = None,
    ):
        # fan-in scaled Gaussian unless a fixed std is requested
        std = init_std if init_std is not None else np.sqrt(2.0 / (in_channels * kernel_size * kernel_size))
        self.stride = stride
        self.pad = kernel_size // 2 if pad is None else pad
        self.weight = Tensor(
            rng.normal(0.0, std, (out_channels, in_channels, kernel_size, kernel_size)), requires_grad=True
        )
        self.bias = Tensor(np.zeros(out_channels), requires_grad=True)

    def forward(self, x: Tensor) -> Tensor:
        return F.conv2d(x, self.weight, self.bias, stride=self.stride, pad=self.pad)


class Linear(Module):
    def __init__(self, in_features: int, out_features: int, rng: np.random.Generator, init_std: Optional[float] = None):
        std = init_std if init_std is not None else np.sqrt(1.0 / in_features)
        self.weight = Tensor(rng.normal(0.0, std, (out_features, in_features)), requires_grad=True)
        self.bias = Tensor(np.zeros(out_features), requires_grad=True)

    def forward(self, x: Tensor) -> Tensor:
        return F.linear(x, self.weight, self.bias)

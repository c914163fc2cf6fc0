"""Finite-difference gradient verification."""

from typing import Callable, Optional, Sequence

import numpy as np

from src.numerics.tensor import Tensor, backward, no_grad

DEFAULT_EPS = 1e-5


def grad_check(
    f: Callable[..., Tensor],
    inputs: Sequence[Tensor],
    eps: float = DEFAULT_EPS,
    max_elements: Optional[int] = None,
    seed: int = 0,
) -> float:
    """
    Compare analytic gradients of a scalar function against central differences.

    Args:
        f: callable mapping the input tensors to a scalar Tensor
        inputs: float64 tensors with requires_grad set
        eps: finite-difference step per element
        max_elements: if set, check a seeded random subset of elements per input

    Returns:
        Maximum of |analytic - numeric| / max(1, |analytic|, |numeric|)
    """
    for t in inputs:
        if t.dtype != np.float64:
            raise ValueError(f"grad_check needs float64 inputs, got {t.dtype} for {t}")
        if not t.requires_grad:
            raise ValueError("grad_check inputs must have requires_grad=True")

    for t in inputs:
        t.grad = None
    backward(f(*inputs))
    analytic = [t.grad.copy() if t.grad is not None else np.zeros_like(t.data) for t in inputs]

    rng = np.random.default_rng(seed)
    worst = 0.0
    with no_grad():
        for t, grad in zip(inputs, analytic):
            t.data = np.ascontiguousarray(t.data)
            flat = t.data.reshape(-1)
            indices = np.arange(flat.size)
            if max_elements is not None and flat.size > max_elements:
                indices = np.sort(rng.choice(flat.size, size=max_elements, replace=False))
            for i in indices:
                original = flat[i]
                flat[i] = original + eps
                plus = f(*inputs).item()
                flat[i] = original - eps
                minus = f(*inputs).item()
                flat[i] = original
                numeric = (plus - minus) / (2.0 * eps)
                a = float(grad.reshape(-1)[i])
                worst = max(worst, abs(a - numeric) / max(1.0, abs(a), abs(numeric)))
    return worst

"""
Differentiable neural-network ops over ``Tensor``.

Convolution is cross-correlation (no kernel flip) over NCHW tensors, computed
with a strided window view and ``tensordot``.
"""

from typing import Optional, Union

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from src.numerics.resize import resize_array
from src.numerics.tensor import ShapeError, Tensor


def _require_4d(x: Tensor, op: str) -> None:
    if x.ndim != 4:
        raise ShapeError(f"{op} expects a 4-D NCHW tensor, got shape {x.shape}")


def conv2d(
    x: Tensor, weight: Tensor, bias: Optional[Tensor] = None, stride: int = 1, pad: int = 0
) -> Tensor:
    _require_4d(x, "conv2d")
    if weight.ndim != 4:
        raise ShapeError(f"conv2d weight must be [Cout, Cin, kh, kw], got {weight.shape}")
    n, c_in, h, w = x.shape
    c_out, w_cin, kh, kw = weight.shape
    if w_cin != c_in:
        raise ShapeError(f"conv2d input has {c_in} channels but weight expects {w_cin} ({weight.shape})")
    if kh % 2 == 0 or kw % 2 == 0:
        raise ShapeError(f"conv2d kernel must have odd size, got {kh}x{kw}")
    if stride < 1 or pad < 0:
        raise ValueError(f"conv2d needs stride >= 1 and pad >= 0, got stride={stride} pad={pad}")
    if bias is not None and bias.shape != (c_out,):
        raise ShapeError(f"conv2d bias must have shape ({c_out},), got {bias.shape}")
    span_h, span_w = h + 2 * pad - kh, w + 2 * pad - kw
    if span_h < 0 or span_w < 0 or span_h % stride or span_w % stride:
        raise ShapeError(
            f"conv2d output size is not exact for input {h}x{w}, kernel {kh}x{kw}, "
            f"stride {stride}, pad {pad}"
        )
    h_out, w_out = span_h // stride + 1, span_w // stride + 1

    padded = np.pad(x.data, ((0, 0), (0, 0), (pad, pad), (pad, pad))) if pad else x.data
    windows = sliding_window_view(padded, (kh, kw), axis=(2, 3))[:, :, ::stride, ::stride]
    out = np.tensordot(windows, weight.data, axes=([1, 4, 5], [1, 2, 3])).transpose(0, 3, 1, 2)
    if bias is not None:
        out = out + bias.data[None, :, None, None]
    out = np.ascontiguousarray(out)
    kernel = weight.data

    def _backward(g):
        grad_w = np.tensordot(g, windows, axes=([0, 2, 3], [0, 2, 3]))
        grad_padded = np.zeros_like(padded, dtype=np.result_type(g, kernel))
        for i in range(kh):
            for j in range(kw):
                contrib = np.tensordot(g, kernel[:, :, i, j], axes=([1], [0])).transpose(0, 3, 1, 2)
                grad_padded[
                    :, :, i : i + stride * (h_out - 1) + 1 : stride, j : j + stride * (w_out - 1) + 1 : stride
                ] += contrib
        grad_x = grad_padded[:, :, pad : pad + h, pad : pad + w] if pad else grad_padded
        if bias is None:
            return grad_x, grad_w
        return grad_x, grad_w, g.sum(axis=(0, 2, 3))

    inputs = (x, weight) if bias is None else (x, weight, bias)
    return Tensor.from_op(out, inputs, _backward, "conv2d")


def _pool_windows(x: Tensor, op: str) -> np.ndarray:
    _require_4d(x, op)
    n, c, h, w = x.shape
    if h % 2 or w % 2:
        raise ShapeError(f"{op} needs even spatial dims, got {h}x{w}")
    return x.data.reshape(n, c, h // 2, 2, w // 2, 2).transpose(0, 1, 2, 4, 3, 5).reshape(n, c, h // 2, w // 2, 4)


def _unpool(grad_windows: np.ndarray) -> np.ndarray:
    n, c, h2, w2, _ = grad_windows.shape
    return grad_windows.reshape(n, c, h2, w2, 2, 2).transpose(0, 1, 2, 4, 3, 5).reshape(n, c, 2 * h2, 2 * w2)


def max_pool2(x: Tensor) -> Tensor:
    """2x2 max pooling; gradient goes to the first row-major argmax of each window."""
    windows = _pool_windows(x, "max_pool2")
    idx = windows.argmax(axis=-1)[..., None]
    out = np.take_along_axis(windows, idx, axis=-1)[..., 0]

    def _backward(g):
        grad_windows = np.zeros(windows.shape, dtype=g.dtype)
        np.put_along_axis(grad_windows, idx, g[..., None], axis=-1)
        return (_unpool(grad_windows),)

    return Tensor.from_op(out, (x,), _backward, "max_pool2")


def avg_pool2(x: Tensor) -> Tensor:
    windows = _pool_windows(x, "avg_pool2")

    def _backward(g):
        return (_unpool(np.repeat(g[..., None] * 0.25, 4, axis=-1)),)

    return Tensor.from_op(windows.mean(axis=-1), (x,), _backward, "avg_pool2")


def upsample_nearest2(x: Tensor) -> Tensor:
    _require_4d(x, "upsample_nearest2")
    n, c, h, w = x.shape
    out = x.data.repeat(2, axis=2).repeat(2, axis=3)
    return Tensor.from_op(
        out, (x,), lambda g: (g.reshape(n, c, h, 2, w, 2).sum(axis=(3, 5)),), "upsample_nearest2"
    )


def relu(x: Tensor) -> Tensor:
    a = x.data
    return Tensor.from_op(np.maximum(a, 0), (x,), lambda g: (g * (a > 0),), "relu")


def leaky_relu(x: Tensor, slope: float = 0.2) -> Tensor:
    a = x.data
    scale = np.where(a > 0, 1.0, slope).astype(a.dtype)
    return Tensor.from_op(a * scale, (x,), lambda g: (g * scale,), "leaky_relu")


def tanh(x: Tensor) -> Tensor:
    t = np.tanh(x.data)
    return Tensor.from_op(t, (x,), lambda g: (g * (1.0 - t * t),), "tanh")


def concat_channels(*tensors: Tensor) -> Tensor:
    if not tensors:
        raise ValueError("concat_channels needs at least one tensor")
    for t in tensors:
        _require_4d(t, "concat_channels")
    ref = tensors[0].shape
    for t in tensors[1:]:
        if (t.shape[0], t.shape[2], t.shape[3]) != (ref[0], ref[2], ref[3]):
            raise ShapeError(
                f"concat_channels needs matching N,H,W; got {ref} and {t.shape}"
            )
    splits = np.cumsum([t.shape[1] for t in tensors])[:-1]

    def _backward(g):
        return tuple(np.split(g, splits, axis=1))

    return Tensor.from_op(
        np.concatenate([t.data for t in tensors], axis=1), tensors, _backward, "concat_channels"
    )


def global_avg_pool(x: Tensor) -> Tensor:
    _require_4d(x, "global_avg_pool")
    n, c, h, w = x.shape

    def _backward(g):
        return (np.broadcast_to(g[:, :, None, None] / (h * w), (n, c, h, w)).copy(),)

    return Tensor.from_op(x.data.mean(axis=(2, 3)), (x,), _backward, "global_avg_pool")


def linear(x: Tensor, weight: Tensor, bias: Optional[Tensor] = None) -> Tensor:
    if x.ndim != 2 or weight.ndim != 2 or x.shape[1] != weight.shape[1]:
        raise ShapeError(f"linear expects x [N, D] and weight [O, D], got {x.shape} and {weight.shape}")
    a, w = x.data, weight.data
    out = a @ w.T
    if bias is not None:
        out = out + bias.data

    def _backward(g):
        grads = (g @ w, g.T @ a)
        return grads if bias is None else grads + (g.sum(axis=0),)

    inputs = (x, weight) if bias is None else (x, weight, bias)
    return Tensor.from_op(out, inputs, _backward, "linear")


def _as_target(pred: Tensor, target: Union[Tensor, np.ndarray, float], op: str) -> Tensor:
    if not isinstance(target, Tensor):
        target = Tensor(np.broadcast_to(np.asarray(target, dtype=pred.dtype), pred.shape), dtype=pred.dtype)
    if target.shape != pred.shape:
        raise ShapeError(f"{op} needs equal shapes, got {pred.shape} and {target.shape}")
    return target


def frobenius_sq_loss(pred: Tensor, target: Union[Tensor, np.ndarray, float]) -> Tensor:
    """Squared Frobenius norm of (pred - target), divided by the batch size."""
    target = _as_target(pred, target, "frobenius_sq_loss")
    batch = pred.shape[0] if pred.ndim else 1
    diff = pred.data - target.data

    def _backward(g):
        grad = g * 2.0 * diff / batch
        return grad, -grad

    return Tensor.from_op(np.sum(diff * diff) / batch, (pred, target), _backward, "frobenius_sq_loss")


def l1_loss(pred: Tensor, target: Union[Tensor, np.ndarray, float]) -> Tensor:
    """Mean absolute difference."""
    target = _as_target(pred, target, "l1_loss")
    diff = pred.data - target.data

    def _backward(g):
        grad = g * np.sign(diff) / diff.size
        return grad, -grad

    return Tensor.from_op(np.mean(np.abs(diff)), (pred, target), _backward, "l1_loss")


def mse_loss(pred: Tensor, target: Union[Tensor, np.ndarray, float]) -> Tensor:
    """Mean squared difference."""
    target = _as_target(pred, target, "mse_loss")
    diff = pred.data - target.data

    def _backward(g):
        grad = g * 2.0 * diff / diff.size
        return grad, -grad

    return Tensor.from_op(np.mean(diff * diff), (pred, target), _backward, "mse_loss")


def cross_entropy(logits: Tensor, labels: np.ndarray) -> Tensor:
    """Mean softmax cross-entropy of [N, C] logits against integer labels."""
    labels = np.asarray(labels, dtype=np.int64)
    if logits.ndim != 2 or labels.shape != (logits.shape[0],):
        raise ShapeError(f"cross_entropy expects logits [N, C] and labels [N], got {logits.shape}, {labels.shape}")
    n = logits.shape[0]
    shifted = logits.data - logits.data.max(axis=1, keepdims=True)
    log_probs = shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))
    rows = np.arange(n)

    def _backward(g):
        grad = np.exp(log_probs)
        grad[rows, labels] -= 1.0
        return (g * grad / n,)

    return Tensor.from_op(-log_probs[rows, labels].mean(), (logits,), _backward, "cross_entropy")


def bicubic_resize(x: Tensor, out_h: int, out_w: int) -> Tensor:
    """Inference-only bicubic resize of an NCHW tensor; the result carries no graph."""
    _require_4d(x, "bicubic_resize")
    return Tensor(resize_array(x.data, out_h, out_w), dtype=x.dtype)


def pad_edge(x: Tensor, top: int, bottom: int, left: int, right: int) -> Tensor:
    """Replicate border pixels outward; gradient of each copy flows back to its source pixel."""
    _require_4d(x, "pad_edge")
    if min(top, bottom, left, right) < 0:
        raise ValueError(f"pad_edge needs non-negative padding, got {(top, bottom, left, right)}")
    n, c, h, w = x.shape
    rows = np.clip(np.arange(-top, h + bottom), 0, h - 1)
    cols = np.clip(np.arange(-left, w + right), 0, w - 1)

    def _backward(g):
        grad_rows = np.zeros((n, c, h, g.shape[3]), dtype=g.dtype)
        np.add.at(grad_rows, (slice(None), slice(None), rows), g)
        grad = np.zeros((n, c, h, w), dtype=g.dtype)
        np.add.at(grad, (slice(None), slice(None), slice(None), cols), grad_rows)
        return (grad,)

    return Tensor.from_op(x.data[:, :, rows][:, :, :, cols], (x,), _backward, "pad_edge")


def crop(x: Tensor, top: int, left: int, height: int, width: int) -> Tensor:
    _require_4d(x, "crop")
    n, c, h, w = x.shape
    if top < 0 or left < 0 or top + height > h or left + width > w:
        raise ShapeError(f"crop window ({top}, {left}, {height}, {width}) exceeds input {h}x{w}")

    def _backward(g):
        grad = np.zeros(x.shape, dtype=g.dtype)
        grad[:, :, top : top + height, left : left + width] = g
        return (grad,)

    return Tensor.from_op(
        x.data[:, :, top : top + height, left : left + width].copy(), (x,), _backward, "crop"
    )

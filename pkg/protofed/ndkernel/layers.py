""" Layer operations with exact backward passes """

from typing import Optional, Sequence

import numpy as np

from ..errors import ConfigError, DegenerateBatchError, DimensionError
from .tensor import Tensor, node

BN_EPS = 1e-5
BN_MOMENTUM = 0.1


def _sigmoid(x: np.ndarray) -> np.ndarray:
    return 0.5 * (1.0 + np.tanh(0.5 * x))


def linear(x: Tensor, w: Tensor, bias: Tensor) -> Tensor:
    """y = x·w + bias for x of shape N×a, w of shape a×b."""
    if x.ndim != 2 or w.ndim != 2 or bias.ndim != 1:
        raise DimensionError(f"linear expects N×a, a×b and b shapes, got {x.shape}, {w.shape}, {bias.shape}")
    if x.shape[1] != w.shape[0] or bias.shape[0] != w.shape[1]:
        raise DimensionError(f"linear inner dimensions disagree: {x.shape} · {w.shape} + {bias.shape}")

    def backward(g):
        if x.requires_grad:
            x.accumulate(g @ w.data.T)
        if w.requires_grad:
            w.accumulate(x.data.T @ g)
        if bias.requires_grad:
            bias.accumulate(g.sum(axis=0))

    return node(x.data @ w.data + bias.data, (x, w, bias), backward)


def conv1d(x: Tensor, kernels: Tensor, bias: Tensor, stride: int = 1, padding: Optional[int] = None) -> Tensor:
    """
    Cross-correlation over the last axis.

    x is N×c_in×L, kernels c_out×c_in×k, bias c_out. Padding defaults to k // 2.
    Output length is floor((L + 2·padding − k) / stride) + 1.
    """
    if x.ndim != 3 or kernels.ndim != 3:
        raise DimensionError(f"conv1d expects N×c×L input and c_out×c_in×k kernels, got {x.shape}, {kernels.shape}")
    n, c_in, length = x.shape
    c_out, k_c_in, k = kernels.shape
    if k_c_in != c_in:
        raise DimensionError(f"conv1d channel mismatch: input {c_in}, kernels {k_c_in}")
    if bias.shape != (c_out,):
        raise DimensionError(f"conv1d bias shape {bias.shape} does not match {c_out} output channels")
    if stride < 1:
        raise ConfigError("conv1d stride must be positive")
    if padding is None:
        padding = k // 2
    padded_length = length + 2 * padding
    if padded_length < k:
        raise DimensionError(f"Kernel length {k} exceeds padded input length {padded_length}")

    out_length = (padded_length - k) // stride + 1
    span = stride * (out_length - 1) + 1
    xp = np.pad(x.data, ((0, 0), (0, 0), (padding, padding))) if padding else x.data
    w = kernels.data
    # N×c_in×out_length×k view, no copy
    cols = np.lib.stride_tricks.sliding_window_view(xp, k, axis=2)[:, :, ::stride, :]

    out = np.tensordot(cols, w, axes=([1, 3], [1, 2])).transpose(0, 2, 1) + bias.data[None, :, None]

    def backward(g):
        if kernels.requires_grad:
            kernels.accumulate(np.tensordot(g, cols, axes=([0, 2], [0, 2])))
        if bias.requires_grad:
            bias.accumulate(g.sum(axis=(0, 2)))
        if x.requires_grad:
            # N×out_length×c_in×k
            dcols = np.tensordot(g, w, axes=([1], [0]))
            dxp = np.zeros_like(xp)
            for j in range(k):
                dxp[:, :, j:j + span:stride] += dcols[:, :, :, j].transpose(0, 2, 1)
            x.accumulate(dxp[:, :, padding:padding + length])

    return node(np.ascontiguousarray(out), (x, kernels, bias), backward)


def batchnorm1d(
    x: Tensor,
    gamma: Tensor,
    beta: Tensor,
    running_mean: Tensor,
    running_var: Tensor,
    training: bool,
    momentum: float = BN_MOMENTUM,
    eps: float = BN_EPS,
) -> Tensor:
    """
    Batch normalization per channel for N×c or N×c×L inputs.

    Training mode normalizes with batch statistics (biased variance) and
    updates the running statistics in place; eval mode uses the running ones.
    """
    if x.ndim not in (2, 3):
        raise DimensionError(f"batchnorm1d expects N×c or N×c×L input, got {x.shape}")
    channels = x.shape[1]
    for t in (gamma, beta, running_mean, running_var):
        if t.shape != (channels,):
            raise DimensionError(f"batchnorm1d parameter shape {t.shape} does not match {channels} channels")
    axes = (0, 2) if x.ndim == 3 else (0,)
    expand = (lambda a: a[None, :, None]) if x.ndim == 3 else (lambda a: a[None, :])

    if training:
        if x.shape[0] < 2:
            raise DegenerateBatchError("batchnorm1d needs at least 2 samples in train mode")
        count = x.data.size // channels
        mean = x.data.mean(axis=axes)
        var = x.data.var(axis=axes)
        running_mean.data[...] = (1 - momentum) * running_mean.data + momentum * mean
        running_var.data[...] = (1 - momentum) * running_var.data + momentum * var * count / (count - 1)
    else:
        mean = running_mean.data
        var = running_var.data

    inv_std = 1.0 / np.sqrt(var + eps)
    x_hat = (x.data - expand(mean)) * expand(inv_std)
    out = expand(gamma.data) * x_hat + expand(beta.data)

    def backward(g):
        if gamma.requires_grad:
            gamma.accumulate((g * x_hat).sum(axis=axes))
        if beta.requires_grad:
            beta.accumulate(g.sum(axis=axes))
        if x.requires_grad:
            d_hat = g * expand(gamma.data)
            if training:
                m = x.data.size // channels
                sum_d = d_hat.sum(axis=axes)
                sum_dx = (d_hat * x_hat).sum(axis=axes)
                dx = expand(inv_std / m) * (m * d_hat - expand(sum_d) - x_hat * expand(sum_dx))
            else:
                dx = d_hat * expand(inv_std)
            x.accumulate(dx)

    return node(out, (x, gamma, beta), backward)


def relu(x: Tensor) -> Tensor:
    mask = x.data > 0
    return node(np.where(mask, x.data, 0.0), (x,), lambda g: x.accumulate(g * mask))


def sigmoid(x: Tensor) -> Tensor:
    s = _sigmoid(x.data)
    return node(s, (x,), lambda g: x.accumulate(g * s * (1 - s)))


def silu(x: Tensor) -> Tensor:
    s = _sigmoid(x.data)
    return node(x.data * s, (x,), lambda g: x.accumulate(g * s * (1 + x.data * (1 - s))))


def dropout(x: Tensor, rate: float, training: bool, rng: Optional[np.random.Generator] = None) -> Tensor:
    """Inverted dropout: survivors scaled by 1/(1−rate); identity in eval mode."""
    if not 0.0 <= rate < 1.0:
        raise ConfigError(f"Dropout rate must be in [0, 1), got {rate}")
    if not training or rate == 0.0:
        return x
    if rng is None:
        raise ConfigError("dropout in train mode needs a random generator")
    mask = (rng.random(x.shape) >= rate) / (1.0 - rate)
    return node(x.data * mask, (x,), lambda g: x.accumulate(g * mask))


def lstm_layer(x: Tensor, w_ih: Tensor, w_hh: Tensor, bias: Tensor) -> Tensor:
    """
    Single-layer LSTM over the time axis of an N×T×d input, zero initial state.

    Gate layout along the 4h axis is input, forget, cell, output. Returns the
    hidden state at every step (N×T×h); backward is full BPTT.
    """
    if x.ndim != 3:
        raise DimensionError(f"lstm_layer expects N×T×d input, got {x.shape}")
    n, steps, d = x.shape
    if steps < 1:
        raise DimensionError("lstm_layer needs at least one time step")
    h4 = w_ih.shape[1]
    h = h4 // 4
    if w_ih.shape != (d, h4) or w_hh.shape != (h, h4) or bias.shape != (h4,) or h4 % 4:
        raise DimensionError(
            f"lstm_layer weight shapes {w_ih.shape}, {w_hh.shape}, {bias.shape} do not fit input dim {d}"
        )

    x_proj = (x.data.reshape(n * steps, d) @ w_ih.data).reshape(n, steps, h4) + bias.data
    hs = np.zeros((n, steps + 1, h))
    cs = np.zeros((n, steps + 1, h))
    tanh_cs = np.empty((n, steps, h))
    gates = np.empty((n, steps, h4))
    for t in range(steps):
        a = x_proj[:, t] + hs[:, t] @ w_hh.data
        gate = _sigmoid(a)
        gate[:, 2 * h:3 * h] = np.tanh(a[:, 2 * h:3 * h])
        gates[:, t] = gate
        cs[:, t + 1] = gate[:, h:2 * h] * cs[:, t] + gate[:, :h] * gate[:, 2 * h:3 * h]
        tanh_cs[:, t] = np.tanh(cs[:, t + 1])
        hs[:, t + 1] = gate[:, 3 * h:] * tanh_cs[:, t]

    def backward(g):
        d_proj = np.empty((n, steps, h4))
        dh_next = np.zeros((n, h))
        dc_next = np.zeros((n, h))
        for t in reversed(range(steps)):
            i = gates[:, t, :h]
            f = gates[:, t, h:2 * h]
            c_bar = gates[:, t, 2 * h:3 * h]
            o = gates[:, t, 3 * h:]
            tanh_c = tanh_cs[:, t]
            dh = g[:, t] + dh_next
            dc = dh * o * (1 - tanh_c ** 2) + dc_next
            da = d_proj[:, t]
            da[:, :h] = dc * c_bar * i * (1 - i)
            da[:, h:2 * h] = dc * cs[:, t] * f * (1 - f)
            da[:, 2 * h:3 * h] = dc * i * (1 - c_bar ** 2)
            da[:, 3 * h:] = dh * tanh_c * o * (1 - o)
            dh_next = da @ w_hh.data.T
            dc_next = dc * f
        flat = d_proj.reshape(n * steps, h4)
        if w_ih.requires_grad:
            w_ih.accumulate(x.data.reshape(n * steps, d).T @ flat)
        if w_hh.requires_grad:
            # h_{t-1} against gate grads at t, all steps in one product
            w_hh.accumulate(hs[:, :steps].reshape(n * steps, h).T @ flat)
        if bias.requires_grad:
            bias.accumulate(flat.sum(axis=0))
        if x.requires_grad:
            x.accumulate((flat @ w_ih.data.T).reshape(n, steps, d))

    return node(hs[:, 1:].copy(), (x, w_ih, w_hh, bias), backward)


def adaptive_avg_pool(x: Tensor) -> Tensor:
    """Per-channel mean over the last axis: N×c×L -> N×c."""
    if x.ndim != 3:
        raise DimensionError(f"adaptive_avg_pool expects N×c×L input, got {x.shape}")
    length = x.shape[2]
    if length < 1:
        raise DimensionError("adaptive_avg_pool needs at least one position")
    return node(
        x.data.mean(axis=2), (x,),
        lambda g: x.accumulate(np.repeat(g[:, :, None] / length, length, axis=2)),
    )


def channel_scale(x: Tensor, gate: Tensor) -> Tensor:
    """Scale each channel of N×c×L by an N×c gate."""
    if gate.shape != x.shape[:2]:
        raise DimensionError(f"Gate shape {gate.shape} does not match {x.shape[:2]}")

    def backward(g):
        if x.requires_grad:
            x.accumulate(g * gate.data[:, :, None])
        if gate.requires_grad:
            gate.accumulate((g * x.data).sum(axis=2))

    return node(x.data * gate.data[:, :, None], (x, gate), backward)


def se_block(x: Tensor, w1: Tensor, b1: Tensor, w2: Tensor, b2: Tensor) -> Tensor:
    """Squeeze-and-excitation: pool, c→c/r ReLU, c/r→c sigmoid gate, channel rescale."""
    squeezed = adaptive_avg_pool(x)
    hidden = relu(linear(squeezed, w1, b1))
    gate = sigmoid(linear(hidden, w2, b2))
    return channel_scale(x, gate)


def transpose(x: Tensor, axes: Sequence[int]) -> Tensor:
    axes = tuple(axes)
    inverse = tuple(np.argsort(axes))
    return node(
        np.ascontiguousarray(np.transpose(x.data, axes)), (x,),
        lambda g: x.accumulate(np.transpose(g, inverse)),
    )

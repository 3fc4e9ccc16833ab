""" In-place parameter update rules """

from typing import Iterable, Optional

import numpy as np

from ..errors import StateError
from .tensor import ParamStore, Tensor


def _require_grads(store: ParamStore):
    missing = [name for name, tensor in store.named_parameters() if tensor.grad is None]
    if missing:
        raise StateError(f"Missing gradient for: {', '.join(missing)}")


def clip_grad_norm(tensors: Iterable[Tensor], max_norm: float) -> float:
    """Scale gradients so their joint L2 norm is at most max_norm; returns the norm before clipping."""
    tensors = [t for t in tensors if t.grad is not None]
    total = float(np.sqrt(sum(float(np.sum(t.grad ** 2)) for t in tensors)))
    if total > max_norm > 0:
        factor = max_norm / total
        for tensor in tensors:
            tensor.grad *= factor
    return total


def sgd_step(store: ParamStore, lr: float, momentum: float = 0.0):
    _require_grads(store)
    for name, tensor in store.named_parameters():
        update = tensor.grad
        if momentum:
            state = store.state.setdefault(name, {})
            velocity = state.get('velocity')
            velocity = update.copy() if velocity is None else momentum * velocity + update
            state['velocity'] = velocity
            update = velocity
        tensor.data -= lr * update
    store.step_count += 1
    store.zero_grad()


def adam_step(
    store: ParamStore,
    lr: float,
    beta1: float = 0.9,
    beta2: float = 0.999,
    eps: Optional[float] = 1e-8,
):
    _require_grads(store)
    store.step_count += 1
    t = store.step_count
    for name, tensor in store.named_parameters():
        state = store.state.setdefault(name, {})
        m = state.get('m')
        v = state.get('v')
        if m is None:
            m = np.zeros_like(tensor.data)
            v = np.zeros_like(tensor.data)
        g = tensor.grad
        m = beta1 * m + (1 - beta1) * g
        v = beta2 * v + (1 - beta2) * g * g
        state['m'], state['v'] = m, v
        m_hat = m / (1 - beta1 ** t)
        v_hat = v / (1 - beta2 ** t)
        tensor.data -= lr * m_hat / (np.sqrt(v_hat) + eps)
    store.zero_grad()

""" Central finite-difference gradient oracle """

from typing import Callable, Dict, Sequence

import numpy as np

from .tensor import Tensor


def numerical_gradient(fn: Callable[[], float], array: np.ndarray, h: float = 1e-5) -> np.ndarray:
    """Central differences of a scalar function with respect to every element of array (perturbed in place)."""
    grad = np.zeros_like(array)
    flat = array.reshape(-1)
    flat_grad = grad.reshape(-1)
    for index in range(flat.size):
        original = flat[index]
        flat[index] = original + h
        plus = fn()
        flat[index] = original - h
        minus = fn()
        flat[index] = original
        flat_grad[index] = (plus - minus) / (2 * h)
    return grad


def relative_error(analytic: np.ndarray, numeric: np.ndarray) -> float:
    """‖a − n‖ / (‖a‖ + ‖n‖), 0 when both vanish."""
    denominator = np.linalg.norm(analytic) + np.linalg.norm(numeric)
    if denominator < 1e-12:
        return 0.0
    return float(np.linalg.norm(analytic - numeric) / denominator)


def check_gradients(
    loss_fn: Callable[[], Tensor],
    tensors: Sequence[Tensor],
    h: float = 1e-5,
) -> Dict[str, float]:
    """
    Compare backward() gradients of loss_fn against central differences.

    loss_fn must rebuild the graph on every call and be deterministic.
    Returns the relative error per tensor (keyed by name or position).
    """
    for tensor in tensors:
        tensor.requires_grad = True
        tensor.grad = None
    loss_fn().backward()
    analytic = [np.zeros_like(t.data) if t.grad is None else t.grad.copy() for t in tensors]

    errors = {}
    for index, tensor in enumerate(tensors):
        numeric = numerical_gradient(lambda: loss_fn().item(), tensor.data, h)
        errors[tensor.name or str(index)] = relative_error(analytic[index], numeric)
    return errors

""" Dense float64 tensors with reverse-mode gradients for the LCNN layers """

from .tensor import Tensor, ParamStore, node
from .layers import (
    linear,
    conv1d,
    batchnorm1d,
    relu,
    silu,
    sigmoid,
    dropout,
    lstm_layer,
    se_block,
    adaptive_avg_pool,
    transpose,
)
from .optim import sgd_step, adam_step, clip_grad_norm

__all__ = [
    'Tensor', 'ParamStore', 'node',
    'linear', 'conv1d', 'batchnorm1d', 'relu', 'silu', 'sigmoid', 'dropout',
    'lstm_layer', 'se_block', 'adaptive_avg_pool', 'transpose',
    'sgd_step', 'adam_step', 'clip_grad_norm',
]

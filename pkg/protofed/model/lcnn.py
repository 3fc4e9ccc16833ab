#   Copyright 2026 protofed authors
#
#   Licensed under the Apache License, Version 2.0 (the "License");
#   you may not use this file except in compliance with the License.
#   You may obtain a copy of the License at
#
#       http://www.apache.org/licenses/LICENSE-2.0
#
#   Unless required by applicable law or agreed to in writing, software
#   distributed under the License is distributed on an "AS IS" BASIS,
#   WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
#   See the License for the specific language governing permissions and
#   limitations under the License.

""" LSTM → three conv/SE/BN stages → pooled embedding → linear head """

import math
from typing import List, Optional, Tuple, Union

import numpy as np

from ..errors import DimensionError
from ..models.enums.all import Activation
from ..models.pd.model import LcnnConfig
from ..ndkernel import (
    ParamStore,
    Tensor,
    adaptive_avg_pool,
    batchnorm1d,
    conv1d,
    dropout,
    linear,
    lstm_layer,
    relu,
    se_block,
    silu,
    transpose,
)

_ACTIVATIONS = {
    Activation.RELU: relu,
    Activation.SILU: silu,
}


def _se_width(channels: int, reduction: int) -> int:
    return max(1, channels // reduction)


def param_count(config: LcnnConfig) -> int:
    """Closed-form count of trainable parameters (BN running statistics excluded)."""
    d, h, k = config.input_dim, config.lstm_hidden, config.kernel_size
    total = 4 * h * (d + h + 1)
    c_in = h
    for c_out in config.conv_channels:
        r = _se_width(c_out, config.se_reduction)
        total += c_out * c_in * k + c_out
        total += 2 * c_out * r + r + c_out
        total += 2 * c_out
        c_in = c_out
    total += config.embed_dim * config.num_classes + config.num_classes
    return total


class LcnnModel:
    """
    Window classifier over N×T×d batches.

    embed() yields the pooled m-dimensional features used for prototypes,
    classify() the two class logits; forward() returns both from one pass.
    """

    def __init__(self, config: LcnnConfig, store: ParamStore):
        self.config = config
        self.store = store
        self._activation = _ACTIVATIONS[Activation(config.activation)]

    @property
    def stages(self) -> int:
        return len(self.config.conv_channels)

    def lstm_parameters(self) -> List[Tensor]:
        return [self.store['lstm.w_ih'], self.store['lstm.w_hh'], self.store['lstm.bias']]

    def _as_input(self, x: Union[np.ndarray, Tensor]) -> Tensor:
        tensor = x if isinstance(x, Tensor) else Tensor(x)
        expected = (self.config.window, self.config.input_dim)
        if tensor.ndim != 3 or tensor.shape[1:] != expected:
            raise DimensionError(f"Expected N×{expected[0]}×{expected[1]} windows, got {tensor.shape}")
        return tensor

    def forward(
        self,
        x: Union[np.ndarray, Tensor],
        training: bool = False,
        rng: Optional[np.random.Generator] = None,
    ) -> Tuple[Tensor, Tensor]:
        s = self.store
        z = lstm_layer(self._as_input(x), s['lstm.w_ih'], s['lstm.w_hh'], s['lstm.bias'])
        z = dropout(z, self.config.dropout_rate, training, rng)
        z = transpose(z, (0, 2, 1))
        for i in range(self.stages):
            p = f"stage{i}"
            z = conv1d(z, s[f'{p}.conv.weight'], s[f'{p}.conv.bias'], stride=1,
                       padding=self.config.kernel_size // 2)
            z = se_block(z, s[f'{p}.se.w1'], s[f'{p}.se.b1'], s[f'{p}.se.w2'], s[f'{p}.se.b2'])
            z = batchnorm1d(z, s[f'{p}.bn.gamma'], s[f'{p}.bn.beta'],
                            s[f'{p}.bn.running_mean'], s[f'{p}.bn.running_var'], training)
            z = self._activation(z)
        embeddings = adaptive_avg_pool(z)
        return embeddings, self.head(embeddings)

    def head(self, embeddings: Tensor) -> Tensor:
        return linear(embeddings, self.store['head.weight'], self.store['head.bias'])

    def embed(self, x, training: bool = False, rng: Optional[np.random.Generator] = None) -> Tensor:
        return self.forward(x, training, rng)[0]

    def classify(self, x, training: bool = False, rng: Optional[np.random.Generator] = None) -> Tensor:
        return self.forward(x, training, rng)[1]

    def predict(self, x: np.ndarray, batch_size: int = 256) -> np.ndarray:
        """Eval-mode argmax labels, batched to bound memory."""
        predictions = []
        for start in range(0, len(x), batch_size):
            logits = self.classify(x[start:start + batch_size]).data
            predictions.append(np.argmax(logits, axis=1))
        return np.concatenate(predictions) if predictions else np.zeros(0, dtype=np.int64)

    def state_dict(self, include_buffers: bool = False):
        return self.store.state_dict(include_buffers)

    def load_state_dict(self, arrays, strict: bool = True):
        self.store.load_state_dict(arrays, strict)

    def num_parameters(self) -> int:
        return self.store.num_parameters()


def init_params(config: LcnnConfig, seed: int) -> LcnnModel:
    """Deterministic initialization from seed: uniform(−1/√fan_in, 1/√fan_in); BN affine at 1/0."""
    rng = np.random.default_rng(seed)
    store = ParamStore()

    def uniform(fan_in: int, shape):
        bound = 1.0 / math.sqrt(fan_in)
        return rng.uniform(-bound, bound, shape)

    d, h, k = config.input_dim, config.lstm_hidden, config.kernel_size
    store.add('lstm.w_ih', uniform(d, (d, 4 * h)))
    store.add('lstm.w_hh', uniform(h, (h, 4 * h)))
    store.add('lstm.bias', uniform(h, (4 * h,)))

    c_in = h
    for i, c_out in enumerate(config.conv_channels):
        p = f"stage{i}"
        r = _se_width(c_out, config.se_reduction)
        store.add(f'{p}.conv.weight', uniform(c_in * k, (c_out, c_in, k)))
        store.add(f'{p}.conv.bias', uniform(c_in * k, (c_out,)))
        store.add(f'{p}.se.w1', uniform(c_out, (c_out, r)))
        store.add(f'{p}.se.b1', uniform(c_out, (r,)))
        store.add(f'{p}.se.w2', uniform(r, (r, c_out)))
        store.add(f'{p}.se.b2', uniform(r, (c_out,)))
        store.add(f'{p}.bn.gamma', np.ones(c_out))
        store.add(f'{p}.bn.beta', np.zeros(c_out))
        store.add_buffer(f'{p}.bn.running_mean', np.zeros(c_out))
        store.add_buffer(f'{p}.bn.running_var', np.ones(c_out))
        c_in = c_out

    m = config.embed_dim
    store.add('head.weight', uniform(m, (m, config.num_classes)))
    store.add('head.bias', uniform(m, (config.num_classes,)))
    return LcnnModel(config, store)

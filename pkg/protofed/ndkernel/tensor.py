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

""" Tensor and parameter store """

from collections import OrderedDict
from typing import Callable, Dict, Iterator, List, Optional, Sequence, Tuple, Union

import numpy as np

from ..errors import ConfigError, DimensionError, StateError

Number = Union[int, float]


class Tensor:
    """
    Row-major float64 array with an optional gradient buffer.

    Tensors produced by operations remember their parents and a closure
    that pushes the output gradient back into them. Only tensors with
    requires_grad (or derived from one) take part in backward().
    """

    __slots__ = ('data', 'grad', 'requires_grad', 'name', '_parents', '_backward')

    def __init__(self, data, requires_grad: bool = False, name: Optional[str] = None):
        self.data = np.array(data, dtype=np.float64)
        self.grad: Optional[np.ndarray] = None
        self.requires_grad = requires_grad
        self.name = name
        self._parents: Tuple['Tensor', ...] = ()
        self._backward: Optional[Callable[[np.ndarray], None]] = None

    def __repr__(self):
        label = f" name={self.name}" if self.name else ""
        return f"Tensor(shape={self.shape}{label})"

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    def numpy(self) -> np.ndarray:
        return self.data

    def item(self) -> float:
        if self.data.size != 1:
            raise DimensionError(f"item() needs a single element, got shape {self.shape}")
        return float(self.data.reshape(-1)[0])

    def accumulate(self, grad: np.ndarray):
        if grad.shape != self.data.shape:
            raise DimensionError(f"Gradient shape {grad.shape} does not match tensor shape {self.shape}")
        if self.grad is None:
            self.grad = np.array(grad, dtype=np.float64)
        else:
            self.grad += grad

    def zero_grad(self):
        self.grad = None

    def backward(self, grad: Optional[np.ndarray] = None, retain_graph: bool = False):
        """Run reverse-mode accumulation from this tensor through the recorded tape."""
        if not self.requires_grad:
            raise StateError("backward() called on a tensor that does not require grad")
        if grad is None:
            if self.data.size != 1:
                raise StateError("backward() without a seed gradient needs a scalar output")
            grad = np.ones_like(self.data)

        order: List[Tensor] = []
        visited = set()
        stack = [(self, False)]
        while stack:
            current, expanded = stack.pop()
            if expanded:
                order.append(current)
                continue
            if id(current) in visited:
                continue
            visited.add(id(current))
            stack.append((current, True))
            for parent in current._parents:
                if parent.requires_grad and id(parent) not in visited:
                    stack.append((parent, False))

        # intermediate gradients belong to a single sweep; leaves accumulate
        for current in order:
            if current._backward is not None:
                current.grad = None
        self.accumulate(np.asarray(grad, dtype=np.float64))
        for current in reversed(order):
            if current._backward is not None and current.grad is not None:
                current._backward(current.grad)
        if not retain_graph:
            for current in order:
                if current._parents:
                    current._parents = ()
                    current._backward = None

    # elementwise helpers used to compose losses

    def __add__(self, other: Union['Tensor', Number]) -> 'Tensor':
        if not isinstance(other, Tensor):
            value = float(other)
            return node(self.data + value, (self,), lambda g: self.accumulate(g))
        _same_shape(self, other)

        def backward(g):
            if self.requires_grad:
                self.accumulate(g)
            if other.requires_grad:
                other.accumulate(g)

        return node(self.data + other.data, (self, other), backward)

    __radd__ = __add__

    def __mul__(self, other: Union['Tensor', Number]) -> 'Tensor':
        if not isinstance(other, Tensor):
            value = float(other)
            return node(self.data * value, (self,), lambda g: self.accumulate(g * value))
        _same_shape(self, other)

        def backward(g):
            if self.requires_grad:
                self.accumulate(g * other.data)
            if other.requires_grad:
                other.accumulate(g * self.data)

        return node(self.data * other.data, (self, other), backward)

    __rmul__ = __mul__

    def __neg__(self) -> 'Tensor':
        return self * -1.0

    def __sub__(self, other: Union['Tensor', Number]) -> 'Tensor':
        return self + (-other)

    def sum(self) -> 'Tensor':
        return node(np.array(self.data.sum()), (self,), lambda g: self.accumulate(np.broadcast_to(g, self.shape).copy()))

    def mean(self) -> 'Tensor':
        count = max(1, self.data.size)
        return node(
            np.array(self.data.mean() if self.data.size else 0.0), (self,),
            lambda g: self.accumulate(np.broadcast_to(g / count, self.shape).copy()),
        )


def node(data: np.ndarray, parents: Sequence[Tensor], backward: Callable[[np.ndarray], None]) -> Tensor:
    """Create an operation output tracked on the tape when any parent requires grad."""
    out = Tensor(data)
    if any(parent.requires_grad for parent in parents):
        out.requires_grad = True
        out._parents = tuple(parents)
        out._backward = backward
    return out


def _same_shape(a: Tensor, b: Tensor):
    if a.shape != b.shape:
        raise DimensionError(f"Shape mismatch: {a.shape} vs {b.shape}")


class ParamStore:
    """
    Named trainable parameters, non-trainable buffers and optimizer state.

    Names are unique across parameters and buffers. Buffers (batch-norm
    running statistics) never receive gradients and are never federated.
    """

    def __init__(self):
        self._params: 'OrderedDict[str, Tensor]' = OrderedDict()
        self._buffers: 'OrderedDict[str, Tensor]' = OrderedDict()
        self.state: Dict[str, Dict[str, np.ndarray]] = {}
        self.step_count = 0

    def _check_name(self, name: str):
        if name in self._params or name in self._buffers:
            raise ConfigError(f"Duplicate parameter name: {name}")

    def add(self, name: str, value) -> Tensor:
        self._check_name(name)
        tensor = Tensor(value, requires_grad=True, name=name)
        self._params[name] = tensor
        return tensor

    def add_buffer(self, name: str, value) -> Tensor:
        self._check_name(name)
        tensor = Tensor(value, name=name)
        self._buffers[name] = tensor
        return tensor

    def __getitem__(self, name: str) -> Tensor:
        if name in self._params:
            return self._params[name]
        return self._buffers[name]

    def __contains__(self, name: str) -> bool:
        return name in self._params or name in self._buffers

    def __len__(self) -> int:
        return len(self._params)

    def named_parameters(self) -> Iterator[Tuple[str, Tensor]]:
        return iter(self._params.items())

    def parameters(self) -> List[Tensor]:
        return list(self._params.values())

    def num_parameters(self) -> int:
        return int(sum(t.data.size for t in self._params.values()))

    def zero_grad(self):
        for tensor in self._params.values():
            tensor.zero_grad()

    def state_dict(self, include_buffers: bool = False) -> 'OrderedDict[str, np.ndarray]':
        arrays = OrderedDict((name, t.data.copy()) for name, t in self._params.items())
        if include_buffers:
            arrays.update((name, t.data.copy()) for name, t in self._buffers.items())
        return arrays

    def load_state_dict(self, arrays: Dict[str, np.ndarray], strict: bool = True):
        """Copy arrays into matching parameters/buffers; shapes must agree."""
        if strict:
            missing = [name for name in self._params if name not in arrays]
            if missing:
                raise ConfigError(f"Missing parameters: {', '.join(missing)}")
        for name, value in arrays.items():
            if name not in self:
                if strict:
                    raise ConfigError(f"Unknown parameter: {name}")
                continue
            target = self[name]
            value = np.asarray(value, dtype=np.float64)
            if value.shape != target.shape:
                raise DimensionError(f"Shape mismatch for {name}: {value.shape} vs {target.shape}")
            target.data[...] = value

""" Flat binary checkpoints: JSON header + big-endian float64 tensors """

import json
import struct
from collections import OrderedDict
from pathlib import Path
from typing import Dict

import numpy as np
from loguru import logger as log

from ..errors import FramingError

_HEADER_LENGTH = struct.Struct('>I')
DTYPE_TAG = '>f8'


def dump_arrays(arrays: Dict[str, np.ndarray]) -> bytes:
    header = {
        'dtype': DTYPE_TAG,
        'tensors': [{'name': name, 'shape': list(np.shape(value))} for name, value in arrays.items()],
    }
    header_bytes = json.dumps(header, separators=(',', ':')).encode('utf-8')
    body = b''.join(np.asarray(value, dtype=DTYPE_TAG).tobytes() for value in arrays.values())
    return _HEADER_LENGTH.pack(len(header_bytes)) + header_bytes + body


def load_arrays(blob: bytes) -> 'OrderedDict[str, np.ndarray]':
    if len(blob) < _HEADER_LENGTH.size:
        raise FramingError("Checkpoint shorter than its header length field")
    (header_length,) = _HEADER_LENGTH.unpack_from(blob)
    start = _HEADER_LENGTH.size + header_length
    if len(blob) < start:
        raise FramingError("Checkpoint header truncated")
    try:
        header = json.loads(blob[_HEADER_LENGTH.size:start].decode('utf-8'))
    except (UnicodeDecodeError, ValueError) as e:
        raise FramingError(f"Invalid checkpoint header: {e}") from e
    if header.get('dtype') != DTYPE_TAG:
        raise FramingError(f"Unsupported checkpoint dtype {header.get('dtype')!r}")

    arrays = OrderedDict()
    offset = start
    for entry in header['tensors']:
        shape = tuple(entry['shape'])
        n_bytes = int(np.prod(shape, dtype=np.int64)) * 8
        if offset + n_bytes > len(blob):
            raise FramingError(f"Checkpoint body truncated at tensor {entry['name']}")
        values = np.frombuffer(blob, dtype=DTYPE_TAG, count=n_bytes // 8, offset=offset)
        arrays[entry['name']] = values.astype(np.float64).reshape(shape)
        offset += n_bytes
    if offset != len(blob):
        raise FramingError(f"Checkpoint has {len(blob) - offset} trailing bytes")
    return arrays


def save_checkpoint(model, path, include_buffers: bool = True) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(dump_arrays(model.state_dict(include_buffers=include_buffers)))
    log.debug("Saved checkpoint {}", path)
    return path


def load_checkpoint(model, path):
    model.load_state_dict(load_arrays(Path(path).read_bytes()), strict=True)

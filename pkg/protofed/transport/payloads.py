""" Payload codecs and frame builders for every message type """

import json
import struct
from typing import Dict, Optional

import numpy as np

from ..errors import FramingError, ProtocolError
from ..model.checkpoint import dump_arrays, load_arrays
from ..models.enums.all import MsgType
from ..prototypes import ClassPrototype, PrototypeSet
from .frames import SERVER_ID, Frame

_CLASS_COUNT = struct.Struct('>H')
_CLASS_ENTRY = struct.Struct('>HQI')
_REAL = np.dtype('>f8')

CONTROL_OPS = frozenset({'hello', 'report', 'close'})


def prototype_payload_size(classes: int, dim: int) -> int:
    return _CLASS_COUNT.size + classes * (_CLASS_ENTRY.size + dim * _REAL.itemsize)


def encode_prototypes(protos: PrototypeSet) -> bytes:
    parts = [_CLASS_COUNT.pack(len(protos))]
    for label, entry in protos.items():
        parts.append(_CLASS_ENTRY.pack(label, entry.count, entry.vector.size))
        parts.append(entry.vector.astype(_REAL).tobytes())
    return b''.join(parts)


def decode_prototypes(payload: bytes) -> PrototypeSet:
    if len(payload) < _CLASS_COUNT.size:
        raise FramingError("Prototype payload truncated before class count")
    (classes,) = _CLASS_COUNT.unpack_from(payload)
    offset = _CLASS_COUNT.size
    entries = {}
    for _ in range(classes):
        if offset + _CLASS_ENTRY.size > len(payload):
            raise FramingError("Prototype payload truncated in class entry")
        label, count, dim = _CLASS_ENTRY.unpack_from(payload, offset)
        offset += _CLASS_ENTRY.size
        end = offset + dim * _REAL.itemsize
        if end > len(payload):
            raise FramingError(f"Prototype payload truncated in class {label} vector")
        vector = np.frombuffer(payload, dtype=_REAL, count=dim, offset=offset).astype(np.float64)
        entries[label] = ClassPrototype(vector, count)
        offset = end
    if offset != len(payload):
        raise FramingError(f"{len(payload) - offset} trailing bytes in prototype payload")
    return PrototypeSet(entries)


def encode_control(op: str, **fields) -> bytes:
    if op not in CONTROL_OPS:
        raise ProtocolError(f"Unknown control op {op!r}")
    return json.dumps({'op': op, **fields}, sort_keys=True, separators=(',', ':')).encode('utf-8')


def decode_control(payload: bytes) -> Dict:
    try:
        data = json.loads(payload.decode('utf-8'))
    except (UnicodeDecodeError, ValueError) as exc:
        raise ProtocolError(f"Invalid control payload: {exc}") from exc
    if not isinstance(data, dict) or data.get('op') not in CONTROL_OPS:
        raise ProtocolError(f"Control payload without a known op: {data!r}")
    return data


def encode_error(code: str, message: str) -> bytes:
    return json.dumps({'code': code, 'message': message}, sort_keys=True).encode('utf-8')


def decode_error(payload: bytes) -> Dict[str, str]:
    try:
        data = json.loads(payload.decode('utf-8'))
    except (UnicodeDecodeError, ValueError) as exc:
        raise ProtocolError(f"Invalid error payload: {exc}") from exc
    return {'code': str(data.get('code', 'unknown')), 'message': str(data.get('message', ''))}


# frame builders


def prototype_upload(round_: int, client_id: int, protos: PrototypeSet) -> Frame:
    return Frame(MsgType.PROTOTYPE_UPLOAD, round_, client_id, encode_prototypes(protos))


def global_broadcast(round_: int, protos: PrototypeSet) -> Frame:
    return Frame(MsgType.GLOBAL_BROADCAST, round_, SERVER_ID, encode_prototypes(protos))


def param_upload(round_: int, client_id: int, arrays: Dict[str, np.ndarray]) -> Frame:
    return Frame(MsgType.PARAM_UPLOAD, round_, client_id, dump_arrays(arrays))


def param_broadcast(round_: int, arrays: Dict[str, np.ndarray]) -> Frame:
    return Frame(MsgType.PARAM_BROADCAST, round_, SERVER_ID, dump_arrays(arrays))


def decode_params(payload: bytes):
    return load_arrays(payload)


def control_frame(op: str, round_: int = 0, client_id: int = SERVER_ID, **fields) -> Frame:
    return Frame(MsgType.ROUND_CONTROL, round_, client_id, encode_control(op, **fields))


def error_frame(code: str, message: str, round_: int = 0, client_id: int = SERVER_ID) -> Frame:
    return Frame(MsgType.ERROR, round_, client_id, encode_error(code, message))


def frame_error(frame: Frame) -> Optional[Dict[str, str]]:
    return decode_error(frame.payload) if frame.msg_type == MsgType.ERROR else None

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

""" Length-prefixed binary frames: 13-byte big-endian header plus payload """

import struct
from dataclasses import dataclass

from ..errors import FramingError, OversizeError, ProtocolError
from ..models.enums.all import MsgType

HEADER = struct.Struct('>IBII')
HEADER_SIZE = HEADER.size
MAX_PAYLOAD = 64 * 1024 * 1024
SERVER_ID = 0
DATA_TYPES = frozenset({
    MsgType.PROTOTYPE_UPLOAD, MsgType.GLOBAL_BROADCAST, MsgType.PARAM_UPLOAD, MsgType.PARAM_BROADCAST,
})


@dataclass(frozen=True)
class Frame:
    msg_type: MsgType
    round: int
    client_id: int
    payload: bytes = b''

    @property
    def size(self) -> int:
        return HEADER_SIZE + len(self.payload)

    @property
    def is_data(self) -> bool:
        return self.msg_type in DATA_TYPES


def encode(frame: Frame) -> bytes:
    if len(frame.payload) > MAX_PAYLOAD:
        raise OversizeError(f"Payload of {len(frame.payload)} bytes exceeds {MAX_PAYLOAD}")
    return HEADER.pack(len(frame.payload), int(frame.msg_type), frame.round, frame.client_id) + frame.payload


def decode_header(header: bytes):
    """Validate a header and return (length, msg_type, round, client_id)."""
    if len(header) < HEADER_SIZE:
        raise FramingError(f"Frame header truncated: {len(header)} of {HEADER_SIZE} bytes")
    length, raw_type, round_, client_id = HEADER.unpack_from(header)
    try:
        msg_type = MsgType(raw_type)
    except ValueError:
        raise ProtocolError(f"Unknown message type {raw_type}") from None
    if length > MAX_PAYLOAD:
        raise OversizeError(f"Frame announces {length} bytes, limit is {MAX_PAYLOAD}")
    return length, msg_type, round_, client_id


def decode(data: bytes) -> Frame:
    length, msg_type, round_, client_id = decode_header(data)
    available = len(data) - HEADER_SIZE
    if available < length:
        raise FramingError(f"Frame payload truncated: {available} of {length} bytes")
    if available > length:
        raise FramingError(f"{available - length} bytes after frame payload")
    return Frame(msg_type, round_, client_id, bytes(data[HEADER_SIZE:]))

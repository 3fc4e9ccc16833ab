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

""" Generic utility functions for protofed """

from typing import Tuple

import numpy as np


def parse_addr(addr: str) -> Tuple[str, int]:
    """
    Parse an address into host and port components.

    Args:
        addr: Address in format {host}:{port}; IPv6 hosts may be bracketed

    Returns:
        Tuple of (host, port)

    Raises:
        ValueError: If address format is invalid
    """
    if ':' not in addr:
        raise ValueError(f"Invalid address format: {addr}. Expected {'{host}'}:{'{port}'}")

    # Split on last colon only - IPv6 hosts contain more
    host, port = addr.rsplit(':', 1)
    host = host.strip('[]')

    if not host or not port.isdigit():
        raise ValueError(f"Invalid address format: {addr}. Host and numeric port required.")

    port_number = int(port)
    if port_number > 65535:
        raise ValueError(f"Invalid port in address: {addr}")

    return host, port_number


def make_addr(host: str, port: int) -> str:
    """Construct an address string from host and port."""
    if ':' in host:
        return f"[{host}]:{port}"
    return f"{host}:{port}"


def derive_seed(seed: int, *keys: int) -> int:
    """Derive an independent 32-bit seed from an experiment seed and integer keys."""
    sequence = np.random.SeedSequence([int(seed) & 0xFFFFFFFF, *[int(k) for k in keys]])
    return int(sequence.generate_state(1)[0])

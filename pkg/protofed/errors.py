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

""" Exceptions raised by protofed """


class ProtofedError(Exception):
    """Base class for every error raised by this package."""


class DimensionError(ProtofedError, ValueError):
    """Raised when tensor shapes do not agree."""


class DegenerateBatchError(ProtofedError, ValueError):
    """Raised when batch statistics are requested from a single sample."""


class ConfigError(ProtofedError, ValueError):
    """Raised on invalid configuration values."""


class ArchitectureMismatchError(ConfigError):
    """Raised when client models do not share names and shapes."""


class StateError(ProtofedError, RuntimeError):
    """Raised when an operation runs against incomplete state (e.g. missing gradients)."""


class ImbalanceConfigError(ProtofedError, ValueError):
    """Raised when a class present in the labels has a zero training count."""


class SimilarityUndefinedError(ProtofedError, ValueError):
    """Raised when cosine similarity is requested for a zero-norm vector."""


class FramingError(ProtofedError, ValueError):
    """Raised on truncated or inconsistent frames."""


class ProtocolError(ProtofedError, ValueError):
    """Raised on unknown message types or unexpected messages."""


class OversizeError(FramingError):
    """Raised when a frame announces a payload above the size limit."""


class SessionError(ProtofedError, OSError):
    """Raised when a transport session drops or times out."""


class SizeError(ProtofedError, ValueError):
    """Raised when requested data sizes cannot be honored."""


class StratificationError(ProtofedError, ValueError):
    """Raised when a stratified split cannot keep every class in both parts."""


class ParseError(ProtofedError, ValueError):
    """Raised on a malformed CSV row; carries the 1-based file line number."""

    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.line = line


class SchemaError(ProtofedError, ValueError):
    """Raised when CSV columns do not match the expected schema."""


class UndefinedMetricError(ProtofedError, ValueError):
    """Raised when a metric needs samples of a class that has none."""


class ClientFailureError(ProtofedError, RuntimeError):
    """Raised on the server when a client answers a broadcast with an Error frame."""

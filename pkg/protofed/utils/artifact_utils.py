"""Utility functions for run artifact handling."""
import json
from pathlib import Path
from typing import Iterable, List, Optional

import pandas as pd
from hurry.filesize import size, alternative
from loguru import logger as log

from ..errors import ProtofedError


class InvalidArtifactNameError(ProtofedError, ValueError):
    """Raised when an artifact name would escape its run directory."""


def artifact_path(output_dir, name: str) -> Path:
    """
    Resolve an artifact name inside a run directory.

    Raises:
        InvalidArtifactNameError: If name is absolute or climbs out of output_dir
    """
    candidate = Path(name)
    if candidate.is_absolute() or '..' in candidate.parts:
        raise InvalidArtifactNameError(f"Invalid artifact name: {name}")
    path = Path(output_dir) / candidate
    path.parent.mkdir(parents=True, exist_ok=True)
    return path


def write_json(output_dir, name: str, data) -> Path:
    path = artifact_path(output_dir, name)
    with open(path, 'w', encoding='utf-8') as file:
        json.dump(data, file, indent=2, sort_keys=True)
        file.write('\n')
    log.debug("Wrote {} ({})", path, human_size(path.stat().st_size))
    return path


def write_csv(output_dir, name: str, rows: Iterable[dict], columns: Optional[List[str]] = None) -> Path:
    """
    Write rows as CSV with a fixed column order.

    Floats are written with repr precision so reruns are byte-identical.
    """
    path = artifact_path(output_dir, name)
    frame = pd.DataFrame(list(rows), columns=columns)
    frame.to_csv(path, index=False, float_format='%.17g', lineterminator='\n')
    log.debug("Wrote {} ({} rows)", path, len(frame))
    return path


def human_size(n_bytes: int) -> str:
    return size(int(n_bytes), system=alternative)

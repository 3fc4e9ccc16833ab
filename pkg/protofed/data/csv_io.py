""" CSV ingestion and export for `timestamp,ch01..chNN,label` series """

import re
from pathlib import Path
from typing import List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from loguru import logger as log
from pydantic import BaseModel, Field

from ..errors import ParseError, SchemaError
from ..models.enums.all import LabelRule
from ..models.pd.dataset import DatasetSpec
from ..utils.artifact_utils import write_json
from .windows import ClientDataset, normalize, split_train_test, window_slice

HEADER_LINE = 1


def channel_names(channels: int) -> List[str]:
    return [f"ch{index:02d}" for index in range(1, channels + 1)]


class CsvSchema(BaseModel):
    timestamp: str = 'timestamp'
    label: str = 'label'
    channels: List[str] = Field(default_factory=lambda: channel_names(16))

    @classmethod
    def for_channels(cls, channels: int) -> 'CsvSchema':
        return cls(channels=channel_names(channels))

    @property
    def columns(self) -> List[str]:
        return [self.timestamp, *self.channels, self.label]


def export_csv(
    values: np.ndarray,
    flags: Sequence[int],
    path,
    start: str = '2026-01-01T00:00:00',
    freq: str = '10min',
    schema: Optional[CsvSchema] = None,
) -> Path:
    values = np.asarray(values, dtype=np.float64)
    schema = schema or CsvSchema.for_channels(values.shape[1])
    if len(schema.channels) != values.shape[1]:
        raise SchemaError(f"Schema names {len(schema.channels)} channels, values carry {values.shape[1]}")
    frame = pd.DataFrame(values, columns=schema.channels)
    frame.insert(0, schema.timestamp, pd.date_range(start, periods=len(frame), freq=freq).strftime('%Y-%m-%dT%H:%M:%S'))
    frame[schema.label] = np.asarray(flags, dtype=np.int64)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, index=False, float_format='%.17g', lineterminator='\n')
    return path


def _is_float(text: str) -> bool:
    try:
        float(text)
    except ValueError:
        return False
    return True


def _first_bad(mask: pd.Series) -> Optional[int]:
    hits = np.flatnonzero(mask.to_numpy())
    return int(hits[0]) if hits.size else None


def read_series(path, schema: Optional[CsvSchema] = None) -> Tuple[np.ndarray, np.ndarray]:
    """
    Parse a series file into (values L×d, flags L).

    Missing channel values are forward-filled, then filled with the column
    mean; a column with no values at all becomes 0.
    """
    schema = schema or CsvSchema()
    try:
        frame = pd.read_csv(path, dtype=str, keep_default_na=False)
    except pd.errors.EmptyDataError as exc:
        raise SchemaError(f"{path} has no header row") from exc
    except pd.errors.ParserError as exc:
        match = re.search(r'line (\d+)', str(exc))
        raise ParseError(str(exc), int(match.group(1)) if match else 0) from exc

    unknown = [name for name in frame.columns if name not in schema.columns]
    if unknown:
        raise SchemaError(f"Unknown columns: {', '.join(unknown)}")
    missing = [name for name in schema.columns if name not in frame.columns]
    if missing:
        raise SchemaError(f"Missing columns: {', '.join(missing)}")

    values = pd.DataFrame(index=frame.index)
    for name in schema.channels:
        raw = frame[name].fillna('').str.strip()
        try:
            values[name] = raw.where(raw != '').astype(np.float64)
        except ValueError:
            row = _first_bad(raw.map(lambda text: text != '' and not _is_float(text)))
            raise ParseError(f"non-numeric value {raw.iloc[row]!r} in column {name}", row + HEADER_LINE + 1) from None

    raw_labels = frame[schema.label].fillna('').str.strip()
    row = _first_bad(~raw_labels.isin(['0', '1']))
    if row is not None:
        raise ParseError(f"label must be 0 or 1, got {raw_labels.iloc[row]!r}", row + HEADER_LINE + 1)

    raw_time = frame[schema.timestamp].fillna('').str.strip()
    stamps = pd.to_datetime(raw_time.where(raw_time != ''), errors='coerce')
    row = _first_bad(stamps.isna() & (raw_time != ''))
    if row is not None:
        raise ParseError(f"bad timestamp {raw_time.iloc[row]!r}", row + HEADER_LINE + 1)

    gaps = int(values.isna().to_numpy().sum())
    if gaps:
        log.info("Imputing {} missing values in {}", gaps, path)
        values = values.ffill()
        values = values.fillna(values.mean()).fillna(0.0)
    return values.to_numpy(dtype=np.float64), raw_labels.astype(np.int64).to_numpy()


def load_csv(
    path,
    window: int,
    stride: Optional[int] = None,
    schema: Optional[CsvSchema] = None,
    label_rule: LabelRule = LabelRule.ANY,
    train_fraction: float = 0.6,
    seed: int = 0,
    client_id: int = 0,
    standardize: bool = True,
) -> ClientDataset:
    """Read, window, split and (by default) z-score one client's series with train statistics."""
    values, flags = read_series(path, schema)
    windows, labels = window_slice(values, window, stride or max(1, window // 2), flags, label_rule)
    x_train, x_test, y_train, y_test = split_train_test(windows, labels, train_fraction, seed)
    if standardize:
        x_train, x_test = normalize(x_train, x_test)
    log.info("Loaded {}: {} train / {} test windows", path, y_train.size, y_test.size)
    return ClientDataset(client_id, x_train, y_train, x_test, y_test)


def write_dataset_manifest(datasets: Sequence[ClientDataset], spec: DatasetSpec, output_dir, name: str = 'dataset.json') -> Path:
    clients = []
    for dataset in datasets:
        train, test = dataset.train_counts, dataset.test_counts
        clients.append({
            'client_id': dataset.client_id,
            'train': {'non_icing': train.n0, 'icing': train.n1},
            'test': {'non_icing': test.n0, 'icing': test.n1},
        })
    return write_json(output_dir, name, {
        'spec': spec.model_dump(mode='json'),
        'seed': spec.seed,
        'clients': clients,
    })

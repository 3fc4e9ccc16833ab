""" Frame byte accounting per round, client and direction """

import threading
from collections import defaultdict
from typing import Dict, List, Tuple

from ..utils.artifact_utils import human_size
from .frames import DATA_TYPES, Frame

UP = 'up'
DOWN = 'down'


class ByteLedger:
    """Thread-safe totals of frame bytes keyed by (round, client, direction, msg type)."""

    def __init__(self):
        self._lock = threading.Lock()
        self._bytes: Dict[Tuple[int, int, str, int], int] = defaultdict(int)

    def record(self, frame: Frame, client_id: int, direction: str):
        with self._lock:
            self._bytes[(frame.round, client_id, direction, int(frame.msg_type))] += frame.size

    def totals(self, round_: int, client_id: int, data_only: bool = True) -> Tuple[int, int]:
        """(uploaded, downloaded) bytes; control and error frames are skipped unless data_only is False."""
        up = down = 0
        with self._lock:
            for (r, c, direction, msg_type), n_bytes in self._bytes.items():
                if r != round_ or c != client_id or (data_only and msg_type not in DATA_TYPES):
                    continue
                if direction == UP:
                    up += n_bytes
                else:
                    down += n_bytes
        return up, down


def bytes_accounting(report) -> List[dict]:
    """Per-round, per-client uploaded/downloaded data-frame bytes from a TrainReport."""
    return [
        {
            'round': record.round,
            'client': record.client_id,
            'upload_bytes': record.upload_bytes,
            'download_bytes': record.download_bytes,
        }
        for record in report.records
    ]


def mean_upload(report) -> float:
    uploads = [record.upload_bytes for record in report.records if not record.excluded]
    return sum(uploads) / len(uploads) if uploads else 0.0


def compare_bytes(proto_report, fedavg_report) -> List[dict]:
    """Mean upload bytes per client per round for both modes, with the ratio to FedAvg."""
    baseline = mean_upload(fedavg_report)
    rows = []
    for mode, report in (('fedhpb', proto_report), ('fedavg', fedavg_report)):
        upload = mean_upload(report)
        rows.append({
            'mode': mode,
            'upload_bytes': upload,
            'upload_size': human_size(upload),
            'ratio_to_fedavg': upload / baseline if baseline else float('nan'),
        })
    return rows

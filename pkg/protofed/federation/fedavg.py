""" FedAvg baseline: dataset-size-weighted parameter averaging """

from collections import OrderedDict
from typing import Dict, Sequence, Tuple

import numpy as np
from loguru import logger as log

from ..errors import ArchitectureMismatchError
from ..model import init_params
from ..models.enums.all import MsgType
from ..models.pd.model import LcnnConfig
from ..models.pd.rounds import RoundConfig
from ..transport.payloads import decode_params, param_broadcast
from .report import TrainReport
from .server import build_record, collect_round, round_objective

Arrays = Dict[str, np.ndarray]


def check_architecture(reference: Arrays, arrays: Arrays, label: str = 'client'):
    if list(reference) != list(arrays):
        raise ArchitectureMismatchError(f"{label} parameter names differ from the global model")
    for name, value in arrays.items():
        if np.shape(value) != np.shape(reference[name]):
            raise ArchitectureMismatchError(
                f"{label} parameter {name} has shape {np.shape(value)}, expected {np.shape(reference[name])}"
            )


def weighted_mean_params(entries: Sequence[Tuple[float, Arrays]]) -> 'OrderedDict[str, np.ndarray]':
    """Σ w_i·θ_i / Σ w_i, accumulated as offsets from the first entry so equal inputs stay exact."""
    if not entries:
        raise ValueError("No parameter sets to average")
    total = float(sum(weight for weight, _ in entries))
    if total <= 0:
        raise ValueError("Aggregation weights must sum to a positive value")
    anchor = entries[0][1]
    for _, arrays in entries[1:]:
        check_architecture(anchor, arrays)
    result = OrderedDict()
    for name, base in anchor.items():
        value = np.array(base, dtype=np.float64)
        for weight, arrays in entries[1:]:
            value = value + (weight / total) * (arrays[name] - base)
        result[name] = value
    return result


def fedavg_run(transport, config: RoundConfig, model_config: LcnnConfig, seed: int) -> TrainReport:
    """
    Parameter federation loop used as the baseline.

    The round-1 broadcast is a freshly initialized global model; batch-norm
    running statistics never leave the clients.
    """
    report = TrainReport(mode='fedavg')
    global_params = init_params(model_config, seed).state_dict()
    for round_ in range(1, config.rounds + 1):
        log.info("Round {}/{}: broadcasting {} parameters", round_, config.rounds,
                 sum(v.size for v in global_params.values()))
        broadcast = param_broadcast(round_, global_params)
        outcomes = collect_round(transport, lambda _: broadcast, MsgType.PARAM_UPLOAD, config)

        entries = []
        for cid in sorted(outcomes):
            outcome = outcomes[cid]
            if outcome.excluded:
                continue
            arrays = decode_params(outcome.data.payload)
            check_architecture(global_params, arrays, f"client {cid}")
            entries.append((float(outcome.report.get('n_train', 0)), arrays))
        if entries:
            global_params = weighted_mean_params(entries)
        else:
            log.warning("Round {}: no client uploaded parameters, keeping the previous global model", round_)

        records = [build_record(round_, outcomes[cid], transport) for cid in sorted(outcomes)]
        report.records.extend(records)
        report.close_round(round_, round_objective(records), None)
    report.finalize()
    return report

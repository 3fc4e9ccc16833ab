""" Server round loop: broadcast, collect with one retry, aggregate """

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional

from loguru import logger as log

from ..errors import ClientFailureError, FramingError, ProtocolError, SessionError
from ..losses import federated_objective
from ..metrics import ConfusionCounts
from ..models.enums.all import MsgType
from ..models.pd.rounds import RoundConfig
from ..prototypes import PrototypeSet, aggregate_global
from ..transport.frames import Frame
from ..transport.payloads import decode_control, decode_prototypes, frame_error, global_broadcast
from .report import ClientRoundRecord, TrainReport

MAX_ATTEMPTS = 2
EXCHANGE_ERRORS = (SessionError, ProtocolError, FramingError, ClientFailureError)


@dataclass
class ClientOutcome:
    client_id: int
    data: Optional[Frame] = None
    report: Dict = field(default_factory=dict)
    attempts: int = 0
    error: Optional[str] = None

    @property
    def excluded(self) -> bool:
        return self.data is None


def _exchange_once(transport, client_id: int, frame: Frame, expected: MsgType):
    replies = transport.exchange(client_id, frame)
    for reply in replies:
        error = frame_error(reply)
        if error is not None:
            raise ClientFailureError(f"{error['code']}: {error['message']}")
    data = [reply for reply in replies if reply.msg_type == expected]
    reports = [decode_control(reply.payload) for reply in replies if reply.msg_type == MsgType.ROUND_CONTROL]
    if len(data) != 1 or not reports or reports[-1]['op'] != 'report':
        raise ProtocolError(f"Client {client_id} sent {[r.msg_type.name for r in replies]}, expected {expected.name} + report")
    return data[0], reports[-1]


def exchange_with_retry(transport, client_id: int, frame: Frame, expected: MsgType) -> ClientOutcome:
    """A failed exchange is retried once with the same frame; a second failure excludes the client."""
    outcome = ClientOutcome(client_id)
    while outcome.attempts < MAX_ATTEMPTS:
        outcome.attempts += 1
        try:
            outcome.data, outcome.report = _exchange_once(transport, client_id, frame, expected)
            outcome.error = None
            return outcome
        except EXCHANGE_ERRORS as exc:
            outcome.error = str(exc)
            log.warning("Client {} round {} attempt {} failed: {}", client_id, frame.round, outcome.attempts, exc)
    log.error("Client {} excluded from round {}", client_id, frame.round)
    return outcome


def collect_round(
    transport,
    frame_for: Callable[[int], Frame],
    expected: MsgType,
    config: RoundConfig,
) -> Dict[int, ClientOutcome]:
    """Run one exchange per client, sequentially in id order or on a thread pool."""
    client_ids = transport.client_ids
    if config.parallel and len(client_ids) > 1:
        with ThreadPoolExecutor(max_workers=len(client_ids), thread_name_prefix='protofed-round') as pool:
            futures = {cid: pool.submit(exchange_with_retry, transport, cid, frame_for(cid), expected)
                       for cid in client_ids}
            return {cid: futures[cid].result() for cid in client_ids}
    return {cid: exchange_with_retry(transport, cid, frame_for(cid), expected) for cid in client_ids}


def build_record(round_: int, outcome: ClientOutcome, transport) -> ClientRoundRecord:
    upload, download = transport.ledger.totals(round_, outcome.client_id)
    record = ClientRoundRecord(
        round=round_, client_id=outcome.client_id, upload_bytes=upload, download_bytes=download,
        attempts=outcome.attempts, excluded=outcome.excluded, error=outcome.error,
    )
    if outcome.excluded:
        return record
    report = outcome.report
    record.epoch_losses = [float(value) for value in report.get('epoch_losses', [])]
    record.mean_loss = sum(record.epoch_losses) / len(record.epoch_losses) if record.epoch_losses else None
    record.supervised_loss = report.get('supervised_loss')
    record.prototype_loss = report.get('prototype_loss')
    record.lam = float(report.get('lam', 0.0))
    record.n_train = int(report.get('n_train', 0))
    record.single_class = bool(report.get('single_class', False))
    record.wall_time = float(report.get('wall_time', 0.0))
    record.set_confusion(ConfusionCounts(**report.get('confusion', {})))
    return record


def round_objective(records: List[ClientRoundRecord]) -> Optional[float]:
    terms = [(r.supervised_loss, r.prototype_loss, r.lam) for r in records
             if not r.excluded and r.supervised_loss is not None]
    return federated_objective(terms) if terms else None


def server_run(transport, config: RoundConfig, mode: str = 'fedhpb') -> TrainReport:
    """
    Prototype federation loop.

    Round 1 broadcasts an empty prototype set; every later round broadcasts
    the aggregate of the previous round. Excluded clients keep the previous
    global prototypes out of the aggregate for that round only.
    """
    report = TrainReport(mode=mode)
    global_protos = PrototypeSet()
    for round_ in range(1, config.rounds + 1):
        log.info("Round {}/{}: broadcasting {}", round_, config.rounds, global_protos)
        broadcast = global_broadcast(round_, global_protos)
        outcomes = collect_round(transport, lambda _: broadcast, MsgType.PROTOTYPE_UPLOAD, config)

        locals_ = [(cid, decode_prototypes(o.data.payload)) for cid, o in sorted(outcomes.items()) if not o.excluded]
        if locals_:
            global_protos = aggregate_global(locals_, config.aggregation)
        else:
            log.warning("Round {}: no client uploaded prototypes, keeping the previous global set", round_)

        records = [build_record(round_, outcomes[cid], transport) for cid in sorted(outcomes)]
        report.records.extend(records)
        summary = report.close_round(round_, round_objective(records), global_protos.to_dict())
        log.info(
            "Round {}/{} aggregated from {} clients: mFβ={} mBA={}",
            round_, config.rounds, summary.participants, summary.mfbeta, summary.mba,
        )
    report.finalize()
    return report

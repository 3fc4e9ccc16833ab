""" Client side: local training, evaluation and the frame handler """

import copy
import time
from dataclasses import dataclass, field
from typing import Dict, List, Optional

import numpy as np
from loguru import logger as log

from ..data.windows import ClientDataset
from ..errors import SizeError
from ..losses import contrastive_term, l2_term, total_loss, weighted_supervised_loss
from ..metrics import ConfusionCounts, confusion_counts
from ..model import LcnnModel, init_params
from ..models.enums.all import LossSecondTerm, MsgType, OptimizerKind
from ..models.pd.model import LcnnConfig
from ..models.pd.rounds import RoundConfig
from ..ndkernel import adam_step, clip_grad_norm, sgd_step
from ..prototypes import PrototypeSet, RunningMean, batch_class_means
from ..transport.frames import Frame
from ..transport.payloads import (
    control_frame, decode_control, decode_params, decode_prototypes, error_frame, param_upload, prototype_upload,
)
from ..utils.utils import derive_seed

MIN_BATCH = 2


@dataclass
class LocalResult:
    prototypes: PrototypeSet
    epoch_losses: List[float] = field(default_factory=list)
    supervised_loss: float = 0.0
    prototype_loss: Optional[float] = None
    lam: float = 0.0
    single_class: bool = False


class ClientState:
    """One client's data, model, optimizer state and stored global prototype targets."""

    def __init__(self, client_id: int, dataset: ClientDataset, model: LcnnModel, seed: int):
        self.client_id = client_id
        self.dataset = dataset
        self.model = model
        self.global_targets = PrototypeSet()
        self.rng = np.random.default_rng(seed)
        self.last_result: Optional[LocalResult] = None

    def snapshot(self) -> Dict:
        return {
            'arrays': self.model.state_dict(include_buffers=True),
            'optimizer': copy.deepcopy(self.model.store.state),
            'steps': self.model.store.step_count,
            'rng': copy.deepcopy(self.rng.bit_generator.state),
            'targets': self.global_targets,
        }

    def restore(self, snapshot: Dict):
        self.model.load_state_dict(snapshot['arrays'])
        self.model.store.state = snapshot['optimizer']
        self.model.store.step_count = snapshot['steps']
        self.model.store.zero_grad()
        self.rng.bit_generator.state = snapshot['rng']
        self.global_targets = snapshot['targets']


def make_clients(datasets: List[ClientDataset], model_config: LcnnConfig, seed: int) -> List[ClientState]:
    """Each client gets its own initialization and training stream derived from (seed, client_id)."""
    return [
        ClientState(
            dataset.client_id,
            dataset,
            init_params(model_config, derive_seed(seed, dataset.client_id, 0)),
            derive_seed(seed, dataset.client_id, 1),
        )
        for dataset in datasets
    ]


def _optimizer_step(model: LcnnModel, config: RoundConfig):
    if config.optimizer == OptimizerKind.ADAM:
        adam_step(model.store, config.lr, config.beta1, config.beta2, config.adam_eps)
    else:
        sgd_step(model.store, config.lr, config.momentum)


def train_local(
    client: ClientState,
    global_protos: PrototypeSet,
    config: RoundConfig,
    second_term: LossSecondTerm,
) -> LocalResult:
    """
    Run config.epochs of mini-batch training and return final-epoch prototypes.

    The prototype term is dropped (λ = 0) when the client lacks a class, when
    the global set does not cover both classes yet, or when λ is 0.
    """
    loss_config = config.loss
    model, dataset = client.model, client.dataset
    x, y = dataset.x_train, dataset.y_train
    n = y.shape[0]
    if n < MIN_BATCH:
        raise SizeError(f"Client {client.client_id} has {n} training windows, need at least {MIN_BATCH}")

    counts = dataset.train_counts
    term = LossSecondTerm(second_term)
    active = (
        term != LossSecondTerm.NONE
        and loss_config.lam > 0
        and not counts.single_class
        and global_protos.has_all()
    )
    lam = loss_config.lam if active else 0.0
    if counts.single_class:
        log.warning("Client {} holds a single class, training on the supervised loss only", client.client_id)

    result = LocalResult(PrototypeSet(), lam=lam, single_class=counts.single_class)
    running = RunningMean()
    clip = model.config.clip_norm
    for epoch in range(config.epochs):
        final_epoch = epoch == config.epochs - 1
        order = client.rng.permutation(n)
        seen = 0
        loss_sum = supervised_sum = prototype_sum = 0.0
        for start in range(0, n, config.batch_size):
            index = order[start:start + config.batch_size]
            if index.size < MIN_BATCH:
                continue
            labels = y[index]
            embeddings, logits = model.forward(x[index], training=True, rng=client.rng)
            supervised = weighted_supervised_loss(logits, labels, counts)
            loss = supervised
            prototype = None
            if active:
                means, classes = batch_class_means(embeddings, labels)
                if term == LossSecondTerm.L2:
                    prototype = l2_term(means, classes, global_protos)
                else:
                    prototype = contrastive_term(means, classes, global_protos, counts, loss_config)
                loss = total_loss(supervised, prototype, lam)
            loss.backward()
            if clip:
                clip_grad_norm(model.lstm_parameters(), clip)
            _optimizer_step(model, config)

            size = index.size
            seen += size
            loss_sum += loss.item() * size
            supervised_sum += supervised.item() * size
            if prototype is not None:
                prototype_sum += prototype.item() * size
            if final_epoch:
                running.update(embeddings.data, labels)
        if not seen:
            raise SizeError(f"Client {client.client_id}: no batch of at least {MIN_BATCH} windows in an epoch")
        result.epoch_losses.append(loss_sum / seen)
        if final_epoch:
            result.supervised_loss = supervised_sum / seen
            result.prototype_loss = prototype_sum / seen if active else None
        log.debug("Client {} epoch {}/{} loss {:.6f}", client.client_id, epoch + 1, config.epochs, loss_sum / seen)

    result.prototypes = running.finalize()
    client.last_result = result
    return result


def local_update(client: ClientState, global_protos: PrototypeSet, config: RoundConfig) -> PrototypeSet:
    client.global_targets = global_protos
    return train_local(client, global_protos, config, config.loss.second_term).prototypes


def evaluate(client: ClientState) -> ConfusionCounts:
    predictions = client.model.predict(client.dataset.x_test)
    return confusion_counts(client.dataset.y_test, predictions)


class ClientWorker:
    """Answers server frames for one client; a failure restores the round-start snapshot."""

    def __init__(self, state: ClientState, config: RoundConfig):
        self.state = state
        self.config = config
        self.closed = False

    @property
    def client_id(self) -> int:
        return self.state.client_id

    def __call__(self, frame: Frame) -> List[Frame]:
        return self.handle(frame)

    def handle(self, frame: Frame) -> List[Frame]:
        if frame.msg_type == MsgType.ROUND_CONTROL:
            return self._on_control(frame)
        handlers = {
            MsgType.GLOBAL_BROADCAST: self._on_global,
            MsgType.PARAM_BROADCAST: self._on_params,
        }
        handler = handlers.get(frame.msg_type)
        if handler is None:
            return [error_frame('unexpected_message', f"client cannot handle {frame.msg_type.name}",
                                frame.round, self.client_id)]
        snapshot = self.state.snapshot()
        try:
            return handler(frame)
        except Exception as exc:  # pylint: disable=W0703
            self.state.restore(snapshot)
            log.error("Client {} failed in round {}: {}", self.client_id, frame.round, exc)
            return [error_frame('client_failure', f"{type(exc).__name__}: {exc}", frame.round, self.client_id)]

    def _on_control(self, frame: Frame) -> List[Frame]:
        op = decode_control(frame.payload)['op']
        if op == 'close':
            self.closed = True
            log.debug("Client {} closing", self.client_id)
        return []

    def _on_global(self, frame: Frame) -> List[Frame]:
        started = time.perf_counter()
        protos = local_update(self.state, decode_prototypes(frame.payload), self.config)
        return [
            prototype_upload(frame.round, self.client_id, protos),
            self._report(frame.round, self.state.last_result, started),
        ]

    def _on_params(self, frame: Frame) -> List[Frame]:
        started = time.perf_counter()
        self.state.model.load_state_dict(decode_params(frame.payload), strict=True)
        result = train_local(self.state, PrototypeSet(), self.config, LossSecondTerm.NONE)
        return [
            param_upload(frame.round, self.client_id, self.state.model.state_dict()),
            self._report(frame.round, result, started),
        ]

    def _report(self, round_: int, result: LocalResult, started: float) -> Frame:
        confusion = evaluate(self.state)
        return control_frame(
            'report', round_, self.client_id,
            epoch_losses=result.epoch_losses,
            supervised_loss=result.supervised_loss,
            prototype_loss=result.prototype_loss,
            lam=result.lam,
            single_class=result.single_class,
            n_train=self.state.dataset.n_train,
            confusion=confusion.to_dict(),
            wall_time=time.perf_counter() - started,
        )

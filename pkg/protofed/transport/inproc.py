""" Deterministic in-process carrier: frames are encoded and decoded on every hop """

from typing import Callable, Dict, List, Mapping

from loguru import logger as log

from ..errors import SessionError
from .accounting import DOWN, UP, ByteLedger
from .frames import Frame, decode, encode
from .payloads import control_frame

Handler = Callable[[Frame], List[Frame]]


class InProcTransport:
    def __init__(self, handlers: Mapping[int, Handler], ledger: ByteLedger = None):
        self._handlers: Dict[int, Handler] = dict(handlers)
        self.ledger = ledger or ByteLedger()

    @property
    def client_ids(self) -> List[int]:
        return sorted(self._handlers)

    def exchange(self, client_id: int, frame: Frame) -> List[Frame]:
        """Deliver one frame to a client and return its replies."""
        if client_id not in self._handlers:
            raise SessionError(f"No client {client_id} on this transport")
        delivered = decode(encode(frame))
        self.ledger.record(delivered, client_id, DOWN)
        try:
            replies = self._handlers[client_id](delivered)
        except Exception as exc:
            raise SessionError(f"Client {client_id} failed: {exc}") from exc
        received = []
        for reply in replies:
            reply = decode(encode(reply))
            self.ledger.record(reply, client_id, UP)
            received.append(reply)
        return received

    def close(self, round_: int = 0):
        for client_id in self.client_ids:
            try:
                self.exchange(client_id, control_frame('close', round_))
            except SessionError as exc:
                log.warning("Close failed for client {}: {}", client_id, exc)

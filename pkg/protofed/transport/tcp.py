""" TCP carrier: one connection per client for the whole experiment """

import socket
import threading
from typing import Dict, List, Optional, Tuple

from loguru import logger as log

from ..errors import FramingError, ProtocolError, SessionError
from ..models.enums.all import MsgType
from ..utils.utils import make_addr, parse_addr
from .accounting import DOWN, UP, ByteLedger
from .frames import HEADER_SIZE, Frame, decode_header, encode
from .payloads import control_frame, decode_control, error_frame, frame_error

TERMINAL_TYPES = frozenset({MsgType.ROUND_CONTROL, MsgType.ERROR})


class Session:
    """Ordered frame stream over one socket; reads and writes are serialized per direction."""

    def __init__(self, sock: socket.socket, client_id: Optional[int] = None):
        self.sock = sock
        self.client_id = client_id
        self._send_lock = threading.Lock()
        self._recv_lock = threading.Lock()

    def _recv_exact(self, count: int) -> bytes:
        chunks = []
        remaining = count
        while remaining:
            chunk = self.sock.recv(min(remaining, 1 << 20))
            if not chunk:
                raise SessionError(f"Connection closed with {remaining} of {count} bytes outstanding")
            chunks.append(chunk)
            remaining -= len(chunk)
        return b''.join(chunks)

    def send(self, frame: Frame):
        data = encode(frame)
        with self._send_lock:
            try:
                self.sock.sendall(data)
            except OSError as exc:
                raise SessionError(f"Send failed: {exc}") from exc

    def recv(self) -> Frame:
        with self._recv_lock:
            try:
                length, msg_type, round_, client_id = decode_header(self._recv_exact(HEADER_SIZE))
                payload = self._recv_exact(length) if length else b''
            except SessionError:
                raise
            except OSError as exc:
                raise SessionError(f"Receive failed: {exc}") from exc
        return Frame(msg_type, round_, client_id, payload)

    def close(self):
        try:
            self.sock.close()
        except OSError:
            pass


def send(session: Session, frame: Frame):
    session.send(frame)


def recv(session: Session) -> Frame:
    return session.recv()


def connect(addr: str, client_id: int, timeout: Optional[float] = None) -> Session:
    """Open a client session and announce client_id with a hello frame."""
    host, port = parse_addr(addr)
    try:
        sock = socket.create_connection((host, port), timeout=timeout)
    except OSError as exc:
        raise SessionError(f"Cannot connect to {addr}: {exc}") from exc
    session = Session(sock, client_id)
    session.send(control_frame('hello', 0, client_id))
    log.debug("Client {} connected to {}", client_id, addr)
    return session


class TcpServer:
    """Server side of the TCP carrier; demultiplexes sessions by client id."""

    def __init__(self, host: str, port: int, timeout: Optional[float] = None, ledger: ByteLedger = None):
        self.timeout = timeout
        self.ledger = ledger or ByteLedger()
        self.sessions: Dict[int, Session] = {}
        family = socket.AF_INET6 if ':' in host else socket.AF_INET
        self._listener = socket.create_server((host, port), family=family)
        self._listener.settimeout(timeout)
        self.host, self.port = self._listener.getsockname()[:2]

    @property
    def address(self) -> str:
        return make_addr(self.host, self.port)

    @property
    def client_ids(self) -> List[int]:
        return sorted(self.sessions)

    def accept_clients(self, expected: int):
        """Accept connections until `expected` distinct client ids have said hello."""
        while len(self.sessions) < expected:
            try:
                conn, peer = self._listener.accept()
            except OSError as exc:
                raise SessionError(f"Waiting for clients failed: {exc}") from exc
            conn.settimeout(self.timeout)
            session = Session(conn)
            try:
                hello = session.recv()
                if hello.msg_type != MsgType.ROUND_CONTROL or decode_control(hello.payload)['op'] != 'hello':
                    raise ProtocolError(f"Expected hello from {peer}, got {hello.msg_type.name}")
            except (SessionError, ProtocolError, FramingError) as exc:
                log.warning("Dropping connection from {}: {}", peer, exc)
                session.close()
                continue
            client_id = hello.client_id
            if client_id in self.sessions:
                log.warning("Rejecting duplicate client id {} from {}", client_id, peer)
                try:
                    session.send(error_frame('duplicate_client', f"client id {client_id} already connected",
                                             client_id=client_id))
                finally:
                    session.close()
                continue
            session.client_id = client_id
            self.sessions[client_id] = session
            log.info("Client {} joined from {}:{} ({}/{})", client_id, peer[0], peer[1], len(self.sessions), expected)

    def exchange(self, client_id: int, frame: Frame) -> List[Frame]:
        """Send a frame and read replies up to the closing report or error frame."""
        session = self.sessions.get(client_id)
        if session is None:
            raise SessionError(f"No session for client {client_id}")
        session.send(frame)
        self.ledger.record(frame, client_id, DOWN)
        replies = []
        while True:
            reply = session.recv()
            self.ledger.record(reply, client_id, UP)
            replies.append(reply)
            if reply.msg_type in TERMINAL_TYPES:
                return replies

    def close(self, round_: int = 0):
        for client_id, session in sorted(self.sessions.items()):
            try:
                session.send(control_frame('close', round_))
            except SessionError as exc:
                log.warning("Close failed for client {}: {}", client_id, exc)
            session.close()
        self.sessions.clear()
        self._listener.close()


def serve(addr: str, timeout: Optional[float] = None, ledger: ByteLedger = None) -> TcpServer:
    host, port = parse_addr(addr)
    server = TcpServer(host, port, timeout, ledger)
    log.info("Listening on {}", server.address)
    return server


def run_client(addr: str, worker, timeout: Optional[float] = None):
    """Serve one ClientWorker over a TCP session until the server sends close."""
    session = connect(addr, worker.client_id, timeout)
    try:
        while not worker.closed:
            frame = session.recv()
            error = frame_error(frame)
            if error is not None:
                raise SessionError(f"Server rejected client {worker.client_id}: {error['code']}: {error['message']}")
            for reply in worker.handle(frame):
                session.send(reply)
    finally:
        session.close()


def client_thread(addr: str, worker, timeout: Optional[float] = None) -> Tuple[threading.Thread, list]:
    """Start run_client on a daemon thread; failures are collected in the returned list."""
    failures = []

    def target():
        try:
            run_client(addr, worker, timeout)
        except Exception as exc:  # pylint: disable=W0703
            log.error("Client {} stopped: {}", worker.client_id, exc)
            failures.append(exc)

    thread = threading.Thread(target=target, name=f"protofed-client-{worker.client_id}", daemon=True)
    thread.start()
    return thread, failures

from .accounting import ByteLedger, bytes_accounting, compare_bytes
from .frames import HEADER_SIZE, MAX_PAYLOAD, Frame, decode, encode
from .inproc import InProcTransport
from .tcp import TcpServer, connect, recv, run_client, send, serve

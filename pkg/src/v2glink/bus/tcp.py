"""TCP exposure of the broker: length-prefixed JSON frames over sockets.

Client to server ops: CONNECT {client_id, token?}, SUBSCRIBE {filter,
qos}, PUBLISH {topic, qos, payload_b64}, ACK {publisher, id},
DISCONNECT. Server to client: CONNACK, SUBACK, PUBACK {id, matched},
PUBLISH (a delivery), ERROR {reason}.

This is an operational convenience for poking the running system from
outside the process; the simulation itself drives the broker core
in-process through its own clock.
"""

from __future__ import annotations

import socket
import socketserver
import threading
from typing import Callable, Optional

from .broker import BrokerCore, BrokerError, BusMessage, QoS, Session
from .link import LinkProfile
from .realtime import RealTimeClock
from .topics import InvalidFilter, InvalidTopic
from .wire import FrameReader, decode_payload, encode_payload, encode_wire_frame


class BusTcpServer:
    def __init__(self, host: str = "127.0.0.1", port: int = 0,
                 core: Optional[BrokerCore] = None, token: Optional[str] = None,
                 link: Optional[LinkProfile] = None):
        self.clock = None
        if core is None:
            self.clock = RealTimeClock()
            core = BrokerCore(self.clock)
        self.core = core
        self.token = token
        self.link = link or LinkProfile(0.0)
        outer = self

        class Handler(socketserver.BaseRequestHandler):
            def handle(self) -> None:
                outer._serve(self.request)

        self._server = socketserver.ThreadingTCPServer((host, port), Handler)
        self._server.daemon_threads = True
        self._thread = threading.Thread(target=self._server.serve_forever, daemon=True)

    @property
    def address(self) -> tuple[str, int]:
        return self._server.server_address  # type: ignore[return-value]

    def start(self) -> "BusTcpServer":
        self._thread.start()
        return self

    def stop(self) -> None:
        self._server.shutdown()
        self._server.server_close()
        if self.clock is not None:
            self.clock.close()

    # -- per-connection loop -------------------------------------------------

    def _serve(self, sock: socket.socket) -> None:
        write_lock = threading.Lock()

        def send(obj: dict) -> None:
            data = encode_wire_frame(obj)
            with write_lock:
                try:
                    sock.sendall(data)
                except OSError:
                    pass

        session: Optional[Session] = None
        reader = FrameReader()
        try:
            while True:
                chunk = sock.recv(65536)
                if not chunk:
                    break
                for frame in reader.feed(chunk):
                    session = self._handle(frame, session, send)
                    if session is _CLOSED:
                        return
        except (OSError, ValueError):
            pass
        finally:
            if session not in (None, _CLOSED):
                session.close()

    def _handle(self, frame: dict, session, send: Callable[[dict], None]):
        op = frame.get("op")
        if session is None:
            if op != "CONNECT":
                send({"op": "ERROR", "reason": "expected CONNECT"})
                return _CLOSED
            if self.token is not None and frame.get("token") != self.token:
                send({"op": "ERROR", "reason": "bad token"})
                return _CLOSED
            client_id = str(frame.get("client_id", ""))

            def deliver(msg: BusMessage) -> None:
                send({
                    "op": "PUBLISH",
                    "topic": msg.topic,
                    "qos": int(msg.qos),
                    "id": msg.message_id,
                    "publisher": msg.publisher,
                    "payload_b64": encode_payload(msg.payload),
                    "sent_at": msg.sent_at_ms,
                })

            try:
                new_session = self.core.connect(client_id, deliver, link=self.link)
            except BrokerError as exc:
                send({"op": "ERROR", "reason": str(exc)})
                return _CLOSED
            send({"op": "CONNACK", "client_id": client_id})
            return new_session
        try:
            if op == "SUBSCRIBE":
                session.subscribe(frame["filter"], QoS(int(frame.get("qos", 1))))
                send({"op": "SUBACK", "filter": frame["filter"]})
            elif op == "PUBLISH":
                receipt = session.publish(
                    frame["topic"], decode_payload(frame.get("payload_b64", "")),
                    QoS(int(frame.get("qos", 0))),
                )
                send({"op": "PUBACK", "id": receipt.message_id, "matched": receipt.matched})
            elif op == "ACK":
                self.core._ack_arrived(session, (frame["publisher"], int(frame["id"])))
            elif op == "DISCONNECT":
                session.close()
                return _CLOSED
            else:
                send({"op": "ERROR", "reason": f"unknown op {op!r}"})
        except (BrokerError, InvalidTopic, InvalidFilter, KeyError, ValueError) as exc:
            send({"op": "ERROR", "reason": f"{type(exc).__name__}: {exc}"})
        return session


_CLOSED = object()


class BusTcpClient:
    """Minimal blocking client for tests and demo scripts."""

    def __init__(self, host: str, port: int, client_id: str, token: Optional[str] = None,
                 on_message: Optional[Callable[[dict], None]] = None):
        self._sock = socket.create_connection((host, port), timeout=5.0)
        self._reader = FrameReader()
        self._responses: list[dict] = []
        self._cond = threading.Condition()
        self.on_message = on_message
        self._rx = threading.Thread(target=self._recv_loop, daemon=True)
        self._rx.start()
        self._send({"op": "CONNECT", "client_id": client_id, **({"token": token} if token else {})})
        self.expect("CONNACK")

    def _send(self, obj: dict) -> None:
        self._sock.sendall(encode_wire_frame(obj))

    def _recv_loop(self) -> None:
        try:
            while True:
                chunk = self._sock.recv(65536)
                if not chunk:
                    return
                for frame in self._reader.feed(chunk):
                    if frame.get("op") == "PUBLISH":
                        if frame.get("qos") == int(QoS.AT_LEAST_ONCE):
                            self._send({"op": "ACK", "publisher": frame["publisher"], "id": frame["id"]})
                        if self.on_message is not None:
                            self.on_message(frame)
                        continue
                    with self._cond:
                        self._responses.append(frame)
                        self._cond.notify_all()
        except OSError:
            return

    def expect(self, op: str, timeout: float = 5.0) -> dict:
        with self._cond:
            end = None
            while True:
                for i, frame in enumerate(self._responses):
                    if frame.get("op") in (op, "ERROR"):
                        del self._responses[i]
                        if frame.get("op") == "ERROR":
                            raise BrokerError(frame.get("reason", "remote error"))
                        return frame
                if not self._cond.wait(timeout):
                    raise TimeoutError(f"no {op} frame within {timeout}s")

    def subscribe(self, topic_filter: str, qos: QoS = QoS.AT_LEAST_ONCE) -> None:
        self._send({"op": "SUBSCRIBE", "filter": topic_filter, "qos": int(qos)})
        self.expect("SUBACK")

    def publish(self, topic: str, payload: bytes, qos: QoS = QoS.AT_MOST_ONCE) -> dict:
        self._send({"op": "PUBLISH", "topic": topic, "qos": int(qos), "payload_b64": encode_payload(payload)})
        return self.expect("PUBACK")

    def close(self) -> None:
        try:
            self._send({"op": "DISCONNECT"})
        except OSError:
            pass
        self._sock.close()

"""Stream wire format: 4-byte big-endian length prefix + JSON control object.

Every frame on a broker connection is

    +----------------+----------------------------------+
    | u32 BE length  | UTF-8 JSON object, `length` bytes |
    +----------------+----------------------------------+

Control objects carry an "op" field: CONNECT, CONNACK, SUBSCRIBE,
SUBACK, PUBLISH, PUBACK, DISCONNECT. Application payloads ride inside
PUBLISH as base64 ("payload_b64"). JSON is serialized compactly with
sorted keys so frames are byte-stable for golden tests.
"""

from __future__ import annotations

import base64
import json
import struct
from typing import Iterator, Optional

MAX_PAYLOAD_BYTES = 256 * 1024
# generous cap for the whole control object; payload dominates
MAX_FRAME_BYTES = MAX_PAYLOAD_BYTES * 2

_LEN = struct.Struct(">I")


class WireError(Exception):
    pass


def encode_wire_frame(obj: dict) -> bytes:
    body = json.dumps(obj, separators=(",", ":"), sort_keys=True).encode("utf-8")
    if len(body) > MAX_FRAME_BYTES:
        raise WireError(f"frame of {len(body)} bytes exceeds limit")
    return _LEN.pack(len(body)) + body


def decode_wire_frame(buf: bytes) -> dict:
    if len(buf) < 4:
        raise WireError("frame shorter than its length prefix")
    (n,) = _LEN.unpack_from(buf)
    if len(buf) != 4 + n:
        raise WireError(f"declared {n} body bytes, got {len(buf) - 4}")
    try:
        obj = json.loads(buf[4:].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise WireError(f"bad frame body: {exc}") from exc
    if not isinstance(obj, dict):
        raise WireError("frame body must be a JSON object")
    return obj


def encode_payload(payload: bytes) -> str:
    return base64.b64encode(payload).decode("ascii")


def decode_payload(text: str) -> bytes:
    return base64.b64decode(text.encode("ascii"), validate=True)


class FrameReader:
    """Incremental frame splitter for a byte stream."""

    def __init__(self) -> None:
        self._buf = bytearray()

    def feed(self, chunk: bytes) -> Iterator[dict]:
        self._buf.extend(chunk)
        while True:
            frame = self._next()
            if frame is None:
                return
            yield frame

    def _next(self) -> Optional[dict]:
        if len(self._buf) < 4:
            return None
        (n,) = _LEN.unpack_from(self._buf)
        if n > MAX_FRAME_BYTES:
            raise WireError(f"incoming frame of {n} bytes exceeds limit")
        if len(self._buf) < 4 + n:
            return None
        raw = bytes(self._buf[: 4 + n])
        del self._buf[: 4 + n]
        return decode_wire_frame(raw)

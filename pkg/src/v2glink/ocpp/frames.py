"""RPC framing for the charge-point protocol.

Frames are UTF-8 JSON arrays in the OCPP-J style:

    [2, "<id>", "<Action>", {payload}]      Call
    [3, "<id>", {payload}]                  CallResult
    [4, "<id>", "<code>", "<desc>", {}]     CallError

Serialization is compact with sorted payload keys so transcripts are
byte-stable.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Optional

CALL = 2
CALLRESULT = 3
CALLERROR = 4


class OcppFrameError(Exception):
    pass


class MalformedJson(OcppFrameError):
    """Frame text is not valid JSON."""


class BadFrameShape(OcppFrameError):
    """JSON parsed but the array shape or kind tag is wrong."""


@dataclass(frozen=True)
class OcppMessage:
    frame_kind: int
    message_id: str
    action: Optional[str] = None
    payload: dict = field(default_factory=dict)
    error_code: Optional[str] = None
    error_description: Optional[str] = None

    @classmethod
    def call(cls, message_id: str, action: str, payload: Optional[dict] = None) -> "OcppMessage":
        return cls(CALL, message_id, action=action, payload=payload or {})

    @classmethod
    def result(cls, message_id: str, payload: Optional[dict] = None) -> "OcppMessage":
        return cls(CALLRESULT, message_id, payload=payload or {})

    @classmethod
    def error(cls, message_id: str, code: str, description: str) -> "OcppMessage":
        return cls(CALLERROR, message_id, error_code=code, error_description=description)


def parse_frame(text: str) -> OcppMessage:
    """Parse one wire frame; unknown actions parse fine, dispatch rejects them."""
    try:
        doc = json.loads(text)
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise MalformedJson(f"not JSON: {exc}") from exc
    if not isinstance(doc, list) or not doc:
        raise BadFrameShape("frame must be a non-empty JSON array")
    kind = doc[0]
    if kind == CALL:
        if len(doc) != 4 or not isinstance(doc[1], str) or not isinstance(doc[2], str) or not isinstance(doc[3], dict):
            raise BadFrameShape(f"Call frame must be [2, id, action, object]")
        return OcppMessage(CALL, doc[1], action=doc[2], payload=doc[3])
    if kind == CALLRESULT:
        if len(doc) != 3 or not isinstance(doc[1], str) or not isinstance(doc[2], dict):
            raise BadFrameShape("CallResult frame must be [3, id, object]")
        return OcppMessage(CALLRESULT, doc[1], payload=doc[2])
    if kind == CALLERROR:
        if (
            len(doc) != 5
            or not isinstance(doc[1], str)
            or not isinstance(doc[2], str)
            or not isinstance(doc[3], str)
            or not isinstance(doc[4], dict)
        ):
            raise BadFrameShape("CallError frame must be [4, id, code, description, object]")
        return OcppMessage(CALLERROR, doc[1], error_code=doc[2], error_description=doc[3], payload=doc[4])
    raise BadFrameShape(f"unknown frame kind tag {kind!r}")


def serialize_frame(msg: OcppMessage) -> str:
    if msg.frame_kind == CALL:
        doc = [CALL, msg.message_id, msg.action, msg.payload]
    elif msg.frame_kind == CALLRESULT:
        doc = [CALLRESULT, msg.message_id, msg.payload]
    elif msg.frame_kind == CALLERROR:
        doc = [CALLERROR, msg.message_id, msg.error_code, msg.error_description, msg.payload]
    else:
        raise BadFrameShape(f"unknown frame kind {msg.frame_kind}")
    return json.dumps(doc, separators=(",", ":"), sort_keys=True)


def iso_time(now_ms: float) -> str:
    """Scenario-epoch timestamp: milliseconds since sim start, rendered
    as an ISO instant offset from the Unix epoch for wire familiarity."""
    ms = int(now_ms)
    s, ms = divmod(ms, 1000)
    m, s = divmod(s, 60)
    h, m = divmod(m, 60)
    d, h = divmod(h, 24)
    return f"1970-01-{d + 1:02d}T{h:02d}:{m:02d}:{s:02d}.{ms:03d}Z"

"""Encoder/decoder for the wireless diagnostic exchange with simulated EVs.

Single-frame ISO-TP style framing over classic 11-bit CAN identifiers:

    byte 0      payload length N (1..7)
    bytes 1..N  payload (mode/PID plus data)
    bytes N+1.. 0x00 padding up to 8 bytes total

Requests go out on the functional id 0x7DF, responses come back on 0x7E8.
Supported exchanges:

    SoC               mode 0x01 PID 0x5B   -> 0x41 0x5B A        (100*A/255 %)
    vehicle speed     mode 0x01 PID 0x0D   -> 0x41 0x0D A        (A km/h)
    battery capacity  mode 0x22 DID 0xF015 -> 0x62 0xF0 0x15 A B (((A<<8)+B)/10 kWh)

Everything here is a pure function over immutable frames; no bus I/O.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

FUNCTIONAL_REQUEST_ID = 0x7DF
ECU_RESPONSE_ID = 0x7E8

MODE_CURRENT_DATA = 0x01
MODE_READ_BY_IDENTIFIER = 0x22
POSITIVE_REPLY_OFFSET = 0x40
NEGATIVE_REPLY = 0x7F
NRC_REQUEST_OUT_OF_RANGE = 0x31

PID_SOC = 0x5B
PID_VEHICLE_SPEED = 0x0D
DID_BATTERY_CAPACITY = 0xF015

FRAME_LEN = 8
MAX_CAN_ID = 0x7FF


class TelemetryError(Exception):
    """Base class for codec failures."""


class MalformedFrame(TelemetryError):
    """Frame violates the framing rules (length byte, mode, arity)."""


class UnknownPid(TelemetryError):
    """Well-formed frame for a parameter this codec does not support."""


class ReadingKind(Enum):
    SOC_PERCENT = "soc_percent"
    BATTERY_CAPACITY_KWH = "battery_capacity_kwh"
    VEHICLE_SPEED_KPH = "vehicle_speed_kph"


@dataclass(frozen=True)
class TelemetryFrame:
    """One 8-byte diagnostic frame plus its 11-bit CAN identifier.

    Construction checks only the structural shape (id range, 8 data
    bytes); semantic validity of byte 0 is the decoder's job so that
    arbitrary on-wire garbage can still be represented and classified.
    """

    can_id: int
    data: bytes

    def __post_init__(self) -> None:
        if not 0 <= self.can_id <= MAX_CAN_ID:
            raise MalformedFrame(f"can_id 0x{self.can_id:X} outside 11-bit range")
        if len(self.data) != FRAME_LEN:
            raise MalformedFrame(f"frame data must be {FRAME_LEN} bytes, got {len(self.data)}")

    @property
    def payload(self) -> bytes:
        """Meaningful payload bytes as declared by byte 0."""
        n = self.data[0]
        if not 1 <= n <= 7:
            raise MalformedFrame(f"length byte {n} outside [1,7]")
        return self.data[1 : 1 + n]

    def to_hex(self) -> str:
        return f"{self.can_id:03X}#{self.data.hex().upper()}"

    @classmethod
    def from_hex(cls, text: str) -> "TelemetryFrame":
        try:
            id_part, data_part = text.strip().split("#", 1)
            return cls(int(id_part, 16), bytes.fromhex(data_part))
        except (ValueError, MalformedFrame):
            raise
        except Exception as exc:  # pragma: no cover - defensive
            raise MalformedFrame(f"bad hex frame {text!r}") from exc


@dataclass(frozen=True)
class TelemetryReading:
    """A decoded vehicle quantity in engineering units."""

    kind: ReadingKind
    value: float
    source_pid: int
    timestamp_ms: int

    def __post_init__(self) -> None:
        if self.kind is ReadingKind.SOC_PERCENT and not 0.0 <= self.value <= 100.0:
            raise MalformedFrame(f"SoC {self.value} outside [0,100]")
        if self.kind is ReadingKind.BATTERY_CAPACITY_KWH and self.value <= 0.0:
            raise MalformedFrame(f"capacity {self.value} must be positive")
        if self.kind is ReadingKind.VEHICLE_SPEED_KPH and self.value < 0.0:
            raise MalformedFrame(f"speed {self.value} must be non-negative")


def _frame(can_id: int, payload: bytes) -> TelemetryFrame:
    if not 1 <= len(payload) <= 7:
        raise MalformedFrame(f"payload of {len(payload)} bytes does not fit a single frame")
    data = bytes([len(payload)]) + payload + b"\x00" * (7 - len(payload))
    return TelemetryFrame(can_id, data)


def soc_from_raw(a: int) -> float:
    """Scale the one-byte SoC reading to percent: 100*a/255."""
    if not 0 <= a <= 255:
        raise ValueError(f"raw SoC byte {a} outside [0,255]")
    return 100.0 * a / 255.0


def encode_request(kind: ReadingKind) -> TelemetryFrame:
    """Build the functional request frame for one reading kind."""
    if kind is ReadingKind.SOC_PERCENT:
        payload = bytes([MODE_CURRENT_DATA, PID_SOC])
    elif kind is ReadingKind.VEHICLE_SPEED_KPH:
        payload = bytes([MODE_CURRENT_DATA, PID_VEHICLE_SPEED])
    elif kind is ReadingKind.BATTERY_CAPACITY_KWH:
        payload = bytes([MODE_READ_BY_IDENTIFIER, DID_BATTERY_CAPACITY >> 8, DID_BATTERY_CAPACITY & 0xFF])
    else:  # pragma: no cover - enum is closed
        raise UnknownPid(f"unsupported reading kind {kind}")
    return _frame(FUNCTIONAL_REQUEST_ID, payload)


def decode_request(frame: TelemetryFrame) -> ReadingKind:
    """Classify a request frame; the inverse of :func:`encode_request`.

    Raises MalformedFrame for structurally broken frames and UnknownPid
    for clean requests naming a parameter we do not serve.
    """
    if frame.can_id != FUNCTIONAL_REQUEST_ID:
        raise MalformedFrame(f"request must use id 0x{FUNCTIONAL_REQUEST_ID:03X}")
    payload = frame.payload
    mode = payload[0]
    if mode == MODE_CURRENT_DATA:
        if len(payload) != 2:
            raise MalformedFrame("mode 0x01 request carries exactly one PID byte")
        if payload[1] == PID_SOC:
            return ReadingKind.SOC_PERCENT
        if payload[1] == PID_VEHICLE_SPEED:
            return ReadingKind.VEHICLE_SPEED_KPH
        raise UnknownPid(f"PID 0x{payload[1]:02X} not supported")
    if mode == MODE_READ_BY_IDENTIFIER:
        if len(payload) != 3:
            raise MalformedFrame("mode 0x22 request carries a two-byte identifier")
        did = (payload[1] << 8) | payload[2]
        if did == DID_BATTERY_CAPACITY:
            return ReadingKind.BATTERY_CAPACITY_KWH
        raise UnknownPid(f"DID 0x{did:04X} not supported")
    raise UnknownPid(f"mode 0x{mode:02X} not supported")


def encode_response(kind: ReadingKind, raw: int) -> TelemetryFrame:
    """Synthesize the ECU response carrying a raw (already quantized) value.

    ``raw`` is the on-wire integer: the A byte for SoC and speed, the
    16-bit 0.1 kWh count for capacity.
    """
    if kind is ReadingKind.SOC_PERCENT:
        if not 0 <= raw <= 255:
            raise ValueError(f"raw SoC {raw} outside one byte")
        payload = bytes([MODE_CURRENT_DATA + POSITIVE_REPLY_OFFSET, PID_SOC, raw])
    elif kind is ReadingKind.VEHICLE_SPEED_KPH:
        if not 0 <= raw <= 255:
            raise ValueError(f"raw speed {raw} outside one byte")
        payload = bytes([MODE_CURRENT_DATA + POSITIVE_REPLY_OFFSET, PID_VEHICLE_SPEED, raw])
    elif kind is ReadingKind.BATTERY_CAPACITY_KWH:
        if not 0 < raw <= 0xFFFF:
            raise ValueError(f"raw capacity {raw} outside two bytes (or zero)")
        payload = bytes(
            [
                MODE_READ_BY_IDENTIFIER + POSITIVE_REPLY_OFFSET,
                DID_BATTERY_CAPACITY >> 8,
                DID_BATTERY_CAPACITY & 0xFF,
                raw >> 8,
                raw & 0xFF,
            ]
        )
    else:  # pragma: no cover - enum is closed
        raise UnknownPid(f"unsupported reading kind {kind}")
    return _frame(ECU_RESPONSE_ID, payload)


def encode_negative_response(request_mode: int) -> TelemetryFrame:
    """Negative response (0x7F, requestOutOfRange) for an unsupported PID."""
    return _frame(ECU_RESPONSE_ID, bytes([NEGATIVE_REPLY, request_mode & 0xFF, NRC_REQUEST_OUT_OF_RANGE]))


def decode_response(frame: TelemetryFrame, timestamp_ms: int) -> TelemetryReading:
    """Decode an ECU response into an engineering-unit reading.

    Raises MalformedFrame when the length byte, mode or arity are
    inconsistent, and UnknownPid for well-formed frames that answer a
    parameter outside this codec (negative responses included).
    """
    if frame.can_id != ECU_RESPONSE_ID:
        raise MalformedFrame(f"response must use id 0x{ECU_RESPONSE_ID:03X}, got 0x{frame.can_id:03X}")
    payload = frame.payload
    mode = payload[0]
    if mode == MODE_CURRENT_DATA + POSITIVE_REPLY_OFFSET:
        if len(payload) != 3:
            raise MalformedFrame(f"mode 0x41 response needs 3 payload bytes, got {len(payload)}")
        pid, a = payload[1], payload[2]
        if pid == PID_SOC:
            return TelemetryReading(ReadingKind.SOC_PERCENT, soc_from_raw(a), pid, timestamp_ms)
        if pid == PID_VEHICLE_SPEED:
            return TelemetryReading(ReadingKind.VEHICLE_SPEED_KPH, float(a), pid, timestamp_ms)
        raise UnknownPid(f"PID 0x{pid:02X} not supported")
    if mode == MODE_READ_BY_IDENTIFIER + POSITIVE_REPLY_OFFSET:
        if len(payload) != 5:
            raise MalformedFrame(f"mode 0x62 response needs 5 payload bytes, got {len(payload)}")
        did = (payload[1] << 8) | payload[2]
        if did != DID_BATTERY_CAPACITY:
            raise UnknownPid(f"DID 0x{did:04X} not supported")
        raw = (payload[3] << 8) | payload[4]
        if raw == 0:
            raise MalformedFrame("capacity of zero is not a valid reading")
        return TelemetryReading(ReadingKind.BATTERY_CAPACITY_KWH, raw / 10.0, did, timestamp_ms)
    if mode == NEGATIVE_REPLY:
        if len(payload) != 3:
            raise MalformedFrame(f"negative response needs 3 payload bytes, got {len(payload)}")
        raise UnknownPid(f"ECU rejected mode 0x{payload[1]:02X} with NRC 0x{payload[2]:02X}")
    raise MalformedFrame(f"unexpected response mode 0x{mode:02X}")

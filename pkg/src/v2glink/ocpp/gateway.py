"""Central-system side of the charge-point protocol.

The state machine follows one authoritative transition table; anything
not in the table is answered with a ProtocolError CallError and leaves
state untouched. Bidirectional power rides as signed limits in charging
profiles, flagged "x_bidirectional" on the wire (plain OCPP 1.6 has no
discharge notion).

    Available   --ReserveNow-->                 Reserved
    Available   --StatusNotification(Preparing)--> Preparing
    Reserved    --StatusNotification(Preparing)--> Preparing
    Preparing   --StartTransaction-->           Charging
    Charging    --profile(limit < 0)-->         Discharging
    Discharging --profile(limit >= 0)-->        Charging
    Charging    --StopTransaction-->            Finishing
    Discharging --StopTransaction-->            Finishing
    Finishing   --StatusNotification(Available)--> Available
    Reserved    --expiry/StatusNotification(Available)--> Available
    any         --StatusNotification(Faulted)--> Faulted
    Faulted     --StatusNotification(Available)--> Available
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, replace
from enum import Enum
from typing import Callable, Dict, List, Optional, Tuple

from .frames import (
    CALL,
    CALLERROR,
    CALLRESULT,
    OcppMessage,
    iso_time,
    parse_frame,
    serialize_frame,
)


class OcppError(Exception):
    pass


class ProtocolViolation(OcppError):
    """Action not legal in the current state."""


class ProfileRejected(OcppError):
    """Charging profile failed validation against this charge point."""


class NotInTransaction(OcppError):
    """Profile application requires an active transaction."""


class DuplicateMessageId(OcppError):
    """A Call reused a message id already seen on this connection."""


class CpState(str, Enum):
    AVAILABLE = "Available"
    RESERVED = "Reserved"
    PREPARING = "Preparing"
    CHARGING = "Charging"
    DISCHARGING = "Discharging"
    FINISHING = "Finishing"
    FAULTED = "Faulted"


HEARTBEAT_INTERVAL_S = 300

CLIENT_ACTIONS = (
    "BootNotification",
    "Heartbeat",
    "StatusNotification",
    "Authorize",
    "StartTransaction",
    "StopTransaction",
    "MeterValues",
)


@dataclass(frozen=True)
class ChargePointStatus:
    cp_id: str
    state: CpState = CpState.AVAILABLE
    connected_vehicle: Optional[str] = None
    active_setpoint_kw: float = 0.0
    rating_kw: float = 22.0
    transaction_id: Optional[int] = None
    registered: bool = False
    reported_energy_kwh: float = 0.0

    def __post_init__(self) -> None:
        in_txn = self.state in (CpState.CHARGING, CpState.DISCHARGING)
        if not in_txn and self.active_setpoint_kw != 0.0:
            raise ProtocolViolation(f"{self.cp_id}: setpoint outside a transaction")
        if (self.state is CpState.DISCHARGING) != (self.active_setpoint_kw < 0):
            raise ProtocolViolation(f"{self.cp_id}: setpoint sign does not match state")


@dataclass(frozen=True)
class ChargingProfile:
    cp_id: str
    vehicle_id: str
    schedule_periods: Tuple[Tuple[int, float], ...]  # (start_offset_s, limit_kw)
    valid_from_ms: float
    valid_to_ms: float

    def __post_init__(self) -> None:
        if not self.schedule_periods:
            raise ProfileRejected("profile needs at least one period")
        offsets = [p[0] for p in self.schedule_periods]
        if offsets[0] != 0:
            raise ProfileRejected("first period must start at offset 0")
        if any(b <= a for a, b in zip(offsets, offsets[1:])):
            raise ProfileRejected("period offsets must be strictly increasing")
        if self.valid_to_ms <= self.valid_from_ms:
            raise ProfileRejected("empty validity window")

    @property
    def bidirectional(self) -> bool:
        return any(limit < 0 for _, limit in self.schedule_periods)

    def limit_at(self, now_ms: float) -> float:
        elapsed_s = (now_ms - self.valid_from_ms) / 1000.0
        limit = self.schedule_periods[0][1]
        for start, value in self.schedule_periods:
            if start <= elapsed_s:
                limit = value
            else:
                break
        return limit

    def next_boundary_ms(self, now_ms: float) -> Optional[float]:
        elapsed_s = (now_ms - self.valid_from_ms) / 1000.0
        for start, _ in self.schedule_periods:
            if start > elapsed_s:
                return self.valid_from_ms + start * 1000.0
        if now_ms < self.valid_to_ms:
            return self.valid_to_ms
        return None

    def to_payload(self) -> dict:
        payload = {
            "csChargingProfiles": {
                "chargingProfileKind": "Absolute",
                "chargingSchedule": {
                    "chargingRateUnit": "kW",
                    "chargingSchedulePeriod": [
                        {"startPeriod": int(start), "limit": limit}
                        for start, limit in self.schedule_periods
                    ],
                    "startSchedule": iso_time(self.valid_from_ms),
                },
                "validFrom": self.valid_from_ms,
                "validTo": self.valid_to_ms,
                "x_vehicle_id": self.vehicle_id,
            },
            "connectorId": 1,
        }
        if self.bidirectional:
            payload["csChargingProfiles"]["x_bidirectional"] = True
        return payload

    @classmethod
    def from_payload(cls, cp_id: str, payload: dict) -> "ChargingProfile":
        prof = payload["csChargingProfiles"]
        periods = tuple(
            (int(p["startPeriod"]), float(p["limit"]))
            for p in prof["chargingSchedule"]["chargingSchedulePeriod"]
        )
        return cls(
            cp_id=cp_id,
            vehicle_id=str(prof.get("x_vehicle_id", "")),
            schedule_periods=periods,
            valid_from_ms=float(prof["validFrom"]),
            valid_to_ms=float(prof["validTo"]),
        )


# -- pure state machine -------------------------------------------------------


def dispatch(
    cp: ChargePointStatus,
    msg: OcppMessage,
    now_ms: float = 0.0,
    allocate_transaction_id: Optional[Callable[[], int]] = None,
) -> Tuple[ChargePointStatus, List[OcppMessage]]:
    """Apply one client Call to the charge point's central-side state.

    Every Call yields exactly one CallResult or CallError. Transitions
    outside the table answer ProtocolError and leave state unchanged.
    """
    if msg.frame_kind != CALL:
        raise ProtocolViolation("dispatch handles Call frames only")

    def err(code: str, desc: str) -> Tuple[ChargePointStatus, List[OcppMessage]]:
        return cp, [OcppMessage.error(msg.message_id, code, desc)]

    def ok(payload: Optional[dict] = None) -> Tuple[ChargePointStatus, List[OcppMessage]]:
        return cp, [OcppMessage.result(msg.message_id, payload)]

    action = msg.action or ""
    if action not in CLIENT_ACTIONS:
        return err("NotImplemented", f"action {action!r} not supported")
    if action == "BootNotification":
        cp = replace(
            cp,
            state=CpState.AVAILABLE,
            connected_vehicle=None,
            active_setpoint_kw=0.0,
            transaction_id=None,
            registered=True,
            reported_energy_kwh=0.0,
        )
        return ok({"currentTime": iso_time(now_ms), "interval": HEARTBEAT_INTERVAL_S, "status": "Accepted"})
    if not cp.registered:
        return err("ProtocolError", "charge point must send BootNotification first")

    if action == "Heartbeat":
        return ok({"currentTime": iso_time(now_ms)})

    if action == "Authorize":
        return ok({"idTagInfo": {"status": "Accepted"}})

    if action == "StatusNotification":
        status = msg.payload.get("status")
        if status == "Faulted":
            cp = replace(cp, state=CpState.FAULTED, active_setpoint_kw=0.0, transaction_id=None)
            return ok({})
        if status == "Preparing":
            if cp.state not in (CpState.AVAILABLE, CpState.RESERVED):
                return err("ProtocolError", f"cannot begin Preparing from {cp.state.value}")
            cp = replace(cp, state=CpState.PREPARING, connected_vehicle=msg.payload.get("x_vehicle_id"))
            return ok({})
        if status == "Available":
            if cp.state not in (CpState.FINISHING, CpState.FAULTED, CpState.RESERVED):
                return err("ProtocolError", f"cannot return to Available from {cp.state.value}")
            cp = replace(
                cp,
                state=CpState.AVAILABLE,
                connected_vehicle=None,
                active_setpoint_kw=0.0,
                transaction_id=None,
            )
            return ok({})
        return err("ProtocolError", f"unsupported status {status!r}")

    if action == "StartTransaction":
        if cp.state is not CpState.PREPARING:
            return err("ProtocolError", f"StartTransaction illegal in {cp.state.value}")
        txn = allocate_transaction_id() if allocate_transaction_id else 1
        vehicle = msg.payload.get("x_vehicle_id", cp.connected_vehicle)
        cp = replace(cp, state=CpState.CHARGING, transaction_id=txn, connected_vehicle=vehicle,
                     reported_energy_kwh=0.0)
        return ok({"idTagInfo": {"status": "Accepted"}, "transactionId": txn})

    if action == "StopTransaction":
        if cp.state not in (CpState.CHARGING, CpState.DISCHARGING):
            return err("ProtocolError", f"no active transaction in {cp.state.value}")
        if "transactionId" in msg.payload and msg.payload["transactionId"] != cp.transaction_id:
            return err("ProtocolError", "transactionId does not match the active transaction")
        if "meterStop" in msg.payload:
            cp = replace(cp, reported_energy_kwh=float(msg.payload["meterStop"]))
        cp = replace(cp, state=CpState.FINISHING, active_setpoint_kw=0.0)
        return ok({"idTagInfo": {"status": "Accepted"}})

    if action == "MeterValues":
        if cp.state not in (CpState.CHARGING, CpState.DISCHARGING):
            return err("ProtocolError", f"MeterValues illegal in {cp.state.value}")
        if msg.payload.get("transactionId") != cp.transaction_id:
            return err("ProtocolError", "transactionId does not match the active transaction")
        for sample in msg.payload.get("meterValue", []):
            for sv in sample.get("sampledValue", []):
                cp = replace(cp, reported_energy_kwh=float(sv["value"]))
        return ok({})

    raise AssertionError("unreachable")  # pragma: no cover


def apply_reservation(cp: ChargePointStatus) -> ChargePointStatus:
    if cp.state is not CpState.AVAILABLE:
        raise ProtocolViolation(f"{cp.cp_id}: cannot reserve in {cp.state.value}")
    return replace(cp, state=CpState.RESERVED)


def release_reservation(cp: ChargePointStatus) -> ChargePointStatus:
    if cp.state is not CpState.RESERVED:
        raise ProtocolViolation(f"{cp.cp_id}: no reservation to release in {cp.state.value}")
    return replace(cp, state=CpState.AVAILABLE)


def apply_charging_profile(
    cp: ChargePointStatus, profile: ChargingProfile, now_ms: float
) -> Tuple[ChargePointStatus, float]:
    """Apply the period active at `now_ms`; flips Charging/Discharging by sign."""
    if cp.state not in (CpState.CHARGING, CpState.DISCHARGING):
        raise NotInTransaction(f"{cp.cp_id}: no transaction to shape in {cp.state.value}")
    if profile.cp_id != cp.cp_id:
        raise ProfileRejected(f"profile targets {profile.cp_id}, not {cp.cp_id}")
    if not profile.valid_from_ms <= now_ms < profile.valid_to_ms:
        raise ProfileRejected("profile not valid now")
    if any(abs(limit) > cp.rating_kw + 1e-9 for _, limit in profile.schedule_periods):
        raise ProfileRejected(f"limit exceeds connector rating {cp.rating_kw} kW")
    setpoint = profile.limit_at(now_ms)
    state = CpState.DISCHARGING if setpoint < 0 else CpState.CHARGING
    return replace(cp, state=state, active_setpoint_kw=setpoint), setpoint


# -- connection-level gateway ---------------------------------------------------


class CentralGateway:
    """Tracks every charge point connection: message-id bookkeeping,
    transaction allocation, and pairing of server-initiated calls."""

    def __init__(self, now_ms: Callable[[], float]):
        self.now_ms = now_ms
        self.charge_points: Dict[str, ChargePointStatus] = {}
        self.profiles: Dict[str, ChargingProfile] = {}
        self._seen_ids: Dict[str, deque] = {}
        self._pending: Dict[Tuple[str, str], str] = {}  # (cp_id, msg_id) -> action
        self._next_txn = 1
        self._next_call = 1
        self.call_log: List[Tuple[str, str, str]] = []  # (direction, cp_id, text)

    def _allocate_txn(self) -> int:
        txn = self._next_txn
        self._next_txn += 1
        return txn

    def register(self, cp_id: str, rating_kw: float) -> ChargePointStatus:
        cp = ChargePointStatus(cp_id=cp_id, rating_kw=rating_kw)
        self.charge_points[cp_id] = cp
        self._seen_ids[cp_id] = deque(maxlen=512)
        return cp

    def handle_text(self, cp_id: str, text: str) -> List[str]:
        """Feed one inbound frame, get the outbound frames to send back."""
        self.call_log.append(("rx", cp_id, text))
        msg = parse_frame(text)
        if cp_id not in self.charge_points:
            self.register(cp_id, rating_kw=22.0)
        cp = self.charge_points[cp_id]
        if msg.frame_kind == CALL:
            seen = self._seen_ids[cp_id]
            if msg.message_id in seen:
                out = OcppMessage.error(msg.message_id, "ProtocolError", "duplicate message id")
                return self._emit(cp_id, [out])
            seen.append(msg.message_id)
            new_cp, responses = dispatch(cp, msg, now_ms=self.now_ms(), allocate_transaction_id=self._allocate_txn)
            self.charge_points[cp_id] = new_cp
            return self._emit(cp_id, responses)
        # CallResult / CallError must pair with an outstanding server call
        pending = self._pending.pop((cp_id, msg.message_id), None)
        if pending is None:
            raise ProtocolViolation(f"{cp_id}: response {msg.message_id!r} matches no outstanding call")
        if pending == "SetChargingProfile" and msg.frame_kind == CALLRESULT:
            if msg.payload.get("status") == "Accepted" and cp_id in self.profiles:
                profile = self.profiles[cp_id]
                try:
                    new_cp, _ = apply_charging_profile(self.charge_points[cp_id], profile, self.now_ms())
                    self.charge_points[cp_id] = new_cp
                except (NotInTransaction, ProfileRejected):
                    pass
        if pending == "ReserveNow" and msg.frame_kind == CALLRESULT:
            if msg.payload.get("status") == "Accepted":
                self.charge_points[cp_id] = apply_reservation(self.charge_points[cp_id])
        if pending == "CancelReservation" and msg.frame_kind == CALLRESULT:
            if msg.payload.get("status") == "Accepted":
                self.reservation_expired(cp_id)
        return []

    def _emit(self, cp_id: str, messages: List[OcppMessage]) -> List[str]:
        out = []
        for m in messages:
            text = serialize_frame(m)
            self.call_log.append(("tx", cp_id, text))
            out.append(text)
        return out

    def _new_call(self, cp_id: str, action: str, payload: dict) -> str:
        message_id = f"cs-{self._next_call}"
        self._next_call += 1
        self._pending[(cp_id, message_id)] = action
        text = serialize_frame(OcppMessage.call(message_id, action, payload))
        self.call_log.append(("tx", cp_id, text))
        return text

    def set_charging_profile(self, profile: ChargingProfile) -> str:
        """Build the SetChargingProfile call; apply on Accepted result."""
        self.profiles[profile.cp_id] = profile
        return self._new_call(profile.cp_id, "SetChargingProfile", profile.to_payload())

    def reserve_now(self, cp_id: str, reservation_id: int, vehicle_id: str, expiry_ms: float) -> str:
        return self._new_call(
            cp_id,
            "ReserveNow",
            {
                "connectorId": 1,
                "expiryDate": iso_time(expiry_ms),
                "idTag": vehicle_id,
                "reservationId": reservation_id,
            },
        )

    def cancel_reservation(self, cp_id: str) -> str:
        return self._new_call(cp_id, "CancelReservation", {"reservationId": 0})

    def reservation_expired(self, cp_id: str) -> None:
        cp = self.charge_points[cp_id]
        if cp.state is CpState.RESERVED:
            self.charge_points[cp_id] = release_reservation(cp)

    def outstanding_calls(self) -> int:
        return len(self._pending)

"""Client-side simulated charge point.

Mirrors the central transition table locally, drives the plug-in
lifecycle (Preparing -> Authorize -> StartTransaction), answers
server-initiated calls, and meters the energy actually applied at its
connector. The surrounding engine owns vehicle batteries and time; this
object owns protocol state and the applied setpoint.
"""

from __future__ import annotations

from typing import Callable, Dict, List, Optional

from .frames import CALL, CALLERROR, CALLRESULT, OcppMessage, iso_time, parse_frame, serialize_frame
from .gateway import ChargingProfile, CpState


class SimChargePoint:
    def __init__(self, cp_id: str, rating_kw: float, now_ms: Callable[[], float],
                 send: Callable[[str], None]):
        self.cp_id = cp_id
        self.rating_kw = rating_kw
        self.now_ms = now_ms
        self.send = send
        self.state = CpState.AVAILABLE
        self.vehicle_id: Optional[str] = None
        self.transaction_id: Optional[int] = None
        self.setpoint_kw = 0.0
        self.profile: Optional[ChargingProfile] = None
        self.meter_kwh = 0.0
        self._meter_at_ms = 0.0
        self._next_id = 1
        self._pending: Dict[str, str] = {}
        self.on_setpoint_change: Optional[Callable[[float, float], None]] = None

    # -- outgoing ----------------------------------------------------------

    def _call(self, action: str, payload: dict) -> None:
        message_id = f"{self.cp_id}-{self._next_id}"
        self._next_id += 1
        self._pending[message_id] = action
        self.send(serialize_frame(OcppMessage.call(message_id, action, payload)))

    def boot(self) -> None:
        self._call("BootNotification", {"chargePointModel": "sim", "chargePointVendor": "v2glink"})

    def heartbeat(self) -> None:
        self._call("Heartbeat", {})

    def notify_status(self, status: str, extra: Optional[dict] = None) -> None:
        payload = {"connectorId": 1, "errorCode": "NoError", "status": status}
        if extra:
            payload.update(extra)
        self._call("StatusNotification", payload)

    def plug_in(self, vehicle_id: str, max_charge_kw: float, max_discharge_kw: float) -> None:
        """Vehicle connects: negotiated power limits ride up with Preparing."""
        if self.state not in (CpState.AVAILABLE, CpState.RESERVED):
            raise RuntimeError(f"{self.cp_id}: plug-in while {self.state.value}")
        self.state = CpState.PREPARING
        self.vehicle_id = vehicle_id
        self.notify_status(
            "Preparing",
            {
                "x_vehicle_id": vehicle_id,
                "x_max_charge_kw": max_charge_kw,
                "x_max_discharge_kw": max_discharge_kw,
            },
        )
        self._call("Authorize", {"idTag": vehicle_id})
        self._call("StartTransaction", {
            "connectorId": 1,
            "idTag": vehicle_id,
            "meterStart": 0,
            "timestamp": iso_time(self.now_ms()),
            "x_vehicle_id": vehicle_id,
        })

    def stop_transaction(self) -> None:
        if self.state not in (CpState.CHARGING, CpState.DISCHARGING):
            return
        self.integrate(self.now_ms())
        self._set_setpoint(0.0)
        self.state = CpState.FINISHING
        self._call("StopTransaction", {
            "transactionId": self.transaction_id,
            "meterStop": self.meter_kwh,
            "timestamp": iso_time(self.now_ms()),
        })
        self.transaction_id = None
        self.profile = None

    def unplug(self) -> None:
        if self.state in (CpState.CHARGING, CpState.DISCHARGING):
            self.stop_transaction()
        if self.state in (CpState.FINISHING, CpState.PREPARING):
            self.state = CpState.AVAILABLE
            self.vehicle_id = None
            self.notify_status("Available")

    def fault(self) -> None:
        self.integrate(self.now_ms())
        self._set_setpoint(0.0)
        self.state = CpState.FAULTED
        self.transaction_id = None
        self.profile = None
        self.notify_status("Faulted")

    def reset(self) -> None:
        if self.state is CpState.FAULTED:
            self.state = CpState.AVAILABLE
            self.vehicle_id = None
            self.notify_status("Available")

    def reservation_expired(self) -> None:
        """Local expiry: both ends release on the shared timer, no frames."""
        if self.state is CpState.RESERVED:
            self.state = CpState.AVAILABLE

    def sample_meter(self) -> None:
        if self.state not in (CpState.CHARGING, CpState.DISCHARGING):
            return
        self.integrate(self.now_ms())
        self._call("MeterValues", {
            "connectorId": 1,
            "transactionId": self.transaction_id,
            "meterValue": [{
                "timestamp": iso_time(self.now_ms()),
                "sampledValue": [{
                    "measurand": "Energy.Active.Net.Register",
                    "unit": "kWh",
                    "value": self.meter_kwh,
                }],
            }],
        })

    # -- incoming ------------------------------------------------------------

    def handle_text(self, text: str) -> List[str]:
        msg = parse_frame(text)
        if msg.frame_kind == CALL:
            return [serialize_frame(m) for m in self._handle_server_call(msg)]
        action = self._pending.pop(msg.message_id, None)
        if action is None:
            return []
        if msg.frame_kind == CALLRESULT and action == "StartTransaction":
            self.transaction_id = msg.payload.get("transactionId")
            if self.state is CpState.PREPARING:
                self.state = CpState.CHARGING
                self._meter_at_ms = self.now_ms()
        if msg.frame_kind == CALLERROR and action == "StartTransaction":
            # refused: fall back to plugged-but-idle
            self.state = CpState.PREPARING
        return []

    def _handle_server_call(self, msg: OcppMessage) -> List[OcppMessage]:
        if msg.action == "SetChargingProfile":
            try:
                profile = ChargingProfile.from_payload(self.cp_id, msg.payload)
            except (KeyError, ValueError, TypeError):
                return [OcppMessage.error(msg.message_id, "FormationViolation", "bad profile payload")]
            now = self.now_ms()
            if self.state not in (CpState.CHARGING, CpState.DISCHARGING):
                return [OcppMessage.result(msg.message_id, {"status": "Rejected"})]
            if any(abs(limit) > self.rating_kw + 1e-9 for _, limit in profile.schedule_periods):
                return [OcppMessage.result(msg.message_id, {"status": "Rejected"})]
            if not profile.valid_from_ms <= now < profile.valid_to_ms:
                return [OcppMessage.result(msg.message_id, {"status": "Rejected"})]
            self.profile = profile
            self.refresh_setpoint()
            return [OcppMessage.result(msg.message_id, {"status": "Accepted"})]
        if msg.action == "ReserveNow":
            if self.state is CpState.AVAILABLE:
                self.state = CpState.RESERVED
                return [OcppMessage.result(msg.message_id, {"status": "Accepted"})]
            return [OcppMessage.result(msg.message_id, {"status": "Rejected"})]
        if msg.action == "CancelReservation":
            # both sides release locally; no extra StatusNotification
            if self.state is CpState.RESERVED:
                self.state = CpState.AVAILABLE
                return [OcppMessage.result(msg.message_id, {"status": "Accepted"})]
            return [OcppMessage.result(msg.message_id, {"status": "Rejected"})]
        return [OcppMessage.error(msg.message_id, "NotImplemented", f"action {msg.action!r} not supported")]

    # -- power application -----------------------------------------------------

    def integrate(self, now_ms: float) -> float:
        """Advance the meter to `now_ms` at the applied setpoint; returns
        the energy added (signed kWh)."""
        dt_h = max(0.0, now_ms - self._meter_at_ms) / 3_600_000.0
        delta = self.setpoint_kw * dt_h
        self.meter_kwh += delta
        self._meter_at_ms = now_ms
        return delta

    def _set_setpoint(self, value: float) -> None:
        if value != self.setpoint_kw:
            old = self.setpoint_kw
            self.setpoint_kw = value
            if self.state is CpState.CHARGING and value < 0:
                self.state = CpState.DISCHARGING
            elif self.state is CpState.DISCHARGING and value >= 0:
                self.state = CpState.CHARGING
            if self.on_setpoint_change is not None:
                self.on_setpoint_change(old, value)

    def refresh_setpoint(self) -> None:
        """Re-evaluate the active profile period at the current time."""
        now = self.now_ms()
        self.integrate(now)
        if self.state not in (CpState.CHARGING, CpState.DISCHARGING):
            self._set_setpoint(0.0)
            return
        if self.profile is None or not self.profile.valid_from_ms <= now < self.profile.valid_to_ms:
            self._set_setpoint(0.0)
            return
        self._set_setpoint(self.profile.limit_at(now))

    def force_idle(self) -> None:
        """Battery full or empty: hold the connector at zero power."""
        self.integrate(self.now_ms())
        self._set_setpoint(0.0)
        self.profile = None

    def next_boundary_ms(self) -> Optional[float]:
        if self.profile is None or self.state not in (CpState.CHARGING, CpState.DISCHARGING):
            return None
        return self.profile.next_boundary_ms(self.now_ms())

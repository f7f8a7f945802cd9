"""Deterministic battery and mobility model for one simulated EV.

The state is an immutable value; every operation returns a new state.
Power is always the grid-side setpoint in kW (negative = feeding back),
so a charging step banks ``p*dt*eta_c`` kWh in the battery while a
discharging step drains ``|p|*dt/eta_d`` kWh to deliver ``|p|*dt`` to
the site. Presence follows a strict machine: a plugged vehicle must
unplug (back to parked) before it can drive away.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from enum import Enum
from typing import Optional

from . import telemetry
from .telemetry import ReadingKind, TelemetryFrame


class VehicleError(Exception):
    """Base class for model violations."""


class SocOutOfRange(VehicleError):
    """A step would push SoC outside [0, 1]."""


class PowerLimitExceeded(VehicleError):
    """Requested power violates the vehicle's charge/discharge limits."""


class InsufficientEnergy(VehicleError):
    """A trip needs more energy than the battery holds."""


class InvalidTransition(VehicleError):
    """Presence change not allowed by the lifecycle machine."""


class Presence(Enum):
    EN_ROUTE = "en_route"
    PARKED_UNPLUGGED = "parked_unplugged"
    PLUGGED_IN = "plugged_in"


# Allowed presence moves; PLUGGED_IN -> EN_ROUTE deliberately absent.
_PRESENCE_EDGES = {
    (Presence.EN_ROUTE, Presence.PARKED_UNPLUGGED),
    (Presence.PARKED_UNPLUGGED, Presence.PLUGGED_IN),
    (Presence.PARKED_UNPLUGGED, Presence.EN_ROUTE),
    (Presence.PLUGGED_IN, Presence.PARKED_UNPLUGGED),
}


@dataclass(frozen=True)
class VehicleState:
    vehicle_id: str
    soc: float
    capacity_kwh: float
    max_charge_kw: float
    max_discharge_kw: float = 0.0
    charge_efficiency: float = 0.95
    discharge_efficiency: float = 0.95
    consumption_kwh_per_km: float = 0.18
    presence: Presence = Presence.PARKED_UNPLUGGED
    charge_point_id: Optional[str] = None
    timestamp_ms: int = 0

    def __post_init__(self) -> None:
        if not 0.0 <= self.soc <= 1.0:
            raise SocOutOfRange(f"{self.vehicle_id}: soc {self.soc} outside [0,1]")
        if self.capacity_kwh <= 0:
            raise VehicleError(f"{self.vehicle_id}: capacity must be positive")
        if self.max_charge_kw <= 0 or self.max_discharge_kw < 0:
            raise VehicleError(f"{self.vehicle_id}: bad power limits")
        if not 0.0 < self.charge_efficiency <= 1.0 or not 0.0 < self.discharge_efficiency <= 1.0:
            raise VehicleError(f"{self.vehicle_id}: efficiencies must be in (0,1]")
        if self.consumption_kwh_per_km <= 0:
            raise VehicleError(f"{self.vehicle_id}: consumption must be positive")
        if (self.charge_point_id is not None) != (self.presence is Presence.PLUGGED_IN):
            raise InvalidTransition(f"{self.vehicle_id}: charge point binding requires PLUGGED_IN")

    @property
    def energy_kwh(self) -> float:
        return self.soc * self.capacity_kwh


def with_presence(state: VehicleState, presence: Presence, charge_point_id: Optional[str] = None,
                  timestamp_ms: Optional[int] = None) -> VehicleState:
    """Transition the presence machine, rejecting illegal edges."""
    if presence is state.presence:
        return state if timestamp_ms is None else replace(state, timestamp_ms=timestamp_ms)
    if (state.presence, presence) not in _PRESENCE_EDGES:
        raise InvalidTransition(f"{state.vehicle_id}: {state.presence.value} -> {presence.value}")
    if presence is Presence.PLUGGED_IN and charge_point_id is None:
        raise InvalidTransition(f"{state.vehicle_id}: plugging in needs a charge point id")
    return replace(
        state,
        presence=presence,
        charge_point_id=charge_point_id if presence is Presence.PLUGGED_IN else None,
        timestamp_ms=state.timestamp_ms if timestamp_ms is None else timestamp_ms,
    )


def step_soc(state: VehicleState, power_kw: float, dt_h: float) -> VehicleState:
    """Advance the battery by dt_h hours at a constant grid-side power.

    Chargers deliver ``p*dt*eta_c`` into the battery; discharge drains
    ``|p|*dt/eta_d``. Raises rather than clamps when the resulting SoC
    leaves [0, 1]: the caller owns the energy limits.
    """
    if dt_h <= 0:
        raise VehicleError(f"dt_h must be positive, got {dt_h}")
    if power_kw > state.max_charge_kw or power_kw < -state.max_discharge_kw:
        raise PowerLimitExceeded(
            f"{state.vehicle_id}: {power_kw} kW outside [-{state.max_discharge_kw}, {state.max_charge_kw}]"
        )
    if power_kw >= 0:
        delta = power_kw * dt_h * state.charge_efficiency / state.capacity_kwh
    else:
        delta = power_kw * dt_h / (state.discharge_efficiency * state.capacity_kwh)
    new_soc = state.soc + delta
    if new_soc < -1e-12 or new_soc > 1.0 + 1e-12:
        raise SocOutOfRange(f"{state.vehicle_id}: step to soc {new_soc:.6f} leaves [0,1]")
    new_soc = min(1.0, max(0.0, new_soc))
    return replace(state, soc=new_soc, timestamp_ms=state.timestamp_ms + round(dt_h * 3600_000))


def drive(state: VehicleState, distance_km: float) -> VehicleState:
    """Consume trip energy and put the vehicle on the road."""
    if distance_km < 0:
        raise VehicleError(f"distance {distance_km} must be non-negative")
    needed = distance_km * state.consumption_kwh_per_km
    if needed > state.energy_kwh + 1e-12:
        raise InsufficientEnergy(
            f"{state.vehicle_id}: trip needs {needed:.3f} kWh, battery holds {state.energy_kwh:.3f}"
        )
    moved = with_presence(state, Presence.EN_ROUTE)
    return replace(moved, soc=max(0.0, state.soc - needed / state.capacity_kwh))


def quantize_soc(soc: float) -> int:
    """Map SoC fraction to the one-byte OBD value, rounding half up."""
    return min(255, int(math.floor(soc * 255.0 + 0.5)))


def quantize_capacity(capacity_kwh: float) -> int:
    """Map capacity to the two-byte 0.1 kWh count, rounding half up."""
    return min(0xFFFF, int(math.floor(capacity_kwh * 10.0 + 0.5)))


def answer_diagnostic(state: VehicleState, request: TelemetryFrame) -> TelemetryFrame:
    """Answer one diagnostic request from the current state.

    Unsupported parameters are echoed as a negative-response frame, the
    same way a real ECU refuses a PID it does not serve. Speed reads as
    zero: vehicles in this model are only ever observed at rest (trips
    complete instantaneously between events).
    """
    try:
        kind = telemetry.decode_request(request)
    except telemetry.UnknownPid:
        return telemetry.encode_negative_response(request.payload[0])
    if kind is ReadingKind.SOC_PERCENT:
        return telemetry.encode_response(kind, quantize_soc(state.soc))
    if kind is ReadingKind.VEHICLE_SPEED_KPH:
        return telemetry.encode_response(kind, 0)
    return telemetry.encode_response(kind, quantize_capacity(state.capacity_kwh))

"""Typed events flowing into the aggregation store."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Optional


class StalePreference(ValueError):
    """Preference whose departure already passed."""


@dataclass(frozen=True)
class DriverPreference:
    vehicle_id: str
    departure_time_ms: float
    submitted_at_ms: float
    required_energy_kwh: Optional[float] = None
    trip_class: Optional[str] = None  # "short" | "long", mapped via config
    soc_floor: float = 0.3
    v2g_consent: bool = True
    arrival_time_ms: Optional[float] = None

    def __post_init__(self) -> None:
        if self.departure_time_ms <= self.submitted_at_ms:
            raise StalePreference(
                f"{self.vehicle_id}: departure {self.departure_time_ms} not after submission"
            )
        if self.required_energy_kwh is None and self.trip_class is None:
            raise ValueError(f"{self.vehicle_id}: preference needs energy or a trip class")
        if self.required_energy_kwh is not None and self.required_energy_kwh < 0:
            raise ValueError(f"{self.vehicle_id}: negative energy requirement")
        if self.trip_class is not None and self.trip_class not in ("short", "long"):
            raise ValueError(f"{self.vehicle_id}: unknown trip class {self.trip_class!r}")
        if not 0.0 <= self.soc_floor <= 1.0:
            raise ValueError(f"{self.vehicle_id}: soc floor outside [0,1]")


class ReservationState(Enum):
    ACTIVE = "active"
    FULFILLED = "fulfilled"
    EXPIRED = "expired"
    CANCELLED = "cancelled"


@dataclass
class Reservation:
    reservation_id: int
    vehicle_id: str
    cp_id: str
    start_ms: float
    end_ms: float
    state: ReservationState = ReservationState.ACTIVE

    def __post_init__(self) -> None:
        if self.end_ms <= self.start_ms:
            raise ValueError(f"reservation {self.reservation_id}: empty window")

    def overlaps(self, other: "Reservation") -> bool:
        return self.cp_id == other.cp_id and self.start_ms < other.end_ms and other.start_ms < self.end_ms


@dataclass(frozen=True)
class TelemetryUpdate:
    vehicle_id: str
    soc: Optional[float] = None            # fraction, from the quantized SoC PID
    capacity_kwh: Optional[float] = None
    timestamp_ms: float = 0.0


@dataclass(frozen=True)
class PreferenceUpdate:
    preference: DriverPreference
    timestamp_ms: float = 0.0


@dataclass(frozen=True)
class PlugUpdate:
    vehicle_id: str
    plugged: bool
    cp_id: Optional[str] = None
    max_charge_kw: Optional[float] = None     # negotiated at plug-in
    max_discharge_kw: Optional[float] = None
    timestamp_ms: float = 0.0

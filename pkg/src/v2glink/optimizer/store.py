"""Aggregation store: heterogeneous event streams -> optimization instances.

Latest-wins per vehicle per field, keyed by event timestamp, so jittery
link delivery cannot regress a newer reading. A vehicle enters the
instance when its battery state is known and it is either plugged in or
announced through a reservation or preference; that pre-connection
inclusion is the point of the wireless pathway. Vehicles whose stated
departure already passed are dropped with a warning.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

from .events import (
    DriverPreference,
    PlugUpdate,
    PreferenceUpdate,
    Reservation,
    ReservationState,
    TelemetryUpdate,
)
from .instance import OptimizationInstance, VehicleRequest

log = logging.getLogger(__name__)

TRIP_CLASS_DEFAULT_KWH = {"short": 10.0, "long": 25.0}


@dataclass(frozen=True)
class GridConfig:
    slot_hours: float
    horizon_slots: int
    site_limit_kw: Tuple[float, ...]   # cycled over absolute slots
    price_per_kwh: Tuple[float, ...]   # cycled over absolute slots
    power_step_kw: Optional[float] = None
    trip_class_kwh: Dict[str, float] = field(default_factory=lambda: dict(TRIP_CLASS_DEFAULT_KWH))
    default_soc_floor: float = 0.3


@dataclass
class _VehicleFacts:
    """Static parameters plus the latest-wins dynamic fields."""

    vehicle_id: str
    max_charge_kw: float
    max_discharge_kw: float
    charge_efficiency: float
    discharge_efficiency: float
    soc: Optional[float] = None
    soc_at_ms: float = -math.inf
    capacity_kwh: Optional[float] = None
    capacity_at_ms: float = -math.inf
    plugged: bool = False
    cp_id: Optional[str] = None
    plug_at_ms: float = -math.inf
    negotiated_charge_kw: Optional[float] = None
    negotiated_discharge_kw: Optional[float] = None
    preference: Optional[DriverPreference] = None
    preference_at_ms: float = -math.inf


class ImepStore:
    def __init__(self, grid: GridConfig):
        self.grid = grid
        self._vehicles: Dict[str, _VehicleFacts] = {}
        self._cp_ratings: Dict[str, float] = {}
        self._reservations: Dict[int, Reservation] = {}

    # -- registration ---------------------------------------------------------

    def register_vehicle(self, vehicle_id: str, max_charge_kw: float, max_discharge_kw: float,
                         charge_efficiency: float = 0.95, discharge_efficiency: float = 0.95) -> None:
        self._vehicles[vehicle_id] = _VehicleFacts(
            vehicle_id=vehicle_id,
            max_charge_kw=max_charge_kw,
            max_discharge_kw=max_discharge_kw,
            charge_efficiency=charge_efficiency,
            discharge_efficiency=discharge_efficiency,
        )

    def register_charge_point(self, cp_id: str, rating_kw: float) -> None:
        self._cp_ratings[cp_id] = rating_kw

    # -- event intake -----------------------------------------------------------

    def apply_telemetry(self, update: TelemetryUpdate) -> None:
        facts = self._vehicles.get(update.vehicle_id)
        if facts is None:
            log.warning("telemetry for unknown vehicle %s ignored", update.vehicle_id)
            return
        if update.soc is not None and update.timestamp_ms >= facts.soc_at_ms:
            facts.soc = update.soc
            facts.soc_at_ms = update.timestamp_ms
        if update.capacity_kwh is not None and update.timestamp_ms >= facts.capacity_at_ms:
            facts.capacity_kwh = update.capacity_kwh
            facts.capacity_at_ms = update.timestamp_ms

    def apply_preference(self, update: PreferenceUpdate) -> None:
        facts = self._vehicles.get(update.preference.vehicle_id)
        if facts is None:
            log.warning("preference for unknown vehicle %s ignored", update.preference.vehicle_id)
            return
        if update.timestamp_ms >= facts.preference_at_ms:
            facts.preference = update.preference
            facts.preference_at_ms = update.timestamp_ms

    def apply_plug(self, update: PlugUpdate) -> None:
        facts = self._vehicles.get(update.vehicle_id)
        if facts is None:
            log.warning("plug event for unknown vehicle %s ignored", update.vehicle_id)
            return
        if update.timestamp_ms < facts.plug_at_ms:
            return
        facts.plugged = update.plugged
        facts.cp_id = update.cp_id if update.plugged else None
        facts.plug_at_ms = update.timestamp_ms
        facts.negotiated_charge_kw = update.max_charge_kw if update.plugged else None
        facts.negotiated_discharge_kw = update.max_discharge_kw if update.plugged else None

    def upsert_reservation(self, reservation: Reservation) -> None:
        self._reservations[reservation.reservation_id] = reservation

    def reservations(self) -> List[Reservation]:
        return list(self._reservations.values())

    def active_reservation(self, vehicle_id: str, now_ms: float) -> Optional[Reservation]:
        best = None
        for res in self._reservations.values():
            if res.vehicle_id != vehicle_id or res.state is not ReservationState.ACTIVE:
                continue
            if res.end_ms <= now_ms:
                continue
            if best is None or res.start_ms < best.start_ms:
                best = res
        return best

    # -- instance assembly -------------------------------------------------------

    def build_instance(self, now_ms: float) -> OptimizationInstance:
        grid = self.grid
        slot_ms = grid.slot_hours * 3_600_000.0
        start_abs_slot = int(now_ms // slot_ms)
        start_ms = start_abs_slot * slot_ms
        T = grid.horizon_slots

        def clip_slot(t_ms: float, round_up: bool) -> int:
            rel = (t_ms - start_ms) / slot_ms
            slot = math.ceil(rel - 1e-9) if round_up else math.floor(rel + 1e-9)
            return max(0, min(T, slot))

        requests = []
        for vid in sorted(self._vehicles):
            facts = self._vehicles[vid]
            if facts.soc is None or facts.capacity_kwh is None:
                continue
            pref = facts.preference
            if pref is not None and pref.departure_time_ms <= now_ms:
                log.warning("vehicle %s: departure %.0f already passed, excluded",
                            vid, pref.departure_time_ms)
                pref = None
            reservation = self.active_reservation(vid, now_ms)
            if not facts.plugged and reservation is None and pref is None:
                continue

            if facts.plugged:
                window_start = 0
                rating = self._cp_ratings.get(facts.cp_id, math.inf)
            elif reservation is not None:
                window_start = clip_slot(max(reservation.start_ms, now_ms), round_up=True)
                rating = self._cp_ratings.get(reservation.cp_id, math.inf)
            else:
                arrival = pref.arrival_time_ms if pref.arrival_time_ms is not None else now_ms
                window_start = clip_slot(max(arrival, now_ms), round_up=True)
                rating = math.inf

            window_end = T
            if pref is not None:
                window_end = clip_slot(pref.departure_time_ms, round_up=False)
            if reservation is not None:
                window_end = min(window_end, clip_slot(reservation.end_ms, round_up=False))
            window_end = max(window_end, window_start)

            max_charge = min(
                facts.negotiated_charge_kw if facts.negotiated_charge_kw is not None else facts.max_charge_kw,
                facts.max_charge_kw,
                rating,
            )
            max_discharge = min(
                facts.negotiated_discharge_kw
                if facts.negotiated_discharge_kw is not None
                else facts.max_discharge_kw,
                facts.max_discharge_kw,
                rating,
            )
            if pref is not None and not pref.v2g_consent:
                max_discharge = 0.0

            headroom = max(0.0, (1.0 - facts.soc) * facts.capacity_kwh)
            if pref is None:
                target = headroom  # plugged without stated needs: fill up
            elif pref.required_energy_kwh is not None:
                target = pref.required_energy_kwh
            else:
                target = grid.trip_class_kwh[pref.trip_class]
            target = min(target, facts.capacity_kwh)

            requests.append(
                VehicleRequest(
                    vehicle_id=vid,
                    soc=facts.soc,
                    capacity_kwh=facts.capacity_kwh,
                    max_charge_kw=max_charge,
                    max_discharge_kw=max_discharge,
                    charge_efficiency=facts.charge_efficiency,
                    discharge_efficiency=facts.discharge_efficiency,
                    window=(window_start, window_end),
                    target_energy_kwh=target,
                    soc_floor=pref.soc_floor if pref is not None else grid.default_soc_floor,
                    plugged=facts.plugged,
                    cp_id=facts.cp_id if facts.plugged else (reservation.cp_id if reservation else None),
                )
            )

        def cycled(values: Tuple[float, ...]) -> Tuple[float, ...]:
            return tuple(values[(start_abs_slot + k) % len(values)] for k in range(T))

        return OptimizationInstance(
            slot_hours=grid.slot_hours,
            site_limit_kw=cycled(grid.site_limit_kw),
            price_per_kwh=cycled(grid.price_per_kwh),
            vehicles=tuple(requests),
            power_step_kw=grid.power_step_kw,
            start_ms=start_ms,
        )

"""Schedule -> per-charge-point charging profiles.

Plugged vehicles get one profile each with consecutive equal-power
slots merged into periods; unplugged vehicles carry forecast value only
and are listed instead of emitted.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List

from ..ocpp.gateway import ChargingProfile
from .instance import ChargingSchedule, OptimizationInstance


class UnassignedVehicle(ValueError):
    """A plugged vehicle has no charge point binding."""


@dataclass(frozen=True)
class ProfileBatch:
    profiles: List[ChargingProfile]
    forecast_only: List[str] = field(default_factory=list)


def to_charging_profiles(schedule: ChargingSchedule, instance: OptimizationInstance) -> ProfileBatch:
    slot_s = round(instance.slot_hours * 3600)
    valid_from = instance.start_ms
    valid_to = instance.start_ms + instance.horizon_slots * slot_s * 1000
    profiles = []
    forecast_only = []
    for v in instance.vehicles:
        powers = schedule.powers.get(v.vehicle_id)
        if powers is None:
            continue
        if not v.plugged:
            forecast_only.append(v.vehicle_id)
            continue
        if v.cp_id is None:
            raise UnassignedVehicle(f"{v.vehicle_id} is plugged but bound to no charge point")
        periods = []
        for t, p in enumerate(powers):
            if not periods or periods[-1][1] != p:
                periods.append((t * slot_s, p))
        profiles.append(
            ChargingProfile(
                cp_id=v.cp_id,
                vehicle_id=v.vehicle_id,
                schedule_periods=tuple(periods),
                valid_from_ms=valid_from,
                valid_to_ms=valid_to,
            )
        )
    return ProfileBatch(profiles=profiles, forecast_only=forecast_only)

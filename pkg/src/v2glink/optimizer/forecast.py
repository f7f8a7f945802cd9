"""Per-slot flexible-capacity forecast.

For each slot: up-capacity is the charge headroom left after the
scheduled charge; down-capacity is the discharge the fleet could
deliver to the site without breaching any comfort floor, given the
scheduled SoC trajectory. This is the planner's answer to "when and
where is bidirectional capacity available".
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Tuple

from .instance import ChargingSchedule, OptimizationInstance


@dataclass(frozen=True)
class FlexibilityForecast:
    up_kw: Tuple[float, ...]
    down_kw: Tuple[float, ...]


def forecast_availability(instance: OptimizationInstance,
                          schedule: Optional[ChargingSchedule] = None) -> FlexibilityForecast:
    T = instance.horizon_slots
    dt = instance.slot_hours
    up = [0.0] * T
    down = [0.0] * T
    for v in instance.vehicles:
        powers = schedule.powers.get(v.vehicle_id) if schedule else None
        if powers is None:
            powers = (0.0,) * T
        energy = v.soc * v.capacity_kwh
        floor_e = min(v.soc_floor, v.soc) * v.capacity_kwh
        for t in range(T):
            scheduled = powers[t]
            if v.window[0] <= t < v.window[1]:
                up[t] += max(0.0, v.max_charge_kw - max(0.0, scheduled))
                deliverable = (energy - floor_e) * v.discharge_efficiency / dt
                down[t] += min(v.max_discharge_kw, max(0.0, deliverable))
            if scheduled >= 0:
                energy += dt * v.charge_efficiency * scheduled
            else:
                energy += dt * scheduled / v.discharge_efficiency
    return FlexibilityForecast(up_kw=tuple(up), down_kw=tuple(down))

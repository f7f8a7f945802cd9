"""Optimization instance and schedule value objects.

Shared conventions (every consumer in this package restates these same
formulas independently on purpose, so a slip in one place shows up as a
disagreement instead of hiding):

* schedule powers are grid-side kW per slot, signed (negative feeds the
  site); a vehicle may only draw/feed inside its availability window.
* battery energy delivered over a slot: dt * (eta_c * p+  -  p- / eta_d).
* unmet energy per vehicle: max(0, target - delivered).
* site load per slot: sum of vehicle powers; must stay <= site limit.
* peak: max over slots of max(0, site load).
* energy cost: sum over slots of price * site load * dt.
* the SoC trajectory implied by a schedule must stay within
  [min(soc_floor, initial soc), 1] at every slot boundary.

Instances serialize to the JSON shape documented in
docs/instance.schema.json so the brute-force oracle can consume the
exact same files.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Dict, Optional, Tuple

INSTANCE_SCHEMA = "v2glink.instance.v1"
SCHEDULE_SCHEMA = "v2glink.schedule.v1"


class InstanceError(ValueError):
    pass


@dataclass(frozen=True)
class VehicleRequest:
    """One vehicle's record inside an instance."""

    vehicle_id: str
    soc: float
    capacity_kwh: float
    max_charge_kw: float
    max_discharge_kw: float
    charge_efficiency: float
    discharge_efficiency: float
    window: Tuple[int, int]  # [start_slot, end_slot)
    target_energy_kwh: float
    soc_floor: float
    plugged: bool
    cp_id: Optional[str] = None

    def __post_init__(self) -> None:
        if not 0.0 <= self.soc <= 1.0:
            raise InstanceError(f"{self.vehicle_id}: soc {self.soc} outside [0,1]")
        if self.capacity_kwh <= 0 or self.max_charge_kw < 0 or self.max_discharge_kw < 0:
            raise InstanceError(f"{self.vehicle_id}: bad capacity or power bounds")
        if not 0.0 < self.charge_efficiency <= 1.0 or not 0.0 < self.discharge_efficiency <= 1.0:
            raise InstanceError(f"{self.vehicle_id}: efficiencies must be in (0,1]")
        if self.window[0] > self.window[1]:
            raise InstanceError(f"{self.vehicle_id}: window {self.window} reversed")
        if self.target_energy_kwh < 0:
            raise InstanceError(f"{self.vehicle_id}: negative target energy")
        if self.target_energy_kwh > self.capacity_kwh + 1e-9:
            raise InstanceError(f"{self.vehicle_id}: target exceeds battery capacity")
        if not 0.0 <= self.soc_floor <= 1.0:
            raise InstanceError(f"{self.vehicle_id}: soc floor outside [0,1]")

    @property
    def effective_floor(self) -> float:
        """The floor never traps a vehicle that arrives below it."""
        return min(self.soc_floor, self.soc)


@dataclass(frozen=True)
class OptimizationInstance:
    slot_hours: float
    site_limit_kw: Tuple[float, ...]
    price_per_kwh: Tuple[float, ...]
    vehicles: Tuple[VehicleRequest, ...]
    power_step_kw: Optional[float] = None
    start_ms: float = 0.0

    def __post_init__(self) -> None:
        if self.slot_hours <= 0:
            raise InstanceError("slot width must be positive")
        if len(self.site_limit_kw) == 0:
            raise InstanceError("horizon needs at least one slot")
        if len(self.price_per_kwh) != len(self.site_limit_kw):
            raise InstanceError("price vector length does not match the horizon")
        if self.power_step_kw is not None and self.power_step_kw <= 0:
            raise InstanceError("power step must be positive")
        seen = set()
        for v in self.vehicles:
            if v.vehicle_id in seen:
                raise InstanceError(f"duplicate vehicle {v.vehicle_id}")
            seen.add(v.vehicle_id)
            if v.window[1] > self.horizon_slots:
                raise InstanceError(f"{v.vehicle_id}: window {v.window} leaves the horizon")
        ids = [v.vehicle_id for v in self.vehicles]
        if ids != sorted(ids):
            raise InstanceError("vehicles must be sorted by id (determinism contract)")

    @property
    def horizon_slots(self) -> int:
        return len(self.site_limit_kw)

    def to_json(self) -> str:
        doc = {
            "schema": INSTANCE_SCHEMA,
            "slot_hours": self.slot_hours,
            "start_ms": self.start_ms,
            "site_limit_kw": list(self.site_limit_kw),
            "price_per_kwh": list(self.price_per_kwh),
            "power_step_kw": self.power_step_kw,
            "vehicles": [
                {
                    "vehicle_id": v.vehicle_id,
                    "soc": v.soc,
                    "capacity_kwh": v.capacity_kwh,
                    "max_charge_kw": v.max_charge_kw,
                    "max_discharge_kw": v.max_discharge_kw,
                    "charge_efficiency": v.charge_efficiency,
                    "discharge_efficiency": v.discharge_efficiency,
                    "window": list(v.window),
                    "target_energy_kwh": v.target_energy_kwh,
                    "soc_floor": v.soc_floor,
                    "plugged": v.plugged,
                    "cp_id": v.cp_id,
                }
                for v in self.vehicles
            ],
        }
        return json.dumps(doc, separators=(",", ":"), sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "OptimizationInstance":
        doc = json.loads(text)
        if doc.get("schema") != INSTANCE_SCHEMA:
            raise InstanceError(f"unknown instance schema {doc.get('schema')!r}")
        vehicles = tuple(
            VehicleRequest(
                vehicle_id=v["vehicle_id"],
                soc=v["soc"],
                capacity_kwh=v["capacity_kwh"],
                max_charge_kw=v["max_charge_kw"],
                max_discharge_kw=v["max_discharge_kw"],
                charge_efficiency=v.get("charge_efficiency", 1.0),
                discharge_efficiency=v.get("discharge_efficiency", 1.0),
                window=(int(v["window"][0]), int(v["window"][1])),
                target_energy_kwh=v["target_energy_kwh"],
                soc_floor=v.get("soc_floor", 0.3),
                plugged=v.get("plugged", False),
                cp_id=v.get("cp_id"),
            )
            for v in sorted(doc["vehicles"], key=lambda d: d["vehicle_id"])
        )
        return cls(
            slot_hours=doc["slot_hours"],
            site_limit_kw=tuple(doc["site_limit_kw"]),
            price_per_kwh=tuple(doc["price_per_kwh"]),
            vehicles=vehicles,
            power_step_kw=doc.get("power_step_kw"),
            start_ms=doc.get("start_ms", 0.0),
        )


@dataclass(frozen=True)
class ObjectiveReport:
    peak_site_kw: float
    energy_cost: float
    unmet_energy_kwh: Dict[str, float] = field(default_factory=dict)

    @property
    def total_unmet_kwh(self) -> float:
        return float(sum(self.unmet_energy_kwh.values()))

    def vector(self) -> Tuple[float, float, float]:
        """Lexicographic objective: (total unmet, peak, cost)."""
        return (self.total_unmet_kwh, self.peak_site_kw, self.energy_cost)


@dataclass(frozen=True)
class ChargingSchedule:
    powers: Dict[str, Tuple[float, ...]]
    objective: ObjectiveReport

    def site_load(self) -> Tuple[float, ...]:
        if not self.powers:
            return ()
        slots = len(next(iter(self.powers.values())))
        return tuple(sum(p[t] for p in self.powers.values()) for t in range(slots))

    def to_json(self) -> str:
        doc = {
            "schema": SCHEDULE_SCHEMA,
            "powers": {vid: list(p) for vid, p in sorted(self.powers.items())},
            "objective": {
                "peak_site_kw": self.objective.peak_site_kw,
                "energy_cost": self.objective.energy_cost,
                "unmet_energy_kwh": dict(sorted(self.objective.unmet_energy_kwh.items())),
                "total_unmet_kwh": self.objective.total_unmet_kwh,
            },
        }
        return json.dumps(doc, separators=(",", ":"), sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "ChargingSchedule":
        doc = json.loads(text)
        if doc.get("schema") != SCHEDULE_SCHEMA:
            raise InstanceError(f"unknown schedule schema {doc.get('schema')!r}")
        return cls(
            powers={vid: tuple(p) for vid, p in doc["powers"].items()},
            objective=ObjectiveReport(
                peak_site_kw=doc["objective"]["peak_site_kw"],
                energy_cost=doc["objective"]["energy_cost"],
                unmet_energy_kwh=dict(doc["objective"]["unmet_energy_kwh"]),
            ),
        )

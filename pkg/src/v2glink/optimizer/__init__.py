"""Backend control center: stream aggregation into optimization
instances, the lexicographic schedule solver, its brute-force oracle,
an independent feasibility verifier, and charging-profile emission."""

from .instance import (
    ChargingSchedule,
    InstanceError,
    ObjectiveReport,
    OptimizationInstance,
    VehicleRequest,
)
from .events import (
    DriverPreference,
    PlugUpdate,
    PreferenceUpdate,
    Reservation,
    ReservationState,
    StalePreference,
    TelemetryUpdate,
)
from .store import GridConfig, ImepStore
from .solver import solve_schedule
from .oracle import brute_force_schedule
from .profiles import UnassignedVehicle, to_charging_profiles
from .forecast import forecast_availability
from .verify import check_schedule

__all__ = [
    "ChargingSchedule",
    "DriverPreference",
    "GridConfig",
    "ImepStore",
    "InstanceError",
    "ObjectiveReport",
    "OptimizationInstance",
    "PlugUpdate",
    "PreferenceUpdate",
    "Reservation",
    "ReservationState",
    "StalePreference",
    "TelemetryUpdate",
    "UnassignedVehicle",
    "VehicleRequest",
    "brute_force_schedule",
    "check_schedule",
    "forecast_availability",
    "solve_schedule",
    "to_charging_profiles",
]

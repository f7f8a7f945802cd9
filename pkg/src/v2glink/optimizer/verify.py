"""Independent schedule verifier.

Recomputes SoC trajectories, site sums and the objective report from a
schedule with plain loops, sharing no code with the solver or the
oracle. Returns a list of violation strings; empty means the schedule
honors every instance constraint and its own objective report.
"""

from __future__ import annotations

from typing import List

from .instance import ChargingSchedule, OptimizationInstance

TOL = 1e-6


def check_schedule(instance: OptimizationInstance, schedule: ChargingSchedule,
                   tol: float = TOL) -> List[str]:
    problems: List[str] = []
    T = instance.horizon_slots
    dt = instance.slot_hours

    for v in instance.vehicles:
        if v.vehicle_id not in schedule.powers:
            problems.append(f"{v.vehicle_id}: missing from schedule")
    for vid in schedule.powers:
        if vid not in {v.vehicle_id for v in instance.vehicles}:
            problems.append(f"{vid}: scheduled but not in the instance")

    site = [0.0] * T
    total_unmet = 0.0
    cost = 0.0
    for v in instance.vehicles:
        powers = schedule.powers.get(v.vehicle_id)
        if powers is None:
            continue
        if len(powers) != T:
            problems.append(f"{v.vehicle_id}: {len(powers)} slots, horizon has {T}")
            continue
        energy = v.soc * v.capacity_kwh
        floor_e = min(v.soc_floor, v.soc) * v.capacity_kwh
        delivered = 0.0
        for t, p in enumerate(powers):
            if p > v.max_charge_kw + tol or p < -v.max_discharge_kw - tol:
                problems.append(f"{v.vehicle_id}@{t}: power {p} outside bounds")
            if p != 0.0 and not v.window[0] <= t < v.window[1]:
                problems.append(f"{v.vehicle_id}@{t}: power outside window {v.window}")
            if p >= 0:
                delta = dt * v.charge_efficiency * p
            else:
                delta = dt * p / v.discharge_efficiency
            energy += delta
            delivered += delta
            if energy > v.capacity_kwh + tol:
                problems.append(f"{v.vehicle_id}@{t}: battery over capacity ({energy:.6f} kWh)")
            if energy < floor_e - tol:
                problems.append(f"{v.vehicle_id}@{t}: battery under floor ({energy:.6f} kWh)")
            site[t] += p
        unmet = max(0.0, v.target_energy_kwh - delivered)
        reported = schedule.objective.unmet_energy_kwh.get(v.vehicle_id)
        if reported is None or abs(reported - unmet) > tol:
            problems.append(f"{v.vehicle_id}: reported unmet {reported} != recomputed {unmet:.9f}")
        total_unmet += unmet

    peak = 0.0
    for t in range(T):
        if site[t] > instance.site_limit_kw[t] + tol:
            problems.append(f"slot {t}: site load {site[t]:.6f} exceeds limit {instance.site_limit_kw[t]}")
        peak = max(peak, site[t])
        cost += instance.price_per_kwh[t] * site[t] * dt
    peak = max(0.0, peak)

    if abs(schedule.objective.peak_site_kw - peak) > tol:
        problems.append(f"reported peak {schedule.objective.peak_site_kw} != recomputed {peak:.9f}")
    if abs(schedule.objective.energy_cost - cost) > tol:
        problems.append(f"reported cost {schedule.objective.energy_cost} != recomputed {cost:.9f}")
    return problems

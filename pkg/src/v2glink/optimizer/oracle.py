"""Brute-force reference solver: exhaustive enumeration on a power grid.

Enumerates every per-vehicle power vector on the instance's power grid,
filters by individual battery feasibility, then scans all combinations
against the site limit, tracking the lexicographic minimum of
(total unmet energy, peak site load, energy cost). Exponential on
purpose: it exists to certify the production solver on small instances,
not to scale. Instances must carry power_step_kw.

Kept deliberately separate from the solver; only the objective
*definitions* are shared via the documented conventions.
"""

from __future__ import annotations

import itertools
import math
from typing import List, Tuple

import numpy as np

from .instance import (
    ChargingSchedule,
    InstanceError,
    ObjectiveReport,
    OptimizationInstance,
    VehicleRequest,
)

FEAS_TOL = 1e-9
OBJ_TOL = 1e-9

MAX_VEHICLE_VECTORS = 500_000
MAX_COMBINATIONS = 200_000_000


def _vehicle_candidates(v: VehicleRequest, instance: OptimizationInstance) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """All individually feasible power vectors for one vehicle.

    Returns (powers[n, T], delivered_kwh[n], cost[n])."""
    step = instance.power_step_kw
    T = instance.horizon_slots
    dt = instance.slot_hours
    lo = -math.floor(v.max_discharge_kw / step + 1e-9)
    hi = math.floor(v.max_charge_kw / step + 1e-9)
    levels = np.arange(lo, hi + 1, dtype=np.float64) * step

    w0, w1 = v.window
    active = [t for t in range(T) if w0 <= t < w1]
    if len(levels) ** len(active) > MAX_VEHICLE_VECTORS:
        raise InstanceError(
            f"{v.vehicle_id}: {len(levels)}^{len(active)} candidate vectors exceed the oracle budget"
        )
    combos = np.array(list(itertools.product(levels, repeat=len(active))), dtype=np.float64)
    if combos.size == 0:
        combos = np.zeros((1, 0))
    powers = np.zeros((combos.shape[0], T))
    for idx, t in enumerate(active):
        powers[:, t] = combos[:, idx]

    pos = np.clip(powers, 0.0, None)
    neg = np.clip(-powers, 0.0, None)
    battery_delta = dt * (v.charge_efficiency * pos - neg / v.discharge_efficiency)
    e0 = v.soc * v.capacity_kwh
    trajectory = e0 + np.cumsum(battery_delta, axis=1)
    floor_e = v.effective_floor * v.capacity_kwh
    ok = np.all(trajectory >= floor_e - FEAS_TOL, axis=1) & np.all(
        trajectory <= v.capacity_kwh + FEAS_TOL, axis=1
    )
    powers = powers[ok]
    delivered = battery_delta[ok].sum(axis=1)
    price = np.asarray(instance.price_per_kwh)
    cost = powers @ (price * dt)
    return powers, delivered, cost


def brute_force_schedule(instance: OptimizationInstance) -> ChargingSchedule:
    if instance.power_step_kw is None:
        raise InstanceError("the oracle requires a power grid (power_step_kw)")
    T = instance.horizon_slots
    dt = instance.slot_hours
    limit = np.asarray(instance.site_limit_kw)
    price = np.asarray(instance.price_per_kwh)

    if not instance.vehicles:
        return ChargingSchedule(powers={}, objective=ObjectiveReport(0.0, 0.0, {}))

    cands: List[Tuple[np.ndarray, np.ndarray, np.ndarray]] = []
    total = 1
    for v in instance.vehicles:
        powers, delivered, cost = _vehicle_candidates(v, instance)
        if powers.shape[0] == 0:
            raise InstanceError(f"{v.vehicle_id}: no feasible power vector (bad instance)")
        cands.append((powers, delivered, cost))
        total *= powers.shape[0]
    if total > MAX_COMBINATIONS:
        raise InstanceError(f"{total} join combinations exceed the oracle budget")

    targets = [v.target_energy_kwh for v in instance.vehicles]
    unmets = [np.maximum(0.0, targets[i] - cands[i][1]) for i in range(len(cands))]

    best_key = (math.inf, math.inf, math.inf)
    best_pick: Tuple[int, ...] = ()

    if len(cands) == 1:
        p0, _, c0 = cands[0]
        feasible = np.all(p0 <= limit + FEAS_TOL, axis=1)
        peak = np.maximum(p0.max(axis=1), 0.0)
        key, idx = _lex_min(unmets[0], peak, c0, feasible)
        if idx >= 0:
            best_key, best_pick = key, (idx,)
    else:
        # join the tail vehicles once, then stream the head through numpy
        tail_powers, tail_unmet, tail_cost, tail_index = _join_tail(cands[1:], unmets[1:])
        p0, _, c0 = cands[0]
        n0 = p0.shape[0]
        for i0 in range(n0):
            site = tail_powers + p0[i0]
            feasible = np.all(site <= limit + FEAS_TOL, axis=1)
            if not feasible.any():
                continue
            unmet = tail_unmet + unmets[0][i0]
            cost = tail_cost + c0[i0]
            peak = np.maximum(site.max(axis=1), 0.0)
            key, idx = _lex_min(unmet, peak, cost, feasible)
            if idx >= 0 and key < best_key:
                best_key = key
                best_pick = (i0,) + tail_index[idx]

    if not best_pick:
        raise InstanceError("no feasible combination (site limit below zero?)")

    powers = {}
    for i, v in enumerate(instance.vehicles):
        powers[v.vehicle_id] = tuple(float(x) for x in cands[i][0][best_pick[i]])
    return ChargingSchedule(powers=powers, objective=_evaluate(instance, powers))


def _join_tail(cands, unmets):
    """Cartesian join of up to two remaining vehicles."""
    if len(cands) == 1:
        powers, _, cost = cands[0]
        index = [(i,) for i in range(powers.shape[0])]
        return powers, unmets[0], cost, index
    if len(cands) == 2:
        (p1, _, c1), (p2, _, c2) = cands
        n1, n2 = p1.shape[0], p2.shape[0]
        powers = (p1[:, None, :] + p2[None, :, :]).reshape(n1 * n2, -1)
        unmet = (unmets[0][:, None] + unmets[1][None, :]).reshape(-1)
        cost = (c1[:, None] + c2[None, :]).reshape(-1)
        index = [(i, j) for i in range(n1) for j in range(n2)]
        return powers, unmet, cost, index
    raise InstanceError("oracle joins at most 3 vehicles")


def _lex_min(unmet, peak, cost, feasible):
    """Index of the lexicographic minimum among feasible rows."""
    if not feasible.any():
        return (math.inf, math.inf, math.inf), -1
    big = math.inf
    u = np.where(feasible, unmet, big)
    u_min = u.min()
    stage = u <= u_min + OBJ_TOL
    p = np.where(stage, peak, big)
    p_min = p.min()
    stage &= p <= p_min + OBJ_TOL
    c = np.where(stage, cost, big)
    c_min = c.min()
    idx = int(np.argmax(stage & (c <= c_min + OBJ_TOL)))
    return (float(unmet[idx]), float(peak[idx]), float(cost[idx])), idx


def _evaluate(instance: OptimizationInstance, powers) -> ObjectiveReport:
    """Objective recomputed from scratch with plain arithmetic."""
    T = instance.horizon_slots
    dt = instance.slot_hours
    site = [0.0] * T
    unmet = {}
    for v in instance.vehicles:
        p = powers[v.vehicle_id]
        delivered = 0.0
        for t in range(T):
            site[t] += p[t]
            if p[t] >= 0:
                delivered += dt * v.charge_efficiency * p[t]
            else:
                delivered += dt * p[t] / v.discharge_efficiency
        unmet[v.vehicle_id] = max(0.0, v.target_energy_kwh - delivered)
    peak = max([0.0] + site)
    cost = sum(instance.price_per_kwh[t] * site[t] * dt for t in range(T))
    return ObjectiveReport(peak_site_kw=peak, energy_cost=cost, unmet_energy_kwh=unmet)

"""Time-slotted bidirectional charge scheduler.

Minimizes, lexicographically: (1) total unmet target energy, (2) peak
site load, (3) signed energy cost. Each level is solved to optimality
with HiGHS (through scipy) and frozen as a constraint for the next; a
final pass minimizes total throughput to pick a canonical representative
among cost-ties, which also keeps profiles short after merging.

When the instance carries power_step_kw, powers are constrained to that
grid with integer variables, making the result directly comparable to
the brute-force oracle. Without a grid the same model runs as a pure LP.
Simultaneous charge+discharge within one vehicle-slot is physically
meaningless and can only look profitable under negative prices, so
binary exclusivity variables are added exactly in that case.

Infeasible demand never aborts: targets degrade into reported unmet
energy (power bounds, windows, SoC corridor and site limit are hard).
"""

from __future__ import annotations

import math
from typing import Dict, List, Optional, Tuple

import numpy as np
from scipy import sparse
from scipy.optimize import Bounds, LinearConstraint, milp

from .instance import (
    ChargingSchedule,
    InstanceError,
    ObjectiveReport,
    OptimizationInstance,
    VehicleRequest,
)

LEVEL_EPS = 1e-6
ZERO_SNAP = 1e-9


class SolverError(RuntimeError):
    pass


def solve_schedule(instance: OptimizationInstance) -> ChargingSchedule:
    if not instance.vehicles:
        return ChargingSchedule(powers={}, objective=ObjectiveReport(0.0, 0.0, {}))
    model = _Model(instance)
    x = model.solve_lexicographic()
    powers = model.extract_powers(x)
    return ChargingSchedule(powers=powers, objective=_evaluate(instance, powers))


class _Model:
    def __init__(self, instance: OptimizationInstance):
        self.instance = instance
        self.vehicles = instance.vehicles  # already sorted by id
        self.T = instance.horizon_slots
        self.V = len(self.vehicles)
        self.dt = instance.slot_hours
        self.scale = instance.power_step_kw if instance.power_step_kw is not None else 1.0
        self.gridded = instance.power_step_kw is not None
        self.use_binaries = any(p < 0 for p in instance.price_per_kwh) and any(
            v.max_discharge_kw > 0 for v in self.vehicles
        )
        self._build()

    # variable layout: x+ [V*T], x- [V*T], u [V], P [1], b [V*T if used]
    def _build(self) -> None:
        V, T, dt, scale = self.V, self.T, self.dt, self.scale
        n = 2 * V * T + V + 1 + (V * T if self.use_binaries else 0)
        self.n = n
        self.i_plus = lambda v, t: v * T + t
        self.i_minus = lambda v, t: V * T + v * T + t
        self.i_unmet = lambda v: 2 * V * T + v
        self.i_peak = 2 * V * T + V
        self.i_bin = lambda v, t: 2 * V * T + V + 1 + v * T + t

        lb = np.zeros(n)
        ub = np.full(n, np.inf)
        integrality = np.zeros(n)
        for v_idx, veh in enumerate(self.vehicles):
            in_window = lambda t: veh.window[0] <= t < veh.window[1]
            cap_plus = veh.max_charge_kw / scale
            cap_minus = veh.max_discharge_kw / scale
            if self.gridded:
                cap_plus = math.floor(cap_plus + 1e-9)
                cap_minus = math.floor(cap_minus + 1e-9)
            for t in range(T):
                ub[self.i_plus(v_idx, t)] = cap_plus if in_window(t) else 0.0
                ub[self.i_minus(v_idx, t)] = cap_minus if in_window(t) else 0.0
                if self.gridded:
                    integrality[self.i_plus(v_idx, t)] = 1
                    integrality[self.i_minus(v_idx, t)] = 1
                if self.use_binaries:
                    ub[self.i_bin(v_idx, t)] = 1.0
                    integrality[self.i_bin(v_idx, t)] = 1
        self.bounds = Bounds(lb, ub)
        self.integrality = integrality

        rows: List[Dict[int, float]] = []
        rhs: List[float] = []

        def add_row(coeffs: Dict[int, float], bound: float) -> None:
            rows.append(coeffs)
            rhs.append(bound)

        # site limit and peak coupling per slot
        for t in range(T):
            site = {}
            for v_idx in range(V):
                site[self.i_plus(v_idx, t)] = scale
                site[self.i_minus(v_idx, t)] = -scale
            add_row(dict(site), float(self.instance.site_limit_kw[t]))
            site[self.i_peak] = -1.0
            add_row(site, 0.0)

        # battery corridor at every slot boundary + unmet coupling
        for v_idx, veh in enumerate(self.vehicles):
            e0 = veh.soc * veh.capacity_kwh
            floor_e = veh.effective_floor * veh.capacity_kwh
            gain = dt * veh.charge_efficiency * scale
            loss = dt * scale / veh.discharge_efficiency
            for k in range(1, T + 1):
                upper = {}
                for t in range(k):
                    upper[self.i_plus(v_idx, t)] = gain
                    upper[self.i_minus(v_idx, t)] = -loss
                add_row(dict(upper), veh.capacity_kwh - e0)
                lower = {i: -c for i, c in upper.items()}
                add_row(lower, e0 - floor_e)
            delivered = {}
            for t in range(T):
                delivered[self.i_plus(v_idx, t)] = -gain
                delivered[self.i_minus(v_idx, t)] = loss
            delivered[self.i_unmet(v_idx)] = -1.0
            add_row(delivered, -veh.target_energy_kwh)

        # one-sided power per vehicle-slot when prices can go negative
        if self.use_binaries:
            for v_idx, veh in enumerate(self.vehicles):
                for t in range(T):
                    add_row(
                        {self.i_plus(v_idx, t): scale, self.i_bin(v_idx, t): -veh.max_charge_kw},
                        0.0,
                    )
                    add_row(
                        {self.i_minus(v_idx, t): scale, self.i_bin(v_idx, t): veh.max_discharge_kw},
                        veh.max_discharge_kw,
                    )

        self._rows = rows
        self._rhs = rhs

    def _constraint(self) -> LinearConstraint:
        data, ri, ci = [], [], []
        for r, coeffs in enumerate(self._rows):
            for c, val in coeffs.items():
                ri.append(r)
                ci.append(c)
                data.append(val)
        a = sparse.csr_matrix((data, (ri, ci)), shape=(len(self._rows), self.n))
        return LinearConstraint(a, -np.inf, np.array(self._rhs))

    def _solve(self, c: np.ndarray) -> Tuple[np.ndarray, float]:
        res = milp(
            c,
            constraints=[self._constraint()],
            integrality=self.integrality,
            bounds=self.bounds,
            options={"mip_rel_gap": 0.0},
        )
        if res.x is None:
            raise SolverError(f"level solve failed: {res.message}")
        return res.x, float(res.fun)

    def _freeze(self, c: np.ndarray, value: float, eps: float) -> None:
        self._rows.append({i: c[i] for i in np.nonzero(c)[0]})
        self._rhs.append(value + eps)

    def solve_lexicographic(self) -> np.ndarray:
        V, T, dt, scale = self.V, self.T, self.dt, self.scale
        price = self.instance.price_per_kwh

        c_unmet = np.zeros(self.n)
        for v_idx in range(V):
            c_unmet[self.i_unmet(v_idx)] = 1.0
        _, u_star = self._solve(c_unmet)
        self._freeze(c_unmet, u_star, LEVEL_EPS)

        c_peak = np.zeros(self.n)
        c_peak[self.i_peak] = 1.0
        _, p_star = self._solve(c_peak)
        self._freeze(c_peak, p_star, LEVEL_EPS)

        c_cost = np.zeros(self.n)
        for v_idx in range(V):
            for t in range(T):
                c_cost[self.i_plus(v_idx, t)] = price[t] * dt * scale
                c_cost[self.i_minus(v_idx, t)] = -price[t] * dt * scale
        x, cost_star = self._solve(c_cost)
        self._freeze(c_cost, cost_star, LEVEL_EPS * max(1.0, abs(cost_star)))

        # canonical representative: least total throughput among optima
        c_thin = np.zeros(self.n)
        c_thin[: 2 * V * T] = 1.0
        x, _ = self._solve(c_thin)
        return x

    def extract_powers(self, x: np.ndarray) -> Dict[str, Tuple[float, ...]]:
        powers: Dict[str, Tuple[float, ...]] = {}
        for v_idx, veh in enumerate(self.vehicles):
            row = []
            for t in range(self.T):
                plus = x[self.i_plus(v_idx, t)]
                minus = x[self.i_minus(v_idx, t)]
                if self.gridded:
                    plus, minus = round(plus), round(minus)
                p = self.scale * (plus - minus)
                if abs(p) < ZERO_SNAP:
                    p = 0.0
                row.append(p + 0.0)
            powers[veh.vehicle_id] = tuple(row)
        return powers


def _evaluate(instance: OptimizationInstance, powers: Dict[str, Tuple[float, ...]]) -> ObjectiveReport:
    """Objective recomputed from the emitted powers, not solver values."""
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

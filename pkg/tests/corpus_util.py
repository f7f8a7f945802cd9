"""Exhaustive small-instance corpus for solver/oracle equivalence.

Instances stay within the oracle's enumeration budget: at most 3
vehicles, at most 4 slots, powers on a 1 kW grid. Axes are enumerated
deterministically so the corpus is identical on every run.
"""

import itertools

from v2glink.optimizer import OptimizationInstance, VehicleRequest


def _vehicle(vid, soc, cap, maxc, maxd, eta, window, target, floor=0.3, plugged=True, cp=None):
    return VehicleRequest(
        vehicle_id=vid,
        soc=soc,
        capacity_kwh=cap,
        max_charge_kw=maxc,
        max_discharge_kw=maxd,
        charge_efficiency=eta[0],
        discharge_efficiency=eta[1],
        window=window,
        target_energy_kwh=target,
        soc_floor=floor,
        plugged=plugged,
        cp_id=cp if cp is not None else (f"cp-{vid}" if plugged else None),
    )


def _instance(slots, slot_hours, site, prices, vehicles):
    return OptimizationInstance(
        slot_hours=slot_hours,
        site_limit_kw=tuple(float(site)) if isinstance(site, tuple) else (float(site),) * slots,
        price_per_kwh=tuple(prices),
        vehicles=tuple(sorted(vehicles, key=lambda v: v.vehicle_id)),
        power_step_kw=1.0,
    )


def single_vehicle_instances():
    cases = []
    for slots, slot_hours in ((2, 1.0), (4, 0.5)):
        price_patterns = [
            (1.0,) * slots,
            tuple(9.0 if t == slots - 1 else 1.0 for t in range(slots)),
            tuple(-2.0 if t == 0 else 1.0 for t in range(slots)),
        ]
        windows = [(0, slots), (1, slots), (0, 0)]
        for site, prices, (maxc, maxd), eta, soc, target, window in itertools.product(
            (10.0, 2.0),
            price_patterns,
            ((2.0, 0.0), (3.0, 2.0)),
            ((1.0, 1.0), (0.9, 0.8)),
            (0.2, 0.9),
            (0.0, 3.0, 8.0),
            windows,
        ):
            # trim the cross product: efficiency variants only on the
            # flat-price tight-site axis, to keep the oracle fast while
            # still covering every feature somewhere
            if eta != (1.0, 1.0) and not (site == 2.0 and prices == (1.0,) * slots):
                continue
            cases.append(
                _instance(slots, slot_hours, site, prices,
                          [_vehicle("ev1", soc, 10.0, maxc, maxd, eta, window, target)])
            )
    return cases


def two_vehicle_instances():
    cases = []
    slots, slot_hours = 4, 1.0
    price_patterns = [(1.0,) * slots, (1.0, 1.0, 9.0, 1.0), (-1.0, 1.0, 1.0, 1.0)]
    for site, prices, follower, windows in itertools.product(
        (10.0, 5.0),
        price_patterns,
        (
            dict(soc=0.5, maxd=0.0, target=6.0, window=(0, 2)),
            dict(soc=0.9, maxd=3.0, target=0.0, window=(0, 4)),
            dict(soc=0.2, maxd=2.0, target=4.0, window=(1, 3)),
        ),
        ((0, 4), (0, 2)),
    ):
        a = _vehicle("evA", 0.25, 16.0, 4.0, 0.0, (1.0, 1.0), windows, 10.0)
        b = _vehicle(
            "evB", follower["soc"], 10.0, 3.0, follower["maxd"], (1.0, 1.0),
            follower["window"], follower["target"],
        )
        cases.append(_instance(slots, slot_hours, site, prices, [a, b]))
    # the documented peak-shaving pair
    cases.append(
        _instance(
            4, 1.0, 10.0, (1.0,) * 4,
            [
                _vehicle("evA", 0.25, 40.0, 7.0, 0.0, (1.0, 1.0), (0, 4), 10.0),
                _vehicle("evB", 0.5, 30.0, 7.0, 0.0, (1.0, 1.0), (0, 2), 6.0),
            ],
        )
    )
    # efficiency-asymmetric pair on a tight site
    cases.append(
        _instance(
            3, 1.0, 4.0, (1.0, 5.0, 1.0),
            [
                _vehicle("evA", 0.3, 12.0, 3.0, 0.0, (0.9, 0.8), (0, 3), 5.0),
                _vehicle("evB", 0.8, 10.0, 2.0, 2.0, (0.9, 0.8), (0, 3), 0.0),
            ],
        )
    )
    return cases


def three_vehicle_instances():
    cases = []
    slots, slot_hours = 3, 1.0
    price_patterns = [(1.0, 1.0, 1.0), (1.0, 6.0, 1.0)]
    for site, prices, discharge_third in itertools.product(
        (6.0, 3.0), price_patterns, (0.0, 1.0)
    ):
        vehicles = [
            _vehicle("evA", 0.2, 8.0, 2.0, 0.0, (1.0, 1.0), (0, 2), 4.0),
            _vehicle("evB", 0.4, 8.0, 2.0, 0.0, (1.0, 1.0), (0, 3), 3.0),
            _vehicle("evC", 0.9, 8.0, 2.0, discharge_third, (1.0, 1.0), (0, 3), 0.0),
        ]
        cases.append(_instance(slots, slot_hours, site, prices, vehicles))
    # staggered windows, all charging
    for site in (6.0, 4.0):
        vehicles = [
            _vehicle("evA", 0.25, 8.0, 2.0, 0.0, (1.0, 1.0), (0, 1), 2.0),
            _vehicle("evB", 0.25, 8.0, 2.0, 0.0, (1.0, 1.0), (0, 2), 3.0),
            _vehicle("evC", 0.25, 8.0, 2.0, 0.0, (1.0, 1.0), (1, 3), 4.0),
        ]
        cases.append(_instance(3, 1.0, site, (1.0, 1.0, 1.0), vehicles))
    return cases


def small_instance_corpus():
    return single_vehicle_instances() + two_vehicle_instances() + three_vehicle_instances()

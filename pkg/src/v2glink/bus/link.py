"""Seeded one-way latency and loss model for an emulated radio link.

A profile is a value object; sampling state (the RNG sequence) lives in
a LinkSampler so that identical seeds always reproduce identical
delay/drop sequences, run after run.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Tuple, Union

Latency = Union[float, Tuple[float, float]]


@dataclass(frozen=True)
class LinkProfile:
    """One-way delivery latency (fixed ms or uniform [lo, hi] ms) plus
    an independent per-delivery drop probability."""

    one_way_latency_ms: Latency = 5.0
    drop_probability: float = 0.0
    seed: int = 0

    def __post_init__(self) -> None:
        if isinstance(self.one_way_latency_ms, tuple):
            lo, hi = self.one_way_latency_ms
            if lo < 0 or hi < lo:
                raise ValueError(f"bad latency range {self.one_way_latency_ms}")
        elif self.one_way_latency_ms < 0:
            raise ValueError(f"latency must be non-negative, got {self.one_way_latency_ms}")
        # 1.0 is allowed to model total loss; at-least-once delivery only
        # converges for probabilities strictly below 1.
        if not 0.0 <= self.drop_probability <= 1.0:
            raise ValueError(f"drop probability {self.drop_probability} outside [0,1]")

    def sampler(self) -> "LinkSampler":
        return LinkSampler(self)


class LinkSampler:
    """Deterministic draw sequence for one link instance."""

    def __init__(self, profile: LinkProfile):
        self.profile = profile
        self._rng = random.Random(profile.seed)

    def sample_delay_ms(self) -> float:
        lat = self.profile.one_way_latency_ms
        if isinstance(lat, tuple):
            return self._rng.uniform(lat[0], lat[1])
        return float(lat)

    def should_drop(self) -> bool:
        if self.profile.drop_probability == 0.0:
            return False
        return self._rng.random() < self.profile.drop_probability

"""Finite-statistics coincidence counting for either rate model.

Each emitted multi-photon event is an independent Bernoulli trial. It yields a
coincidence with probability

    p = rate * prod(efficiency per arm) + dark

clamped to ``[0, 1]``. Per setting the number of coincidences is therefore one
binomial draw over ``n_emitted`` trials. Every setting draws from its own
generator, seeded by ``derive_stream_seed(master_seed, index)``, so the result
does not depend on evaluation order or on concurrent execution.
"""

from __future__ import annotations

import math
from collections.abc import Sequence
from dataclasses import dataclass, field
from typing import Union

import numpy as np

from .models import RateModel, _as_settings, predict_rate

MASK64 = (1 << 64) - 1


def _splitmix64(x):
    """SplitMix64 finalizer; a bijection on 64-bit integers.

    Accepts a Python int or a ``np.uint64`` array.
    """
    if isinstance(x, np.ndarray):
        with np.errstate(over="ignore"):
            z = x.astype(np.uint64) + np.uint64(0x9E3779B97F4A7C15)
            z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
            z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
            return z ^ (z >> np.uint64(31))
    z = (x + 0x9E3779B97F4A7C15) & MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def derive_stream_seed(master_seed, setting_index):
    """Child seed ``splitmix64(splitmix64(master_seed) XOR setting_index)``.

    For a fixed master seed the map is injective in the index, and for a fixed
    index it is injective in the master seed. Both arguments are reduced
    modulo 2**64. Works elementwise on ``np.uint64`` arrays as well.
    """
    if isinstance(setting_index, np.ndarray) or isinstance(master_seed, np.ndarray):
        idx = np.asarray(setting_index, dtype=np.uint64)
        base = _splitmix64(np.asarray(master_seed, dtype=np.uint64))
        return _splitmix64(base ^ idx)
    if setting_index < 0:
        raise ValueError(f"setting_index must be >= 0, got {setting_index}")
    return _splitmix64(_splitmix64(int(master_seed) & MASK64) ^ (int(setting_index) & MASK64))


def stream(master_seed: int, setting_index: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(derive_stream_seed(master_seed, setting_index)))


@dataclass(frozen=True)
class SimulationConfig:
    model: RateModel
    settings_list: Sequence
    n_emitted: int
    detector_efficiency: Union[float, Sequence[float]] = 1.0
    dark_coincidence_rate: float = 0.0
    master_seed: int = 0

    def __post_init__(self):
        settings = tuple(tuple(_as_settings(s)) for s in self.settings_list)
        if not settings:
            raise ValueError("settings_list must not be empty")
        for s in settings:
            if len(s) != self.model.arity:
                raise ValueError(
                    f"each setting needs {self.model.arity} polarizers, got {len(s)}"
                )
        object.__setattr__(self, "settings_list", settings)
        if int(self.n_emitted) != self.n_emitted or self.n_emitted <= 0:
            raise ValueError(f"n_emitted must be a positive integer, got {self.n_emitted!r}")
        object.__setattr__(self, "n_emitted", int(self.n_emitted))
        eff = self.detector_efficiency
        effs = (float(eff),) * self.model.arity if np.isscalar(eff) else tuple(float(e) for e in eff)
        if len(effs) != self.model.arity:
            raise ValueError(f"need one efficiency per arm ({self.model.arity}), got {len(effs)}")
        for e in effs:
            if not (0.0 < e <= 1.0):
                raise ValueError(f"detector efficiency out of range (0,1], got {e!r}")
        object.__setattr__(self, "detector_efficiency", effs)
        if not (self.dark_coincidence_rate >= 0.0) or not math.isfinite(self.dark_coincidence_rate):
            raise ValueError(f"dark_coincidence_rate must be >= 0, got {self.dark_coincidence_rate!r}")
        if int(self.master_seed) != self.master_seed:
            raise ValueError(f"master_seed must be an integer, got {self.master_seed!r}")
        object.__setattr__(self, "master_seed", int(self.master_seed) & MASK64)

    @property
    def efficiency_product(self) -> float:
        return math.prod(self.detector_efficiency)


@dataclass(frozen=True)
class CountRecord:
    settings: tuple
    n_emitted: int
    n_coincidence: int
    model_rate: float
    warnings: tuple = field(default=(), compare=False)

    @property
    def angles(self) -> tuple:
        return tuple(s.angle for s in sorted(self.settings, key=lambda s: s.photon_index))

    @property
    def observed_rate(self) -> float:
        return self.n_coincidence / self.n_emitted


def coincidence_probability(rate: float, efficiency_product: float, dark: float):
    """Per-emission detection probability and any clamp warning."""
    p = rate * efficiency_product + dark
    if p > 1.0:
        return 1.0, (f"coincidence probability {p!r} exceeds 1; clamped",)
    return max(p, 0.0), ()


def simulate_counts(config: SimulationConfig) -> list[CountRecord]:
    records = []
    eta = config.efficiency_product
    for index, settings in enumerate(config.settings_list):
        rate = predict_rate(config.model, settings)
        p, warns = coincidence_probability(rate, eta, config.dark_coincidence_rate)
        count = int(stream(config.master_seed, index).binomial(config.n_emitted, p))
        records.append(CountRecord(settings, config.n_emitted, count, rate, warns))
    return records

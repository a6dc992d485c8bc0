"""Competing coincidence-rate laws for polarizer experiments.

Two families are modelled:

* Copenhagen collapse: the rate is the Born-rule probability that every photon
  of the source state passes its polarizer.
* Time-symmetric: for the triphoton source the rate is
  ``k * cos^2(theta_c - theta_a - theta_b)``; for the two-photon Bell source
  it is taken to coincide with the Born-rule law ``cos^2(theta_a - theta_b)/2``.

All rates are relative, i.e. coincidences per emitted multi-photon event.
"""

from __future__ import annotations

import math
from collections.abc import Sequence
from dataclasses import dataclass
from decimal import Decimal
from typing import Union

import numpy as np

from .measurement import PolarizerSetting, joint_pass_probability, settings_from_angles
from .state import PureState, norm

DEFAULT_K = 0.5


def _check_k(k: float) -> float:
    k = float(k)
    if not (0.0 < k <= 1.0):
        raise ValueError(f"k out of range (0,1], got {k!r}")
    return k


@dataclass(frozen=True)
class Copenhagen:
    source_state: PureState

    def __post_init__(self):
        if abs(norm(self.source_state) - 1.0) > 1e-9:
            raise ValueError("Copenhagen source state must be normalized")

    @property
    def arity(self) -> int:
        return self.source_state.num_photons

    @property
    def tag(self) -> str:
        return "copenhagen"


@dataclass(frozen=True)
class TimeSymmetricTriphoton:
    k: float = DEFAULT_K

    def __post_init__(self):
        object.__setattr__(self, "k", _check_k(self.k))

    arity = 3
    tag = "timesym"


@dataclass(frozen=True)
class TimeSymmetricBell:
    arity = 2
    tag = "timesym"


RateModel = Union[Copenhagen, TimeSymmetricTriphoton, TimeSymmetricBell]


def eq2_closed_form(theta_a: float, theta_b: float, theta_c: float) -> float:
    """Copenhagen triple-coincidence rate of the triphoton source, closed form."""
    amp = (
        math.cos(theta_a) * math.cos(theta_b) * math.sin(theta_c)
        + math.sin(theta_a) * math.sin(theta_b) * math.cos(theta_c)
    )
    return 0.5 * amp * amp


def eq3_time_symmetric(theta_a: float, theta_b: float, theta_c: float, k: float = DEFAULT_K) -> float:
    k = _check_k(k)
    return k * math.cos(theta_c - theta_a - theta_b) ** 2


def bell_rate(theta_a: float, theta_b: float) -> float:
    """Two-photon coincidence rate; shared by both theories."""
    return 0.5 * math.cos(theta_a - theta_b) ** 2


def copenhagen_rate(state: PureState, settings: Sequence[PolarizerSetting]) -> float:
    return joint_pass_probability(state, settings)


def _as_settings(settings) -> list[PolarizerSetting]:
    settings = list(settings)
    if settings and not isinstance(settings[0], PolarizerSetting):
        return settings_from_angles(settings)
    return settings


def _ordered_angles(settings: list[PolarizerSetting], arity: int) -> list[float]:
    if len(settings) != arity:
        raise ValueError(f"model expects {arity} polarizer settings, got {len(settings)}")
    angles = [None] * arity
    for s in settings:
        if s.photon_index >= arity or angles[s.photon_index] is not None:
            raise ValueError(f"settings must cover photons 0..{arity - 1} exactly once")
        angles[s.photon_index] = s.angle
    return angles


def predict_rate(model: RateModel, settings) -> float:
    """Relative coincidence rate of ``model`` at ``settings``.

    ``settings`` is a list of :class:`PolarizerSetting` or a plain sequence of
    angles in photon order. Every photon of the experiment must be measured.
    """
    settings = _as_settings(settings)
    angles = _ordered_angles(settings, model.arity)
    if isinstance(model, Copenhagen):
        return copenhagen_rate(model.source_state, settings)
    if isinstance(model, TimeSymmetricTriphoton):
        return eq3_time_symmetric(*angles, k=model.k)
    if isinstance(model, TimeSymmetricBell):
        return bell_rate(*angles)
    raise TypeError(f"unknown rate model {model!r}")


def rate_grid(model: RateModel, *axes: np.ndarray) -> np.ndarray:
    """Vectorized rates over the outer product of per-photon angle arrays.

    Returns an array of shape ``(len(axes[0]), len(axes[1]), ...)``.
    """
    if len(axes) != model.arity:
        raise ValueError(f"model expects {model.arity} angle axes, got {len(axes)}")
    axes = [np.asarray(a, dtype=float) for a in axes]
    if isinstance(model, Copenhagen):
        amp = model.source_state.tensor_view()
        # contract photon axes one at a time; each new grid axis is appended last
        for a in axes:
            kets = np.stack([np.cos(a), np.sin(a)])
            amp = np.tensordot(amp, kets, axes=([0], [0]))
        return np.abs(amp) ** 2
    grids = np.meshgrid(*axes, indexing="ij")
    if isinstance(model, TimeSymmetricTriphoton):
        ta, tb, tc = grids
        return model.k * np.cos(tc - ta - tb) ** 2
    if isinstance(model, TimeSymmetricBell):
        ta, tb = grids
        return 0.5 * np.cos(ta - tb) ** 2
    raise TypeError(f"unknown rate model {model!r}")


def decoherence_step_budget(tau_op: float, tau_coherence: float) -> int:
    """Whole operations that fit in the coherence time: ``floor(tau_coherence / tau_op)``.

    The ratio is taken in decimal arithmetic on the shortest repr of each
    input, so ``(1e-9, 1e-7)`` gives 100 rather than 99.
    """
    if not (tau_op > 0) or not math.isfinite(tau_op):
        raise ValueError(f"tau_op must be a positive finite time, got {tau_op!r}")
    if not (tau_coherence >= 0) or not math.isfinite(tau_coherence):
        raise ValueError(f"tau_coherence must be a non-negative finite time, got {tau_coherence!r}")
    return int(Decimal(repr(float(tau_coherence))) // Decimal(repr(float(tau_op))))

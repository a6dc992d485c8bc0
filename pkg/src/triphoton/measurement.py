"""Ideal linear polarizers as projective measurements with collapse."""

from __future__ import annotations

import math
from collections.abc import Sequence
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .state import PureState

# Branches less likely than this are treated as impossible; renormalizing them
# would only amplify rounding noise.
PROBABILITY_FLOOR = 1e-15


@dataclass(frozen=True)
class PolarizerSetting:
    photon_index: int
    angle: float

    def __post_init__(self):
        if int(self.photon_index) != self.photon_index or self.photon_index < 0:
            raise ValueError(f"photon_index must be a non-negative integer, got {self.photon_index!r}")
        if not math.isfinite(self.angle):
            raise ValueError(f"angle must be finite, got {self.angle!r}")
        object.__setattr__(self, "photon_index", int(self.photon_index))
        object.__setattr__(self, "angle", float(self.angle))


@dataclass(frozen=True)
class MeasurementOutcome:
    pass_probability: float
    post_pass_state: Optional[PureState]
    post_absorb_state: Optional[PureState]

    @property
    def absorb_probability(self) -> float:
        return 1.0 - self.pass_probability


def settings_from_angles(angles: Sequence[float]) -> list[PolarizerSetting]:
    """One setting per photon, in photon order: ``(theta_a, theta_b, ...)``."""
    return [PolarizerSetting(i, a) for i, a in enumerate(angles)]


def _check_settings(state: PureState, settings: Sequence[PolarizerSetting]) -> None:
    seen = set()
    for s in settings:
        if s.photon_index >= state.num_photons:
            raise ValueError(
                f"photon_index {s.photon_index} out of range for {state.num_photons}-photon state"
            )
        if s.photon_index in seen:
            raise ValueError(f"duplicate photon index {s.photon_index}")
        seen.add(s.photon_index)


def _split(state: PureState, setting: PolarizerSetting):
    """Components of ``state`` along ``|theta>`` and ``|theta + pi/2>`` for one photon.

    Returns the two reduced tensors with the measured axis removed.
    """
    psi = state.tensor_view()
    c, s = math.cos(setting.angle), math.sin(setting.angle)
    h = np.take(psi, 0, axis=setting.photon_index)
    v = np.take(psi, 1, axis=setting.photon_index)
    return c * h + s * v, -s * h + c * v


def _reinsert(reduced: np.ndarray, axis: int, angle: float, weight: float) -> PureState:
    ket = np.array([math.cos(angle), math.sin(angle)])
    full = np.moveaxis(np.multiply.outer(ket, reduced), 0, axis)
    return PureState(full.reshape(-1) / weight)


def apply_polarizer(state: PureState, setting: PolarizerSetting) -> MeasurementOutcome:
    """Project one photon onto ``|theta>`` (pass) or its orthogonal (absorb).

    Both branches are renormalized. A branch whose probability falls below
    ``PROBABILITY_FLOOR`` has no post state.
    """
    _check_settings(state, [setting])
    along, across = _split(state, setting)
    p_along = float(np.vdot(along, along).real)
    p_across = float(np.vdot(across, across).real)
    total = p_along + p_across
    if total == 0.0:
        raise ValueError("cannot measure the zero vector")
    p_pass = p_along / total
    p_absorb = p_across / total

    axis = setting.photon_index
    passed = absorbed = None
    if p_pass >= PROBABILITY_FLOOR:
        passed = _reinsert(along, axis, setting.angle, math.sqrt(p_along))
    if p_absorb >= PROBABILITY_FLOOR:
        absorbed = _reinsert(across, axis, setting.angle + math.pi / 2, math.sqrt(p_across))
    return MeasurementOutcome(p_pass, passed, absorbed)


def joint_pass_probability(state: PureState, settings: Sequence[PolarizerSetting]) -> float:
    """Probability that every listed photon passes its polarizer.

    Contracts the measured photons against their kets in one step and takes
    the squared norm of what remains (Born rule).
    """
    _check_settings(state, settings)
    psi = state.tensor_view()
    # contract highest axis first so lower axis numbers stay valid
    for s in sorted(settings, key=lambda s: s.photon_index, reverse=True):
        ket = np.array([math.cos(s.angle), math.sin(s.angle)])
        psi = np.tensordot(psi, ket, axes=([s.photon_index], [0]))
    prob = float(np.vdot(psi, psi).real) / float(np.vdot(state.amplitudes, state.amplitudes).real)
    return min(max(prob, 0.0), 1.0)


def sequential_chain(state: PureState, ordered_settings: Sequence[PolarizerSetting]) -> float:
    """Measure photons one after another in the listed (temporal) order.

    Follows the pass branch after each polarizer and multiplies the pass
    probabilities. Returns 0 as soon as a pass branch is impossible.
    """
    _check_settings(state, ordered_settings)
    prob = 1.0
    current = state
    for setting in ordered_settings:
        outcome = apply_polarizer(current, setting)
        prob *= outcome.pass_probability
        if outcome.post_pass_state is None:
            return 0.0
        current = outcome.post_pass_state
    return prob

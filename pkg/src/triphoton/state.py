"""Dense state vectors for multi-photon polarization states.

Basis convention: for an n-photon state the amplitude at index ``b`` belongs to
the product ket whose photon ``a`` (index 0) is the most significant bit of
``b``. Bit value 0 is horizontal polarization ``|H> = |0>``, bit value 1 is
vertical ``|V> = |pi/2>``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

MAX_PHOTONS = 20
NORM_TOL = 1e-12


class CapacityError(ValueError):
    """Raised when a state would exceed the configured photon cap."""


def canonical_angle(theta: float) -> float:
    """Map a polarizer orientation into ``[0, pi)``.

    A linear polarizer at ``theta`` and ``theta + pi`` is the same device.
    """
    theta = float(theta)
    if not math.isfinite(theta):
        raise ValueError(f"angle must be finite, got {theta!r}")
    out = math.fmod(theta, math.pi)
    if out < 0.0:
        out += math.pi
    # fmod of a value just below a multiple of pi can round up to pi
    if out >= math.pi:
        out = 0.0
    return out


@dataclass(frozen=True, eq=False)
class PureState:
    """Immutable amplitude vector over the n-photon H/V basis."""

    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.array(self.amplitudes, dtype=np.complex128).reshape(-1)
        size = amps.size
        if size < 2 or size & (size - 1):
            raise ValueError(f"amplitude vector length must be 2**n with n >= 1, got {size}")
        if not np.all(np.isfinite(amps)):
            raise ValueError("amplitudes must be finite")
        amps.flags.writeable = False
        object.__setattr__(self, "amplitudes", amps)

    @property
    def num_photons(self) -> int:
        return self.amplitudes.size.bit_length() - 1

    def tensor_view(self) -> np.ndarray:
        """Amplitudes reshaped to one length-2 axis per photon."""
        return self.amplitudes.reshape((2,) * self.num_photons)

    def normalized(self) -> PureState:
        n = norm(self)
        if n == 0.0:
            raise ValueError("cannot normalize the zero vector")
        return PureState(self.amplitudes / n)

    def __eq__(self, other):
        if not isinstance(other, PureState):
            return NotImplemented
        return np.array_equal(self.amplitudes, other.amplitudes)

    def __hash__(self):
        return hash(self.amplitudes.tobytes())

    def __repr__(self):
        return f"PureState(num_photons={self.num_photons}, amplitudes={self.amplitudes!r})"


def linear_ket(theta: float) -> PureState:
    """Single-photon linear polarization ket ``cos(theta)|H> + sin(theta)|V>``.

    The angle is used as given; ``theta`` and ``theta + pi`` give kets that
    differ by a global sign and therefore the same projector.
    """
    theta = float(theta)
    if not math.isfinite(theta):
        raise ValueError(f"angle must be finite, got {theta!r}")
    return PureState(np.array([math.cos(theta), math.sin(theta)]))


def tensor(left: PureState, right: PureState, max_photons: int = MAX_PHOTONS) -> PureState:
    n = left.num_photons + right.num_photons
    if n > max_photons:
        raise CapacityError(f"tensor product would hold {n} photons (cap {max_photons})")
    return PureState(np.kron(left.amplitudes, right.amplitudes))


def tensor_all(*states: PureState, max_photons: int = MAX_PHOTONS) -> PureState:
    out = states[0]
    for s in states[1:]:
        out = tensor(out, s, max_photons=max_photons)
    return out


def inner_product(bra: PureState, ket: PureState) -> complex:
    """``<bra|ket>``, conjugate-linear in ``bra``."""
    if bra.num_photons != ket.num_photons:
        raise ValueError(
            f"dimension mismatch: {bra.num_photons} vs {ket.num_photons} photons"
        )
    return complex(np.vdot(bra.amplitudes, ket.amplitudes))


def norm(state: PureState) -> float:
    return float(np.linalg.norm(state.amplitudes))


def basis_state(bits: str) -> PureState:
    """Product of H/V kets from a string such as ``"HHV"`` or ``"001"``."""
    lookup = {"H": 0, "V": 1, "0": 0, "1": 1}
    try:
        index = 0
        for ch in bits:
            index = (index << 1) | lookup[ch]
    except KeyError as exc:
        raise ValueError(f"unknown basis label {exc.args[0]!r}") from None
    if not bits:
        raise ValueError("empty basis label")
    amps = np.zeros(1 << len(bits), dtype=np.complex128)
    amps[index] = 1.0
    return PureState(amps)


def bell_state() -> PureState:
    """``(|HH> + |VV>)/sqrt(2)``; coincidences follow ``cos^2(a - b)/2``."""
    amps = np.zeros(4)
    amps[0b00] = amps[0b11] = 1.0 / math.sqrt(2.0)
    return PureState(amps)


def ghz_state() -> PureState:
    """Triphoton source ``(|H>_a|H>_b|V>_c + |V>_a|V>_b|H>_c)/sqrt(2)``."""
    amps = np.zeros(8)
    amps[0b001] = amps[0b110] = 1.0 / math.sqrt(2.0)
    return PureState(amps)

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from triphoton.state import (
    CapacityError,
    PureState,
    basis_state,
    bell_state,
    canonical_angle,
    ghz_state,
    inner_product,
    linear_ket,
    norm,
    tensor,
    tensor_all,
)

from conftest import random_state

finite_angles = st.floats(min_value=-20.0, max_value=20.0, allow_nan=False)


class TestLinearKet:
    def test_horizontal(self):
        np.testing.assert_array_equal(linear_ket(0.0).amplitudes, [1, 0])

    def test_vertical(self):
        np.testing.assert_allclose(linear_ket(math.pi / 2).amplitudes, [0, 1], atol=1e-16)

    def test_diagonal(self):
        ket = linear_ket(math.pi / 4)
        np.testing.assert_allclose(ket.amplitudes, [0.7071067811865476, 0.7071067811865476], rtol=0, atol=2.3e-16)
        assert inner_product(ket, ket) == pytest.approx(1.0, abs=1e-15)

    @pytest.mark.parametrize("bad", [math.nan, math.inf, -math.inf])
    def test_rejects_non_finite(self, bad):
        with pytest.raises(ValueError):
            linear_ket(bad)

    @given(finite_angles, finite_angles)
    def test_overlap_is_cos_of_difference(self, theta, phi):
        overlap = inner_product(linear_ket(theta), linear_ket(phi))
        assert abs(overlap - math.cos(theta - phi)) < 1e-12

    @given(finite_angles)
    def test_theta_and_theta_plus_pi_share_projector(self, theta):
        a = linear_ket(theta).amplitudes
        b = linear_ket(theta + math.pi).amplitudes
        np.testing.assert_allclose(np.outer(a, a.conj()), np.outer(b, b.conj()), atol=1e-12)
        np.testing.assert_allclose(a, -b, atol=1e-12)


class TestCanonicalAngle:
    @given(finite_angles)
    def test_range(self, theta):
        out = canonical_angle(theta)
        assert 0.0 <= out < math.pi
        # same physical polarizer
        assert abs(math.sin(out - theta)) < 1e-12

    def test_values(self):
        assert canonical_angle(0.0) == 0.0
        assert canonical_angle(math.pi) == 0.0
        assert canonical_angle(-math.pi / 4) == pytest.approx(3 * math.pi / 4)

    def test_rejects_nan(self):
        with pytest.raises(ValueError):
            canonical_angle(math.nan)


class TestTensor:
    def test_hh(self):
        out = tensor(PureState([1, 0]), PureState([1, 0]))
        np.testing.assert_array_equal(out.amplitudes, [1, 0, 0, 0])

    def test_hv(self):
        out = tensor(PureState([1, 0]), PureState([0, 1]))
        np.testing.assert_array_equal(out.amplitudes, [0, 1, 0, 0])

    def test_kronecker_definition(self):
        out = tensor(PureState([0.6, 0.8]), PureState([1, 0]))
        np.testing.assert_allclose(out.amplitudes, [0.6, 0, 0.8, 0], atol=1e-16)

    def test_index_layout(self, rng):
        left, right = random_state(rng, 2), random_state(rng, 1)
        out = tensor(left, right).amplitudes
        for i in range(4):
            for j in range(2):
                assert out[i * 2 + j] == pytest.approx(left.amplitudes[i] * right.amplitudes[j], abs=1e-16)

    def test_associative(self, rng):
        for _ in range(50):
            a, b, c = (random_state(rng, n) for n in (1, 2, 1))
            lhs = tensor(tensor(a, b), c).amplitudes
            rhs = tensor(a, tensor(b, c)).amplitudes
            np.testing.assert_allclose(lhs, rhs, rtol=0, atol=1e-15)

    def test_norm_preserved(self, rng):
        out = tensor(random_state(rng, 2), random_state(rng, 3))
        assert abs(norm(out) - 1.0) < 1e-12

    def test_capacity(self):
        big = PureState(np.ones(2**11) / math.sqrt(2**11))
        with pytest.raises(CapacityError):
            tensor(big, big)
        with pytest.raises(CapacityError):
            tensor(PureState([1, 0]), PureState([1, 0]), max_photons=1)


class TestInnerProduct:
    def test_orthogonal(self):
        assert abs(inner_product(linear_ket(0.0), linear_ket(math.pi / 2))) < 1e-16

    def test_diagonal_overlap(self):
        assert inner_product(linear_ket(0.0), linear_ket(math.pi / 4)).real == pytest.approx(
            0.7071067811865476, abs=1e-16
        )

    def test_conjugate_linear_in_bra(self, rng):
        a, b = random_state(rng, 2), random_state(rng, 2)
        c = 0.3 - 0.7j
        scaled = PureState(c * a.amplitudes)
        assert inner_product(scaled, b) == pytest.approx(c.conjugate() * inner_product(a, b), abs=1e-14)
        assert inner_product(b, scaled) == pytest.approx(c * inner_product(b, a), abs=1e-14)

    def test_self_is_squared_norm(self):
        s = PureState([0.6, 0.8j, 0, 0])
        val = inner_product(s, s)
        assert val.imag == 0.0
        assert val.real == pytest.approx(norm(s) ** 2, abs=1e-15)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            inner_product(bell_state(), ghz_state())


class TestSources:
    def test_bell_layout(self):
        amps = bell_state().amplitudes
        assert np.flatnonzero(amps).tolist() == [0, 3]
        assert abs(norm(bell_state()) - 1.0) < 1e-12

    def test_ghz_layout(self):
        amps = ghz_state().amplitudes
        # |H_a H_b V_c> = 0b001 and |V_a V_b H_c> = 0b110
        assert np.flatnonzero(amps).tolist() == [1, 6]
        assert amps[1] == amps[6] == pytest.approx(1 / math.sqrt(2))
        assert abs(norm(ghz_state()) - 1.0) < 1e-12

    def test_ghz_built_from_kets(self):
        # the source written as a superposition of product kets
        h, v = linear_ket(0.0), linear_ket(math.pi / 2)
        built = (tensor_all(h, h, v).amplitudes + tensor_all(v, v, h).amplitudes) / math.sqrt(2)
        np.testing.assert_allclose(built, ghz_state().amplitudes, atol=1e-16)

    def test_basis_state_labels(self):
        assert basis_state("HHV") == basis_state("001")
        assert np.flatnonzero(basis_state("VVH").amplitudes).tolist() == [6]


class TestNorm:
    def test_values(self):
        assert norm(PureState([1, 0])) == 1.0
        assert norm(PureState([0, 0, 0, 0])) == 0.0
        assert norm(PureState([0.6, 0.8])) == pytest.approx(1.0, abs=1e-16)


class TestPureState:
    def test_rejects_bad_length(self):
        with pytest.raises(ValueError):
            PureState([1, 0, 0])
        with pytest.raises(ValueError):
            PureState([1])

    def test_rejects_nan(self):
        with pytest.raises(ValueError):
            PureState([math.nan, 0])

    def test_immutable(self):
        s = ghz_state()
        with pytest.raises(ValueError):
            s.amplitudes[0] = 1.0

    def test_num_photons(self):
        assert ghz_state().num_photons == 3
        assert bell_state().num_photons == 2

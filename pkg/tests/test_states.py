import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ptqsd.pt_core import PTParams
from ptqsd.states import (
    DOWN_Z,
    UP_Z,
    Y_MINUS,
    Y_PLUS,
    bloch,
    candidate_pair,
    evolve,
    populations,
    y_population_protocol,
)


def _projector(s):
    s = np.asarray(s)
    return np.outer(s, s.conj()) / np.vdot(s, s).real


class TestCandidatePair:
    def test_orthogonal_at_right_angle(self):
        pair = candidate_pair(math.pi / 2)
        assert abs(np.vdot(pair.psi1, pair.psi2)) < 1e-15

    def test_overlap_theta_1_3(self):
        pair = candidate_pair(1.3)
        # direct inner product of the amplitude vectors, cos(1.3) = 0.26749882862458735
        assert np.vdot(pair.psi1, pair.psi2) == pytest.approx(0.26749882862458735, abs=1e-12)

    @given(st.floats(1e-3, math.pi / 2), st.integers(-3, 3))
    def test_overlap_and_norm(self, theta, n):
        pair = candidate_pair(theta, (2 * n - 0.5) * math.pi)
        assert np.linalg.norm(pair.psi1) == pytest.approx(1.0, abs=1e-14)
        assert np.linalg.norm(pair.psi2) == pytest.approx(1.0, abs=1e-14)
        assert np.vdot(pair.psi1, pair.psi2) == pytest.approx(math.cos(theta), abs=1e-12)
        assert pair.in_plane

    def test_y_z_plane_mirror(self):
        pair = candidate_pair(1.3)
        u1, u2 = bloch(pair.psi1), bloch(pair.psi2)
        assert abs(u1[0]) < 1e-15 and abs(u2[0]) < 1e-15
        np.testing.assert_allclose(u1, [0, -math.cos(1.3), math.sin(1.3)], atol=1e-15)
        np.testing.assert_allclose(u2, [0, u1[1], -u1[2]], atol=1e-15)

    def test_phase_choices_coincide(self):
        # n = 0 and n = 1 give the same e^{i phi} = -i
        a, b = candidate_pair(0.8, -0.5 * math.pi), candidate_pair(0.8, 1.5 * math.pi)
        np.testing.assert_allclose(a.psi1, b.psi1, atol=1e-15)

    @pytest.mark.parametrize("theta", [0.0, -0.1, 1.6, math.nan])
    def test_theta_out_of_range(self, theta):
        with pytest.raises(ValueError):
            candidate_pair(theta)


class TestBloch:
    def test_basis_points(self):
        np.testing.assert_allclose(bloch(UP_Z), [0, 0, 1])
        np.testing.assert_allclose(bloch(np.array([1, 1]) / math.sqrt(2)), [1, 0, 0])
        np.testing.assert_allclose(bloch(Y_PLUS), [0, 1, 0], atol=1e-15)

    def test_projector_oracle(self):
        from ptqsd.pt_core import SIGMA_X, SIGMA_Y, SIGMA_Z

        s = np.array([0.3 - 0.2j, 1.1 + 0.4j])
        rho = _projector(s)
        expected = [np.trace(rho @ sig).real for sig in (SIGMA_X, SIGMA_Y, SIGMA_Z)]
        np.testing.assert_allclose(bloch(s), expected, atol=1e-15)
        np.testing.assert_allclose(bloch(s, normalize=False), np.array(expected) * np.vdot(s, s).real, atol=1e-15)

    def test_unit_norm_after_normalization(self):
        p = PTParams.from_a(2.5)
        states = evolve(p, candidate_pair(0.9).psi1, np.linspace(0, 3, 40))
        np.testing.assert_allclose(np.linalg.norm(bloch(states), axis=-1), 1.0, atol=1e-10)

    def test_zero_vector(self):
        with pytest.raises(ValueError):
            bloch(np.zeros(2))


class TestEvolve:
    def test_identity_at_zero(self):
        s = np.array([0.6, 0.8j])
        np.testing.assert_array_equal(evolve(PTParams.from_a(1.7), s, 0.0), s)

    def test_rabi_flip(self):
        np.testing.assert_allclose(evolve(PTParams.from_a(0.0), UP_Z, math.pi / 2), -1j * DOWN_Z, atol=1e-15)

    def test_reference_orthogonal_time(self):
        p = PTParams.from_a(0.3033)
        pair = candidate_pair(1.3)
        f1, f2 = evolve(p, pair.psi1, 0.7566), evolve(p, pair.psi2, 0.7566)
        overlap = abs(np.vdot(f1, f2)) / (np.linalg.norm(f1) * np.linalg.norm(f2))
        assert overlap < 1e-3

    def test_negative_time(self):
        with pytest.raises(ValueError):
            evolve(PTParams.from_a(0.5), UP_Z, -0.1)

    def test_bad_which(self):
        with pytest.raises(ValueError):
            evolve(PTParams.from_a(0.5), UP_Z, 0.1, which="hermitian")

    @pytest.mark.parametrize("a", [0.0, 0.4, 1.0, 1.6, 3.0])
    def test_diss_parallel_to_pt(self, a):
        p = PTParams.from_a(a)
        s = candidate_pair(0.7).psi2
        for t in np.linspace(0, 4, 17):
            np.testing.assert_allclose(
                _projector(evolve(p, s, t, "diss")), _projector(evolve(p, s, t, "pt")), atol=1e-12
            )

    @pytest.mark.parametrize("a", [0.2, 0.5, 1.0, 1.3, 3.0, 5.0])
    @pytest.mark.parametrize("n", [0, 1, 2])
    def test_stays_in_y_z_plane(self, a, n):
        p = PTParams.from_a(a)
        pair = candidate_pair(1.1, (2 * n - 0.5) * math.pi)
        t = np.linspace(0, 6, 61)
        for psi in (pair.psi1, pair.psi2):
            assert np.max(np.abs(bloch(evolve(p, psi, t))[:, 0])) < 1e-9

    def test_counterclockwise_rotation(self):
        # fixes the sign of the propagator: psi1's y-z angle grows over a quarter period
        p = PTParams.from_a(0.5)
        quarter = 0.5 * math.pi / p.omega.real
        t = np.linspace(0, quarter, 200)
        u = bloch(evolve(p, candidate_pair(1.3).psi1, t))
        angle = np.unwrap(np.arctan2(u[:, 2], u[:, 1]))
        assert np.all(np.diff(angle) > 0)


class TestPopulations:
    def test_initial_up(self):
        pops = populations(PTParams.from_a(0.6), UP_Z, [0.0])
        assert pops.P_pt_zp[0] == 1 and pops.P_pt_zm[0] == 0

    @pytest.mark.parametrize("a", [0.0, 0.3033, 1.0587, 2.0])
    def test_relations(self, a):
        p = PTParams.from_a(a)
        t = np.linspace(0, 2, 81)
        pops = populations(p, candidate_pair(1.3).psi1, t)
        np.testing.assert_allclose(pops.Pbar_zp + pops.Pbar_zm, 1.0, atol=1e-12)
        np.testing.assert_allclose(pops.Pbar_yp + pops.Pbar_ym, 1.0, atol=1e-12)
        for col in ("zp", "zm", "yp", "ym"):
            np.testing.assert_allclose(
                getattr(pops, f"P_diss_{col}"), np.exp(-2 * p.Gamma * t) * getattr(pops, f"P_pt_{col}"), rtol=1e-12
            )
        np.testing.assert_allclose(pops.Pbar_yp_protocol, pops.Pbar_yp, atol=1e-12)

    def test_reference_crossing(self):
        p = PTParams.from_a(0.3033)
        pair = candidate_pair(1.3)
        t = np.linspace(0, 0.7566, 200)
        first = populations(p, pair.psi1, t)
        assert np.all(np.diff(first.Pbar_zp) < 0)

        def gap(jt):
            a, b = populations(p, pair.psi1, [jt]), populations(p, pair.psi2, [jt])
            return a.Pbar_zp[0] - b.Pbar_zm[0]

        assert gap(0.7556) * gap(0.7576) < 0

    @pytest.mark.parametrize("grid", [[], [0.2, 0.1], [-0.1, 0.3], [[0.1]]])
    def test_invalid_grid(self, grid):
        with pytest.raises(ValueError):
            populations(PTParams.from_a(0.5), UP_Z, grid)


class TestYProtocol:
    def test_eigenstates(self):
        assert y_population_protocol(Y_PLUS) == pytest.approx(1.0, abs=1e-15)
        assert y_population_protocol(Y_MINUS) == pytest.approx(0.0, abs=1e-15)
        assert y_population_protocol(UP_Z) == pytest.approx(0.5, abs=1e-15)

    @given(st.complex_numbers(max_magnitude=10), st.complex_numbers(max_magnitude=10))
    def test_matches_projection(self, c0, c1):
        s = np.array([c0, c1])
        n2 = np.vdot(s, s).real
        if n2 < 1e-6:
            return
        direct = abs(np.vdot(Y_PLUS, s)) ** 2 / n2
        assert y_population_protocol(s) == pytest.approx(direct, abs=1e-12)

    def test_zero_vector(self):
        with pytest.raises(ValueError):
            y_population_protocol(np.zeros(2))

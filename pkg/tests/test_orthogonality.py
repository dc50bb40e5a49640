import math

import numpy as np
import pytest
from scipy.linalg import expm
from scipy.optimize import brentq

from ptqsd.geometry import bounds
from ptqsd.orthogonality import (
    OrthStatus,
    SolverFailure,
    SolverOpts,
    certificate,
    orth_time,
    overlap_angle,
    region_map,
)
from ptqsd.pt_core import PTParams, hamiltonian_pt
from ptqsd.states import bloch, candidate_pair, evolve

FIG3_A = [0.6049, 0.7119, 1.0587, 1.2326]


def expm_min_overlap(a, theta, t_end, n=4000):
    """Smallest normalized |<psi1(t)|psi2(t)>|^2 on a grid, via a dense matrix exponential."""
    H = hamiltonian_pt(PTParams.from_a(a))
    pair = candidate_pair(theta)
    step = expm(-1j * H * t_end / n)
    s1, s2 = pair.psi1.copy(), pair.psi2.copy()
    best = 1.0
    for _ in range(n):
        s1, s2 = step @ s1, step @ s2
        s1, s2 = s1 / np.linalg.norm(s1), s2 / np.linalg.norm(s2)
        best = min(best, abs(np.vdot(s1, s2)) ** 2)
    return best


class TestOverlapAngle:
    @pytest.mark.parametrize("theta", [0.2, 0.9, 1.3])
    def test_initial_angle(self, theta):
        d0 = overlap_angle(PTParams.from_a(0.7), candidate_pair(theta), 0.0)
        assert d0 == pytest.approx(2 * theta, abs=1e-14)
        assert math.cos(d0) == pytest.approx(2 * math.cos(theta) ** 2 - 1, abs=1e-14)

    def test_hermitian_constant(self):
        d = overlap_angle(PTParams.from_a(0.0), candidate_pair(1.1), np.linspace(0, 10, 101))
        np.testing.assert_allclose(d, 2.2, atol=1e-12)

    def test_sign_change_at_reference_point(self):
        p = PTParams.from_a(0.3033)
        pair = candidate_pair(1.3)
        assert overlap_angle(p, pair, 0.7556) < math.pi < overlap_angle(p, pair, 0.7576)

    def test_out_of_plane(self):
        with pytest.raises(ValueError):
            overlap_angle(PTParams.from_a(0.5), candidate_pair(1.0, phi=0.3), 0.4)


class TestOrthTime:
    def test_already_orthogonal(self):
        r = orth_time(PTParams.from_a(0.5), candidate_pair(math.pi / 2))
        assert r.status is OrthStatus.FOUND and r.t_orth == 0.0

    def test_reference_pts(self):
        r = orth_time(PTParams.from_a(0.3033), candidate_pair(1.3))
        assert r.found and r.jt_orth == pytest.approx(0.7566, abs=5e-4)

    def test_reference_ptb(self):
        r = orth_time(PTParams.from_a(1.0587), candidate_pair(1.3))
        assert r.found and r.jt_orth == pytest.approx(0.4183, abs=5e-4)

    def test_below_lower_bound(self):
        p = PTParams.from_a(0.10)
        assert orth_time(p, candidate_pair(1.3)).status is OrthStatus.NEVER
        # oracle: over two periods the pair never gets close to orthogonal
        assert expm_min_overlap(0.10, 1.3, 4 * math.pi / p.omega.real) > 1e-3

    def test_above_upper_bound(self):
        assert orth_time(PTParams.from_a(4.0), candidate_pair(1.3)).status is OrthStatus.NEVER
        assert expm_min_overlap(4.0, 1.3, 10.0) > 1e-3

    def test_exceptional_point(self):
        r = orth_time(PTParams.from_a(1.0), candidate_pair(1.3))
        assert r.found
        f1, f2 = (evolve(PTParams.from_a(1.0), s, r.t_orth) for s in (candidate_pair(1.3).psi1, candidate_pair(1.3).psi2))
        assert abs(np.vdot(f1, f2)) / (np.linalg.norm(f1) * np.linalg.norm(f2)) < 1e-9

    def test_units_of_J(self):
        r1 = orth_time(PTParams.from_a(0.6), candidate_pair(1.0))
        r2 = orth_time(PTParams(0.25, 0.6 * 0.25), candidate_pair(1.0))
        assert r2.t_orth == pytest.approx(4 * r1.t_orth, rel=1e-10)
        assert r2.jt_orth == pytest.approx(r1.jt_orth, rel=1e-10)

    def test_boundary_status(self):
        theta = 1.0
        b = bounds(theta)
        for a in (b.a_l, b.a_u):
            assert orth_time(PTParams.from_a(a), candidate_pair(theta)).status is OrthStatus.BOUNDARY

    @pytest.mark.parametrize("theta", [0.3, 0.7, 1.0, 1.3])
    def test_bound_sharpness(self, theta):
        b = bounds(theta)
        status = lambda a: orth_time(PTParams.from_a(a), candidate_pair(theta)).status
        assert status(b.a_l - 0.005) is OrthStatus.NEVER
        assert status(b.a_l + 0.005) is OrthStatus.FOUND
        assert status(b.a_u - 0.005) is OrthStatus.FOUND
        assert status(b.a_u + 0.005) is OrthStatus.NEVER

    @pytest.mark.parametrize("a", [0.2, 0.3033, 0.8, 1.0, 1.0587, 2.0, 3.5])
    @pytest.mark.parametrize("theta", [0.4, 0.9, 1.3])
    def test_diss_equals_pt(self, a, theta):
        p, pair = PTParams.from_a(a), candidate_pair(theta)
        r_pt = orth_time(p, pair, SolverOpts(which="pt"))
        r_diss = orth_time(p, pair, SolverOpts(which="diss"))
        assert r_pt.status is r_diss.status
        if r_pt.found:
            assert r_diss.t_orth == pytest.approx(r_pt.t_orth, abs=1e-10)

    @pytest.mark.parametrize("a", [0.3033, 0.5, 1.0587, 2.5])
    @pytest.mark.parametrize("theta", [0.5, 1.0, 1.3])
    def test_certificate_equivalence(self, a, theta):
        p, pair = PTParams.from_a(a), candidate_pair(theta)
        r = orth_time(p, pair)
        if not r.found:
            pytest.skip("outside the valid window")
        assert r.overlap_residual <= 1e-10
        assert r.certificate.z_match(1e-6) and r.certificate.y_check(1e-6)
        u1, u2 = (bloch(evolve(p, s, r.t_orth)) for s in (pair.psi1, pair.psi2))
        assert u1 @ u2 == pytest.approx(-1.0, abs=1e-8)

    @pytest.mark.parametrize("a", [0.5, 1.2])
    def test_y_exclusion(self, a):
        p, pair = PTParams.from_a(a), candidate_pair(1.0)
        t_end = 2 * math.pi / p.omega.real if a < 1 else 4.0

        def z_gap(t):
            c = certificate(p, pair, t)
            return c.Pbar1_zp - c.Pbar2_zm

        ts = np.linspace(1e-6, t_end, 3000)
        g = np.array([z_gap(t) for t in ts])
        roots = [brentq(z_gap, ts[i], ts[i + 1], xtol=1e-15) for i in np.flatnonzero(np.sign(g[:-1]) != np.sign(g[1:]))]
        times = [0.0] + roots
        saw_mirror = saw_orth = False
        for t in times:
            c = certificate(p, pair, t)
            assert c.z_match(1e-6)
            u1, u2 = (bloch(evolve(p, s, t)) for s in (pair.psi1, pair.psi2))
            if u1 @ u2 > -1 + 1e-6:
                assert not c.y_check(1e-6)
                assert abs(c.Pbar1_yp + c.Pbar2_yp - 1) > 1e-6
                saw_mirror = True
            else:
                assert c.y_check(1e-6)
                saw_orth = True
        assert saw_mirror and saw_orth

    @pytest.mark.parametrize("a", FIG3_A)
    def test_decreasing_in_theta(self, a):
        thetas = np.linspace(0.05, math.pi / 2 - 0.01, 20)
        times = [orth_time(PTParams.from_a(a), candidate_pair(th)) for th in thetas]
        jt = np.array([r.jt_orth for r in times if r.found])
        assert len(jt) >= 5
        assert np.all(np.diff(jt) < 0)

    def test_solver_failure(self):
        opts = SolverOpts(max_doublings=3, jt_max=1e6)
        with pytest.raises(SolverFailure):
            orth_time(PTParams.from_a(4.0), candidate_pair(1.3), opts)


@pytest.fixture(scope="module")
def rmap():
    return region_map(np.linspace(0.1, 1.5, 15), np.linspace(0.0, 4.0, 41))


class TestRegionMap:
    def test_shape_and_rows(self, rmap):
        assert rmap.status().shape == (41, 15)
        rows = rmap.rows()
        assert len(rows) == 41 * 15
        found = [r for r in rows if r["status"] == "found"]
        assert all(r["sqrt_Jt_orth"] == pytest.approx(math.sqrt(r["Jt_orth"])) for r in found)
        assert all(math.isnan(r["Jt_orth"]) for r in rows if r["status"] != "found")

    def test_band_matches_bounds(self, rmap):
        da = rmap.a_grid[1] - rmap.a_grid[0]
        for j, theta in enumerate(rmap.theta_grid):
            b = bounds(theta)
            for i, a in enumerate(rmap.a_grid):
                inside = b.a_l < a < b.a_u
                near_edge = min(abs(a - b.a_l), abs(a - b.a_u)) <= da
                if not near_edge:
                    assert (rmap.results[i][j].status is OrthStatus.FOUND) == inside, (a, theta)

    def test_near_right_angle_row(self):
        theta = math.pi / 2 - 0.01
        a_vals = np.linspace(0.05, 3.0, 30)
        rm = region_map([theta], a_vals)
        assert all(row[0].found for row in rm.results)

    def test_small_a_small_theta_never(self):
        # (1 - sin 0.3)/cos 0.3 = 0.7374 > 0.05
        rm = region_map([0.3], [0.05])
        assert rm.results[0][0].status is OrthStatus.NEVER

    def test_parallel_matches_serial(self):
        thetas, avals = np.linspace(0.2, 1.4, 6), np.linspace(0.1, 3.0, 7)
        serial = region_map(thetas, avals)
        parallel = region_map(thetas, avals, max_workers=2)
        np.testing.assert_array_equal(serial.status(), parallel.status())
        np.testing.assert_array_equal(serial.jt_orth(), parallel.jt_orth())

    @pytest.mark.parametrize("thetas, avals", [([], [0.5]), ([0.5, 0.4], [0.5]), ([0.5], [0.3, 0.3]), ([0.0, 0.5], [0.3])])
    def test_bad_grids(self, thetas, avals):
        with pytest.raises(ValueError):
            region_map(thetas, avals)

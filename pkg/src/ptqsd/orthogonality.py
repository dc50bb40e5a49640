"""Earliest orthogonalization time and the (a, theta) region map.

The root observable is the counterclockwise angle ``delta(t)`` from the
Bloch vector of ``psi1(t)`` to that of ``psi2(t)`` in the y-z plane.  It
starts at ``2*theta`` and the states are orthogonal exactly when it reaches
``pi``.  Unlike the overlap, ``delta - pi`` changes sign at the event, so it
can be bracketed.
"""

from __future__ import annotations

import enum
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from .geometry import bounds
from .pt_core import PTParams, Regime, asymptotic_state, propagator_diss, propagator_direction
from .states import StatePair, bloch, candidate_pair

IN_PLANE_TOL = 1e-6


class OrthStatus(str, enum.Enum):
    FOUND = "found"
    NEVER = "never"
    BOUNDARY = "boundary"


class SolverFailure(RuntimeError):
    """The search window grew past its cap without a verdict."""


@dataclass(frozen=True)
class SolverOpts:
    tol_orth: float = 1e-10
    n_scan: int = 2000
    jt_max: float = 200.0
    max_doublings: int = 24
    time_tol: float = 1e-13  # in units of 1/J
    asymptote_tol: float = 1e-6
    boundary_eps: float = 1e-6
    which: str = "pt"


@dataclass(frozen=True)
class Certificate:
    """Normalized populations of both evolved candidates at the candidate time."""

    Pbar1_zp: float
    Pbar1_zm: float
    Pbar2_zp: float
    Pbar2_zm: float
    Pbar1_yp: float
    Pbar2_yp: float

    def z_match(self, tol: float = 1e-6) -> bool:
        return abs(self.Pbar1_zp - self.Pbar2_zm) <= tol or abs(self.Pbar2_zp - self.Pbar1_zm) <= tol

    def y_check(self, tol: float = 1e-6) -> bool:
        """Orthogonal states have complementary y populations; mirror images do not."""
        return abs(self.Pbar1_yp + self.Pbar2_yp - 1.0) <= tol

    def passes(self, tol: float = 1e-6) -> bool:
        return self.z_match(tol) and self.y_check(tol)


@dataclass(frozen=True)
class OrthResult:
    status: OrthStatus
    a: float
    theta: float
    J: float = 1.0
    t_orth: float | None = None
    certificate: Certificate | None = None
    overlap_residual: float = math.nan

    @property
    def found(self) -> bool:
        return self.status is OrthStatus.FOUND

    @property
    def jt_orth(self) -> float:
        return self.t_orth * self.J if self.found else math.nan


def _evolved_directions(p: PTParams, pair: StatePair, t, which: str) -> tuple[np.ndarray, np.ndarray]:
    if which == "pt":
        U = propagator_direction(p, t)
    elif which == "diss":
        U = propagator_diss(p, t)
    else:
        raise ValueError(f"which must be 'pt' or 'diss', got {which!r}")
    u1 = bloch(np.einsum("...ij,j->...i", U, pair.psi1))
    u2 = bloch(np.einsum("...ij,j->...i", U, pair.psi2))
    return u1, u2


def overlap_angle(p: PTParams, pair: StatePair, t, which: str = "pt") -> np.ndarray:
    """Counterclockwise y-z angle from ``psi1(t)`` to ``psi2(t)``, in ``[0, 2 pi)``."""
    u1, u2 = _evolved_directions(p, pair, t, which)
    if np.any(np.abs(u1[..., 0]) > IN_PLANE_TOL) or np.any(np.abs(u2[..., 0]) > IN_PLANE_TOL):
        raise ValueError("pair leaves the y-z plane; use phi = (2n - 1/2) pi")
    ang1 = np.arctan2(u1[..., 2], u1[..., 1])
    ang2 = np.arctan2(u2[..., 2], u2[..., 1])
    return np.mod(ang2 - ang1, 2 * math.pi)


def certificate(p: PTParams, pair: StatePair, t: float, which: str = "pt") -> Certificate:
    u1, u2 = _evolved_directions(p, pair, t, which)
    # normalized populations of a unit Bloch vector: P(z+) = (1+z)/2, P(y+) = (1+y)/2
    return Certificate(
        Pbar1_zp=float((1 + u1[2]) / 2),
        Pbar1_zm=float((1 - u1[2]) / 2),
        Pbar2_zp=float((1 + u2[2]) / 2),
        Pbar2_zm=float((1 - u2[2]) / 2),
        Pbar1_yp=float((1 + u1[1]) / 2),
        Pbar2_yp=float((1 + u2[1]) / 2),
    )


def _first_crossing(ts: np.ndarray, d: np.ndarray) -> int | None:
    """Index i with delta - pi changing sign on [ts[i], ts[i+1]], skipping wraps at 0/2pi."""
    f = d - math.pi
    sign_change = (f[:-1] < 0) != (f[1:] < 0)
    continuous = np.abs(np.diff(d)) < math.pi
    idx = np.flatnonzero(sign_change & continuous)
    return int(idx[0]) if idx.size else None


def _converged_to_attractor(p: PTParams, pair: StatePair, t: float, opts: SolverOpts) -> bool:
    target = bloch(asymptotic_state(p))
    u1, u2 = _evolved_directions(p, pair, t, opts.which)
    for u in (u1, u2):
        if math.acos(min(1.0, max(-1.0, float(u @ target)))) > opts.asymptote_tol:
            return False
    return True


def orth_time(p: PTParams, pair: StatePair, opts: SolverOpts | None = None) -> OrthResult:
    opts = opts or SolverOpts()
    which = opts.which.lower()
    a, theta, J = p.a, pair.theta, p.J

    def delta(t):
        return overlap_angle(p, pair, t, which)

    d0 = float(delta(0.0))
    if abs(d0 - math.pi) <= opts.tol_orth:
        return OrthResult(OrthStatus.FOUND, a, theta, J, 0.0, certificate(p, pair, 0.0, which), abs(d0 - math.pi))

    if theta < math.pi / 2:
        bds = bounds(theta)
        if abs(a - bds.a_l) <= opts.boundary_eps or abs(a - bds.a_u) <= opts.boundary_eps:
            return OrthResult(OrthStatus.BOUNDARY, a, theta, J)

    def refine(lo: float, hi: float) -> OrthResult:
        t = brentq(lambda s: float(delta(s)) - math.pi, lo, hi, xtol=opts.time_tol / J, rtol=4 * np.finfo(float).eps)
        resid = abs(float(delta(t)) - math.pi)
        return OrthResult(OrthStatus.FOUND, a, theta, J, t, certificate(p, pair, t, which), resid)

    if p.regime is Regime.PTS:
        period = 2 * math.pi / p.omega.real
        ts = np.linspace(0.0, period, opts.n_scan)
        d = delta(ts)
        i = _first_crossing(ts, d)
        if i is not None:
            return refine(ts[i], ts[i + 1])
        # a crossing narrower than the scan spacing shows up as a peak just above pi
        k = int(np.argmax(d))
        lo, hi = ts[max(k - 1, 0)], ts[min(k + 1, len(ts) - 1)]
        peak = minimize_scalar(lambda s: -float(delta(s)), bounds=(lo, hi), method="bounded",
                               options={"xatol": opts.time_tol / J})
        if -peak.fun > math.pi:
            return refine(lo, peak.x)
        return OrthResult(OrthStatus.NEVER, a, theta, J)

    # EP and PTB: no period, states drift toward the attractor; grow the window
    start, end = 0.0, 1.0 / J
    for _ in range(opts.max_doublings):
        ts = np.linspace(start, end, opts.n_scan)
        d = delta(ts)
        i = _first_crossing(ts, d)
        if i is not None:
            return refine(ts[i], ts[i + 1])
        if end * J >= opts.jt_max and _converged_to_attractor(p, pair, end, opts):
            return OrthResult(OrthStatus.NEVER, a, theta, J)
        start, end = end, 2 * end
    raise SolverFailure(
        f"no orthogonalization and no convergence to the attractor by Jt={start * J:g} (a={a}, theta={theta})"
    )


@dataclass(frozen=True)
class RegionMap:
    """Orthogonalization results on an (a, theta) grid; ``results[i][j]`` is ``(a_grid[i], theta_grid[j])``.

    Each value labels the left-bottom corner of its brick cell.
    """

    a_grid: np.ndarray
    theta_grid: np.ndarray
    results: tuple[tuple[OrthResult, ...], ...] = field(repr=False)

    def status(self) -> np.ndarray:
        return np.array([[r.status.value for r in row] for row in self.results])

    def jt_orth(self) -> np.ndarray:
        return np.array([[r.jt_orth for r in row] for row in self.results])

    def rows(self) -> list[dict]:
        out = []
        for row in self.results:
            for r in row:
                jt = r.jt_orth
                out.append({
                    "a": r.a,
                    "theta": r.theta,
                    "status": r.status.value,
                    "Jt_orth": jt,
                    "sqrt_Jt_orth": math.sqrt(jt) if r.found else math.nan,
                })
        return out


def _check_grid(name: str, grid) -> np.ndarray:
    g = np.asarray(grid, dtype=float)
    if g.ndim != 1 or g.size == 0:
        raise ValueError(f"{name} must be a nonempty 1-D grid")
    if np.any(np.diff(g) <= 0):
        raise ValueError(f"{name} must be strictly increasing")
    return g


def _map_row(a: float, thetas: np.ndarray, opts: SolverOpts, J: float) -> tuple[OrthResult, ...]:
    p = PTParams(J, a * J)
    return tuple(orth_time(p, candidate_pair(float(th)), opts) for th in thetas)


def region_map(theta_grid, a_grid, opts: SolverOpts | None = None, J: float = 1.0,
               max_workers: int | None = None) -> RegionMap:
    """Solve every cell; rows run in worker processes when ``max_workers > 1``."""
    opts = opts or SolverOpts()
    thetas = _check_grid("theta_grid", theta_grid)
    avals = _check_grid("a_grid", a_grid)
    if thetas[0] <= 0 or thetas[-1] >= math.pi / 2:
        raise ValueError("theta_grid must lie inside (0, pi/2)")
    if avals[0] < 0:
        raise ValueError("a_grid must be nonnegative")
    args = [(float(a), thetas, opts, J) for a in avals]
    if max_workers and max_workers > 1:
        with ProcessPoolExecutor(max_workers=max_workers) as ex:
            rows = list(ex.map(_map_row, *zip(*args)))
    else:
        rows = [_map_row(*arg) for arg in args]
    return RegionMap(avals, thetas, tuple(rows))

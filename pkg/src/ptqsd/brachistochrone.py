"""Dissipation strength that orthogonalizes a candidate pair fastest."""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize_scalar

from .geometry import bounds
from .orthogonality import SolverOpts, orth_time
from .pt_core import PTParams, Regime, classify
from .states import candidate_pair


@dataclass(frozen=True)
class BrachOpts:
    n_coarse: int = 64
    a_tol: float = 1e-6
    bound_margin: float = 1e-4
    solver: SolverOpts = field(default_factory=SolverOpts)


@dataclass(frozen=True)
class BrachResult:
    theta: float
    a_opt: float
    t_min: float
    regime_at_opt: Regime
    samples: tuple[tuple[float, float], ...] = field(repr=False)
    unimodal: bool = True


def jt_orth(a: float, theta: float, solver: SolverOpts | None = None) -> float:
    """Dimensionless orthogonalization time, ``inf`` when the pair never orthogonalizes."""
    r = orth_time(PTParams.from_a(a), candidate_pair(theta), solver)
    return r.jt_orth if r.found else math.inf


def _local_minima(values: np.ndarray) -> int:
    finite = values[np.isfinite(values)]
    if finite.size < 3:
        return int(finite.size > 0)
    inner = (finite[1:-1] < finite[:-2]) & (finite[1:-1] < finite[2:])
    return int(inner.sum()) + int(finite[0] < finite[1]) + int(finite[-1] < finite[-2])


def optimal_a(theta: float, opts: BrachOpts | None = None) -> BrachResult:
    """Coarse geometric grid over ``(a_l, a_u)``, then golden-section refinement.

    Times are reported in units of ``1/J``.
    """
    opts = opts or BrachOpts()
    if not (0.0 < theta < math.pi / 2):
        raise ValueError(f"theta must lie in (0, pi/2), got {theta}")
    bds = bounds(theta)
    lo, hi = bds.a_l + opts.bound_margin, bds.a_u - opts.bound_margin
    if not lo < hi:
        raise ValueError(f"empty search interval for theta={theta}")

    grid = np.geomspace(lo, hi, opts.n_coarse)
    times = np.array([jt_orth(a, theta, opts.solver) for a in grid])
    if not np.any(np.isfinite(times)):
        raise RuntimeError(f"no dissipation strength orthogonalizes theta={theta}")
    unimodal = _local_minima(times) == 1
    k = int(np.argmin(times))

    cache: dict[float, float] = {}

    def f(a: float) -> float:
        if a not in cache:
            cache[a] = jt_orth(a, theta, opts.solver)
        return cache[a]

    a_best, t_best = float(grid[k]), float(times[k])
    if 0 < k < len(grid) - 1:
        bracket = (float(grid[k - 1]), float(grid[k]), float(grid[k + 1]))
        res = minimize_scalar(f, bracket=bracket, method="golden",
                              options={"xtol": opts.a_tol / bracket[1]})
        if res.fun <= t_best:
            a_best, t_best = float(res.x), float(res.fun)

    samples = tuple(zip(grid.tolist(), times.tolist())) + tuple(sorted(cache.items()))
    return BrachResult(theta, a_best, t_best, classify(a_best), samples, unimodal)


def brach_curve(theta_grid, opts: BrachOpts | None = None, max_workers: int | None = None) -> list[BrachResult]:
    thetas = np.asarray(theta_grid, dtype=float)
    if thetas.ndim != 1 or thetas.size == 0 or np.any(np.diff(thetas) <= 0):
        raise ValueError("theta_grid must be a nonempty strictly increasing 1-D grid")
    if thetas[0] <= 0 or thetas[-1] >= math.pi / 2:
        raise ValueError("theta_grid must lie inside (0, pi/2)")
    opts = opts or BrachOpts()
    if max_workers and max_workers > 1:
        with ProcessPoolExecutor(max_workers=max_workers) as ex:
            return list(ex.map(optimal_a, thetas.tolist(), [opts] * len(thetas)))
    return [optimal_a(float(th), opts) for th in thetas]

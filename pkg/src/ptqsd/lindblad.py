"""Eight-level master-equation model of the 40Ca+ qubit with an engineered loss channel.

Levels, in index order::

    0 up_z     S1/2 m=-1/2      4 d52_52   D5/2 m=+5/2
    1 down_z   D5/2 m=+1/2      5 s12_p    S1/2 m=+1/2
    2 p        P3/2 m=+3/2      6 d32_12   D3/2 m=+1/2
    3 d52_32   D5/2 m=+3/2      7 d32_32   D3/2 m=+3/2

``J`` drives up_z <-> down_z and ``Jc`` drives down_z <-> p, both resonant
and written as ``J (|i><j| + |j><i|)`` to match the ``J sigma_x`` term of the
two-level Hamiltonian.  The excited level decays back to down_z at
``gamma1 = Gamma1/15``; every other channel ends in a sink outside the qubit.

All rates are angular frequencies sharing one unit; times are in the inverse
of that unit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import brentq

from .orthogonality import SolverOpts, orth_time
from .pt_core import PTParams
from .states import StatePair, Y_MINUS, Y_PLUS, populations

LEVELS = ("up_z", "down_z", "p", "d52_32", "d52_52", "s12_p", "d32_12", "d32_32")
N_LEVELS = len(LEVELS)
UP, DOWN, P = 0, 1, 2

# 2 pi x MHz, i.e. rad/us
CA40_GAMMA1 = 2 * math.pi * 1.4072
CA40_GAMMA2 = 2 * math.pi * 22.4145
CA40_GAMMA3 = 2 * math.pi * 0.1510
P32_LIFETIME_NS = 6.639
BRANCHING_RATIOS = (0.0587, 0.935, 0.0063)


class IntegrationError(RuntimeError):
    pass


class NormalizationError(ValueError):
    pass


@dataclass(frozen=True)
class LindbladModel:
    Gamma1: float
    Gamma2: float
    Gamma3: float
    Jc: float
    J: float
    d52_split: tuple[float, float] = (4.0, 10.0)
    d32_split: tuple[float, float] = (1.0, 1.0)

    @property
    def gamma1(self) -> float:
        return self.Gamma1 / 15.0

    @property
    def Gamma0(self) -> float:
        return self.Gamma1 + self.Gamma2 + self.Gamma3

    @property
    def branching_ratios(self) -> tuple[float, float, float]:
        g0 = self.Gamma0
        return (self.Gamma1 / g0, self.Gamma2 / g0, self.Gamma3 / g0)

    @property
    def lifetime(self) -> float:
        return 1.0 / self.Gamma0

    def hamiltonian(self) -> np.ndarray:
        H = np.zeros((N_LEVELS, N_LEVELS), dtype=complex)
        H[UP, DOWN] = H[DOWN, UP] = self.J
        H[DOWN, P] = H[P, DOWN] = self.Jc
        return H

    def channels(self) -> list[tuple[int, float]]:
        """(target level, rate) for every decay out of ``p``."""
        rest = self.Gamma1 - self.gamma1
        w32, w52 = self.d52_split
        u12, u32 = self.d32_split
        return [
            (DOWN, self.gamma1),
            (3, rest * w32 / (w32 + w52)),
            (4, rest * w52 / (w32 + w52)),
            (5, self.Gamma2),
            (6, self.Gamma3 * u12 / (u12 + u32)),
            (7, self.Gamma3 * u32 / (u12 + u32)),
        ]

    def jump_operators(self) -> list[np.ndarray]:
        ops = []
        for target, rate in self.channels():
            L = np.zeros((N_LEVELS, N_LEVELS), dtype=complex)
            L[target, P] = math.sqrt(rate)
            ops.append(L)
        return ops

    def liouvillian(self) -> np.ndarray:
        """Generator acting on row-major ``rho.ravel()``: vec(A rho B) = (A kron B^T) vec(rho)."""
        H = self.hamiltonian()
        eye = np.eye(N_LEVELS)
        gen = -1j * (np.kron(H, eye) - np.kron(eye, H.T))
        for L in self.jump_operators():
            LdL = L.conj().T @ L
            gen += np.kron(L, L.conj()) - 0.5 * np.kron(LdL, eye) - 0.5 * np.kron(eye, LdL.T)
        return gen


def build_ca40_model(Gamma1: float, Gamma2: float, Gamma3: float, Jc: float, J: float,
                     d52_split=(4.0, 10.0), d32_split=(1.0, 1.0)) -> LindbladModel:
    values = {"Gamma1": Gamma1, "Gamma2": Gamma2, "Gamma3": Gamma3, "Jc": Jc, "J": J}
    for name, v in values.items():
        if not math.isfinite(v) or v < 0:
            raise ValueError(f"{name} must be finite and nonnegative, got {v}")
    if J <= 0:
        raise ValueError(f"J must be positive, got {J}")
    if Gamma1 + Gamma2 + Gamma3 <= 0:
        raise ValueError("total decay rate Gamma0 must be positive")
    if min(d52_split) < 0 or min(d32_split) < 0 or sum(d52_split) <= 0 or sum(d32_split) <= 0:
        raise ValueError("sink split weights must be nonnegative with a positive sum")
    return LindbladModel(float(Gamma1), float(Gamma2), float(Gamma3), float(Jc), float(J),
                         tuple(map(float, d52_split)), tuple(map(float, d32_split)))


def reference_pts_model(a_target: float | None = None) -> LindbladModel:
    """Rates in units of J (J = 1) used for the a = 0.3033 comparison.

    With ``a_target`` the dissipation coupling is re-solved to hit that ``a``.
    """
    g1, g2, g3 = 157.7930, 2513.3976, 16.9352
    jc = 28.6109 if a_target is None else jc_for_a(a_target, g1, g2, g3, 1.0)
    return build_ca40_model(g1, g2, g3, jc, 1.0)


def reference_ptb_model() -> LindbladModel:
    """Physical rates with Jc = 2.3627 and J = 0.0349 (rad/us), the a ~ 1.0587 set."""
    return build_ca40_model(CA40_GAMMA1, CA40_GAMMA2, CA40_GAMMA3, 2.3627, 0.0349)


def jc_for_a(a: float, Gamma1: float, Gamma2: float, Gamma3: float, J: float) -> float:
    """Invert the effective-rate formula for the dissipation coupling."""
    g0 = Gamma1 + Gamma2 + Gamma3
    return math.sqrt(a * J * g0**2 / (g0 - Gamma1 / 15.0))


class EffectiveRate(NamedTuple):
    Gamma: float
    a: float


def effective_gamma(m: LindbladModel) -> EffectiveRate:
    """Loss rate on down_z after eliminating ``p``: ``Jc^2 (Gamma0 - gamma1) / Gamma0^2``."""
    g0 = m.Gamma0
    if g0 <= 0:
        raise ValueError("Gamma0 must be positive")
    gamma = m.Jc**2 * (g0 - m.gamma1) / g0**2
    return EffectiveRate(gamma, gamma / m.J)


def qubit_density_matrix(psi) -> np.ndarray:
    """Embed a qubit state (normalized here) into the 8-level space."""
    psi = np.asarray(psi, dtype=complex)
    psi = psi / np.linalg.norm(psi)
    rho = np.zeros((N_LEVELS, N_LEVELS), dtype=complex)
    rho[:2, :2] = np.outer(psi, psi.conj())
    return rho


def _check_rho(rho: np.ndarray) -> np.ndarray:
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (N_LEVELS, N_LEVELS):
        raise ValueError(f"density matrix must be {N_LEVELS}x{N_LEVELS}, got {rho.shape}")
    if not np.allclose(rho, rho.conj().T, atol=1e-10):
        raise ValueError("density matrix is not Hermitian")
    if abs(np.trace(rho).real - 1) > 1e-9:
        raise ValueError("density matrix trace differs from 1")
    if np.linalg.eigvalsh(rho).min() < -1e-8:
        raise ValueError("density matrix is not positive semidefinite")
    return rho


class _Solution:
    """Complex view of a real-embedded Radau solution."""

    def __init__(self, raw):
        self.raw = raw
        self.success = raw.success
        self.message = raw.message

    @staticmethod
    def _to_complex(y: np.ndarray) -> np.ndarray:
        n = y.shape[0] // 2
        return y[:n] + 1j * y[n:]

    @property
    def y(self) -> np.ndarray:
        return self._to_complex(self.raw.y)

    def sol(self, t):
        return self._to_complex(self.raw.sol(t))


def _solve(m: LindbladModel, rho0: np.ndarray, t_end: float, t_eval=None, rtol=1e-10, atol=1e-12):
    # Radau needs a real state: evolve (Re vec rho, Im vec rho) under the real form of the generator
    gen = m.liouvillian()
    real_gen = np.block([[gen.real, -gen.imag], [gen.imag, gen.real]])
    y0 = np.concatenate([rho0.ravel().real, rho0.ravel().imag])
    raw = solve_ivp(lambda t, y: real_gen @ y, (0.0, t_end), y0, method="Radau", jac=real_gen,
                    t_eval=t_eval, rtol=rtol, atol=atol, dense_output=t_eval is None)
    return _Solution(raw)


def integrate(m: LindbladModel, rho0, t_grid, rtol: float = 1e-10, atol: float = 1e-12,
              trace_tol: float = 1e-9) -> np.ndarray:
    """Density matrices on ``t_grid`` (shape ``(n, 8, 8)``) from an implicit Radau integration."""
    rho0 = _check_rho(rho0)
    t = np.asarray(t_grid, dtype=float)
    if t.ndim != 1 or t.size == 0 or t[0] < 0 or np.any(np.diff(t) < 0):
        raise ValueError("t_grid must be a nonempty nonnegative nondecreasing 1-D grid")
    if t[-1] == 0:
        return np.repeat(rho0[None], t.size, axis=0)
    sol = _solve(m, rho0, float(t[-1]), t_eval=t, rtol=rtol, atol=atol)
    if not sol.success:
        raise IntegrationError(sol.message)
    traj = sol.y.T.reshape(-1, N_LEVELS, N_LEVELS)
    drift = np.max(np.abs(np.trace(traj, axis1=1, axis2=2) - 1))
    if drift > trace_tol:
        raise IntegrationError(f"trace drift {drift:.3e} exceeds {trace_tol:.1e}")
    return traj


@dataclass(frozen=True)
class LindPopulations:
    t: np.ndarray
    P_zp: np.ndarray
    P_zm: np.ndarray
    P_yp: np.ndarray
    P_ym: np.ndarray
    Pbar_zp: np.ndarray
    Pbar_zm: np.ndarray
    Pbar_yp: np.ndarray
    Pbar_ym: np.ndarray


def lind_populations(m: LindbladModel, rho_traj, t_grid=None) -> LindPopulations:
    rho = np.asarray(rho_traj)
    q = rho[:, :2, :2]
    zp, zm = q[:, 0, 0].real, q[:, 1, 1].real
    total = zp + zm
    if np.any(total < 1e-12):
        raise NormalizationError("qubit-subspace population vanished; cannot normalize")
    yp = np.einsum("i,nij,j->n", Y_PLUS.conj(), q, Y_PLUS).real
    ym = np.einsum("i,nij,j->n", Y_MINUS.conj(), q, Y_MINUS).real
    t = np.arange(len(rho), dtype=float) if t_grid is None else np.asarray(t_grid, dtype=float)
    return LindPopulations(t, zp, zm, yp, ym, zp / total, zm / total, yp / total, ym / total)


def lind_orth_time(m: LindbladModel, pair: StatePair, jt_max: float = 1.5, n_scan: int = 600) -> float:
    """First ``Jt > 0`` where Pbar_1(z+) meets Pbar_2(z-) under the master equation.

    The two curves coincide at ``t = 0`` (the pair is mirror symmetric), so the
    search starts after the first scan point.  Returns ``nan`` if they never cross.
    """
    t_end = jt_max / m.J
    sols = [_solve(m, qubit_density_matrix(psi), t_end) for psi in (pair.psi1, pair.psi2)]
    for s in sols:
        if not s.success:
            raise IntegrationError(s.message)

    def gap(t: float) -> float:
        r1 = sols[0].sol(t).reshape(N_LEVELS, N_LEVELS)
        r2 = sols[1].sol(t).reshape(N_LEVELS, N_LEVELS)
        return (r1[UP, UP].real / (r1[UP, UP].real + r1[DOWN, DOWN].real)
                - r2[DOWN, DOWN].real / (r2[UP, UP].real + r2[DOWN, DOWN].real))

    ts = np.linspace(0.0, t_end, n_scan + 1)[1:]
    g = np.array([gap(t) for t in ts])
    idx = np.flatnonzero(np.sign(g[:-1]) != np.sign(g[1:]))
    if idx.size == 0:
        return math.nan
    i = int(idx[0])
    return brentq(gap, ts[i], ts[i + 1], xtol=1e-14 * t_end) * m.J


@dataclass(frozen=True)
class DeviationReport:
    a: float
    theta: float
    jt: np.ndarray
    sup_dev: dict
    jt_orth_lind: float
    jt_orth_diss: float

    @property
    def orth_gap(self) -> float:
        return abs(self.jt_orth_lind - self.jt_orth_diss)

    @property
    def sup_z(self) -> float:
        return max(v for k, v in self.sup_dev.items() if "_z" in k)


def compare_two_level(m: LindbladModel, pair: StatePair, jt_grid, a: float | None = None,
                      opts: SolverOpts | None = None) -> DeviationReport:
    """Sup-norm gaps between master-equation and two-level normalized populations.

    The two-level side uses ``a`` if given, otherwise the model's effective ``a``.
    """
    jt = np.asarray(jt_grid, dtype=float)
    a_eff = effective_gamma(m).a if a is None else a
    p = PTParams.from_a(a_eff, J=m.J)
    t = jt / m.J
    sup = {}
    for label, psi in (("1", pair.psi1), ("2", pair.psi2)):
        lind = lind_populations(m, integrate(m, qubit_density_matrix(psi), t), t)
        two = populations(p, psi, t)
        for obs in ("zp", "zm", "yp", "ym"):
            key = f"Pbar{label}_{obs}"
            sup[key] = float(np.max(np.abs(getattr(lind, f"Pbar_{obs}") - getattr(two, f"Pbar_{obs}"))))
    r = orth_time(p, pair, opts)
    jt_lind = lind_orth_time(m, pair, jt_max=float(jt[-1]))
    return DeviationReport(a_eff, pair.theta, jt, sup, jt_lind, r.jt_orth)

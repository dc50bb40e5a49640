"""Candidate states, evolution, Bloch coordinates and population observables.

Qubit states are plain complex arrays of shape ``(..., 2)`` holding the
amplitudes on ``|up_z>`` and ``|down_z>``.  They are never renormalized by
evolution; every normalized quantity divides explicitly by the norm.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .pt_core import SIGMA_0, SIGMA_X, PTParams, propagator_diss, propagator_pt

DEFAULT_PHI = 1.5 * math.pi

UP_Z = np.array([1.0, 0.0], dtype=complex)
DOWN_Z = np.array([0.0, 1.0], dtype=complex)
Y_PLUS = np.array([1j, -1.0], dtype=complex) / math.sqrt(2.0)
Y_MINUS = np.array([1j, 1.0], dtype=complex) / math.sqrt(2.0)

# exp(-i pi sigma_x / 4): maps |y_+> onto |up_z> up to a phase
U_Y_READOUT = math.cos(math.pi / 4) * SIGMA_0 - 1j * math.sin(math.pi / 4) * SIGMA_X


@dataclass(frozen=True)
class StatePair:
    theta: float
    phi: float
    psi1: np.ndarray
    psi2: np.ndarray

    @property
    def in_plane(self) -> bool:
        """True when ``phi = (2n - 1/2) pi``, i.e. both states lie in the y-z plane."""
        return abs(np.exp(1j * self.phi) + 1j) < 1e-12


def candidate_pair(theta: float, phi: float = DEFAULT_PHI) -> StatePair:
    """Unit-norm pair with overlap ``cos(theta)``, mirror images about the Bloch y axis."""
    if not math.isfinite(theta) or not (0.0 < theta <= math.pi / 2):
        raise ValueError(f"theta must lie in (0, pi/2], got {theta}")
    if not math.isfinite(phi):
        raise ValueError(f"phi must be finite, got {phi}")
    phase = np.exp(1j * phi)
    half1 = (math.pi - 2 * theta) / 4
    half2 = (math.pi + 2 * theta) / 4
    psi1 = np.array([math.cos(half1), phase * math.sin(half1)], dtype=complex)
    psi2 = np.array([math.cos(half2), phase * math.sin(half2)], dtype=complex)
    psi1.flags.writeable = False
    psi2.flags.writeable = False
    return StatePair(float(theta), float(phi), psi1, psi2)


def _as_state(s) -> np.ndarray:
    s = np.asarray(s, dtype=complex)
    if s.shape[-1] != 2:
        raise ValueError(f"qubit state needs 2 amplitudes, got shape {s.shape}")
    return s


def norm_sq(s) -> np.ndarray:
    s = _as_state(s)
    return np.sum(np.abs(s) ** 2, axis=-1)


def evolve(p: PTParams, s, t, which: str = "pt") -> np.ndarray:
    """Apply ``exp(-i H t)`` for ``which`` in ``{"pt", "diss"}`` without renormalizing."""
    s = _as_state(s)
    which = which.lower()
    if which == "pt":
        U = propagator_pt(p, t)
    elif which == "diss":
        U = propagator_diss(p, t)
    else:
        raise ValueError(f"which must be 'pt' or 'diss', got {which!r}")
    return np.einsum("...ij,...j->...i", U, s)


def bloch(s, normalize: bool = True) -> np.ndarray:
    """Bloch coordinates ``<s|sigma_r|s>``, divided by ``<s|s>`` when ``normalize``.

    The unnormalized form is the trace ``tr(|s><s| sigma_r)`` itself, which is
    the coordinate system in which PT trajectories trace a conic.
    """
    s = _as_state(s)
    n2 = norm_sq(s)
    if np.any(n2 == 0):
        raise ValueError("Bloch coordinates of the zero vector are undefined")
    cross = np.conj(s[..., 0]) * s[..., 1]
    r = np.stack(
        [2 * cross.real, 2 * cross.imag, np.abs(s[..., 0]) ** 2 - np.abs(s[..., 1]) ** 2],
        axis=-1,
    )
    if normalize:
        r = r / n2[..., None]
    return r


def y_population_protocol(s) -> np.ndarray:
    """Normalized ``|y_+>`` population read out as ``|<up_z| U_+ s>|^2``."""
    s = _as_state(s)
    n2 = norm_sq(s)
    if np.any(n2 == 0):
        raise ValueError("population of the zero vector is undefined")
    rotated = s @ U_Y_READOUT.T
    return np.abs(rotated[..., 0]) ** 2 / n2


def _project(basis: np.ndarray, s: np.ndarray) -> np.ndarray:
    return np.abs(s @ np.conj(basis)) ** 2


@dataclass(frozen=True)
class Populations:
    """Population time series for one initial state; one array per column."""

    t: np.ndarray
    P_pt_zp: np.ndarray
    P_pt_zm: np.ndarray
    P_pt_yp: np.ndarray
    P_pt_ym: np.ndarray
    P_diss_zp: np.ndarray
    P_diss_zm: np.ndarray
    P_diss_yp: np.ndarray
    P_diss_ym: np.ndarray
    Pbar_zp: np.ndarray
    Pbar_zm: np.ndarray
    Pbar_yp: np.ndarray
    Pbar_ym: np.ndarray
    Pbar_yp_protocol: np.ndarray

    def __len__(self) -> int:
        return len(self.t)


def populations(p: PTParams, s0, t_grid) -> Populations:
    t = np.asarray(t_grid, dtype=float)
    if t.ndim != 1 or t.size == 0:
        raise ValueError("t_grid must be a nonempty 1-D sequence")
    if np.any(t < 0) or np.any(np.diff(t) < 0):
        raise ValueError("t_grid must be nonnegative and nondecreasing")
    s0 = _as_state(s0)
    if norm_sq(s0) == 0:
        raise ValueError("initial state is the zero vector")

    pt = evolve(p, s0, t, "pt")
    diss = evolve(p, s0, t, "diss")
    zp, zm = _project(UP_Z, pt), _project(DOWN_Z, pt)
    yp, ym = _project(Y_PLUS, pt), _project(Y_MINUS, pt)
    total = zp + zm
    Pbar_yp = yp / total
    protocol = y_population_protocol(pt)
    if not np.allclose(protocol, Pbar_yp, rtol=0, atol=1e-12):
        raise ArithmeticError("y-population readout protocol disagrees with direct projection")
    return Populations(
        t=t,
        P_pt_zp=zp,
        P_pt_zm=zm,
        P_pt_yp=yp,
        P_pt_ym=ym,
        P_diss_zp=_project(UP_Z, diss),
        P_diss_zm=_project(DOWN_Z, diss),
        P_diss_yp=_project(Y_PLUS, diss),
        P_diss_ym=_project(Y_MINUS, diss),
        Pbar_zp=zp / total,
        Pbar_zm=zm / total,
        Pbar_yp=Pbar_yp,
        Pbar_ym=ym / total,
        Pbar_yp_protocol=protocol,
    )

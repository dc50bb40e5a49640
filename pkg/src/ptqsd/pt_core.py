"""PT-symmetric two-level Hamiltonian and its exact propagators.

The Hamiltonian is ``H = i*Gamma*sigma_z + J*sigma_x`` written in the
``{|up_z>, |down_z>}`` basis.  With ``a = Gamma/J`` and
``omega = J*sqrt(1 - a**2)`` the propagator has the closed form

    U(t) = exp(-i H t) = cos(omega t) I - i sin(omega t)/omega * H

which stays finite at the exceptional point ``a = 1`` where ``omega = 0``.
Only ``omega**2 = J**2 - Gamma**2`` (always real) enters the evaluation, so
the three regimes share one code path apart from the choice of
trigonometric, hyperbolic or series coefficients.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

EPS_EP = 1e-12
SERIES_THRESHOLD = 1e-4
_SERIES_TERMS = 8

SIGMA_0 = np.eye(2, dtype=complex)
SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)


class Regime(str, enum.Enum):
    PTS = "PTS"
    EP = "EP"
    PTB = "PTB"


class ExceptionalPointError(ValueError):
    """Raised when an operation needs a diagonalizable Hamiltonian at the EP."""


def classify(a: float) -> Regime:
    if abs(a - 1.0) <= EPS_EP:
        return Regime.EP
    return Regime.PTS if a < 1.0 else Regime.PTB


@dataclass(frozen=True)
class PTParams:
    """Couplings of the PT-symmetric Hamiltonian plus derived quantities.

    ``omega`` is real and nonnegative in the PTS regime and
    ``+i*J*sqrt(a**2 - 1)`` in the PTB regime, so that ``E_plus = +omega``
    is the growing mode.
    """

    J: float
    Gamma: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.J) and math.isfinite(self.Gamma)):
            raise ValueError(f"J and Gamma must be finite, got J={self.J}, Gamma={self.Gamma}")
        if self.J <= 0:
            raise ValueError(f"J must be positive, got {self.J}")
        if self.Gamma < 0:
            raise ValueError(f"Gamma must be nonnegative, got {self.Gamma}")

    @classmethod
    def from_a(cls, a: float, J: float = 1.0) -> "PTParams":
        return make_pt_params(J, a * J)

    @property
    def a(self) -> float:
        return self.Gamma / self.J

    @property
    def regime(self) -> Regime:
        return classify(self.a)

    @property
    def omega_sq(self) -> float:
        # (J - G)(J + G) keeps relative accuracy near the EP
        if self.regime is Regime.EP:
            return 0.0
        return (self.J - self.Gamma) * (self.J + self.Gamma)

    @property
    def b(self) -> complex:
        a = self.a
        if self.regime is Regime.EP:
            return 0j
        one_minus_a2 = (1.0 - a) * (1.0 + a)
        if one_minus_a2 >= 0:
            return complex(math.sqrt(one_minus_a2), 0.0)
        return complex(0.0, math.sqrt(-one_minus_a2))

    @property
    def omega(self) -> complex:
        return self.J * self.b


def make_pt_params(J: float, Gamma: float) -> PTParams:
    return PTParams(float(J), float(Gamma))


def hamiltonian_pt(p: PTParams) -> np.ndarray:
    return np.array([[1j * p.Gamma, p.J], [p.J, -1j * p.Gamma]], dtype=complex)


def hamiltonian_diss(p: PTParams) -> np.ndarray:
    """``H_PT - i*Gamma*I``: loss on ``|down_z>`` only."""
    return hamiltonian_pt(p) - 1j * p.Gamma * SIGMA_0


def _check_times(t) -> np.ndarray:
    t = np.asarray(t, dtype=float)
    if not np.all(np.isfinite(t)):
        raise ValueError("time must be finite")
    if np.any(t < 0):
        raise ValueError("time must be nonnegative")
    return t


def _coefficients(p: PTParams, t: np.ndarray, damping: float = 0.0) -> tuple[np.ndarray, np.ndarray]:
    """Return ``cos(omega t)`` and ``sin(omega t)/omega``, each times ``exp(-damping t)``."""
    w2 = p.omega_sq
    x2 = w2 * t * t
    c = np.empty_like(t)
    s = np.empty_like(t)

    small = np.abs(x2) < SERIES_THRESHOLD**2
    if np.any(small):
        xs = x2[small]
        ts = t[small]
        cos_sum = np.zeros_like(xs)
        sinc_sum = np.zeros_like(xs)
        term_c = np.ones_like(xs)
        term_s = np.ones_like(xs)
        for k in range(_SERIES_TERMS):
            cos_sum += term_c
            sinc_sum += term_s
            term_c = term_c * (-xs) / ((2 * k + 1) * (2 * k + 2))
            term_s = term_s * (-xs) / ((2 * k + 2) * (2 * k + 3))
        c[small] = cos_sum
        s[small] = ts * sinc_sum
    if damping:
        c[small] *= np.exp(-damping * t[small])
        s[small] *= np.exp(-damping * t[small])

    big = ~small
    if np.any(big):
        tb = t[big]
        decay = np.exp(-damping * tb)
        if w2 > 0:
            w = math.sqrt(w2)
            c[big] = np.cos(w * tb) * decay
            s[big] = np.sin(w * tb) / w * decay
        else:
            k = math.sqrt(-w2)
            x = k * tb
            # for x > 1 combine growth and damping in one exponent so Diss never overflows
            far = x > 1
            cb, sb = np.cosh(x * ~far) * decay, np.sinh(x * ~far) / k * decay
            grow = np.exp((k - damping) * tb[far])
            shrink = np.exp(-(k + damping) * tb[far])
            cb[far] = 0.5 * (grow + shrink)
            sb[far] = 0.5 * (grow - shrink) / k
            c[big], s[big] = cb, sb
    return c, s


def propagator_pt(p: PTParams, t) -> np.ndarray:
    """``exp(-i H_PT t)``; ``t`` may be an array, giving shape ``t.shape + (2, 2)``."""
    t = _check_times(t)
    c, s = _coefficients(p, t)
    H = hamiltonian_pt(p)
    return c[..., None, None] * SIGMA_0 - 1j * s[..., None, None] * H


def propagator_diss(p: PTParams, t) -> np.ndarray:
    """``exp(-i H_diss t) = exp(-Gamma t) * propagator_pt(p, t)``, bounded for all ``t``."""
    t = _check_times(t)
    c, s = _coefficients(p, t, damping=p.Gamma)
    H = hamiltonian_pt(p)
    return c[..., None, None] * SIGMA_0 - 1j * s[..., None, None] * H


def propagator_direction(p: PTParams, t) -> np.ndarray:
    """Positive multiple of ``propagator_pt`` that stays O(1) for all ``t``.

    In the PTB regime both coefficients are divided by ``cosh(kappa t)``;
    the ray of an evolved state, and hence its Bloch direction, is unchanged.
    """
    t = _check_times(t)
    if p.omega_sq >= 0 or p.regime is Regime.EP:
        return propagator_pt(p, t)
    k = math.sqrt(-p.omega_sq)
    x = k * t
    c = np.ones_like(t)
    s = np.where(x < SERIES_THRESHOLD, t * (1.0 - x * x / 3.0), np.tanh(x) / k)
    H = hamiltonian_pt(p)
    return c[..., None, None] * SIGMA_0 - 1j * s[..., None, None] * H


@dataclass(frozen=True)
class Eigensystem:
    E_plus: complex
    E_minus: complex
    psi_plus: np.ndarray
    psi_minus: np.ndarray


def eigensystem(p: PTParams) -> Eigensystem:
    """Eigenpairs ``H psi = +-omega psi`` with ``psi_pm = (1, +-b - i a)``.

    In the PTB regime ``psi_plus`` is rescaled to ``(i(a + |b|), 1)``.
    """
    if p.regime is Regime.EP:
        raise ExceptionalPointError("eigenvectors coalesce at the exceptional point (a = 1)")
    a, b = p.a, p.b
    psi_plus = np.array([1.0, b - 1j * a], dtype=complex)
    psi_minus = np.array([1.0, -b - 1j * a], dtype=complex)
    if p.regime is Regime.PTB:
        psi_plus = asymptotic_state(p)
    return Eigensystem(p.omega, -p.omega, psi_plus, psi_minus)


def asymptotic_state(p: PTParams) -> np.ndarray:
    """``(i(a + |b|), 1)``: the attractor for ``a >= 1``, also defined at the EP."""
    a = p.a
    return np.array([1j * (a + abs(p.b)), 1.0], dtype=complex)

"""Conic loci of PT trajectories and the analytic validity bounds on ``a``.

For an in-plane candidate pair the unnormalized coordinates
``r = tr(|psi(t)><psi(t)| sigma_r)`` of a PT-evolved state obey

    (y + D)**2 / A**2 + sgn(1 - a**2) * z**2 / B**2 = 1

an ellipse for ``a < 1`` and a hyperbola for ``a > 1``.  The normalized
Bloch vector does not satisfy this relation (it stays on the unit circle).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .pt_core import EPS_EP

EPS_DEGENERATE = 1e-12


class ConicKind(str, enum.Enum):
    ELLIPSE = "ellipse"
    HYPERBOLA = "hyperbola"
    DEGENERATE = "degenerate"


class DegenerateLocusError(ValueError):
    pass


@dataclass(frozen=True)
class ConicLocus:
    kind: ConicKind
    a: float
    theta: float
    A: float | None = None
    B: float | None = None
    C: float | None = None
    D: float | None = None
    origin_focus: str | None = None

    @property
    def center(self) -> tuple[float, float, float] | None:
        if self.D is None:
            return None
        return (0.0, -self.D, 0.0)

    @property
    def foci(self) -> tuple[float, float] | None:
        """y-coordinates of the (left, right) foci."""
        if self.D is None:
            return None
        return (-self.D - self.C, -self.D + self.C)


def conic_params(a: float, theta: float) -> ConicLocus:
    if a < 0 or not math.isfinite(a):
        raise ValueError(f"a must be finite and nonnegative, got {a}")
    if not (0.0 < theta <= math.pi / 2):
        raise ValueError(f"theta must lie in (0, pi/2], got {theta}")
    gap = 1.0 - a * math.cos(theta)
    if abs(a - 1.0) <= EPS_EP or abs(gap) <= EPS_DEGENERATE:
        return ConicLocus(ConicKind.DEGENERATE, a, theta)

    b2 = (1.0 - a) * (1.0 + a)
    abs_b2 = abs(b2)
    sign_b2 = 1.0 if b2 > 0 else -1.0
    A = abs(gap) / abs_b2
    B = abs(gap) / math.sqrt(abs_b2)
    C = a * abs(gap) / abs_b2
    D = math.copysign(1.0, gap) * sign_b2 * C
    if b2 > 0:
        kind, focus = ConicKind.ELLIPSE, "right"
    else:
        kind = ConicKind.HYPERBOLA
        focus = "left" if gap > 0 else "right"
    return ConicLocus(kind, a, theta, A, B, C, D, focus)


def locus_residual(locus: ConicLocus, pt) -> np.ndarray:
    """Absolute deviation of the conic form from 1 at point(s) ``pt = (x, y, z)``."""
    if locus.kind is ConicKind.DEGENERATE:
        raise DegenerateLocusError(f"no conic for a={locus.a}, theta={locus.theta}")
    pt = np.asarray(pt, dtype=float)
    y, z = pt[..., 1], pt[..., 2]
    sign = 1.0 if locus.kind is ConicKind.ELLIPSE else -1.0
    return np.abs((y + locus.D) ** 2 / locus.A**2 + sign * z**2 / locus.B**2 - 1.0)


@dataclass(frozen=True)
class Bounds:
    a_l: float
    a_u: float  # math.inf at theta = pi/2

    def contains(self, a: float) -> bool:
        return self.a_l < a < self.a_u


def bounds(theta: float) -> Bounds:
    """Window ``(a_l, a_u)`` of dissipation strengths that orthogonalize the pair."""
    if not (0.0 < theta <= math.pi / 2):
        raise ValueError(f"theta must lie in (0, pi/2], got {theta}")
    c = math.cos(theta)
    # (1 - sin)/cos rewritten without the 0/0 at theta = pi/2
    a_l = c / (1.0 + math.sin(theta))
    if theta == math.pi / 2:
        return Bounds(0.0, math.inf)
    return Bounds(a_l, 1.0 / c)

"""Small-amplitude expansions at the bifurcation points ``mu*_k = k^-r``."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .spectral import PeriodicFunction, WaveSolution


@dataclass(frozen=True)
class BifurcationPoint:
    r: float
    k: int
    modes: int = 256

    @property
    def mu_star(self) -> float:
        return float(self.k) ** (-self.r)

    @property
    def kernel_direction(self) -> PeriodicFunction:
        c = np.zeros(self.modes // 2)
        c[self.k - 1] = 1.0
        return PeriodicFunction.from_coeffs(c, self.modes)


def speed_coefficient(r: float, k: int, frame: str = "zero_mean") -> float:
    """ε² coefficient of the wave speed along the branch.

    ``"zero_mean"`` is the speed of the zero-mean wave; ``"b_zero"`` is the
    speed after absorbing the mean into the wave (integration constant B = 0),
    which adds ``k^r/4``.
    """
    base = k ** r / (8 * (1 - 2.0 ** -r))
    if frame == "zero_mean":
        return base
    if frame == "b_zero":
        return k ** r * (3 - 2.0 ** (1 - r)) / (8 * (1 - 2.0 ** -r))
    raise ValueError(f"unknown frame {frame!r}")


def harmonic_coefficient(r: float, k: int) -> float:
    """ε² coefficient of ``cos(2kx)`` in the zero-mean wave profile."""
    return k ** r / (4 * (1 - 2.0 ** -r))


def published_harmonic_coefficient(r: float, k: int) -> float:
    """The displayed second-order profile coefficient ``-k^r / (2 (1 - 2^-r))``."""
    return -k ** r / (2 * (1 - 2.0 ** -r))


def frame_shift(mu: float, mean_sq: float) -> float:
    """Constant ``c`` with ``phi + c`` solving the equation with ``B = 0``.

    Solves ``c mu + c^2 / 2 = mean(phi^2) / 2`` (positive root); the speed in
    that frame is ``mu + c``.
    """
    return -mu + np.sqrt(mu * mu + mean_sq)


def asymptotic_seed(r: float, k: int, eps: float, modes: int = 256,
                    formula: str = "corrected") -> WaveSolution:
    """Second-order small-amplitude wave.

    ``formula="corrected"`` uses the expansion of the zero-mean problem,
    ``phi = eps cos(kx) + eps^2 k^r cos(2kx) / (4(1-2^-r))`` and
    ``mu = k^-r + eps^2 k^r / (8(1-2^-r))``, whose residual is O(eps^3).
    ``formula="published"`` uses the displayed expansion with its constant
    term projected out; its residual is only O(eps^2).
    """
    if not 0 <= eps <= 0.1:
        raise ValueError("eps must lie in [0, 0.1]")
    if 2 * k > modes // 2:
        raise ValueError("too few modes for the second harmonic")
    c = np.zeros(modes // 2)
    c[k - 1] = eps
    if formula == "corrected":
        c[2 * k - 1] = eps ** 2 * harmonic_coefficient(r, k)
        mu = k ** -r + eps ** 2 * speed_coefficient(r, k, "zero_mean")
    elif formula == "published":
        c[2 * k - 1] = eps ** 2 * published_harmonic_coefficient(r, k)
        mu = k ** -r + eps ** 2 * speed_coefficient(r, k, "b_zero")
    else:
        raise ValueError(f"unknown formula {formula!r}")
    return WaveSolution(PeriodicFunction.from_coeffs(c, modes), float(mu), k)

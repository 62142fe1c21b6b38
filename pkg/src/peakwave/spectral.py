"""Even, zero-mean periodic functions on a uniform collocation grid.

Functions live on ``x_j = -pi + 2 pi j / M`` and are expanded as
``f(x) = sum_{k=1}^{M/2} c_k cos(kx)``; the constant mode is never stored.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .kernel import KernelSpec, series_values


def grid(m: int) -> np.ndarray:
    return -np.pi + 2 * np.pi * np.arange(m) / m


def _check_modes(m: int):
    if m < 4 or m & (m - 1):
        raise ValueError(f"mode count must be a power of two >= 4, got {m}")


def full_coeffs(values: np.ndarray) -> np.ndarray:
    """Cosine coefficients ``a_0..a_{M/2}`` of grid values (sine part dropped)."""
    m = values.size
    spec = np.fft.rfft(values)
    sign = (-1.0) ** np.arange(spec.size)  # grid starts at -pi
    a = 2.0 * sign * spec.real / m
    a[0] /= 2
    a[-1] /= 2
    return a


def values_from_coeffs(coeffs: np.ndarray, m: int) -> np.ndarray:
    """Grid values on ``m`` points of ``sum_k coeffs[k-1] cos(kx)``."""
    spec = np.zeros(m // 2 + 1)
    n = min(coeffs.size, m // 2)
    spec[1:n + 1] = coeffs[:n]
    spec[1:-1] *= m / 2
    spec[-1] *= m
    spec *= (-1.0) ** np.arange(spec.size)
    return np.fft.irfft(spec, n=m)


@dataclass(frozen=True, eq=False)
class PeriodicFunction:
    """Zero-mean even function held as grid values and cosine coefficients."""

    cos_coeffs: np.ndarray
    values: np.ndarray = field(repr=False)

    @property
    def modes(self) -> int:
        return self.values.size

    @property
    def x(self) -> np.ndarray:
        return grid(self.modes)

    @classmethod
    def from_coeffs(cls, coeffs, m: int | None = None) -> "PeriodicFunction":
        c = np.array(coeffs, dtype=float)
        m = 2 * c.size if m is None else m
        _check_modes(m)
        if c.size < m // 2:
            c = np.concatenate([c, np.zeros(m // 2 - c.size)])
        elif c.size > m // 2:
            c = c[: m // 2].copy()
        c.flags.writeable = False
        v = values_from_coeffs(c, m)
        v.flags.writeable = False
        return cls(c, v)

    @classmethod
    def from_values(cls, values) -> "PeriodicFunction":
        """Project grid samples onto the even zero-mean class."""
        v = np.asarray(values, dtype=float)
        _check_modes(v.size)
        return cls.from_coeffs(full_coeffs(v)[1:], v.size)

    @classmethod
    def from_callable(cls, func, m: int) -> "PeriodicFunction":
        return cls.from_values(func(grid(m)))

    @classmethod
    def zeros(cls, m: int) -> "PeriodicFunction":
        return cls.from_coeffs(np.zeros(m // 2), m)

    def resample(self, m: int) -> "PeriodicFunction":
        """Zero-pad or truncate the spectrum onto ``m`` points."""
        return PeriodicFunction.from_coeffs(self.cos_coeffs, m)

    def __call__(self, x):
        """Evaluate the cosine series off the grid."""
        x = np.asarray(x, dtype=float)
        k = np.arange(1, self.cos_coeffs.size + 1)
        return np.cos(np.multiply.outer(x, k)) @ self.cos_coeffs

    def __add__(self, other):
        return PeriodicFunction.from_coeffs(self.cos_coeffs + other.cos_coeffs, self.modes)

    def __sub__(self, other):
        return PeriodicFunction.from_coeffs(self.cos_coeffs - other.cos_coeffs, self.modes)

    def scale(self, a: float) -> "PeriodicFunction":
        return PeriodicFunction.from_coeffs(a * self.cos_coeffs, self.modes)

    def sup(self) -> float:
        return float(np.max(np.abs(self.values))) if self.values.size else 0.0

    def crest(self) -> float:
        """Value at x = 0, i.e. the sum of the coefficients."""
        return float(np.sum(self.cos_coeffs))

    def derivative_values(self, order: int = 1) -> np.ndarray:
        """Spectral derivative on the grid (odd orders give sine series)."""
        k = np.arange(1, self.cos_coeffs.size + 1, dtype=float)
        c = self.cos_coeffs * k ** order
        if order % 2:
            # d/dx cos = -sin, d^3/dx^3 cos = sin
            sgn = -1.0 if order % 4 == 1 else 1.0
            return sgn * _sine_values(c, self.modes)
        sgn = -1.0 if order % 4 == 2 else 1.0
        return sgn * values_from_coeffs(c, self.modes)

    def check_invariants(self, tol: float = 1e-12) -> None:
        v = self.values
        scale = max(float(np.max(np.abs(v))), 1e-300)
        if abs(float(np.mean(v))) > 10 * tol * scale:
            raise ValueError("function does not have zero mean")
        reflected = v[(-np.arange(v.size)) % v.size]
        if np.max(np.abs(v - reflected)) > 10 * tol * scale:
            raise ValueError("function is not even")
        back = full_coeffs(v)[1:]
        if np.max(np.abs(back - self.cos_coeffs)) > 10 * tol * scale:
            raise ValueError("values and coefficients disagree")


def _sine_values(c: np.ndarray, m: int) -> np.ndarray:
    # sum_k c_k sin(k x_j) via the imaginary part of an inverse real FFT
    spec = np.zeros(m // 2 + 1, dtype=complex)
    spec[1:c.size + 1] = -1j * c[: m // 2] * (m / 2)
    spec[-1] = 0.0
    spec *= (-1.0) ** np.arange(spec.size)
    return np.fft.irfft(spec, n=m)


def sine_coeff_values(c: np.ndarray, m: int) -> np.ndarray:
    return _sine_values(np.asarray(c, dtype=float), m)


@dataclass(frozen=True, eq=False)
class WaveSolution:
    phi: PeriodicFunction
    mu: float
    k: int = 1
    residual_norm: float = float("nan")

    @property
    def B(self) -> float:
        """``(1/4pi) int phi^2``, i.e. half the mean of ``phi^2``."""
        return 0.5 * float(np.mean(self.phi.values ** 2))

    @property
    def height(self) -> float:
        return self.mu - self.phi.crest()

    @property
    def modes(self) -> int:
        return self.phi.modes

    def check_symmetry(self, tol: float = 1e-12) -> bool:
        c = self.phi.cos_coeffs
        if self.k == 1 or not c.size:
            return True
        off = np.ones(c.size, bool)
        off[self.k - 1::self.k] = False
        return float(np.max(np.abs(c[off]), initial=0.0)) <= tol * max(np.max(np.abs(c)), 1e-300)


def apply_multiplier(f: PeriodicFunction, r: float) -> PeriodicFunction:
    k = np.arange(1, f.cos_coeffs.size + 1, dtype=float)
    return PeriodicFunction.from_coeffs(f.cos_coeffs * k ** (-r), f.modes)


def convolve_kernel(f: PeriodicFunction, spec: KernelSpec) -> PeriodicFunction:
    """Trapezoid-rule convolution ``(1/2pi) int K(x-y) f(y) dy`` on the grid.

    Cross-validation path for :func:`apply_multiplier`; it only uses kernel
    samples, never the symbol.
    """
    m = f.modes
    if not np.any(f.values):
        return PeriodicFunction.zeros(m)
    offsets = 2 * np.pi * np.arange(m) / m
    ksamp = series_values(spec, offsets)
    # circulant sum (1/M) sum_j K(x_i - x_j) f_j
    out = np.fft.irfft(np.fft.rfft(ksamp) * np.fft.rfft(f.values), n=m) / m
    return PeriodicFunction.from_values(out)


def product_coeffs(a: np.ndarray, b: np.ndarray, m: int) -> tuple[np.ndarray, float]:
    """Cosine coefficients ``1..M/2`` and mean of ``a*b`` on a 2M grid.

    Products of modes up to M/2 reach mode M at most, so the 2M grid
    resolves every retained coefficient exactly.
    """
    va = values_from_coeffs(a, 2 * m)
    vb = va if b is a else values_from_coeffs(b, 2 * m)
    full = full_coeffs(va * vb)
    return full[1:m // 2 + 1], float(full[0])


def square_dealiased(f: PeriodicFunction) -> tuple[PeriodicFunction, float]:
    c, mean = product_coeffs(f.cos_coeffs, f.cos_coeffs, f.modes)
    return PeriodicFunction.from_coeffs(c, f.modes), mean


def residual_coeffs(c: np.ndarray, mu: float, r: float, m: int) -> np.ndarray:
    """Coefficients of ``mu phi - L_r phi - phi^2/2 + mean(phi^2)/2``."""
    k = np.arange(1, c.size + 1, dtype=float)
    sq, _ = product_coeffs(c, c, m)
    return (mu - k ** (-r)) * c - 0.5 * sq


def residual(sol: WaveSolution, spec: KernelSpec) -> tuple[PeriodicFunction, WaveSolution]:
    """Steady residual on the grid and the solution with its sup norm recorded."""
    f = PeriodicFunction.from_coeffs(residual_coeffs(sol.phi.cos_coeffs, sol.mu, spec.r,
                                                     sol.modes), sol.modes)
    return f, replace(sol, residual_norm=f.sup())

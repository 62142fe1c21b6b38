"""Periodic convolution kernel of the homogeneous symbol |k|^-r.

The kernel is the cosine series ``K_r(x) = 2 * sum_{k>=1} k^-r cos(kx)``.
Three independent evaluation routes are provided (truncated series, the
Bernoulli-polynomial closed form for even integer ``r`` and a Gamma-function
integral) so that each can be checked against the others.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np
from scipy import integrate, optimize, special

GAMMA_CUTOFF = np.pi / 64


@dataclass(frozen=True)
class KernelSpec:
    r: float
    series_cap: int = 4096
    quadrature_points: int = 200

    def __post_init__(self):
        if not np.isfinite(self.r) or self.r <= 1:
            raise ValueError("r must exceed 1")
        if int(self.series_cap) < 16:
            raise ValueError("series_cap must be at least 16")
        if int(self.quadrature_points) < 1:
            raise ValueError("quadrature_points must be positive")


@dataclass(frozen=True)
class KernelEval:
    x: float
    value: float
    tail_bound: float


def reduce_angle(x):
    """Map ``x`` into [-pi, pi]; values already there are returned unchanged."""
    x = np.asarray(x, dtype=float)
    return np.where(np.abs(x) <= np.pi, x, np.mod(x + np.pi, 2 * np.pi) - np.pi)


def uniform_tail_bound(r: float, n: int) -> float:
    """Integral majorant of ``2 * sum_{k>N} k^-r``."""
    return 2.0 * n ** (1.0 - r) / (r - 1.0)


def pointwise_tail_bound(r: float, n: int, x):
    """Sharper truncation bound away from the origin.

    Abel summation with ``|sum cos(kx)| <= 1/|sin(x/2)|`` gives
    ``|2 sum_{k>N} k^-r cos(kx)| <= 2 (N+1)^-r / |sin(x/2)|``; the uniform
    majorant is returned wherever it is smaller.
    """
    x = np.abs(reduce_angle(x))
    s = np.abs(np.sin(x / 2))
    with np.errstate(divide="ignore"):
        abel = np.where(s > 0, 2.0 * (n + 1.0) ** (-r) / np.where(s > 0, s, 1.0), np.inf)
    return np.minimum(abel, uniform_tail_bound(r, n))


def _series_sum(r: float, n: int, x: np.ndarray, *, sine=False, extra_power=0.0,
                block: int = 2048) -> np.ndarray:
    # sum_{k=1..n} k^-(r+extra_power) * cos(kx) (or sin), accumulated in blocks
    # so large caps do not allocate an (n, len(x)) array at once
    x = np.atleast_1d(np.asarray(x, dtype=float))
    out = np.zeros_like(x)
    trig = np.sin if sine else np.cos
    for start in range(1, n + 1, block):
        k = np.arange(start, min(start + block, n + 1), dtype=float)
        weights = k ** (-(r + extra_power))
        out += weights @ trig(np.outer(k, x))
    return out


def series_values(spec: KernelSpec, x, n: int | None = None) -> np.ndarray:
    """Vectorised truncated series ``2 sum_{k<=N} k^-r cos(kx)``."""
    n = spec.series_cap if n is None else int(n)
    return 2.0 * _series_sum(spec.r, n, np.abs(reduce_angle(x)))


def kernel_series_eval(spec: KernelSpec, x: float) -> KernelEval:
    xr = float(np.abs(reduce_angle(x)))
    value = float(series_values(spec, xr)[0])
    return KernelEval(x=float(reduce_angle(x)), value=value,
                      tail_bound=uniform_tail_bound(spec.r, spec.series_cap))


@lru_cache(maxsize=None)
def bernoulli_numbers(n: int) -> tuple[Fraction, ...]:
    """Exact B_0..B_n from ``sum_{j<m+1} C(m+1, j) B_j = 0`` (B_1 = -1/2)."""
    b = [Fraction(1)]
    for m in range(1, n + 1):
        acc = sum(Fraction(math.comb(m + 1, j)) * b[j] for j in range(m))
        b.append(-acc / (m + 1))
    return tuple(b)


@lru_cache(maxsize=None)
def bernoulli_polynomial(n: int) -> tuple[Fraction, ...]:
    """Coefficients of B_n(t) in increasing powers of t."""
    b = bernoulli_numbers(n)
    coeffs = [Fraction(0)] * (n + 1)
    for j in range(n + 1):
        coeffs[n - j] = math.comb(n, j) * b[j]
    return tuple(coeffs)


def _even_order(r) -> int:
    if isinstance(r, (bool, np.bool_)):
        raise ValueError("r must be an even integer")
    rf = float(r)
    if not rf.is_integer() or int(rf) % 2 or rf < 2:
        raise ValueError(f"closed form needs an even integer r >= 2, got r={r}; "
                         "use the series or Gamma-integral route")
    if rf > 12:
        raise ValueError("closed form is tabulated up to r=12")
    return int(rf) // 2


def kernel_closed_form(r, x):
    """Bernoulli-polynomial closed form for ``r = 2n``, evaluated evenly."""
    n = _even_order(r)
    coeffs = [float(c) for c in bernoulli_polynomial(2 * n)]
    t = np.abs(reduce_angle(x)) / (2 * np.pi)
    poly = np.polynomial.polynomial.polyval(t, coeffs)
    scale = (-1) ** (n - 1) * (2 * np.pi) ** (2 * n) / math.factorial(2 * n)
    out = scale * poly
    return float(out) if np.ndim(out) == 0 else out


def kernel_gamma_integral(spec: KernelSpec, x: float, *, epsabs=1e-12, epsrel=1e-12,
                          return_error=False):
    """Gamma-function integral representation of the kernel on (0, pi].

    With ``u = exp(-t)`` the integrand becomes
    ``(-log u)^(r-1) (cos x - u) / (1 - 2u cos x + u^2)`` on (0, 1).
    """
    x = abs(float(reduce_angle(x)))
    if x < GAMMA_CUTOFF:
        raise ValueError(f"x={x:.3g} is below the Gamma-integral cutoff pi/64; "
                         "use the series route")
    r = spec.r
    c = math.cos(x)

    def integrand(u):
        return (-math.log(u)) ** (r - 1) * (c - u) / (1 - 2 * u * c + u * u)

    val, err = integrate.quad(integrand, 0.0, 1.0, epsabs=epsabs, epsrel=epsrel,
                              limit=max(50, spec.quadrature_points))
    scale = 2.0 / special.gamma(r)
    if return_error:
        return scale * val, scale * err
    return scale * val


def kernel_at_zero(r: float) -> float:
    """``K_r(0) = 2 zeta(r)``."""
    return 2.0 * float(special.zeta(r))


def kernel_at_pi(r: float) -> float:
    """``K_r(pi) = -2 eta(r)`` with the Dirichlet eta function."""
    return -2.0 * (1.0 - 2.0 ** (1.0 - r)) * float(special.zeta(r))


def sign_change(spec: KernelSpec, n: int | None = None) -> float:
    """Unique zero of the kernel on (0, pi), located by bracketing."""
    n = max(spec.series_cap, 1 << 14) if n is None else n
    f = lambda x: float(series_values(spec, x, n)[0])
    return optimize.brentq(f, 1e-9, np.pi, xtol=1e-14)


def kernel_l1_norms(spec: KernelSpec, n: int | None = None) -> tuple[float, float]:
    """``(int |K_r|, int |K_r'|)`` over [-pi, pi].

    The kernel is even, zero mean and decreasing on (0, pi) with a single
    zero ``x0``. Hence ``int_{-pi}^{pi} |K| = 4 int_0^{x0} K`` and the
    derivative norm is the total variation ``2 (K(0) - K(pi))``. The first
    integral is summed term by term: ``int_0^{x0} K = 2 sum k^-(r+1) sin(k x0)``.
    """
    n = max(spec.series_cap, 1 << 16) if n is None else n
    x0 = sign_change(spec)
    head = 2.0 * float(_series_sum(spec.r, n, np.array([x0]), sine=True, extra_power=1.0)[0])
    if not np.isfinite(head):
        raise ArithmeticError("kernel L1 quadrature did not converge")
    norm_k = 4.0 * head
    norm_dk = 2.0 * (kernel_at_zero(spec.r) - kernel_at_pi(spec.r))
    return norm_k, norm_dk


def kernel_l1_quadrature(kernel, derivative) -> tuple[float, float]:
    """Adaptive-quadrature ``(int |K|, int |K'|)`` over [-pi, pi] for callables.

    Used as an independent check of :func:`kernel_l1_norms` with closed forms.
    """
    x0 = optimize.brentq(kernel, 1e-12, np.pi, xtol=1e-15)
    a, ea = integrate.quad(kernel, 0, x0, limit=200)
    b, eb = integrate.quad(kernel, x0, np.pi, limit=200)
    c, ec = integrate.quad(lambda x: abs(derivative(x)), 0, np.pi, limit=200)
    worst = max(ea, eb, ec)
    if worst > 1e-8:
        raise ArithmeticError(f"kernel L1 quadrature error estimate {worst:.2e}")
    return 2 * (a - b), 2 * c


def complete_monotonicity(seq, n_max: int, tol_scale: float = 1e-12) -> dict:
    """Check ``(-1)^n Delta^n mu_k >= -tol`` for all orders up to ``n_max``.

    The tolerance per order ``n`` is ``tol_scale * |mu_0| * 2^n``; repeated
    differencing amplifies roundoff by that factor.
    """
    mu = np.asarray(seq, dtype=float)
    if n_max > 20:
        raise ValueError("n_max above 20 is beyond finite-difference conditioning")
    worst = np.inf
    worst_at = None
    ok = bool(np.all(mu >= -tol_scale * abs(mu[0])))
    diff = mu.copy()
    for n in range(0, n_max + 1):
        if n > 0:
            diff = np.diff(diff)
        if diff.size == 0:
            break
        tol = tol_scale * abs(mu[0]) * 2.0 ** n
        signed = (-1) ** n * diff
        idx = int(np.argmin(signed))
        if signed[idx] + tol < worst:
            worst, worst_at = float(signed[idx] + tol), (n, idx)
        if signed[idx] < -tol:
            ok = False
    return {"completely_monotonic": ok, "min_margin": worst, "argmin": worst_at}


def check_complete_monotonicity(r: float, n_max: int = 10, k_max: int = 100) -> dict:
    """Complete monotonicity of ``(k+1)^-r`` for ``k <= k_max``."""
    k = np.arange(k_max + n_max + 1, dtype=float)
    report = complete_monotonicity((k + 1) ** (-r), n_max)
    report.update(r=r, n_max=n_max, k_max=k_max)
    return report


def check_monotone_decreasing(spec: KernelSpec, grid_size: int = 512, values=None,
                              max_terms: int = 1 << 17) -> str:
    """Return ``"true"``, ``"false"`` or ``"indeterminate"``.

    Each consecutive drop on an interior grid of (0, pi) must exceed the sum
    of the two pointwise truncation bounds, otherwise the truncation is raised
    (x4, up to ``max_terms``) and the test repeated; what remains undecided is
    indeterminate. ``values`` may inject precomputed samples (with zero error).
    """
    x = np.linspace(0, np.pi, grid_size + 2)[1:-1]
    n = spec.series_cap
    while True:
        if values is None:
            v = series_values(spec, x, n)
            err = pointwise_tail_bound(spec.r, n, x)
        else:
            v = np.asarray(values(x) if callable(values) else values, dtype=float)
            err = np.zeros_like(v)
        drops = v[:-1] - v[1:]
        slack = err[:-1] + err[1:]
        if np.any(drops < -slack):
            return "false"
        if np.all(drops > slack):
            return "true"
        if values is not None or n >= max_terms:
            return "indeterminate"
        n = min(4 * n, max_terms)


def lambda_box_constant(spec: KernelSpec, grid: int = 257, n: int | None = None) -> float:
    """Half the minimum of ``K(x-y) - K(x+y)`` over ``[-3pi/4, -pi/4]^2``.

    The box is split into ``(grid-1)^2`` cells. On each cell the kernel's
    evenness and monotonicity on (0, pi) give a certified lower bound
    ``K(max |x-y|) - K(min dist(x+y, 2pi Z))``, so no Lipschitz constant is
    needed (the kernel is only Hoelder continuous at 0 when r < 2).
    """
    n = max(spec.series_cap, 1 << 14) if n is None else n
    h = 0.5 * np.pi / (grid - 1)
    s = -0.75 * np.pi + h * np.arange(grid - 1)
    table_x = h * np.arange(2 * (grid - 1) + 1)  # nodes on [0, pi]
    table = series_values(spec, table_x, n)
    err = pointwise_tail_bound(spec.r, n, table_x)
    i, j = np.meshgrid(np.arange(grid - 1), np.arange(grid - 1), indexing="ij")
    xi, yj = s[i], s[j]
    far = np.maximum(np.abs(xi - yj - h), np.abs(xi - yj + h))
    u_lo = xi + yj
    near = np.pi - np.maximum(np.abs(u_lo + np.pi), np.abs(u_lo + 2 * h + np.pi))
    a = np.rint(far / h).astype(int)
    b = np.rint(near / h).astype(int)
    gap = (table[a] - err[a]) - (table[b] + err[b])
    lam = 0.5 * float(np.min(gap))
    if lam <= 0:
        raise ArithmeticError(f"box constant not positive (lambda={lam:.3g}); "
                              "kernel evaluation is inconsistent")
    return lam

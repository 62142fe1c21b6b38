"""The r = 2 member of the family: the reduced Ostrovsky equation.

The exact highest wave is placed with its crest at ``x = 0``:
``phi(x) = (3(|x| - pi)^2 - pi^2) / 18`` on [-pi, pi], speed ``pi^2 / 9``.
"""
from __future__ import annotations

import numpy as np
from scipy import integrate

from .diagnostics import crest_regularity_fit, crest_slope
from .kernel import KernelSpec, kernel_closed_form, reduce_angle
from .spectral import (PeriodicFunction, WaveSolution, apply_multiplier, residual,
                       square_dealiased)

PEAKED_SPEED = np.pi ** 2 / 9
R = 2.0


def peaked_profile(x):
    x = np.abs(reduce_angle(x))
    return (3 * (x - np.pi) ** 2 - np.pi ** 2) / 18


def unshifted_profile(x):
    """The same wave with crests at odd multiples of pi."""
    x = reduce_angle(x)
    return (3 * x ** 2 - np.pi ** 2) / 18


def peaked_wave_sample(modes: int) -> WaveSolution:
    if modes < 256:
        raise ValueError("the peaked wave needs at least 256 modes")
    phi = PeriodicFunction.from_callable(peaked_profile, modes)
    _, sol = residual(WaveSolution(phi, PEAKED_SPEED, 1), KernelSpec(R))
    return sol


def nonlocal_residual(sol: WaveSolution) -> PeriodicFunction:
    """``-mu phi + L_2 phi + (phi^2 - mean(phi^2)) / 2`` on the grid."""
    sq, _ = square_dealiased(sol.phi)
    lphi = apply_multiplier(sol.phi, R)
    return lphi - sol.phi.scale(sol.mu) + sq.scale(0.5)


def verify_nonlocal_residual(modes: int) -> float:
    return nonlocal_residual(peaked_wave_sample(modes)).sup()


def local_residual(sol: WaveSolution) -> PeriodicFunction:
    """``d^2/dx^2 (phi^2/2 - mu phi) - phi`` computed spectrally."""
    sq, _ = square_dealiased(sol.phi)
    g = sq.scale(0.5) - sol.phi.scale(sol.mu)
    k = np.arange(1, g.cos_coeffs.size + 1, dtype=float)
    return PeriodicFunction.from_coeffs(-k ** 2 * g.cos_coeffs - sol.phi.cos_coeffs,
                                        sol.modes)


def verify_local_form(sol: WaveSolution) -> dict:
    """Compare the local residual with the nonlocal one lifted by the inverse symbol.

    The two forms are equivalent for zero-mean waves: the local residual
    equals ``-d^2/dx^2`` of the nonlocal residual mode by mode.
    """
    if sol.phi.cos_coeffs.any() and sol.height <= 0.05 * sol.mu:
        raise ValueError("local form check refused: wave is too close to peaked "
                         f"(height {sol.height:.3g} <= 0.05 mu)")
    loc = local_residual(sol)
    nl = nonlocal_residual(sol)
    k = np.arange(1, nl.cos_coeffs.size + 1, dtype=float)
    lifted = PeriodicFunction.from_coeffs(k ** 2 * nl.cos_coeffs, sol.modes)
    return {"local": loc.sup(), "nonlocal": nl.sup(), "lifted_nonlocal": lifted.sup()}


def kernel_identity_gap(modes: int = 1024) -> float:
    """Sup distance between ``K_2 * phi`` (closed-form kernel) and ``L_2 phi``."""
    sol = peaked_wave_sample(modes)
    offsets = 2 * np.pi * np.arange(modes) / modes
    ksamp = kernel_closed_form(2, offsets)
    conv = np.fft.irfft(np.fft.rfft(ksamp) * np.fft.rfft(sol.phi.values), n=modes) / modes
    return float(np.max(np.abs(conv - apply_multiplier(sol.phi, R).values)))


def profile_mean() -> float:
    """Mean of the exact profile by quadrature (the grid mean is only O(M^-2)).

    The profile is a quadratic on [0, pi], so 4-point Gauss is exact.
    """
    val, _ = integrate.fixed_quad(peaked_profile, 0.0, np.pi, n=4)
    return val / np.pi


def speed_window(k: int) -> tuple[float, float]:
    return float(k) ** -2, float(k) ** -2 * PEAKED_SPEED


def check_speed_window(branch, extrapolated: float | None = None) -> dict:
    """Every nontrivial point strictly inside ``k^-2 (1, pi^2/9)``."""
    if branch.r != 2:
        raise ValueError("speed window applies to r = 2 only")
    lo, hi = speed_window(branch.k)
    mus = branch.speeds()
    inside = (mus > lo) & (mus < hi)
    report = {"k": branch.k, "window": [lo, hi], "n_points": int(mus.size),
              "all_inside": bool(inside.all()),
              "min_margin": float(np.min(np.minimum(mus - lo, hi - mus))) if mus.size else None,
              "violations": np.flatnonzero(~inside).tolist()}
    if extrapolated is not None:
        report["extrapolated"] = extrapolated
        report["terminal_rel_error"] = abs(extrapolated - hi) / hi
        report["terminal_within_2pct"] = bool(report["terminal_rel_error"] <= 0.02)
    return report


def distance_to_peaked(sol: WaveSolution) -> float:
    """Sup distance on the grid between a 2pi-periodic wave and the exact peaked wave."""
    return float(np.max(np.abs(sol.phi.values - peaked_profile(sol.phi.x))))


def verify_suite(modes=(1024, 4096)) -> dict:
    """Exact-solution checks of the r = 2 case, collected into one report."""
    checks = {}
    res = {m: verify_nonlocal_residual(m) for m in modes}
    for m, v in res.items():
        checks[f"nonlocal_residual_M{m}"] = {"value": v, "bound": 10.0 / m, "passed": v <= 10.0 / m}
    if len(modes) >= 2:
        m0, m1 = modes[0], modes[-1]
        order = np.log(res[m0] / res[m1]) / np.log(m1 / m0)
        checks["residual_order"] = {"value": float(order), "passed": bool(order >= 1.5)}
    checks["crest_equals_speed"] = {"value": float(peaked_profile(0.0)),
                                    "expected": PEAKED_SPEED,
                                    "passed": bool(abs(peaked_profile(0.0) - PEAKED_SPEED) < 1e-14)}
    mean = profile_mean()
    checks["zero_mean"] = {"value": mean, "passed": abs(mean) < 1e-12}
    pts = np.pi * np.array([0.0, 0.25, 1 / 3, 0.5, 2 / 3, 1.0, -0.5])
    shift = float(np.max(np.abs(peaked_profile(pts) - unshifted_profile(pts - np.pi))))
    checks["shift_identity"] = {"value": shift, "passed": shift < 1e-14}
    gap = kernel_identity_gap(modes[0])
    # trapezoid convolution of two corner functions: O(M^-2)
    checks["kernel_identity"] = {"value": gap, "bound": 10.0 / modes[0] ** 2,
                                 "passed": gap <= 10.0 / modes[0] ** 2}
    neg = nonlocal_residual(WaveSolution(PeriodicFunction.from_callable(np.cos, modes[0]),
                                         PEAKED_SPEED)).sup()
    checks["negative_control"] = {"value": neg, "passed": neg > 0.05}
    fine = peaked_wave_sample(modes[-1])
    fit = crest_regularity_fit(fine)
    checks["crest_exponent"] = {"value": fit.alpha, "lip_constant": fit.lip_constant,
                                "passed": 0.98 <= fit.alpha <= 1.02}
    slope = crest_slope(fine)
    checks["crest_slope"] = {"value": slope, "expected": np.pi / 3,
                             "passed": abs(slope - np.pi / 3) <= 0.05 * np.pi / 3}
    return {"passed": all(c["passed"] for c in checks.values()), "checks": checks}

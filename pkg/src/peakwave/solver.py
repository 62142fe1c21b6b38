"""Newton-Galerkin solver for the steady equation in the even zero-mean class.

Unknowns are the cosine coefficients on the modes ``k, 2k, 3k, ...`` (so the
``2pi/k`` symmetry is structural) plus, for the amplitude and height
constraints, the wave speed.
"""
from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, replace

import numpy as np
import scipy.linalg

from .kernel import KernelSpec
from .spectral import (PeriodicFunction, WaveSolution, product_coeffs,
                       residual_coeffs, values_from_coeffs)

log = logging.getLogger(__name__)

CONSTRAINTS = ("fixed_mu", "fixed_first_coeff", "fixed_height")


class SolverError(RuntimeError):
    pass


class MaxItersExceeded(SolverError):
    def __init__(self, message, best: WaveSolution):
        super().__init__(message)
        self.best = best


class SingularJacobian(SolverError):
    pass


class ConstraintInfeasible(SolverError):
    pass


@dataclass(frozen=True)
class NewtonConfig:
    tol_residual: float = 1e-11
    max_iters: int = 40
    damping: float = 1.0
    constraint: str = "fixed_mu"
    value: float | None = None  # epsilon for fixed_first_coeff, h for fixed_height
    min_damping: float = 2.0 ** -8

    def __post_init__(self):
        if not self.tol_residual > 0:
            raise ValueError("tol_residual must be positive")
        if self.max_iters < 1:
            raise ValueError("max_iters must be at least 1")
        if not 0 < self.damping <= 1:
            raise ValueError("damping must lie in (0, 1]")
        if self.constraint not in CONSTRAINTS:
            raise ValueError(f"unknown constraint {self.constraint!r}")
        if self.constraint != "fixed_mu" and self.value is None:
            raise ValueError(f"constraint {self.constraint} needs a value")


def jacobian_apply(sol: WaveSolution, psi: PeriodicFunction, r: float) -> PeriodicFunction:
    """Zero-mean part of ``(mu - phi) psi - L_r psi + mean(phi psi)``."""
    m = sol.modes
    c = psi.cos_coeffs
    k = np.arange(1, c.size + 1, dtype=float)
    prod, _ = product_coeffs(sol.phi.cos_coeffs, c, m)
    return PeriodicFunction.from_coeffs((sol.mu - k ** (-r)) * c - prod, m)


def jacobian_matrix(c: np.ndarray, mu: float, r: float, modes=None) -> np.ndarray:
    """Dense Jacobian of the coefficient residual.

    The ``k``-th coefficient of ``phi cos(lx)`` is ``(c_|k-l| + c_{k+l})/2``
    with ``c_0 = 0`` and coefficients beyond the truncation dropped.
    """
    n = c.size
    padded = np.zeros(2 * n + 1)
    padded[1:n + 1] = c
    idx = np.arange(1, n + 1) if modes is None else np.asarray(modes)
    kk, ll = np.meshgrid(idx, idx, indexing="ij")
    t = 0.5 * (padded[np.abs(kk - ll)] + padded[kk + ll])
    j = -t
    j[np.diag_indices_from(j)] += mu - idx.astype(float) ** (-r)
    return j


def _pack(sol: WaveSolution, modes: np.ndarray, with_mu: bool) -> np.ndarray:
    u = sol.phi.cos_coeffs[modes - 1]
    return np.append(u, sol.mu) if with_mu else u.copy()


def newton_solve(initial: WaveSolution, cfg: NewtonConfig, spec: KernelSpec) -> WaveSolution:
    """Solve ``F(phi, mu) = 0`` subject to ``cfg.constraint``.

    Residual norms are sup norms of the residual on the collocation grid.
    """
    m = initial.modes
    n = m // 2
    sym = initial.k
    modes = np.arange(sym, n + 1, sym)
    with_mu = cfg.constraint != "fixed_mu"
    r = spec.r

    if cfg.constraint == "fixed_height" and cfg.value <= 0:
        raise ConstraintInfeasible(f"height must be positive, got {cfg.value}")
    if cfg.constraint == "fixed_first_coeff" and modes.size == 0:
        raise ConstraintInfeasible("no mode available for the amplitude constraint")

    def unpack(u):
        c = np.zeros(n)
        if with_mu:
            c[modes - 1] = u[:-1]
            return c, float(u[-1])
        c[modes - 1] = u
        return c, initial.mu

    def system(u):
        c, mu = unpack(u)
        res = residual_coeffs(c, mu, r, m)[modes - 1]
        if cfg.constraint == "fixed_first_coeff":
            res = np.append(res, c[sym - 1] - cfg.value)
        elif cfg.constraint == "fixed_height":
            res = np.append(res, mu - np.sum(c) - cfg.value)
        return res

    def grid_norm(res):
        # sup norm of the PDE residual on the grid; constraint rows by value
        full = np.zeros(n)
        body = res[:-1] if with_mu else res
        full[modes - 1] = body
        g = float(np.max(np.abs(values_from_coeffs(full, m)))) if n else 0.0
        return max(g, abs(float(res[-1]))) if with_mu else g

    def jac(u):
        c, mu = unpack(u)
        jm = jacobian_matrix(c, mu, r, modes)
        if not with_mu:
            return jm
        col = c[modes - 1][:, None]
        row = np.zeros((1, modes.size + 1))
        if cfg.constraint == "fixed_first_coeff":
            row[0, 0] = 1.0
        else:
            row[0, :-1] = -1.0
            row[0, -1] = 1.0
        return np.vstack([np.hstack([jm, col]), row])

    def make(u, norm):
        c, mu = unpack(u)
        return WaveSolution(PeriodicFunction.from_coeffs(c, m), mu, sym, norm)

    u = _pack(initial, modes, with_mu)
    res = system(u)
    norm = grid_norm(res)
    best = make(u, norm)
    for it in range(cfg.max_iters + 1):
        log.debug("newton it=%d residual=%.3e", it, norm)
        if norm <= cfg.tol_residual:
            return make(u, norm)
        if it == cfg.max_iters:
            break
        a = jac(u)
        try:
            with warnings.catch_warnings():
                # singularity is judged from the pivots below
                warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
                lu, piv = scipy.linalg.lu_factor(a, check_finite=True)
        except (ValueError, np.linalg.LinAlgError) as exc:
            raise SingularJacobian(str(exc)) from exc
        diag = np.abs(np.diag(lu))
        if diag.min() <= 1e-13 * max(diag.max(), 1e-300):
            raise SingularJacobian(f"Jacobian is numerically singular "
                                   f"(pivot ratio {diag.min() / diag.max():.2e})")
        step = scipy.linalg.lu_solve((lu, piv), -res)
        lam = cfg.damping
        while True:
            trial = u + lam * step
            tres = system(trial)
            tnorm = grid_norm(tres)
            if np.isfinite(tnorm) and tnorm < norm:
                break
            lam /= 2
            if lam < cfg.min_damping:
                raise MaxItersExceeded(f"line search failed at iteration {it} "
                                       f"(residual {norm:.3e})", best)
        u, res, norm = trial, tres, tnorm
        if norm < best.residual_norm:
            best = make(u, norm)
    raise MaxItersExceeded(f"no convergence in {cfg.max_iters} iterations "
                           f"(residual {norm:.3e})", best)


def solve_fixed_mu(initial: WaveSolution, spec: KernelSpec, **kw) -> WaveSolution:
    return newton_solve(initial, NewtonConfig(constraint="fixed_mu", **kw), spec)


def refine_modes(sol: WaveSolution, m: int) -> WaveSolution:
    """Same wave on ``m`` collocation points (spectral padding/truncation)."""
    return replace(sol, phi=sol.phi.resample(m), residual_norm=float("nan"))

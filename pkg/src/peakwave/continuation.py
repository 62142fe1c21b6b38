"""Continuation of bifurcation branches towards the highest wave.

Branches are parametrised by the height ``h = mu - phi(0)``, which tends to
zero at the limiting peaked wave.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .bifurcation import asymptotic_seed
from .kernel import KernelSpec
from .solver import NewtonConfig, SolverError, newton_solve, refine_modes
from .spectral import PeriodicFunction, WaveSolution

log = logging.getLogger(__name__)

TERMINATIONS = ("height_floor_reached", "step_floor", "max_steps", "solver_failure")


@dataclass(frozen=True)
class ContinuationConfig:
    modes: int = 256
    max_modes: int = 4096
    height_floor: float = 1e-3
    max_steps: int = 400
    eps: float | None = None  # seed amplitude; default 0.02 k^-r
    initial_step: float | None = None
    min_step: float = 1e-5
    max_step_fraction: float = 0.5
    grow: float = 1.3
    tail_tol: float = 1e-10
    tol_residual: float = 1e-11
    max_iters: int = 25

    def __post_init__(self):
        for m in (self.modes, self.max_modes):
            if m < 16 or m & (m - 1):
                raise ValueError("mode counts must be powers of two >= 16")
        if self.max_modes < self.modes:
            raise ValueError("max_modes must be >= modes")
        if not self.height_floor > 0:
            raise ValueError("height floor must be positive")
        if self.max_steps < 1:
            raise ValueError("max_steps must be positive")


@dataclass
class BranchPoint:
    s: float
    solution: WaveSolution
    height: float
    tolerance: float = 1e-11
    alpha_fit: float | None = None
    diagnostics: dict | None = None

    @property
    def mu(self) -> float:
        return self.solution.mu

    @property
    def max_phi(self) -> float:
        return float(np.max(self.solution.phi.values))


@dataclass
class Branch:
    r: float
    k: int
    points: list[BranchPoint] = field(default_factory=list)
    termination: str | None = None
    message: str = ""

    def heights(self) -> np.ndarray:
        return np.array([p.height for p in self.points])

    def speeds(self) -> np.ndarray:
        return np.array([p.mu for p in self.points])

    def append(self, sol: WaveSolution, tol: float):
        s = 0.0
        if self.points:
            prev = self.points[-1]
            dc = sol.phi.cos_coeffs
            pc = prev.solution.phi.cos_coeffs
            n = min(dc.size, pc.size)
            ds = np.sqrt(np.sum((dc[:n] - pc[:n]) ** 2) + np.sum(dc[n:] ** 2)
                         + np.sum(pc[n:] ** 2) + (sol.mu - prev.mu) ** 2)
            s = prev.s + float(ds)
        self.points.append(BranchPoint(s, sol, sol.height, tol))


def tail_ratio(sol: WaveSolution) -> float:
    """Largest retained coefficient in the top eighth, relative to the maximum."""
    c = np.abs(sol.phi.cos_coeffs)
    top = c[-max(1, c.size // 8):]
    return float(top.max() / max(c.max(), 1e-300))


def _converge_resolved(guess: WaveSolution, cfg: NewtonConfig, spec: KernelSpec,
                       ccfg: ContinuationConfig) -> WaveSolution:
    sol = newton_solve(guess, cfg, spec)
    while tail_ratio(sol) > ccfg.tail_tol and sol.modes < ccfg.max_modes:
        log.info("escalating modes %d -> %d (tail %.2e)", sol.modes, 2 * sol.modes,
                 tail_ratio(sol))
        sol = newton_solve(refine_modes(sol, 2 * sol.modes), cfg, spec)
    return sol


def seed_branch(r: float, k: int, ccfg: ContinuationConfig, spec: KernelSpec) -> WaveSolution:
    eps = 0.02 * float(k) ** (-r) if ccfg.eps is None else ccfg.eps
    modes = max(ccfg.modes, 8 * k)
    guess = asymptotic_seed(r, k, eps, modes)
    cfg = NewtonConfig(tol_residual=ccfg.tol_residual, max_iters=ccfg.max_iters,
                       constraint="fixed_first_coeff", value=eps)
    return _converge_resolved(guess, cfg, spec, ccfg)


def _predict(points: list[BranchPoint], h: float) -> WaveSolution:
    last = points[-1].solution
    if len(points) < 2:
        return last
    prev = points[-2].solution
    m = last.modes
    a = prev.phi.resample(m).cos_coeffs
    b = last.phi.cos_coeffs
    ha, hb = points[-2].height, points[-1].height
    if hb == ha:
        return last
    t = (h - hb) / (hb - ha)
    c = b + t * (b - a)
    mu = last.mu + t * (last.mu - prev.mu)
    return WaveSolution(PeriodicFunction.from_coeffs(c, m), mu, last.k)


def continue_branch(r: float, k: int, ccfg: ContinuationConfig | None = None,
                    spec: KernelSpec | None = None) -> Branch:
    """March the branch in decreasing height until the height floor."""
    ccfg = ContinuationConfig() if ccfg is None else ccfg
    spec = KernelSpec(r) if spec is None else spec
    branch = Branch(r, k)
    try:
        seed = seed_branch(r, k, ccfg, spec)
    except SolverError as exc:
        branch.termination, branch.message = "solver_failure", f"seed: {exc}"
        return branch
    branch.append(seed, ccfg.tol_residual)
    h = seed.height
    step = ccfg.initial_step or 0.1 * h
    fast = 0
    for _ in range(ccfg.max_steps):
        if h <= ccfg.height_floor * (1 + 1e-12):
            branch.termination = "height_floor_reached"
            return branch
        step = min(step, ccfg.max_step_fraction * h)
        target = max(h - step, ccfg.height_floor)
        cfg = NewtonConfig(tol_residual=ccfg.tol_residual, max_iters=ccfg.max_iters,
                           constraint="fixed_height", value=target)
        try:
            guess = _predict(branch.points, target)
            sol = _converge_resolved(guess, cfg, spec, ccfg)
        except SolverError as exc:
            log.info("step %.3e rejected at h=%.4e: %s", step, h, exc)
            step /= 2
            fast = 0
            if step < ccfg.min_step:
                branch.termination = "step_floor"
                branch.message = str(exc)
                return branch
            continue
        branch.append(sol, ccfg.tol_residual)
        log.info("h=%.4e mu=%.8f modes=%d residual=%.2e", sol.height, sol.mu,
                 sol.modes, sol.residual_norm)
        h = sol.height
        fast += 1
        if fast >= 3:
            step *= ccfg.grow
            fast = 0
    branch.termination = ("height_floor_reached" if h <= ccfg.height_floor * (1 + 1e-12)
                          else "max_steps")
    return branch


def extrapolate_speed(branch: Branch, npts: int = 3) -> float:
    """Extrapolate ``mu(h)`` to ``h = 0`` from the last points of the branch.

    A polynomial of degree ``npts - 1`` in ``h`` through the final points
    (Richardson extrapolation on unevenly spaced data).
    """
    h = branch.heights()[-npts:]
    mu = branch.speeds()[-npts:]
    if h.size < 2:
        raise ValueError("need at least two branch points to extrapolate")
    coef = np.polyfit(h, mu, h.size - 1)
    return float(np.polyval(coef, 0.0))


def detect_turning_or_revisit(branch: Branch, tol_revisit: float = 1e-8,
                              trivial_tol: float = 1e-6) -> dict:
    """Flag returns to earlier ``(mu, max phi)`` states and approach to ``phi = 0``."""
    pts = np.array([(p.mu, p.max_phi) for p in branch.points])
    if len(pts) < 3:
        raise ValueError("need at least three branch points")
    revisits = []
    for i in range(2, len(pts)):
        d = np.hypot(*(pts[:i - 1] - pts[i]).T)
        j = int(np.argmin(d))
        if d[j] < tol_revisit:
            revisits.append((i, j))
    amps = pts[:, 1]
    trivial = bool(amps[-1] < trivial_tol or (amps[-1] < 0.1 * amps.max()
                                              and np.all(np.diff(amps[-3:]) < 0)))
    return {"revisits": revisits, "revisit": bool(revisits), "trivial_line": trivial,
            "flags": bool(revisits) or trivial}

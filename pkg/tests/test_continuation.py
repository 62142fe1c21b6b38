import numpy as np
import pytest

from peakwave.continuation import (Branch, ContinuationConfig, continue_branch,
                                   detect_turning_or_revisit, extrapolate_speed, tail_ratio)
from peakwave.diagnostics import kernel_constants
from peakwave.ostrovsky import PEAKED_SPEED
from peakwave.spectral import PeriodicFunction, WaveSolution


@pytest.mark.parametrize("kw", [dict(modes=100), dict(modes=512, max_modes=256),
                                dict(height_floor=0), dict(max_steps=0)])
def test_config_validation(kw):
    with pytest.raises(ValueError):
        ContinuationConfig(**kw)


def test_r2_k1_branch(branch):
    b = branch(2, 1)
    assert b.termination == "height_floor_reached"
    h = b.heights()
    assert np.all(h > 0) and np.all(np.diff(h[3:]) < 0)
    assert all(p.solution.residual_norm <= p.tolerance for p in b.points)
    assert extrapolate_speed(b) == pytest.approx(PEAKED_SPEED, rel=0.02)
    mus = b.speeds()
    assert np.all((mus > 1) & (mus < PEAKED_SPEED))
    s = np.array([p.s for p in b.points])
    assert s[0] == 0 and np.all(np.diff(s) > 0)


def test_r2_k2_branch(branch):
    b = branch(2, 2)
    assert b.termination == "height_floor_reached"
    assert extrapolate_speed(b) == pytest.approx(PEAKED_SPEED / 4, rel=0.02)
    assert all(p.solution.check_symmetry() for p in b.points)


def test_supercritical(branch):
    for r in (1.5, 2, 3):
        b = branch(r)
        assert b.points[0].mu > 1
        assert np.all(np.diff(b.speeds()) > 0)


def test_speed_bounds_all_r(branch):
    for r in (1.5, 3):
        b = branch(r)
        nk = kernel_constants(float(r))["norm_k"]
        assert np.all(b.speeds() < 2 * nk)
        assert np.all(b.speeds() > 0.5)


def test_resolution_escalates(branch):
    b = branch(2, 1)
    assert b.points[0].solution.modes == 256
    assert b.points[-1].solution.modes == 4096


def test_step_floor_termination():
    cfg = ContinuationConfig(modes=64, max_modes=64, height_floor=1e-3, min_step=0.05,
                             tol_residual=1e-13)
    b = continue_branch(2, 1, cfg)
    assert b.termination in ("step_floor", "height_floor_reached", "max_steps")
    assert b.termination != "height_floor_reached" or b.points[-1].height <= 1e-3 * (1 + 1e-9)


def test_max_steps_termination():
    b = continue_branch(2, 1, ContinuationConfig(max_steps=2))
    assert b.termination == "max_steps" and len(b.points) == 3


def test_healthy_branch_has_no_flags(branch):
    assert not detect_turning_or_revisit(branch(2, 1))["flags"]


def _synthetic(pairs):
    b = Branch(2.0, 1)
    for mu, amp in pairs:
        sol = WaveSolution(PeriodicFunction.from_coeffs([amp], 16), mu)
        b.append(sol, 1e-11)
    return b


def test_revisit_flagged():
    t = np.linspace(0, 2 * np.pi, 13)
    loop = _synthetic(zip(1.05 + 0.02 * np.cos(t), 0.3 + 0.02 * np.sin(t)))
    rep = detect_turning_or_revisit(loop)
    assert rep["revisit"] and rep["flags"]


def test_trivial_line_flagged():
    decay = _synthetic(zip(np.linspace(1.05, 1.0, 8), 0.3 * 0.3 ** np.arange(8)))
    assert detect_turning_or_revisit(decay)["trivial_line"]


def test_tail_ratio():
    sol = WaveSolution(PeriodicFunction.from_coeffs(np.eye(8)[0], 16), 1.0)
    assert tail_ratio(sol) == 0

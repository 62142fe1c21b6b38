import numpy as np
import pytest

from peakwave.bifurcation import asymptotic_seed
from peakwave.kernel import KernelSpec
from peakwave.ostrovsky import PEAKED_SPEED, peaked_wave_sample
from peakwave.solver import (ConstraintInfeasible, MaxItersExceeded, NewtonConfig,
                             SingularJacobian, jacobian_apply, jacobian_matrix,
                             newton_solve, refine_modes)
from peakwave.spectral import PeriodicFunction, WaveSolution, residual_coeffs

SPEC2 = KernelSpec(2)


def unit(k, m=32):
    c = np.zeros(m // 2)
    c[k - 1] = 1
    return PeriodicFunction.from_coeffs(c, m)


@pytest.mark.parametrize("kw", [dict(tol_residual=0), dict(max_iters=0),
                                dict(damping=1.5), dict(constraint="arclength"),
                                dict(constraint="fixed_height")])
def test_config_validation(kw):
    with pytest.raises(ValueError):
        NewtonConfig(**kw)


def test_jacobian_examples():
    zero = WaveSolution(PeriodicFunction.zeros(32), 1.0)
    assert jacobian_apply(zero, unit(1), 2).sup() == 0
    out = jacobian_apply(zero, unit(2), 2)
    assert np.allclose(out.cos_coeffs, 0.75 * unit(2).cos_coeffs, atol=1e-15)
    for k, r, mu in [(3, 2.5, 0.4), (5, 1.5, 2.0)]:
        z = WaveSolution(PeriodicFunction.zeros(32), mu)
        assert np.allclose(jacobian_apply(z, unit(k), r).cos_coeffs,
                           (mu - k ** -r) * unit(k).cos_coeffs, atol=1e-15)


def test_jacobian_matrix_matches_apply():
    rng = np.random.default_rng(3)
    c = rng.normal(size=16) / np.arange(1, 17) ** 2
    sol = WaveSolution(PeriodicFunction.from_coeffs(c, 32), 1.1)
    jm = jacobian_matrix(c, 1.1, 2.0)
    for _ in range(3):
        psi = rng.normal(size=16)
        assert np.allclose(jm @ psi, jacobian_apply(sol, PeriodicFunction.from_coeffs(psi, 32),
                                                    2.0).cos_coeffs, atol=1e-13)


def test_jacobian_finite_difference_order():
    rng = np.random.default_rng(4)
    sol = newton_solve(asymptotic_seed(2, 1, 0.05, 64),
                       NewtonConfig(constraint="fixed_first_coeff", value=0.05), SPEC2)
    c = sol.phi.cos_coeffs
    f0 = residual_coeffs(c, sol.mu, 2, 64)
    psi = rng.normal(size=c.size) / np.arange(1, c.size + 1)
    jpsi = jacobian_apply(sol, PeriodicFunction.from_coeffs(psi, 64), 2).cos_coeffs
    errs = [np.max(np.abs(residual_coeffs(c + d * psi, sol.mu, 2, 64) - f0 - d * jpsi))
            for d in (1e-2, 1e-3)]
    assert np.log10(errs[0] / errs[1]) >= 1.9


def test_newton_small_amplitude():
    eps = 0.01
    sol = newton_solve(asymptotic_seed(2, 1, eps, 64),
                       NewtonConfig(constraint="fixed_first_coeff", value=eps), SPEC2)
    assert sol.residual_norm <= 1e-11
    assert sol.phi.cos_coeffs[0] == pytest.approx(eps, abs=1e-15)
    # the listed 1 + (5/12) 1e-4 agrees to 3 significant digits
    assert float(f"{sol.mu:.3g}") == float(f"{1 + 5 / 12 * 1e-4:.3g}")
    # zero-mean expansion: 1 + eps^2 / 6 up to O(eps^4)
    assert sol.mu - 1 == pytest.approx(eps ** 2 / 6, rel=1e-3)


def test_newton_trivial_branch():
    guess = WaveSolution(PeriodicFunction.zeros(32), 0.5)
    sol = newton_solve(guess, NewtonConfig(), SPEC2)
    assert sol.phi.sup() == 0 and sol.residual_norm == 0


def test_newton_peaked_wave_immediate():
    guess = peaked_wave_sample(1024)
    sol = newton_solve(guess, NewtonConfig(tol_residual=1e-4, max_iters=1), SPEC2)
    assert sol.mu == PEAKED_SPEED
    assert np.array_equal(sol.phi.cos_coeffs, guess.phi.cos_coeffs)


def test_singular_jacobian_at_bifurcation():
    # on the trivial line the speed column of the bordered system vanishes
    guess = WaveSolution(PeriodicFunction.zeros(32), 1.0)
    with pytest.raises(SingularJacobian):
        newton_solve(guess, NewtonConfig(constraint="fixed_first_coeff", value=0.01), SPEC2)


def test_infeasible_height():
    guess = asymptotic_seed(2, 1, 0.01, 32)
    with pytest.raises(ConstraintInfeasible):
        newton_solve(guess, NewtonConfig(constraint="fixed_height", value=-0.1), SPEC2)


def test_max_iters_carries_best():
    guess = asymptotic_seed(2, 1, 0.05, 64)
    with pytest.raises(MaxItersExceeded) as info:
        newton_solve(guess, NewtonConfig(constraint="fixed_first_coeff", value=0.05,
                                         max_iters=1, tol_residual=1e-15), SPEC2)
    assert info.value.best.residual_norm < 1e-4


def test_quadratic_convergence(caplog):
    import logging
    guess = asymptotic_seed(2, 1, 0.08, 64)
    with caplog.at_level(logging.DEBUG, logger="peakwave.solver"):
        newton_solve(guess, NewtonConfig(constraint="fixed_first_coeff", value=0.08,
                                         tol_residual=1e-14), SPEC2)
    res = [float(r.message.split("residual=")[1]) for r in caplog.records]
    pairs = [(a, b) for a, b in zip(res, res[1:]) if 1e-12 < a < 1e-4]
    assert pairs
    assert all(b <= 100 * a ** 2 for a, b in pairs)


def test_k_fold_symmetry_structural():
    sol = newton_solve(asymptotic_seed(2, 3, 0.01, 64),
                       NewtonConfig(constraint="fixed_first_coeff", value=0.01), SPEC2)
    assert sol.check_symmetry(tol=0.0)
    assert sol.mu > 1 / 9


def test_fixed_height_and_maximum_principle():
    guess = asymptotic_seed(2, 1, 0.02, 128)
    sol = newton_solve(guess, NewtonConfig(constraint="fixed_height", value=0.9), SPEC2)
    assert sol.height == pytest.approx(0.9, abs=1e-11)
    assert sol.phi.values.max() < sol.mu
    assert sol.phi.derivative_values(2)[64] < 0
    x = sol.phi.x
    d = sol.phi.derivative_values(1)
    assert np.all(d[(x > -np.pi) & (x < 0)] >= -1e-10)


def test_refine_modes_keeps_coefficients():
    sol = asymptotic_seed(2, 1, 0.02, 32)
    fine = refine_modes(sol, 128)
    assert fine.modes == 128
    assert np.array_equal(fine.phi.cos_coeffs[:16], sol.phi.cos_coeffs)

import numpy as np
import pytest

from peakwave.bifurcation import asymptotic_seed
from peakwave.diagnostics import (check_apriori, crest_regularity_fit, crest_slope,
                                  kernel_constants, monotone_margin,
                                  verify_bifurcation_formulas)
from peakwave.kernel import KernelSpec
from peakwave.ostrovsky import peaked_wave_sample
from peakwave.solver import NewtonConfig, newton_solve
from peakwave.spectral import PeriodicFunction, WaveSolution

EPS = [0.01, 0.015, 0.02, 0.03]


def test_trivial_wave_passes_below_norm():
    nk = kernel_constants(2.0)["norm_k"]
    rep = check_apriori(WaveSolution(PeriodicFunction.zeros(64), 0.9), KernelSpec(2))
    assert 0.9 < nk and rep.satisfied
    c1 = [c for c in rep.checks if c.name == "c1"][0]
    assert c1.margin == 0
    distance = rep.checks[0]
    assert distance.name == "distance"
    assert distance.margin == pytest.approx(2 * nk - 2 * 0.9)


def test_all_branch_points_pass(branch):
    for p in branch(2).points:
        assert check_apriori(p.solution, KernelSpec(2)).satisfied


def test_scaled_by_ten_stays_inside_bounds(branch):
    # sup |10 phi| is about 11 against a uniform bound of about 80
    sol = branch(2).points[-1].solution
    rep = check_apriori(WaveSolution(sol.phi.scale(10.0), sol.mu), KernelSpec(2))
    ub = [c for c in rep.checks if c.name == "uniform_bound"][0]
    assert ub.satisfied and ub.lhs < 12 and ub.rhs > 79


def test_scaled_wave_violates_uniform_bound(branch):
    sol = branch(2).points[-1].solution
    blown = WaveSolution(sol.phi.scale(100.0), sol.mu)
    rep = check_apriori(blown, KernelSpec(2))
    names = {c.name: c.satisfied for c in rep.checks}
    assert not names["uniform_bound"]
    assert not rep.satisfied


def test_trough_bound_against_exact_wave():
    # exact peaked wave: mu - phi(pi) = pi^2/6 must exceed lambda/2
    sol = peaked_wave_sample(1024)
    rep = check_apriori(sol, KernelSpec(2))
    aux = [c for c in rep.checks if c.name == "lowerbound_aux"][0]
    assert aux.lhs == pytest.approx(np.pi ** 2 / 6, rel=1e-6)
    assert aux.satisfied


def test_report_dict_is_json_ready(branch):
    import json
    rep = check_apriori(branch(2).points[2].solution, KernelSpec(2))
    rep.regularity = crest_regularity_fit(branch(2).points[2].solution)
    json.dumps(rep.to_dict())


def test_fit_exact_peaked_wave():
    fit = crest_regularity_fit(peaked_wave_sample(4096))
    assert 0.98 <= fit.alpha <= 1.02
    assert fit.regime == "near_limit"
    assert crest_slope(peaked_wave_sample(4096)) == pytest.approx(np.pi / 3, rel=1e-4)


def test_fit_window_halving_robust():
    sol = peaked_wave_sample(4096)
    full = crest_regularity_fit(sol)
    half = crest_regularity_fit(WaveSolution(sol.phi, sol.mu, 2))  # upper end pi/16
    assert abs(full.alpha - half.alpha) < 0.05


def test_fit_smooth_wave():
    sol = newton_solve(asymptotic_seed(2, 1, 0.01, 256),
                       NewtonConfig(constraint="fixed_first_coeff", value=0.01), KernelSpec(2))
    fit = crest_regularity_fit(sol)
    assert fit.regime == "smooth"
    assert fit.alpha == pytest.approx(2, abs=0.05)


def test_fit_near_limit_branch(branch):
    fit = crest_regularity_fit(branch(2).points[-1].solution)
    assert 0.9 <= fit.alpha <= 1.1


def test_crest_slope_tends_to_exact(branch):
    assert crest_slope(branch(2).points[-1].solution) == pytest.approx(np.pi / 3, rel=0.05)


def test_fit_rejects_coarse_grid():
    with pytest.raises(ValueError):
        crest_regularity_fit(asymptotic_seed(2, 1, 0.01, 32))


def test_monotone_and_max_principle(branch):
    for r in (1.5, 2, 3):
        pts = branch(r).points
        margins = [p.mu - p.max_phi for p in pts]
        assert all(m > 0 for m in margins)
        assert np.all(np.diff(margins) < 0)
        assert all(monotone_margin(p.solution) >= -1e-9 for p in pts)


def test_c1_of_square_across_crest(branch):
    sol = branch(2).points[-1].solution
    m = sol.modes
    d = (-2 * (sol.mu - sol.phi.values) * sol.phi.derivative_values(1))
    # odd function through the crest: one-sided values near 0 are small
    assert abs(d[m // 2]) < 1e-8
    assert np.max(np.abs(d[m // 2 - 3:m // 2 + 4])) < 0.05


def test_bifurcation_zero_mean_coefficients():
    rep = verify_bifurcation_formulas(2, 1, EPS)
    assert rep["passed_zero_mean"]
    assert rep["supercritical"]
    assert rep["fits"]["speed_slope"] == pytest.approx(1 / 6, rel=1e-3)


@pytest.mark.parametrize("r,k,want", [(2, 1, 5 / 12), (2, 2, 5 / 3), (3, 1, 11 / 28)])
def test_bifurcation_b_zero_frame_matches_published_speed(r, k, want):
    rep = verify_bifurcation_formulas(r, k, EPS)
    assert rep["fits"]["speed_slope_b_zero"] == pytest.approx(want, rel=0.01)
    assert rep["fits"]["harmonic"] == pytest.approx(k ** r / (4 * (1 - 2.0 ** -r)), rel=0.01)


def test_bifurcation_rejects_bad_amplitudes():
    with pytest.raises(ValueError):
        verify_bifurcation_formulas(2, 1, [0.01, 0.02])

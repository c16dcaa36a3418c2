import math

import numpy as np
import pytest

import gridfilter as gf


def test_chi2_deep_tail_is_empty():
    # u = 20: threshold is far outside anything 1e5 draws will reach
    check = gf.chi2_tail_check(2, 20.0, 100_000, seed=0)
    assert check.empirical == 0.0
    assert check.passed


def test_chi2_moderate_tail():
    check = gf.chi2_tail_check(4, 1.0, 100_000, seed=1)
    assert check.passed
    assert 0.0 < check.empirical < check.bound
    assert check.bound == pytest.approx(math.exp(-1.0))


def test_chi2_tiny_u_is_nearly_vacuous():
    # exp(-0.01) ~ 0.99: essentially every draw is allowed to exceed
    check = gf.chi2_tail_check(1, 0.01, 10_000, seed=2)
    assert check.bound > 0.99
    assert check.passed


def test_chi2_bound_decreases_in_u():
    checks = [gf.chi2_tail_check(2, u, 20_000, seed=3) for u in (0.5, 1.0, 2.0, 5.0)]
    bounds = [c.bound for c in checks]
    assert all(b2 < b1 for b1, b2 in zip(bounds, bounds[1:]))
    assert all(c.passed for c in checks)


def test_chi2_rejects_bad_arguments():
    with pytest.raises(gf.ConfigError):
        gf.chi2_tail_check(0, 1.0, 100)
    with pytest.raises(gf.ConfigError):
        gf.chi2_tail_check(2, -1.0, 100)


def test_gamma_values():
    spec = gf.build_model("gauss_walk")
    c = spec.constants
    expected = 5.0 * c.lambda_sup * (1.0 + c.mu_sup) ** 2
    assert gf.gamma_data(c) == pytest.approx(expected)
    assert gf.gamma_reference() == 5.0
    # the floor kicks in for tiny constants
    small = gf.AssumptionConstants(lambda_inf=1.1, lambda_sup=1.1, mu_sup=0.0,
                                   k_mu=0.0, k_sigma=0.0)
    assert gf.gamma_data(small) == pytest.approx(5.5)


def test_tame_threshold_growth_is_logarithmic():
    v0 = gf.tame_threshold(5.0, 1.0, 2, 0)
    v9 = gf.tame_threshold(5.0, 1.0, 2, 9)
    assert v0 == pytest.approx(10.0)
    assert v9 == pytest.approx(10.0 * (1.0 + math.log(10.0)))


def test_membership_is_strict_at_the_boundary():
    gamma, c_const = 5.0, 1.0
    thr = gf.tame_threshold(gamma, c_const, 1, 0)
    on_boundary = gf.Trajectory(states=np.zeros((1, 1)),
                                observations=np.array([[math.sqrt(thr)]]),
                                seed=0)
    just_inside = gf.Trajectory(states=np.zeros((1, 1)),
                                observations=np.array([[math.sqrt(thr) - 1e-9]]),
                                seed=0)
    assert not gf.omega_hat_membership(on_boundary, c_const, gamma)
    assert gf.omega_hat_membership(just_inside, c_const, gamma)


def test_membership_checks_every_time_step():
    gamma, c_const = 5.0, 1.0
    thr = gf.tame_threshold(gamma, c_const, 2, 4)
    obs = np.zeros((5, 2))
    obs[3, 0] = math.sqrt(thr) + 1.0  # single excursion late in the path
    traj = gf.Trajectory(states=np.zeros((5, 1)), observations=obs, seed=0)
    assert not gf.omega_hat_membership(traj, c_const, gamma)


def test_membership_bound_values():
    # C = 1, N = 2, T = 0: 1 - (0+1+1)... (T+1)^{1-CN} e^{-CN} = e^{-2}
    assert gf.membership_bound(1.0, 2, 0) == pytest.approx(1.0 - math.exp(-2.0))
    # larger CN pushes the floor toward one
    assert gf.membership_bound(1.0, 4, 9) > gf.membership_bound(1.0, 2, 9)
    assert 0.0 < gf.membership_bound(1.0, 2, 9) < 1.0


def test_concentration_experiment_on_demo_model():
    spec = gf.build_model("gauss_walk")
    report = gf.concentration_experiment(spec, 0, 1.0, 30_000, seed=0)
    assert report.passed
    assert report.bound == pytest.approx(1.0 - math.exp(-2.0))
    assert report.empirical_reference >= report.bound - 3 * report._std_err(
        report.empirical_reference)
    # the data-measure threshold is wildly conservative for this model
    assert report.empirical_data == 1.0


def test_concentration_experiment_longer_horizon():
    spec = gf.build_model("gauss_walk")
    report = gf.concentration_experiment(spec, 9, 1.0, 20_000, seed=1)
    assert report.passed
    assert report.horizon == 9


def test_reports_serialize(tmp_path):
    checks = [gf.chi2_tail_check(2, 1.0, 1000, seed=0)]
    reports = [gf.concentration_experiment(gf.build_model("gauss_walk"),
                                           0, 1.0, 2000, seed=0)]
    p1 = tmp_path / "chi2.csv"
    p2 = tmp_path / "conc.csv"
    gf.write_tail_checks(str(p1), checks, meta={"seed": 0})
    gf.write_concentration_reports(str(p2), reports, meta={"seed": 0})
    _, h1, d1 = gf.read_csv(str(p1), numeric=False)
    _, h2, d2 = gf.read_csv(str(p2), numeric=False)
    assert len(d1) == 1 and len(d2) == 1
    assert "empirical" in h1
    assert "bound" in h2

import math

import numpy as np
import pytest

import huberfilt


def test_clean_mean_matches_sample_mean():
    rng = np.random.default_rng(0)
    x = rng.standard_normal((20000, 16)) + 2.0
    mu = huberfilt.robust_mean(x, 0.05)
    assert mu.shape == (16,)
    sm = huberfilt.sample_mean(x)
    assert np.allclose(sm, x.mean(axis=0))
    assert np.linalg.norm(mu - 2.0) <= 2 * np.linalg.norm(sm - 2.0) + 0.05


def test_contaminated_mean_and_report():
    points, labels = huberfilt.gen_mean_instance(16, 40000, 0.1, "point_mass:5", 3)
    assert points.shape == (40000, 16)
    assert labels.shape == (40000,)
    assert int((labels == 0).sum()) > 0
    mu, report = huberfilt.robust_mean(points, 0.1, seed=1, report=True)
    naive = huberfilt.sample_mean(points)
    assert np.linalg.norm(mu) < 0.5 * np.linalg.norm(naive)
    assert report["dim_V"] >= 0
    assert len(report["mu_hat"]) == 16


def test_determinism_and_params():
    points, _ = huberfilt.gen_mean_instance(8, 10000, 0.05, "cluster:3", 5)
    a = huberfilt.robust_mean(points, 0.05, seed=4, params={"c1": 5})
    b = huberfilt.robust_mean(points, 0.05, seed=4, params={"c1": 5})
    assert np.array_equal(a, b)
    with pytest.raises(ValueError):
        huberfilt.robust_mean(points, 0.05, params={"no_such_key": 1})
    with pytest.raises(ValueError):
        huberfilt.robust_mean(points, 0.5)


def test_regression():
    d, eps = 8, 0.05
    beta = np.full(d, eps * math.log(1 / eps) / math.sqrt(d))
    xs, ys, labels = huberfilt.gen_regression_instance(beta, 100000, eps, 1.0, "regression_label_flip", 2)
    assert xs.shape == (100000, d) and ys.shape == (100000,) and labels.shape == (100000,)
    est, report = huberfilt.robust_regression(xs, ys, eps, seed=3, report=True)
    assert np.linalg.norm(est - beta) <= 6 * eps
    assert report["kept_count"] > 0


def test_numerical_error_is_raised():
    xs = np.random.default_rng(1).standard_normal((300, 4))
    ys = np.zeros(300)
    with pytest.raises(huberfilt.NumericalError):
        huberfilt.robust_regression(xs, ys, 0.05)

"""Robust mean and regression estimation under Huber contamination."""

import json

from . import _core
from ._core import NumericalError, gen_mean_instance, gen_regression_instance, sample_mean

__all__ = [
    "NumericalError",
    "gen_mean_instance",
    "gen_regression_instance",
    "robust_mean",
    "robust_regression",
    "sample_mean",
]


def _overrides(params):
    if not params:
        return ""
    return ",".join(f"{k}={v}" for k, v in params.items())


def robust_mean(points, eps, c=0.5, seed=0, params=None, report=False):
    """Robust mean of an (n, d) array; with report=True also returns the run report as a dict."""
    mu, rep = _core.robust_mean(points, eps, c, seed, _overrides(params))
    return (mu, json.loads(rep)) if report else mu


def robust_regression(xs, ys, eps, c=0.5, seed=0, params=None, report=False):
    """Robust regression coefficients; with report=True also returns the run report as a dict."""
    beta, rep = _core.robust_regression(xs, ys, eps, c, seed, _overrides(params))
    return (beta, json.loads(rep)) if report else beta

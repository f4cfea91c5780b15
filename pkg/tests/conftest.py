"""Shared fixtures: the synthetic trivariate truth used by the pipeline
tests and the acceptance suite."""

import numpy as np
import pytest

from mvmatern.kernels import MaternSpec


def make_trivariate_truth():
    """Exponential-model truth satisfying the constant-smoothness CND/PSD
    condition set (variogram-form scale construction, unequal diagonals).

    Returns (spec, nugget); sigma has unit diagonal and moderate cross
    correlations, alpha entries differ by up to ~1.8x.
    """
    eta = np.array([0.21, 0.31, 0.44])
    marks = np.array([0.0, 1.0, 2.0])
    inv_sq = 0.5 * (eta[:, None] + eta[None, :]) + 0.12 * np.abs(
        marks[:, None] - marks[None, :]
    )
    alpha = inv_sq**-0.5
    corr = np.array([[1.0, 0.55, 0.45], [0.55, 1.0, 0.5], [0.45, 0.5, 1.0]])
    sigma = np.sqrt(np.outer(eta, eta)) * corr / inv_sq
    nugget = np.array(
        [[0.15, 0.03, 0.02], [0.03, 0.12, 0.025], [0.02, 0.025, 0.18]]
    )
    spec = MaternSpec(alpha=alpha, nu=np.full((3, 3), 0.5), sigma=sigma, d=2)
    return spec, nugget


@pytest.fixture(scope="session")
def trivariate_truth():
    return make_trivariate_truth()

"""Random generators of parameter sets satisfying each condition set.

Each generator builds the conditionally-negative-semidefinite ingredients
from random Bernstein matrices and then solves the final PSD clause exactly
by element-wise division against a random PSD target, so the produced spec
satisfies its condition set by construction (up to roundoff).  Used by the
randomized soundness suite and available for simulation studies.
"""

from __future__ import annotations

import math

import numpy as np

from .kernels import MaternSpec
from .matrices import BernsteinFn, bernstein_matrix
from .validity import theorem1_exponent


def random_bernstein_fn(rng, constant_range=(0.3, 1.0), budget=1.5):
    """Random nonnegative combination of the supported Bernstein families
    with a positive constant term (so matrices built from it stay positive)."""
    c0 = rng.uniform(*constant_range)
    fns = [BernsteinFn.constant(c0)]
    weights = [1.0]
    pool = [
        BernsteinFn.identity(),
        BernsteinFn.power(rng.uniform(0.3, 1.0)),
        BernsteinFn.log1p(),
        BernsteinFn.ratio(),
        BernsteinFn.exp_saturate(rng.uniform(0.3, 2.0)),
    ]
    k = rng.integers(1, 4)
    raw = rng.uniform(0.1, 1.0, size=k)
    raw *= budget / raw.sum()
    for w, idx in zip(raw, rng.choice(len(pool), size=k, replace=False)):
        fns.append(pool[idx])
        weights.append(float(w))
    return BernsteinFn.combine(weights, fns)


def random_points(rng, p, extent=2.0):
    return rng.uniform(0.0, extent, size=(p, 2))


def random_cnd_positive(rng, p, **kwargs):
    """Random CND matrix with positive entries (a Bernstein matrix)."""
    fn = random_bernstein_fn(rng, **kwargs)
    return bernstein_matrix(fn, random_points(rng, p)).values


def random_psd(rng, p, ridge=0.1):
    g = rng.standard_normal((p, p))
    return g @ g.T / p + ridge * np.eye(p)


def random_corr_nonneg(rng, p):
    """Random correlation matrix with entries in [0, 1]."""
    g = np.abs(rng.standard_normal((p, 4))) + 0.2
    w = g @ g.T
    scale = np.sqrt(np.diag(w))
    return w / np.outer(scale, scale)


def _gammaln(m):
    return np.vectorize(math.lgamma)(m)


def _sigma_for(rng, coef):
    """sigma = W / coef with W random PSD, so sigma o coef is PSD exactly."""
    return random_psd(rng, coef.shape[0]) / coef


def sample_spec(set_id, rng, p, d):
    """Draw a random MaternSpec satisfying ``set_id``.

    Returns ``(spec, hypers)`` where ``hypers`` carries whatever
    hyperparameters the corresponding checker needs (psi, beta, delta/a).
    """
    if set_id == "thm1":
        nu = rng.uniform(0.3, 2.2)
        alpha = random_cnd_positive(rng, p)
        e = theorem1_exponent(d, nu)
        sigma = _sigma_for(rng, alpha ** float(e))
        return MaternSpec(alpha=alpha, nu=np.full((p, p), nu), sigma=sigma, d=d), {}

    if set_id == "thm2A":
        nu = random_cnd_positive(rng, p)
        g = random_cnd_positive(rng, p)  # alpha^{-2}
        alpha = g**-0.5
        coef = np.exp(_gammaln(nu + d / 2.0) - _gammaln(nu) - d * np.log(alpha))
        sigma = _sigma_for(rng, coef)
        return MaternSpec(alpha=alpha, nu=nu, sigma=sigma, d=d), {}

    if set_id == "thm2B":
        nu = random_cnd_positive(rng, p)
        psi = random_cnd_positive(rng, p)
        slack = random_cnd_positive(rng, p, constant_range=(0.0, 0.5), budget=0.8)
        alpha = np.sqrt((nu + slack) / psi)
        coef = np.exp(
            -_gammaln(nu) + (nu + d / 2.0) * np.log(psi)
            + 2.0 * nu * np.log(alpha) - nu
        )
        sigma = _sigma_for(rng, coef)
        return MaternSpec(alpha=alpha, nu=nu, sigma=sigma, d=d), {"psi": psi}

    if set_id == "thm3A":
        nu = random_cnd_positive(rng, p)
        ratio = random_cnd_positive(rng, p)  # nu o alpha^{-2}
        alpha = np.sqrt(nu / ratio)
        coef = np.exp(
            -_gammaln(nu) - d * np.log(alpha) + (nu + d / 2.0) * np.log(nu) - nu
        )
        sigma = _sigma_for(rng, coef)
        return MaternSpec(alpha=alpha, nu=nu, sigma=sigma, d=d), {}

    if set_id == "thm3B":
        nu = random_cnd_positive(rng, p)
        beta = rng.uniform(0.3, 3.0)
        slack = random_cnd_positive(rng, p, constant_range=(0.0, 0.5), budget=0.8)
        alpha = np.sqrt(beta * nu + slack)
        coef = np.exp(-_gammaln(nu) + nu * np.log(alpha**2 / beta) - nu)
        sigma = _sigma_for(rng, coef)
        return MaternSpec(alpha=alpha, nu=nu, sigma=sigma, d=d), {"beta": beta}

    if set_id == "ex1":
        nu = rng.uniform(0.3, 2.5)
        g = random_cnd_positive(rng, p)  # alpha^{-2}
        alpha = g**-0.5
        sigma = _sigma_for(rng, alpha ** (-float(d)))
        return MaternSpec(alpha=alpha, nu=np.full((p, p), nu), sigma=sigma, d=d), {}

    if set_id == "ex2":
        alpha = rng.uniform(0.5, 3.0)
        nu = random_cnd_positive(rng, p)
        coef = np.exp(-_gammaln(nu) + (nu + d / 2.0) * np.log(nu) - nu)
        sigma = _sigma_for(rng, coef)
        return MaternSpec(alpha=np.full((p, p), alpha), nu=nu, sigma=sigma, d=d), {}

    if set_id == "ex3":
        nu = rng.uniform(0.3, 2.5)
        alpha_sq = random_cnd_positive(rng, p)
        alpha = np.sqrt(alpha_sq)
        sigma = _sigma_for(rng, alpha ** (2.0 * nu))
        return MaternSpec(alpha=alpha, nu=np.full((p, p), nu), sigma=sigma, d=d), {}

    if set_id == "apanasovich":
        nu_diag = rng.uniform(0.3, 1.5, size=p)
        delta = rng.uniform(0.0, 1.5)
        a = random_corr_nonneg(rng, p)
        nu = 0.5 * (nu_diag[:, None] + nu_diag[None, :]) + delta * (1.0 - a)
        alpha_sq = random_cnd_positive(rng, p)
        alpha = np.sqrt(alpha_sq)
        exponent = 2.0 * delta + nu_diag[:, None] + nu_diag[None, :]
        coef = np.exp(
            _gammaln(nu + d / 2.0) + exponent * np.log(alpha)
            - _gammaln(nu)
            - _gammaln((nu_diag[:, None] + nu_diag[None, :] + d) / 2.0)
        )
        sigma = _sigma_for(rng, coef)
        return (MaternSpec(alpha=alpha, nu=nu, sigma=sigma, d=d),
                {"delta": delta, "a": a})

    if set_id == "gneiting":
        alpha = rng.uniform(0.5, 3.0)
        nu_diag = rng.uniform(0.3, 2.0, size=p)
        nu = 0.5 * (nu_diag[:, None] + nu_diag[None, :])
        coef = np.exp(
            0.5 * _gammaln(nu_diag)[:, None] + 0.5 * _gammaln(nu_diag)[None, :]
            + _gammaln((nu_diag[:, None] + nu_diag[None, :] + d) / 2.0)
            - 0.5 * _gammaln(nu_diag + d / 2.0)[:, None]
            - 0.5 * _gammaln(nu_diag + d / 2.0)[None, :]
            - _gammaln(nu)
        )
        sigma = _sigma_for(rng, coef)
        return MaternSpec(alpha=np.full((p, p), alpha), nu=nu, sigma=sigma, d=d), {}

    if set_id == "du":
        alpha = rng.uniform(0.5, 3.0)
        nu = random_cnd_positive(rng, p)
        coef = np.exp(_gammaln(nu + d / 2.0) - _gammaln(nu))
        sigma = _sigma_for(rng, coef)
        return MaternSpec(alpha=np.full((p, p), alpha), nu=nu, sigma=sigma, d=d), {}

    raise ValueError(f"no generator for condition set {set_id!r}")

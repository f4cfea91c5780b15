"""Matern and Gaussian covariance kernels, spectral densities, and joint
covariance assembly over site sets."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist

from . import specfun
from .matrices import NotPositiveSemidefiniteError, SymMatrix, _values, is_psd

# Beyond this value of alpha*h the correlation is below ~1e-260; treated as 0.
_LAG_CUTOFF = 600.0
_LN2 = math.log(2.0)


@dataclass(frozen=True)
class SiteSet:
    """Set of n spatial locations in R^d."""

    coords: np.ndarray

    def __post_init__(self):
        arr = np.atleast_2d(np.asarray(self.coords, dtype=float))
        if arr.ndim != 2 or arr.shape[0] < 1:
            raise ValueError("coords must be an (n, d) array with n >= 1")
        if np.any(np.isnan(arr)):
            raise ValueError("coords contain NaN")
        object.__setattr__(self, "coords", arr)

    @property
    def n(self):
        return self.coords.shape[0]

    @property
    def d(self):
        return self.coords.shape[1]

    def distances(self):
        return cdist(self.coords, self.coords)

    @classmethod
    def uniform_random(cls, n, d, extent=10.0, seed=0):
        rng = np.random.default_rng(seed)
        return cls(rng.uniform(0.0, extent, size=(n, d)))


def _spec_matrix(m, p, name, positive):
    arr = SymMatrix(_values(m)).values
    if arr.shape != (p, p):
        raise ValueError(f"{name} must be {p}x{p}, got {arr.shape}")
    if positive and np.any(arr <= 0):
        raise ValueError(f"{name} entries must be positive")
    if np.any(np.isnan(arr)):
        raise ValueError(f"{name} contains NaN")
    return arr


@dataclass(frozen=True)
class MaternSpec:
    """Full parameterization of the p-variate Matern model in R^d.

    ``alpha`` (scales), ``nu`` (smoothnesses) and ``sigma`` (collocated
    covariances) are symmetric p x p matrices; alpha and nu are entry-wise
    positive.
    """

    alpha: np.ndarray
    nu: np.ndarray
    sigma: np.ndarray
    d: int

    def __post_init__(self):
        alpha = np.atleast_2d(np.asarray(self.alpha, dtype=float))
        p = alpha.shape[0]
        object.__setattr__(self, "alpha", _spec_matrix(alpha, p, "alpha", True))
        object.__setattr__(self, "nu", _spec_matrix(self.nu, p, "nu", True))
        object.__setattr__(self, "sigma", _spec_matrix(self.sigma, p, "sigma", False))
        if int(self.d) < 1:
            raise ValueError(f"spatial dimension must be >= 1, got {self.d}")
        object.__setattr__(self, "d", int(self.d))

    @property
    def p(self):
        return self.alpha.shape[0]


@dataclass(frozen=True)
class GaussianSpec:
    """p-variate Gaussian covariance model: entry (i,j) is
    sigma_ij exp(-beta_ij ||h||^2)."""

    beta: np.ndarray
    sigma: np.ndarray
    d: int

    def __post_init__(self):
        beta = np.atleast_2d(np.asarray(self.beta, dtype=float))
        p = beta.shape[0]
        object.__setattr__(self, "beta", _spec_matrix(beta, p, "beta", True))
        object.__setattr__(self, "sigma", _spec_matrix(self.sigma, p, "sigma", False))
        if int(self.d) < 1:
            raise ValueError(f"spatial dimension must be >= 1, got {self.d}")
        object.__setattr__(self, "d", int(self.d))

    @property
    def p(self):
        return self.beta.shape[0]


def matern_corr(h_norm, alpha, nu):
    """Isotropic Matern correlation 2^{1-nu}/Gamma(nu) (a h)^nu K_nu(a h).

    Returns 1 exactly at zero lag and 0 beyond ``alpha * h > 600`` where the
    value is below ~1e-260.  ``h_norm`` may be a scalar or array; half-odd
    integer smoothness (1/2, 3/2, 5/2) uses the closed forms.
    """
    if alpha <= 0 or nu <= 0:
        raise ValueError("alpha and nu must be positive")
    h = np.asarray(h_norm, dtype=float)
    if np.any(h < 0) or np.any(np.isnan(h)):
        raise ValueError("lag must be nonnegative")
    scalar = h.ndim == 0
    t = alpha * np.atleast_1d(h)
    out = np.empty_like(t)
    zero = t == 0.0
    far = t > _LAG_CUTOFF
    mid = ~zero & ~far
    out[zero] = 1.0
    out[far] = 0.0
    if np.any(mid):
        tm = t[mid]
        if nu == 0.5:
            out[mid] = np.exp(-tm)
        elif nu == 1.5:
            out[mid] = np.exp(-tm) * (1.0 + tm)
        elif nu == 2.5:
            out[mid] = np.exp(-tm) * (1.0 + tm + tm * tm / 3.0)
        else:
            lk = specfun.bessel_k_log(nu, tm)
            ln = (1.0 - nu) * _LN2 - math.lgamma(nu) + nu * np.log(tm) + lk
            out[mid] = np.minimum(np.exp(ln), 1.0)
    if scalar:
        return float(out[0])
    return out


def matern_spectral_density(omega_norm, alpha, nu, d):
    """Isotropic spectral density of the Matern correlation in R^d."""
    if alpha <= 0 or nu <= 0:
        raise ValueError("alpha and nu must be positive")
    if d < 1:
        raise ValueError("d must be >= 1")
    w = np.asarray(omega_norm, dtype=float)
    const = math.exp(
        math.lgamma(nu + d / 2.0)
        - math.lgamma(nu)
        - d * math.log(alpha)
        - (d / 2.0) * math.log(math.pi)
    )
    out = const * (1.0 + (w / alpha) ** 2) ** (-nu - d / 2.0)
    return float(out) if w.ndim == 0 else out


def gaussian_corr(h_norm, u):
    """Gaussian correlation exp(-u ||h||^2)."""
    if u <= 0:
        raise ValueError("rate u must be positive")
    h = np.asarray(h_norm, dtype=float)
    out = np.exp(-u * h * h)
    return float(out) if h.ndim == 0 else out


def inv_gamma_mixture_density(u, alpha, nu):
    """Inverse-gamma mixing density linking Gaussian and Matern kernels:
    (1/Gamma(nu)) (alpha/2)^{2 nu} u^{-nu-1} exp(-alpha^2/(4u))."""
    if alpha <= 0 or nu <= 0:
        raise ValueError("alpha and nu must be positive")
    uu = np.asarray(u, dtype=float)
    if np.any(uu <= 0):
        raise ValueError("u must be positive")
    ln = (
        -math.lgamma(nu)
        + 2.0 * nu * math.log(alpha / 2.0)
        - (nu + 1.0) * np.log(uu)
        - alpha**2 / (4.0 * uu)
    )
    with np.errstate(under="ignore"):
        out = np.exp(ln)
    return float(out) if uu.ndim == 0 else out


def _lag_norm(h, d):
    vec = np.atleast_1d(np.asarray(h, dtype=float))
    if vec.shape != (d,):
        raise ValueError(f"lag must be a {d}-vector, got shape {vec.shape}")
    return float(np.linalg.norm(vec))


def multivariate_matern(h, spec):
    """p x p Matern covariance matrix at lag vector ``h``."""
    r = _lag_norm(h, spec.d)
    p = spec.p
    out = np.empty((p, p))
    for i in range(p):
        for j in range(i, p):
            out[i, j] = out[j, i] = spec.sigma[i, j] * matern_corr(
                r, spec.alpha[i, j], spec.nu[i, j]
            )
    return SymMatrix(out)


def multivariate_gaussian(h, spec):
    """p x p Gaussian covariance matrix at lag vector ``h``."""
    r = _lag_norm(h, spec.d)
    return SymMatrix(spec.sigma * np.exp(-spec.beta * r * r))


def spectral_matrix_stack(spec, omega_norms):
    """Stack of spectral density matrices [sigma_ij ktilde_ij(w)].

    Returns an (m, p, p) array over the m frequencies; positive
    semidefiniteness of every slice is the frequency-domain validity
    criterion for the model.
    """
    w = np.asarray(omega_norms, dtype=float)
    p = spec.p
    out = np.empty((w.size, p, p))
    for i in range(p):
        for j in range(i, p):
            dens = spec.sigma[i, j] * matern_spectral_density(
                w, spec.alpha[i, j], spec.nu[i, j], spec.d
            )
            out[:, i, j] = dens
            out[:, j, i] = dens
    return out


def joint_covariance(sites, spec, nugget=None, tol=1e-10):
    """Joint (n p) x (n p) covariance over a site set, site-major ordering.

    Block (i, j) for sites (s, t) is ``K(s - t)_{ij} + V_{ij} 1{s = t}``.
    The nugget must be positive semidefinite.
    """
    if sites.d != spec.d:
        raise ValueError(f"sites have dimension {sites.d}, spec has {spec.d}")
    p = spec.p
    n = sites.n
    if nugget is None:
        nug = np.zeros((p, p))
    else:
        nug = _values(nugget)
        if nug.shape != (p, p):
            raise ValueError(f"nugget must be {p}x{p}, got {nug.shape}")
        verdict = is_psd(nug, tol=tol)
        if not verdict:
            raise NotPositiveSemidefiniteError(
                f"nugget is not positive semidefinite "
                f"(min eigenvalue {verdict.min_eigenvalue:.3e})"
            )
    dists = sites.distances()
    out = np.empty((n, p, n, p))
    for i in range(p):
        for j in range(i, p):
            block = spec.sigma[i, j] * matern_corr(dists, spec.alpha[i, j], spec.nu[i, j])
            out[:, i, :, j] = block
            if i != j:
                out[:, j, :, i] = block
    idx = np.arange(n)
    out[idx, :, idx, :] += nug
    mat = out.reshape(n * p, n * p)
    return 0.5 * (mat + mat.T)

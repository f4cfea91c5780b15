"""Multivariate Matern covariance models: construction, validity-condition
checking, collocated-correlation bounds, and variogram/MCMC fitting."""

from .bounds import EquicorrStructure, RhoMax, example_curve, rho_max
from .geostat import (
    EmpiricalVariogram,
    PipelineParams,
    SpatialDataset,
    WlsFit,
    empirical_variogram,
    fit_mcmc,
    gaussian_loglik,
    nearest_valid,
    normal_scores,
    pool_variograms,
    simulate_field,
    wls_fit_exponential,
)
from .kernels import (
    GaussianSpec,
    MaternSpec,
    SiteSet,
    gaussian_corr,
    inv_gamma_mixture_density,
    joint_covariance,
    matern_corr,
    matern_spectral_density,
    multivariate_gaussian,
    multivariate_matern,
)
from .matrices import (
    BernsteinFn,
    NotPositiveSemidefiniteError,
    PsdVerdict,
    SymMatrix,
    bernstein_matrix,
    hadamard_exp,
    hadamard_inverse,
    hadamard_power,
    hadamard_product,
    is_cnd,
    is_psd,
)
from .mcmc import DicResult, McmcChain, adaptive_mcmc, dic
from .validity import (
    ConditionReport,
    REGISTRY_ORDER,
    SUFFICIENT_SETS,
    format_report,
    run_check,
    spectral_oracle,
)

__version__ = "0.1.0"

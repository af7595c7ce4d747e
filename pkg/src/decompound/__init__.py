"""Nonparametric Bayesian and spectral decompounding on the circle."""

from .grid import AtomicMeasure, CircleGrid, GridFunction, circ_convolve, dft, idft, integrate, reflect
from .model import (
    IncrementSample,
    LevyDensity,
    char_fn,
    deconv_measure,
    increment_law,
    increment_law_series,
    kl_divergence,
    levy_from_log,
    levy_from_values,
    log_likelihood,
    simulate_increments,
)
from .prior import (
    CenterEstimator,
    FunctionalTraces,
    McmcChain,
    McmcConfig,
    MultiscaleConfig,
    PriorConfig,
    bvm_covariance,
    center_estimator,
    check_assumption1,
    choose_J,
    multiscale_norm,
    posterior_functionals,
    run_mcmc,
    sample_prior,
)
from .score import (
    PnuFunction,
    adjoint,
    adjoint_inverse,
    cramer_rao,
    influence,
    lan_expansion_check,
    lan_inner,
    multilinear_score,
    score,
    score_inverse,
)
from .spectral import SpectralConfig, ecf, h_delta_norm, h_delta_norm_fourier, spectral_lambda, spectral_levy
from .wavelets import WaveletBasis, WaveletCoeffs, analyze, localization_bound_check, project_Vj, synthesize

__all__ = [name for name in dir() if not name.startswith("_")]

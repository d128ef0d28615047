"""Spectral analysis of generalized network autoregressive (GNAR) time series."""

from .bench import ExperimentSpec, RmseReport, builtin_models, rmse, run_experiment, run_hierarchy_experiment
from .covsel import ConvergenceError, covariance_selection
from .gfevd import GfevdResult, gfevd, lasso_var, ohlc_pipeline, volatility_network
from .gnar import (
    EstimationError,
    GnarOrder,
    GnarParams,
    fit_ols,
    gnar_bic,
    is_stationary,
    select_order_bic,
    simulate,
    var_coefficients,
)
from .graph import Network, NetworkContext, StageStructure, compute_stages
from .hierarchy import ThresholdLadder, hierarchy, soft_threshold
from .periodogram import SmoothingSpec, constrained_mle, np_spectrum_penalized, parametric_var_penalized
from .spectra import SpectralField, coherence, fourier_grid, gnar_spectrum, partial_coherence, precision, var_spectrum

__version__ = "0.1.0"

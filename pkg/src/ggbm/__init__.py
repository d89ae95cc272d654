"""Simulation and verification toolkit for generalized grey Brownian motion."""

from __future__ import annotations

from .fracops import cov_kernel, cov_matrix, eta_l2_inner, m_indicator
from .sampler import (
    GgbmPath,
    ModelParams,
    PathBatch,
    SeedSpec,
    TimeGrid,
    sample_ggbm,
    sample_paths,
)
from .silt import (
    expected_silt_oracle,
    eps_sweep,
    estimate_silt,
    silt_bound,
    silt_estimate,
    t_transform_factorized,
    t_transform_joint,
)
from .specfun import ml_deriv, ml_eval, mwright_eval, mwright_laplace

__version__ = "0.1.0"

__all__ = [
    "__version__",
    "ModelParams",
    "TimeGrid",
    "SeedSpec",
    "GgbmPath",
    "PathBatch",
    "ml_eval",
    "ml_deriv",
    "mwright_eval",
    "mwright_laplace",
    "m_indicator",
    "cov_kernel",
    "cov_matrix",
    "eta_l2_inner",
    "sample_ggbm",
    "sample_paths",
    "silt_estimate",
    "estimate_silt",
    "expected_silt_oracle",
    "silt_bound",
    "t_transform_factorized",
    "t_transform_joint",
    "eps_sweep",
]

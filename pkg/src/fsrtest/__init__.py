"""Tuning-free test of the factor regression model against factor-augmented sparse alternatives."""

from .bootstrap_test import (
    BootstrapDraws,
    PValueResult,
    TestConfig,
    TestResult,
    bootstrap_draws,
    criterion_q,
    empirical_quantile,
    p_value,
    run_test,
    select_lambda,
)
from .data_io import lag_align, load_panel
from .factor_model import (
    CollinearityError,
    DataError,
    DegenerateEigenspaceWarning,
    FactorDecomposition,
    PanelData,
    decompose,
    estimate_factors,
    estimate_num_factors,
    residualize,
)
from .lasso import DegenerateInputError, LambdaGrid, LassoFit, compute_lambda_bar, fit, fit_path
from .randomness import StreamKey, standard_normal_vector, uniform_vector
from .simulation import RejectionTable, SimulationConfig, generate_panel, run_monte_carlo

__version__ = "0.1.0"

__all__ = [
    "BootstrapDraws",
    "CollinearityError",
    "DataError",
    "DegenerateEigenspaceWarning",
    "DegenerateInputError",
    "FactorDecomposition",
    "LambdaGrid",
    "LassoFit",
    "PValueResult",
    "PanelData",
    "RejectionTable",
    "SimulationConfig",
    "StreamKey",
    "TestConfig",
    "TestResult",
    "bootstrap_draws",
    "compute_lambda_bar",
    "criterion_q",
    "decompose",
    "empirical_quantile",
    "estimate_factors",
    "estimate_num_factors",
    "fit",
    "fit_path",
    "generate_panel",
    "lag_align",
    "load_panel",
    "p_value",
    "residualize",
    "run_monte_carlo",
    "run_test",
    "select_lambda",
    "standard_normal_vector",
    "uniform_vector",
]

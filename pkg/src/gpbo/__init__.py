"""Bayesian optimization with an exact GP surrogate and EI acquisition.

Typical use::

    from gpbo import ParameterSpec, SearchSpace, optimize

    space = SearchSpace([ParameterSpec.range_float("lr", 1e-5, 1e-1, log_scale=True)])
    best, experiment = optimize(space, my_evaluator, minimize=True, total_trials=20, seed=0)
"""

from .acqopt import AcqOptConfig, maximize_acquisition
from .acquisition import (
    AcquisitionSpec,
    ei,
    incumbent_value,
    mc_ei,
    pi,
    scalarize,
    std_normal_cdf,
    std_normal_pdf,
    ucb,
)
from .errors import (
    ConfigError,
    ConfigFileError,
    ConfigParseError,
    ConfigSchemaError,
    DomainError,
    EvaluatorFault,
    GpboError,
    NumericalError,
    NumericsWarning,
    SpaceError,
    UsageError,
)
from .gp import (
    GpHyperparams,
    GpModel,
    KernelSpec,
    MeanSpec,
    PosteriorSummary,
    default_hyperparams,
    factorize,
    fit,
    kernel_eval,
    kernel_matrix,
    make_model,
    mll,
    mll_grad,
    posterior,
    rsample,
)
from .loop import (
    BestResult,
    Experiment,
    GenerationStrategy,
    GeneratorKind,
    NoCompletedTrialsError,
    Trial,
    TrialStatus,
    attach_arm,
    best_result,
    complete_trial,
    fail_trial,
    new_experiment,
    optimize,
    start_trial,
    suggest,
)
from .sobol import SobolEngine, sobol_next
from .space import (
    Arm,
    Observation,
    ParameterSpec,
    SearchSpace,
    Standardizer,
    decode,
    encode,
    fit_standardizer,
    validate_space,
)
from .version import __version__

__all__ = [
    "AcqOptConfig",
    "AcquisitionSpec",
    "Arm",
    "BestResult",
    "ConfigError",
    "ConfigFileError",
    "ConfigParseError",
    "ConfigSchemaError",
    "DomainError",
    "EvaluatorFault",
    "Experiment",
    "GenerationStrategy",
    "GeneratorKind",
    "GpboError",
    "GpHyperparams",
    "GpModel",
    "KernelSpec",
    "MeanSpec",
    "NoCompletedTrialsError",
    "NumericalError",
    "NumericsWarning",
    "Observation",
    "ParameterSpec",
    "PosteriorSummary",
    "SearchSpace",
    "SobolEngine",
    "SpaceError",
    "Standardizer",
    "Trial",
    "TrialStatus",
    "UsageError",
    "attach_arm",
    "best_result",
    "complete_trial",
    "decode",
    "default_hyperparams",
    "ei",
    "encode",
    "fail_trial",
    "factorize",
    "fit",
    "fit_standardizer",
    "incumbent_value",
    "kernel_eval",
    "kernel_matrix",
    "make_model",
    "maximize_acquisition",
    "mc_ei",
    "mll",
    "mll_grad",
    "new_experiment",
    "optimize",
    "pi",
    "posterior",
    "rsample",
    "scalarize",
    "sobol_next",
    "start_trial",
    "std_normal_cdf",
    "std_normal_pdf",
    "suggest",
    "ucb",
    "validate_space",
    "__version__",
]

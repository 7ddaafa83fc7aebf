"""Hierarchical Bayesian model of protected-word / attribute cosine distances."""
from .compare import ComparisonReport, ParameterShift, StructureMismatch, compare
from .diagnostics import ess_bulk, split_rhat
from .hpdi import Hpdi, hpdi, hpdi_rows
from .model import (CellStats, ModelSpec, ParameterVector, bar_conditional, coef_conditional,
                    log_likelihood, log_posterior, log_prior, parameter_names)
from .posterior import Posterior, summarize
from .ppc import PpcResult, posterior_predictive_check
from .sampler import McmcConfig, fit

__all__ = [
    "CellStats", "ComparisonReport", "Hpdi", "McmcConfig", "ModelSpec", "ParameterShift",
    "ParameterVector", "Posterior", "PpcResult", "StructureMismatch", "bar_conditional",
    "coef_conditional", "compare", "ess_bulk", "fit", "hpdi", "hpdi_rows", "log_likelihood",
    "log_posterior", "log_prior", "parameter_names", "posterior_predictive_check",
    "split_rhat", "summarize",
]

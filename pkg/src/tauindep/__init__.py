"""Kendall-tau tests of total independence for data with missing values."""
from .engine import StatisticKind, TestResult, estimate_q, normal_sf, run_test, statistic
from .errors import (DegenerateError, DomainError, InputError, PreconditionError,
                     TauIndepError, UnsupportedConfigurationError)
from .kernels import (ObservedMatrix, PairAccumulator, kendall_tau, pair_accumulator,
                      sign_kernel, tau_cc, tau_tilde, u_stat_pair)
from .moments import MissProfile, total_missingness_rate

__all__ = [
    "DegenerateError", "DomainError", "InputError", "MissProfile", "ObservedMatrix",
    "PairAccumulator", "PreconditionError", "StatisticKind", "TauIndepError", "TestResult",
    "UnsupportedConfigurationError", "estimate_q", "kendall_tau", "normal_sf",
    "pair_accumulator", "run_test", "sign_kernel", "statistic", "tau_cc", "tau_tilde",
    "total_missingness_rate", "u_stat_pair",
]
__version__ = "0.1.0"

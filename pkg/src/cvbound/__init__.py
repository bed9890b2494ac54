"""Rademacher upper bounds for K-fold cross-validation errors."""
from .bounds import BoundReport, autocov_V, cv_bound, dependent_chebyshev, kappa, round_bound, varsigma
from .complexity import RcEstimate, empirical_rademacher, one_round_rc
from .cv import (EmpiricalModelClass, KcvResult, empirical_class_from_bootstrap,
                 empirical_class_from_kcv, kcv_path, run_kcv)
from .data import DataError, DgpConfig, FoldAssignment, Sample, generate_dgp, load_sample, partition_folds
from .lasso import CoefficientVector, SolverOptions, fit_lasso, lasso_path, loss_per_point
from .mixing import MixingError, MixingParams, build_blocks, geometric_beta, mixing_cv_bound
from .tails import (TailParams, estimate_theta, estimate_variance_proxy, orlicz_norm,
                    resolve_tail_params, rho_samples)

__version__ = "0.1.0"

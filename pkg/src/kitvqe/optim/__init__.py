"""Classical optimizer suite: local and non-local methods with exact
evaluation accounting, plus multi-start orchestration."""

from .anneal import AnnealConfig, dual_annealing
from .base import BudgetExhausted, CountingCost, OptResult
from .bfgs import BFGSConfig, quasi_newton_fd
from .cma import CMAConfig, cma_es, default_population
from .multistart import (MixedStrategyConfig, MixedStrategyResult,
                         MultiStartConfig, MultiStartResult, anneal_runner,
                         bfgs_runner, cma_runner, mixed_strategy, multistart,
                         resample_error_vs_restarts, spsa_runner, trust_runner)
from .spsa import SPSAConfig, spsa
from .trust import TrustRegionConfig, model_trust_region, point_count

__all__ = [
    "AnnealConfig", "BFGSConfig", "BudgetExhausted", "CMAConfig",
    "CountingCost", "MixedStrategyConfig", "MixedStrategyResult",
    "MultiStartConfig", "MultiStartResult", "OptResult", "SPSAConfig",
    "TrustRegionConfig", "anneal_runner", "bfgs_runner", "cma_es",
    "cma_runner", "default_population", "dual_annealing", "mixed_strategy",
    "model_trust_region", "multistart", "point_count", "quasi_newton_fd",
    "resample_error_vs_restarts", "spsa", "spsa_runner", "trust_runner",
]

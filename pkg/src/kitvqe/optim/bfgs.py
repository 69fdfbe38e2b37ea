"""Quasi-Newton local optimizer with finite-difference gradients.

Thin wrapper over scipy's BFGS: forward differences cost n + 1
evaluations per gradient and count like any other evaluation, so budget
enforcement happens inside the cost wrapper, not scipy.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.optimize

from .base import BudgetExhausted, OptResult, wrap_cost


@dataclass(frozen=True)
class BFGSConfig:
    max_evals: int = 100_000
    fd_step: float = 1e-8     # forward-difference probe size
    gtol: float = 1e-8
    max_iterations: int | None = None


def quasi_newton_fd(cost, theta0: np.ndarray, config: BFGSConfig) -> OptResult:
    theta0 = np.asarray(theta0, dtype=np.float64)
    counted = wrap_cost(cost, theta0.size, config.max_evals)
    options = {"gtol": config.gtol, "eps": config.fd_step}
    if config.max_iterations is not None:
        options["maxiter"] = config.max_iterations
    try:
        res = scipy.optimize.minimize(counted, theta0, method="BFGS",
                                      jac=None, options=options)
    except BudgetExhausted:
        return counted.result("eval-cutoff")
    if (config.max_iterations is not None
            and res.nit >= config.max_iterations and not res.success):
        return counted.result("iteration-cutoff")
    # line-search failure / precision loss terminate as converged-or-stalled
    return counted.result("converged")

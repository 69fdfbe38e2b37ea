"""Multi-start orchestration and the mixed two-optimizer strategy.

Restart r draws its initial point and its optimizer randomness from a
dedicated stream spawned from the master seed, so runs are reproducible
and order-independent.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable, Sequence

import numpy as np

from .anneal import AnnealConfig, dual_annealing
from .base import OptResult
from .bfgs import BFGSConfig, quasi_newton_fd
from .cma import CMAConfig, cma_es
from .spsa import SPSAConfig, spsa
from .trust import TrustRegionConfig, model_trust_region

# runner contract: (cost, theta0, rng, max_evals or None) -> OptResult
Runner = Callable[[Callable, np.ndarray, np.random.Generator, int | None], OptResult]


@dataclass(frozen=True)
class MultiStartConfig:
    restarts: int
    n: int                                  # parameter count
    init_low: float = -np.pi
    init_high: float = np.pi
    per_restart_evals: int | None = None
    global_evals: int | None = None

    def __post_init__(self):
        if self.restarts < 1:
            raise ValueError("restart count must be >= 1")
        if self.n < 1:
            raise ValueError("parameter count must be >= 1")
        for cut in (self.per_restart_evals, self.global_evals):
            if cut is not None and cut < 1:
                raise ValueError("eval cutoffs must be positive")


@dataclass(frozen=True)
class MultiStartResult:
    best: OptResult
    results: tuple[OptResult, ...]
    mean_evals: float
    max_evals: int


def multistart(optimizer: Runner, cost_factory: Callable[[], Callable],
               msconfig: MultiStartConfig,
               master_seed: int | np.random.SeedSequence,
               on_restart: Callable[[int, OptResult], None] | None = None,
               completed: dict[int, OptResult] | None = None
               ) -> MultiStartResult:
    """``completed`` maps restart index to an already-finished result
    (checkpoint resume): those restarts are not re-run but still count
    toward the global budget.  ``on_restart`` fires after each fresh
    restart; restart streams are index-keyed, so a resumed run
    reproduces the interrupted one exactly."""
    ss = (master_seed if isinstance(master_seed, np.random.SeedSequence)
          else np.random.SeedSequence(master_seed))
    streams = ss.spawn(msconfig.restarts)
    completed = completed or {}
    results: list[OptResult] = []
    spent = 0
    for r in range(msconfig.restarts):
        budget = msconfig.per_restart_evals
        if msconfig.global_evals is not None:
            left = msconfig.global_evals - spent
            if left < 1:
                break
            budget = left if budget is None else min(budget, left)
        if r in completed:
            res = completed[r]
        else:
            rng = np.random.default_rng(streams[r])
            theta0 = rng.uniform(msconfig.init_low, msconfig.init_high, msconfig.n)
            res = optimizer(cost_factory(), theta0, rng, budget)
            if on_restart is not None:
                on_restart(r, res)
        results.append(res)
        spent += res.evaluations
    evals = [r.evaluations for r in results]
    best = min(results, key=lambda r: r.best_value)
    return MultiStartResult(best, tuple(results),
                            float(np.mean(evals)), int(np.max(evals)))


@dataclass(frozen=True)
class MixedStrategyConfig:
    trust_ms: MultiStartConfig
    cma_ms: MultiStartConfig
    trust: TrustRegionConfig = TrustRegionConfig()
    cma: CMAConfig = CMAConfig()
    master_seed: int = 0


@dataclass(frozen=True)
class MixedStrategyResult:
    best: OptResult
    trust_branch: MultiStartResult
    cma_branch: MultiStartResult


def trust_runner(config: TrustRegionConfig) -> Runner:
    def run(cost, theta0, rng, max_evals):
        cfg = config if max_evals is None else replace(config, max_evals=max_evals)
        return model_trust_region(cost, theta0, cfg)
    return run


def cma_runner(config: CMAConfig) -> Runner:
    def run(cost, theta0, rng, max_evals):
        cfg = config if max_evals is None else replace(config, max_evals=max_evals)
        return cma_es(cost, theta0, cfg, rng)
    return run


def spsa_runner(config: SPSAConfig) -> Runner:
    def run(cost, theta0, rng, max_evals):
        cfg = config if max_evals is None else replace(config, max_evals=max_evals)
        return spsa(cost, theta0, cfg, rng)
    return run


def anneal_runner(config: AnnealConfig) -> Runner:
    def run(cost, theta0, rng, max_evals):
        cfg = config if max_evals is None else replace(config, max_evals=max_evals)
        return dual_annealing(cost, theta0, cfg, rng)
    return run


def bfgs_runner(config: BFGSConfig) -> Runner:
    def run(cost, theta0, rng, max_evals):
        cfg = config if max_evals is None else replace(config, max_evals=max_evals)
        return quasi_newton_fd(cost, theta0, cfg)
    return run


def mixed_strategy(cost_factory: Callable[[], Callable],
                   config: MixedStrategyConfig,
                   on_restart: Callable[[str, int, OptResult], None] | None = None,
                   completed: dict[str, dict[int, OptResult]] | None = None
                   ) -> MixedStrategyResult:
    branch_seeds = np.random.SeedSequence(config.master_seed).spawn(2)
    completed = completed or {}
    hooks = {
        branch: (None if on_restart is None
                 else (lambda r, res, _b=branch: on_restart(_b, r, res)))
        for branch in ("trust", "cma")
    }
    trust_res = multistart(trust_runner(config.trust), cost_factory,
                           config.trust_ms, branch_seeds[0],
                           hooks["trust"], completed.get("trust"))
    cma_res = multistart(cma_runner(config.cma), cost_factory,
                         config.cma_ms, branch_seeds[1],
                         hooks["cma"], completed.get("cma"))
    best = min([trust_res.best, cma_res.best], key=lambda r: r.best_value)
    return MixedStrategyResult(best, trust_res, cma_res)


def resample_error_vs_restarts(per_restart_results: Sequence[OptResult],
                               k_values: Sequence[int], trials: int,
                               rng: np.random.Generator,
                               reference: float = 0.0
                               ) -> tuple[tuple[int, float], ...]:
    """Mean over `trials` random K-subsets of the subset-minimum best
    value (minus `reference`), for each K."""
    pool = np.array([r.best_value for r in per_restart_results])
    if trials < 1:
        raise ValueError("trials must be >= 1")
    curve = []
    for k in k_values:
        if not (1 <= k <= pool.size):
            raise ValueError(f"K={k} exceeds the {pool.size} available restarts")
        mins = np.empty(trials)
        for t in range(trials):
            mins[t] = pool[rng.choice(pool.size, size=k, replace=False)].min()
        curve.append((int(k), float(mins.mean() - reference)))
    return tuple(curve)

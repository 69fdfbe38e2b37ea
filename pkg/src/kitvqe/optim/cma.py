"""Covariance-matrix-adaptation evolution strategy.

Rank-one and rank-mu covariance updates with cumulative step-size
control, default population 4 + floor(3 ln n).  Stops on incumbent
stagnation, the evaluation budget, or covariance degeneration (which
restarts the strategy from the incumbent inside the same budget).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .base import BudgetExhausted, OptResult, wrap_cost


@dataclass(frozen=True)
class CMAConfig:
    max_evals: int = 50_000
    sigma0: float = 0.5
    population: int | None = None    # None -> 4 + floor(3 ln n)
    stagnation_tol: float = 1e-9
    stagnation_window: int | None = None  # evaluations; None -> 20 n
    max_generations: int | None = None
    condition_limit: float = 1e14


def default_population(n: int) -> int:
    return 4 + int(np.floor(3.0 * np.log(n)))


def cma_es(cost, theta0: np.ndarray, config: CMAConfig,
           rng: np.random.Generator) -> OptResult:
    theta0 = np.asarray(theta0, dtype=np.float64)
    n = theta0.size
    counted = wrap_cost(cost, n, config.max_evals)
    lam = config.population or default_population(n)
    if lam < 2:
        raise ValueError("population must be >= 2")
    mu = lam // 2
    w = np.log((lam + 1) / 2.0) - np.log(np.arange(1, mu + 1))
    w /= w.sum()
    mueff = 1.0 / np.sum(w ** 2)

    csig = (mueff + 2.0) / (n + mueff + 5.0)
    dsig = 1.0 + 2.0 * max(0.0, np.sqrt((mueff - 1.0) / (n + 1.0)) - 1.0) + csig
    cc = (4.0 + mueff / n) / (n + 4.0 + 2.0 * mueff / n)
    c1 = 2.0 / ((n + 1.3) ** 2 + mueff)
    cmu = min(1.0 - c1, 2.0 * (mueff - 2.0 + 1.0 / mueff) / ((n + 2.0) ** 2 + mueff))
    chi_n = np.sqrt(n) * (1.0 - 1.0 / (4.0 * n) + 1.0 / (21.0 * n ** 2))
    # eigendecomposition cadence in generations (amortizes the n^3 cost)
    eig_gap = max(1, int(n / (10.0 * (c1 + cmu) * lam)))

    # low-dimensional valleys keep the incumbent flat for ~100 evaluations
    # while the mean still descends, so the window never drops below 120
    window = config.stagnation_window or max(20 * n, 120)

    def reset_state(center: np.ndarray):
        return {
            "m": center.copy(), "sigma": config.sigma0,
            "cov": np.eye(n), "psig": np.zeros(n), "pc": np.zeros(n),
            "basis": np.eye(n), "scale": np.ones(n), "since_eig": 0,
        }

    st = reset_state(theta0)
    gen = 0
    mark_evals = 0
    mark_value = np.inf
    reason = "iteration-cutoff"
    try:
        while config.max_generations is None or gen < config.max_generations:
            if counted.evaluations >= config.max_evals:
                reason = "eval-cutoff"
                break
            z = rng.standard_normal((lam, n))
            y = (z * st["scale"]) @ st["basis"].T
            x = st["m"] + st["sigma"] * y
            vals = np.empty(lam)
            for i in range(lam):
                vals[i] = counted(x[i])
            order = np.argsort(vals, kind="stable")
            y_sel = y[order[:mu]]
            y_w = w @ y_sel
            st["m"] = st["m"] + st["sigma"] * y_w

            inv_sqrt = st["basis"] @ ((st["basis"] / st["scale"]).T)
            st["psig"] = ((1.0 - csig) * st["psig"]
                          + np.sqrt(csig * (2.0 - csig) * mueff) * (inv_sqrt @ y_w))
            gen += 1
            h_norm = np.linalg.norm(st["psig"]) / np.sqrt(
                1.0 - (1.0 - csig) ** (2.0 * gen))
            h_sig = 1.0 if h_norm < (1.4 + 2.0 / (n + 1.0)) * chi_n else 0.0
            st["pc"] = ((1.0 - cc) * st["pc"]
                        + h_sig * np.sqrt(cc * (2.0 - cc) * mueff) * y_w)
            delta_h = (1.0 - h_sig) * cc * (2.0 - cc)
            rank_mu = (y_sel * w[:, None]).T @ y_sel
            st["cov"] = ((1.0 - c1 - cmu) * st["cov"]
                         + c1 * (np.outer(st["pc"], st["pc"]) + delta_h * st["cov"])
                         + cmu * rank_mu)
            st["sigma"] *= np.exp((csig / dsig)
                                  * (np.linalg.norm(st["psig"]) / chi_n - 1.0))

            st["since_eig"] += 1
            if st["since_eig"] >= eig_gap:
                st["since_eig"] = 0
                st["cov"] = (st["cov"] + st["cov"].T) / 2.0
                evals_c, basis = np.linalg.eigh(st["cov"])
                st["scale"] = np.sqrt(np.clip(evals_c, 1e-30, None))
                st["basis"] = basis

            degenerate = (not np.isfinite(st["sigma"])
                          or not np.all(np.isfinite(st["cov"]))
                          or st["scale"].max() / st["scale"].min() > np.sqrt(config.condition_limit)
                          or st["sigma"] > 1e12 or st["sigma"] < 1e-14)
            if degenerate:
                st = reset_state(counted.best_theta)

            if counted.evaluations - mark_evals >= window:
                if counted.best_value > mark_value - config.stagnation_tol:
                    reason = "converged"
                    break
                mark_evals = counted.evaluations
                mark_value = counted.best_value
    except BudgetExhausted:
        reason = "eval-cutoff"
    return counted.result(reason)

"""Generalized simulated annealing over a bound box.

Distorted Cauchy-Lorentz visiting distribution with visiting parameter
q_v and Tsallis acceptance with parameter q_a, re-annealing when the
temperature collapses, and periodic local refinement of the incumbent by
the model trust-region optimizer.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .base import BudgetExhausted, OptResult, wrap_cost
from .trust import TrustRegionConfig, model_trust_region

_TAIL_LIMIT = 1e8


@dataclass(frozen=True)
class AnnealConfig:
    max_evals: int = 100_000
    bounds_low: float = -np.pi
    bounds_high: float = np.pi
    initial_temp: float = 5230.0
    qv: float = 2.62               # visiting-distribution distortion
    qa: float = -5.0               # acceptance distortion
    restart_temp_ratio: float = 2e-5
    refine_every: int = 25         # outer temperature steps between refinements
    refine_budget: int | None = None   # None -> 60 * (n + 1)
    refine_radius: float = 0.25


def _visit_scale(qv: float, temperature: float) -> float:
    # closed-form width of the Tsallis visiting distribution
    factor2 = math.exp((4.0 - qv) * math.log(qv - 1.0))
    factor3 = math.exp((2.0 - qv) * math.log(2.0) / (qv - 1.0))
    factor4 = math.sqrt(math.pi) * factor2 / (factor3 * (3.0 - qv))
    factor5 = 1.0 / (qv - 1.0) - 0.5
    d1 = 2.0 - factor5
    factor6 = math.pi * (1.0 - factor5) / math.sin(math.pi * (1.0 - factor5)) \
        / math.exp(math.lgamma(d1))
    sigmax = math.exp(-(qv - 1.0) * math.log(factor6 / factor4) / (3.0 - qv))
    return sigmax * math.exp(-(qv - 1.0) * math.log(temperature) / (3.0 - qv))


def _visit(rng: np.random.Generator, qv: float, temperature: float,
           size: int) -> np.ndarray:
    sigmax = _visit_scale(qv, temperature)
    x = sigmax * rng.standard_normal(size)
    y = rng.standard_normal(size)
    den = np.exp((qv - 1.0) * np.log(np.abs(y) + 1e-300) / (3.0 - qv))
    visit = x / den
    big = np.abs(visit) > _TAIL_LIMIT
    if np.any(big):
        visit[big] = _TAIL_LIMIT * (rng.random(int(big.sum())) * 2.0 - 1.0)
    return visit


def _wrap_into_box(x: np.ndarray, lb: np.ndarray, rng_width: np.ndarray) -> np.ndarray:
    return lb + np.mod(x - lb, rng_width)


def dual_annealing(cost, theta0: np.ndarray, config: AnnealConfig,
                   rng: np.random.Generator) -> OptResult:
    theta0 = np.asarray(theta0, dtype=np.float64)
    n = theta0.size
    lb = np.broadcast_to(np.asarray(config.bounds_low, dtype=np.float64), (n,)).copy()
    ub = np.broadcast_to(np.asarray(config.bounds_high, dtype=np.float64), (n,)).copy()
    if np.any(lb >= ub):
        raise ValueError("bounds box is empty")
    width = ub - lb
    counted = wrap_cost(cost, n, config.max_evals)
    qv, qa = config.qv, config.qa
    t1 = math.exp((qv - 1.0) * math.log(2.0)) - 1.0
    refine_budget = config.refine_budget or 60 * (n + 1)
    reason = "eval-cutoff"

    def refine(x: np.ndarray) -> None:
        budget = int(min(refine_budget, counted.remaining))
        if budget <= max(2 * n + 1, 3):
            raise BudgetExhausted("no room for refinement")
        tr = TrustRegionConfig(
            max_evals=budget, bounds_low=lb, bounds_high=ub, mode="standard",
            initial_radius=config.refine_radius, final_radius=1e-9)
        model_trust_region(counted, x, tr)

    try:
        x_cur = np.clip(theta0, lb, ub)
        e_cur = counted(x_cur)
        step = 0
        best_at_refine = np.inf
        while True:
            t_factor = math.exp((qv - 1.0) * math.log(2.0 + step)) - 1.0
            temperature = config.initial_temp * t1 / t_factor
            if temperature < config.restart_temp_ratio * config.initial_temp:
                step = 0          # re-anneal from a fresh box point
                x_cur = lb + rng.random(n) * width
                e_cur = counted(x_cur)
                continue
            t_accept = temperature / (step + 1.0)
            for move in range(2 * n):
                if move < n:
                    delta = _visit(rng, qv, temperature, n)
                    x_new = _wrap_into_box(x_cur + delta, lb, width)
                else:
                    x_new = x_cur.copy()
                    d = _visit(rng, qv, temperature, 1)[0]
                    i = move - n
                    x_new[i] = lb[i] + math.fmod(x_new[i] + d - lb[i], width[i])
                    if x_new[i] < lb[i]:
                        x_new[i] += width[i]
                e_new = counted(x_new)
                de = e_new - e_cur
                if de <= 0.0:
                    x_cur, e_cur = x_new, e_new
                else:
                    pqa = 1.0 - (1.0 - qa) * de / max(t_accept, 1e-300)
                    if pqa > 0.0 and rng.random() < pqa ** (1.0 / (1.0 - qa)):
                        x_cur, e_cur = x_new, e_new
            step += 1
            if (step % config.refine_every == 0
                    and counted.best_value < best_at_refine - 1e-12):
                best_at_refine = counted.best_value
                refine(counted.best_theta.copy())
    except BudgetExhausted:
        pass
    return counted.result(reason)

"""Shared optimizer plumbing: evaluation accounting and results.

Every optimizer in this package reports evaluation counts through
:class:`CountingCost`, so "total evaluations" always means calls of the
underlying evaluator, including finite-difference probes and rejected
trial points.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np


class BudgetExhausted(Exception):
    """Evaluation budget ran out; optimizers catch this and return the
    incumbent with reason ``eval-cutoff``."""


REASONS = ("converged", "eval-cutoff", "iteration-cutoff")


@dataclass(frozen=True)
class OptResult:
    best_theta: tuple[float, ...]
    best_value: float
    evaluations: int
    # (evaluation index, incumbent value) recorded at each improvement
    trajectory: tuple[tuple[int, float], ...]
    reason: str

    def __post_init__(self):
        if self.reason not in REASONS:
            raise ValueError(f"reason must be one of {REASONS}, got {self.reason!r}")
        vals = [v for _, v in self.trajectory]
        if any(b > a for a, b in zip(vals, vals[1:])):
            raise ValueError("incumbent trajectory must be nonincreasing")


class CountingCost:
    """Counts evaluator calls exactly once per call and tracks the
    incumbent.  ``max_evals`` makes the next call past the budget raise
    :class:`BudgetExhausted` before touching the evaluator."""

    def __init__(self, fn: Callable[[np.ndarray], float], n: int,
                 max_evals: int | None = None):
        if n < 1:
            raise ValueError("parameter count must be >= 1")
        if max_evals is not None and max_evals < 1:
            raise ValueError("max_evals must be positive")
        self.fn = fn
        self.n = int(n)
        self.max_evals = max_evals
        self.evaluations = 0
        self.best_theta: np.ndarray | None = None
        self.best_value = np.inf
        self.trajectory: list[tuple[int, float]] = []

    def __call__(self, theta: np.ndarray) -> float:
        if self.max_evals is not None and self.evaluations >= self.max_evals:
            raise BudgetExhausted(f"budget of {self.max_evals} evaluations spent")
        theta = np.asarray(theta, dtype=np.float64)
        if theta.shape != (self.n,):
            raise ValueError(f"theta has shape {theta.shape}, expected ({self.n},)")
        self.evaluations += 1
        value = float(self.fn(theta))
        if value < self.best_value:
            self.best_value = value
            self.best_theta = theta.copy()
            self.trajectory.append((self.evaluations, value))
        return value

    @property
    def remaining(self) -> float:
        if self.max_evals is None:
            return np.inf
        return self.max_evals - self.evaluations

    def result(self, reason: str) -> OptResult:
        if self.best_theta is None:
            raise RuntimeError("no evaluations recorded")
        return OptResult(tuple(float(x) for x in self.best_theta),
                         self.best_value, self.evaluations,
                         tuple(self.trajectory), reason)


def wrap_cost(fn: Callable, n: int, max_evals: int | None) -> CountingCost:
    """Optimizers always count through their own wrapper; a CountingCost
    passed in keeps counting globally underneath (its budget, if any,
    surfaces as the same BudgetExhausted)."""
    return CountingCost(fn, n, max_evals)

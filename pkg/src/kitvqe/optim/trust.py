"""Derivative-free trust-region optimizer over a bound box.

Quadratic models come from minimum-Frobenius-norm interpolation on a
point set of configurable size: 2n+1 (standard) or (n+1)(n+2)/2 (noisy
mode, which trades evaluations for a model that is far less sensitive to
stochastic cost values).  Steps approximately minimize the model inside
the trust region via Steihaug conjugate gradients, then are clipped into
the box.  Degenerate interpolation geometry triggers a point-replacing
geometry step instead of a model step.

Noisy mode also re-evaluates the incumbent whenever a step is rejected
and averages the fresh value in before deciding to shrink.  Without the
refresh a single lucky low sample becomes a permanent hurdle that every
later candidate is measured against, and the radius collapses long
before the search reaches a minimum.  For the same reason the radius
obeys a staged floor: stochastic rejections cannot drive it below the
current stage, and the stage halves only after fifteen floored rejections
in a row, so shot noise costs the search patience instead of progress.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .base import BudgetExhausted, OptResult, wrap_cost


@dataclass(frozen=True)
class TrustRegionConfig:
    max_evals: int = 100_000
    bounds_low: float = -np.pi
    bounds_high: float = np.pi
    mode: str = "standard"          # "standard" (2n+1) | "noisy" ((n+1)(n+2)/2)
    initial_radius: float = 0.5
    final_radius: float = 1e-8
    max_iterations: int | None = None


def point_count(n: int, mode: str) -> int:
    if mode == "standard":
        return 2 * n + 1
    if mode == "noisy":
        return (n + 1) * (n + 2) // 2
    raise ValueError(f"mode must be standard|noisy, got {mode!r}")


def _initial_points(x0: np.ndarray, radius: float, lb: np.ndarray,
                    ub: np.ndarray, mode: str) -> np.ndarray:
    n = x0.size
    pts = [x0]
    first_step = np.empty(n)
    for i in range(n):
        up = min(radius, ub[i] - x0[i])
        down = min(radius, x0[i] - lb[i])
        a = up if up >= down else -down
        b = -down if up >= down else up
        if abs(b) < 1e-12 * radius:               # box too thin on one side
            b = a / 2.0
        first_step[i] = a
        for step in (a, b):
            p = x0.copy()
            p[i] += step
            pts.append(p)
    if mode == "noisy":
        scale = radius / np.sqrt(2.0)
        for i in range(n):
            si = np.sign(first_step[i]) * min(scale, abs(first_step[i]))
            for j in range(i + 1, n):
                sj = np.sign(first_step[j]) * min(scale, abs(first_step[j]))
                p = x0.copy()
                p[i] += si
                p[j] += sj
                pts.append(p)
    return np.asarray(pts)


def _fit_model(shifts: np.ndarray, fvals: np.ndarray, ridge: float = 0.0):
    """Min-Frobenius-norm quadratic through (shifts, fvals).

    Returns (c, g, lam) with H = sum_i lam_i s_i s_i^T, or None when the
    KKT system is numerically degenerate.  A positive ridge relaxes exact
    interpolation into a smoothed fit that stays solvable (and averages
    stochastic cost values) when the point geometry is poor."""
    p, n = shifts.shape
    gram = shifts @ shifts.T
    a = 0.5 * gram ** 2
    if ridge > 0.0:
        a = a + (ridge * max(1.0, np.trace(a) / p)) * np.eye(p)
    pmat = np.concatenate([np.ones((p, 1)), shifts], axis=1)
    kkt = np.zeros((p + n + 1, p + n + 1))
    kkt[:p, :p] = a
    kkt[:p, p:] = pmat
    kkt[p:, :p] = pmat.T
    rhs = np.concatenate([fvals, np.zeros(n + 1)])
    try:
        sol = np.linalg.solve(kkt, rhs)
    except np.linalg.LinAlgError:
        return None
    if not np.all(np.isfinite(sol)):
        return None
    if ridge == 0.0:
        resid = np.abs(a @ sol[:p] + pmat @ sol[p:] - fvals).max()
        scale = max(1.0, np.abs(fvals).max())
        if resid > 1e-6 * scale:
            return None
    return sol[p], sol[p + 1:], sol[:p]


def _steihaug(g: np.ndarray, hmul, radius: float, max_iter: int) -> np.ndarray:
    s = np.zeros_like(g)
    r = -g.copy()
    d = r.copy()
    rr = float(r @ r)
    if np.sqrt(rr) < 1e-14:
        return s
    for _ in range(max_iter):
        hd = hmul(d)
        dhd = float(d @ hd)
        if dhd <= 1e-14 * float(d @ d):      # negative curvature: go to edge
            return s + _to_boundary(s, d, radius) * d
        alpha = rr / dhd
        s_next = s + alpha * d
        if np.linalg.norm(s_next) >= radius:
            return s + _to_boundary(s, d, radius) * d
        s = s_next
        r = r - alpha * hd
        rr_next = float(r @ r)
        if np.sqrt(rr_next) < 1e-12:
            break
        d = r + (rr_next / rr) * d
        rr = rr_next
    return s


def _to_boundary(s: np.ndarray, d: np.ndarray, radius: float) -> float:
    # positive tau with ||s + tau d|| = radius
    dd = float(d @ d)
    sd = float(s @ d)
    ss = float(s @ s)
    disc = max(sd * sd + dd * (radius * radius - ss), 0.0)
    return (-sd + np.sqrt(disc)) / max(dd, 1e-300)


def model_trust_region(cost, theta0: np.ndarray,
                       config: TrustRegionConfig) -> OptResult:
    theta0 = np.asarray(theta0, dtype=np.float64)
    n = theta0.size
    point_count(n, config.mode)
    noisy = config.mode == "noisy"
    lb = np.broadcast_to(np.asarray(config.bounds_low, dtype=np.float64), (n,)).copy()
    ub = np.broadcast_to(np.asarray(config.bounds_high, dtype=np.float64), (n,)).copy()
    if np.any(lb >= ub):
        raise ValueError("bounds box is empty")
    counted = wrap_cost(cost, n, config.max_evals)
    x0 = np.clip(theta0, lb, ub)
    radius = config.initial_radius
    radius_max = 10.0 * config.initial_radius

    try:
        pts = _initial_points(x0, radius, lb, ub, config.mode)
        fvals = np.array([counted(p) for p in pts])
    except BudgetExhausted:
        return counted.result("eval-cutoff")

    geom_cycle = 0
    floor = config.initial_radius / 10.0
    floor_rejects = 0
    reason = "iteration-cutoff"
    iteration = 0
    try:
        while config.max_iterations is None or iteration < config.max_iterations:
            iteration += 1
            if radius < config.final_radius:
                reason = "converged"
                break
            best = int(np.argmin(fvals))
            center = pts[best]
            shifts = (pts - center) / radius
            norms = np.linalg.norm(shifts, axis=1)
            far = int(np.argmax(norms))
            if noisy:
                # fit only points near the current region: stale far-out
                # points wreck the conditioning after the radius moves
                local = norms <= 4.0
                fit_shifts = shifts[local]
                model = (_fit_model(fit_shifts, fvals[local], ridge=1e-8)
                         if int(local.sum()) >= n + 2 else None)
            else:
                fit_shifts = shifts
                model = _fit_model(shifts, fvals)
            if model is None:
                # geometry step: re-anchor the farthest point near the center
                if far == best:
                    radius /= 2.0
                    continue
                direction = np.zeros(n)
                direction[geom_cycle % n] = 1.0 if (geom_cycle // n) % 2 == 0 else -1.0
                geom_cycle += 1
                cand = np.clip(center + radius * direction, lb, ub)
                pts[far] = cand
                fvals[far] = counted(cand)
                continue
            c0, g, lam = model

            def hmul(v: np.ndarray) -> np.ndarray:
                return fit_shifts.T @ (lam * (fit_shifts @ v))

            s = _steihaug(g, hmul, 1.0, max_iter=2 * n)
            cand = np.clip(center + radius * s, lb, ub)
            s_eff = (cand - center) / radius
            pred = -(g @ s_eff + 0.5 * float(s_eff @ hmul(s_eff)))
            step_len = np.linalg.norm(s_eff)
            if step_len < 1e-8 or pred <= 0.0:
                radius /= 2.0
                continue
            f_new = counted(cand)
            ratio = (fvals[best] - f_new) / pred
            # never drop the incumbent; replace the farthest point
            drop = far if far != best else int(
                np.argsort(np.linalg.norm(shifts, axis=1))[-2])
            pts[drop] = cand
            fvals[drop] = f_new
            if noisy and ratio < 0.1:
                fvals[best] = 0.5 * (fvals[best] + counted(center))
                ratio = (fvals[best] - f_new) / pred
            if ratio >= 0.7 and step_len >= 0.9:
                radius = min(2.0 * radius, radius_max)
                floor_rejects = 0
            elif ratio < 0.1:
                radius /= 2.0
                if noisy and radius < floor and floor >= config.final_radius:
                    radius = floor
                    floor_rejects += 1
                    if floor_rejects >= 15:
                        floor_rejects = 0
                        floor /= 2.0
                        radius = floor
            else:
                floor_rejects = 0
    except BudgetExhausted:
        reason = "eval-cutoff"
    return counted.result(reason)

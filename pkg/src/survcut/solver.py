"""Proximal-gradient solver (FISTA with backtracking and adaptive restart)
for the penalized Cox objective, plus the constraint-only refit.

Restart policy keeps the trace monotone: whenever the momentum candidate
raises the penalized objective the momentum is dropped and the step is redone
from the current iterate, where descent is guaranteed by the line search.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .binarize import BinarizedDesign
from .coxloss import (RiskSetIndex, _gather_sum, _scatter_add,
                      gradient_multipliers, nll_from_predictors)
from .data import BlockVector, FitResult, ValidationError
from .prox import WeightVector, _prox_blocks, constant_weights


class NumericError(RuntimeError):
    """Raised when the optimizer cannot produce a finite, usable result."""


@dataclass(frozen=True)
class SolverConfig:
    max_iterations: int = 5000
    tol: float = 1e-8
    initial_step: float = 1.0
    backtrack: float = 0.5
    restart: bool = True
    min_step: float = 1e-14


def backtracking_step(beta, grad_value, step, nll_at_beta, nll_fn, prox_fn,
                      shrink=0.5, min_step=1e-14):
    """Shrink ``step`` geometrically until the sufficient-decrease condition

        nll(cand) <= nll(beta) + grad.(cand - beta) + ||cand - beta||^2/(2 step)

    holds for cand = prox(beta - step*grad, step). Returns
    (candidate, nll(candidate), accepted step, ok); ok is False when the step
    underflowed ``min_step`` before acceptance.
    """
    while True:
        cand = prox_fn(beta - step * grad_value, step)
        diff = cand - beta
        quad = nll_at_beta + grad_value @ diff + (diff @ diff) / (2.0 * step)
        f_cand = nll_fn(cand)
        if f_cand <= quad + 1e-12 * (1.0 + abs(quad)):
            return cand, f_cand, step, True
        step *= shrink
        if step < min_step:
            return cand, f_cand, step, False


def fit(design: BinarizedDesign, times, events, weights: WeightVector,
        counts=None, config: SolverConfig | None = None,
        beta0: BlockVector | None = None, gamma: float | None = None) -> FitResult:
    """Minimize the penalized scaled negative partial log-likelihood.

    ``counts`` are the per-column occupancies entering the sum-to-zero
    constraint; they default to the design's own rows. Every iterate is a
    prox output, so the constraint holds along the whole path. ``beta0``
    warm-starts the solve (it is projected onto the constraint first).
    """
    cfg = config or SolverConfig()
    layout = design.layout
    if gamma is None:
        gamma = float(weights.values.max()) if layout.total else 0.0
    rsi = RiskSetIndex.build(times, events)

    if layout.total == 0:
        val = nll_from_predictors(np.zeros(design.n), rsi)
        return FitResult(BlockVector.zeros(layout), gamma, np.array([val]), 0, True,
                         "empty design")

    col = design.column_index()
    total = layout.total
    if counts is None:
        counts = design.column_counts()
    counts = np.asarray(counts, dtype=np.float64).reshape(-1)
    w = weights.values
    edges = layout.edges

    def nll(v: np.ndarray) -> float:
        return nll_from_predictors(_gather_sum(col, v), rsi)

    def grad(v: np.ndarray) -> np.ndarray:
        r = gradient_multipliers(_gather_sum(col, v), rsi)
        return _scatter_add(col, r, total)

    def pen(v: np.ndarray) -> float:
        return float(np.dot(w[1:], np.abs(np.diff(v))))

    def prox(v: np.ndarray, s: float) -> np.ndarray:
        return _prox_blocks(v, w, counts, edges, s)

    # warm starts are projected onto the constraint without any TV shrinkage
    x = _prox_blocks(beta0.values.copy() if beta0 is not None else np.zeros(total),
                     np.zeros(total), counts, edges, 1.0)
    fx = nll(x)
    obj = fx + pen(x)
    trace = [obj]
    y = x
    momentum = False
    t = 1.0
    step = cfg.initial_step
    converged = False
    message = ""
    it = 0
    while it < cfg.max_iterations:
        it += 1
        fy = nll(y) if momentum else fx
        g = grad(y)
        cand, f_cand, step, ok = backtracking_step(
            y, g, step, fy, nll, prox, cfg.backtrack, cfg.min_step
        )
        if not ok:
            message = f"step underflow below {cfg.min_step:g} at iteration {it}"
            break
        obj_cand = f_cand + pen(cand)
        if obj_cand > obj + 1e-12 * (1.0 + abs(obj)):
            if momentum and cfg.restart:
                y = x
                momentum = False
                t = 1.0
                continue
            # descent from x itself is guaranteed up to rounding; hold position
            cand, f_cand, obj_cand = x, fx, obj
        t_next = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t * t))
        y = cand + ((t - 1.0) / t_next) * (cand - x)
        momentum = True
        rel = abs(obj - obj_cand) / max(1.0, abs(obj))
        x, fx, obj, t = cand, f_cand, obj_cand, t_next
        trace.append(obj)
        if rel < cfg.tol:
            converged = True
            break

    return FitResult(
        beta=BlockVector(x, layout),
        gamma=float(gamma),
        objective_trace=np.asarray(trace),
        iterations=it,
        converged=converged,
        message=message,
    )


def refit_constrained(design: BinarizedDesign, times, events,
                      config: SolverConfig | None = None,
                      beta0: BlockVector | None = None) -> BlockVector:
    """Unpenalized constrained refit: TV weights zero, sum-to-zero kept."""
    cfg = config or SolverConfig(max_iterations=10000, tol=1e-13)
    res = fit(design, times, events, constant_weights(design.layout, 0.0),
              config=cfg, beta0=beta0, gamma=0.0)
    return res.beta


def kkt_residual(design: BinarizedDesign, times, events, beta: BlockVector,
                 counts=None) -> float:
    """Sup-norm of the gradient projected on the constraint tangent space.

    Zero at a constrained stationary point of the unpenalized objective; the
    refit quality check.
    """
    layout = design.layout
    if layout.total == 0:
        return 0.0
    rsi = RiskSetIndex.build(times, events)
    r = gradient_multipliers(beta.values[design.column_index()].sum(axis=1), rsi)
    g = np.bincount(design.column_index().ravel(),
                    weights=np.repeat(r, design.n_blocks), minlength=layout.total)
    if counts is None:
        counts = design.column_counts()
    counts = np.asarray(counts, dtype=np.float64)
    resid = 0.0
    for b in range(layout.n_blocks):
        a, z = layout.bounds(b)
        gb, cb = g[a:z], counts[a:z]
        den = float(cb @ cb)
        proj = gb - (float(cb @ gb) / den) * cb if den > 0 else gb
        resid = max(resid, float(np.abs(proj).max()))
    return resid


def fit_dense_cox(features, times, events, config: SolverConfig | None = None) -> np.ndarray:
    """Plain (unpenalized) Cox fit on continuous columns; returns raw-scale
    coefficients. Used for the linear-predictor comparison baseline."""
    cfg = config or SolverConfig(max_iterations=2000, tol=1e-10)
    x = np.asarray(features, dtype=np.float64)
    if x.ndim != 2:
        raise ValidationError("feature matrix must be 2-d")
    rsi = RiskSetIndex.build(times, events)
    mu = x.mean(axis=0)
    sd = x.std(axis=0)
    keep = sd > 0
    xs = (x[:, keep] - mu[keep]) / sd[keep]
    p = xs.shape[1]
    if p == 0:
        return np.zeros(x.shape[1])

    def nll(b):
        return nll_from_predictors(xs @ b, rsi)

    def grad(b):
        return xs.T @ gradient_multipliers(xs @ b, rsi)

    b = np.zeros(p)
    fb = nll(b)
    y = b
    fy = fb
    t = 1.0
    step = cfg.initial_step
    identity = lambda v, s: v
    for _ in range(cfg.max_iterations):
        g = grad(y)
        cand, f_cand, step, ok = backtracking_step(
            y, g, step, fy, nll, identity, cfg.backtrack, cfg.min_step
        )
        if not ok:
            break
        if f_cand > fb:
            y, fy, t = b, fb, 1.0
            continue
        t_next = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t * t))
        y = cand + ((t - 1.0) / t_next) * (cand - b)
        rel = abs(fb - f_cand) / max(1.0, abs(fb))
        b, fb, t = cand, f_cand, t_next
        fy = nll(y)
        if rel < cfg.tol:
            break
    out = np.zeros(x.shape[1])
    out[keep] = b / sd[keep]
    return out

"""Cox partial likelihood (Breslow ties) over one-hot block designs.

The risk set at a follow-up time Z_i is every subject with Z >= Z_i, so
censored subjects remain at risk at their own time. All exponentials are
shifted by the max predictor before summation; values and gradients are
exactly invariant to a constant offset of the predictors.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .binarize import BinarizedDesign
from .data import BlockVector, ValidationError

try:
    from numba import njit
except ImportError:  # pragma: no cover - numba is a declared dependency
    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]
        return lambda f: f


@njit(cache=True)
def _gather_sum(idx, values):
    n, nb = idx.shape
    out = np.empty(n)
    for i in range(n):
        s = 0.0
        for b in range(nb):
            s += values[idx[i, b]]
        out[i] = s
    return out


@njit(cache=True)
def _scatter_add(idx, multipliers, total):
    n, nb = idx.shape
    out = np.zeros(total)
    for i in range(n):
        r_i = multipliers[i]
        for b in range(nb):
            out[idx[i, b]] += r_i
    return out


@dataclass(frozen=True)
class RiskSetIndex:
    """Precomputed ordering of subjects for risk-set sums.

    ``order`` sorts rows by descending time; ``group_start``/``group_end``
    give, per sorted position, the first and last position of its tie group;
    ``events_sorted`` flags observed failures in sorted order.
    """

    order: np.ndarray
    group_start: np.ndarray
    group_end: np.ndarray
    events_sorted: np.ndarray
    n_events: int

    @classmethod
    def build(cls, times, events) -> "RiskSetIndex":
        z = np.asarray(times, dtype=np.float64).reshape(-1)
        d = np.asarray(events, dtype=bool).reshape(-1)
        if z.shape[0] != d.shape[0]:
            raise ValidationError("times and events length mismatch")
        n = z.shape[0]
        if n == 0:
            raise ValidationError("empty sample")
        order = np.argsort(-z, kind="stable")
        zs = z[order]
        ends = np.append(np.flatnonzero(zs[:-1] != zs[1:]), n - 1)
        sizes = np.diff(np.concatenate(([-1], ends)))
        group_end = np.repeat(ends, sizes)
        starts = np.concatenate(([0], ends[:-1] + 1))
        group_start = np.repeat(starts, sizes)
        return cls(
            order=order,
            group_start=group_start,
            group_end=group_end,
            events_sorted=d[order],
            n_events=int(d.sum()),
        )

    @property
    def n(self) -> int:
        return self.order.shape[0]


def _require_events(rsi: RiskSetIndex) -> None:
    if rsi.n_events == 0:
        raise ValidationError("no events: partial likelihood undefined")


def nll_from_predictors(predictors: np.ndarray, rsi: RiskSetIndex) -> float:
    """Negative partial log-likelihood, scaled by 1/n."""
    _require_events(rsi)
    f = np.asarray(predictors, dtype=np.float64).reshape(-1)
    if not np.isfinite(f).all():
        raise ValidationError("non-finite predictor")
    fs = f[rsi.order]
    m = fs.max()
    cum = np.cumsum(np.exp(fs - m))
    # extreme predictor spreads underflow early prefix sums to exactly zero;
    # clamping keeps the value finite (and huge) so a line search can reject it
    s0 = np.maximum(cum[rsi.group_end], np.finfo(np.float64).tiny)
    ev = rsi.events_sorted
    return float(-(fs[ev].sum() - rsi.n_events * m - np.log(s0[ev]).sum()) / rsi.n)


def gradient_multipliers(predictors: np.ndarray, rsi: RiskSetIndex) -> np.ndarray:
    """Per-subject multipliers r (original row order) with grad = design^T r.

    Uses the cumulative-hazard rearrangement: the risk-set averages collapse
    to one weighted column sum, so a gradient costs O(n log n + n p).
    """
    _require_events(rsi)
    f = np.asarray(predictors, dtype=np.float64).reshape(-1)
    fs = f[rsi.order]
    m = fs.max()
    w = np.exp(fs - m)
    s0 = np.maximum(np.cumsum(w)[rsi.group_end], np.finfo(np.float64).tiny)
    haz = np.where(rsi.events_sorted, 1.0 / s0, 0.0)
    rev = np.cumsum(haz[::-1])[::-1]
    a = rev[rsi.group_start]
    r_sorted = (w * a - rsi.events_sorted) / rsi.n
    r = np.empty_like(r_sorted)
    r[rsi.order] = r_sorted
    return r


def linear_predictor(design: BinarizedDesign, beta: BlockVector) -> np.ndarray:
    """Predictor f_i = sum over blocks of the active-bin coefficient, O(n p)."""
    if design.n_blocks == 0:
        return np.zeros(design.n)
    return _gather_sum(design.column_index(), beta.values)


def neg_partial_loglik(design: BinarizedDesign, times, events, beta: BlockVector) -> float:
    rsi = RiskSetIndex.build(times, events)
    return nll_from_predictors(linear_predictor(design, beta), rsi)


def gradient(design: BinarizedDesign, times, events, beta: BlockVector) -> BlockVector:
    """Exact gradient of :func:`neg_partial_loglik` in the flat block space."""
    rsi = RiskSetIndex.build(times, events)
    r = gradient_multipliers(linear_predictor(design, beta), rsi)
    return BlockVector(_accumulate(design, r), design.layout)


def _accumulate(design: BinarizedDesign, multipliers: np.ndarray) -> np.ndarray:
    """design^T r for a one-hot design, one fused scatter pass."""
    if design.n_blocks == 0:
        return np.zeros(0)
    return _scatter_add(design.column_index(),
                        np.ascontiguousarray(multipliers, dtype=np.float64),
                        design.layout.total)

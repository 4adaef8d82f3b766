"""Evaluation metrics: set distance between detected and true cut-points,
false-detection mass on null features, and a censoring-robust concordance
index with inverse-probability-of-censoring weights.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import ValidationError


def hausdorff(a, b) -> float:
    """Hausdorff distance between two non-empty finite sets of reals:
    the larger one-sided sup-inf gap, taken in both directions."""
    av = np.asarray(a, dtype=np.float64).reshape(-1)
    bv = np.asarray(b, dtype=np.float64).reshape(-1)
    if av.size == 0 or bv.size == 0:
        raise ValidationError("hausdorff distance needs non-empty sets")
    gaps = np.abs(av[:, None] - bv[None, :])
    return float(max(gaps.min(axis=0).max(), gaps.min(axis=1).max()))


def m1_distance(true_cutpoints, detected_cutpoints, sparse_set=None) -> float:
    """Mean Hausdorff distance over features that have at least one true and
    one detected cut-point; NaN when no feature qualifies."""
    if len(true_cutpoints) != len(detected_cutpoints):
        raise ValidationError("per-feature lists must align")
    skip = set(int(j) for j in sparse_set) if sparse_set is not None else set()
    vals = []
    for j, (t, d) in enumerate(zip(true_cutpoints, detected_cutpoints)):
        if j in skip or len(t) == 0 or len(d) == 0:
            continue
        vals.append(hausdorff(t, d))
    return float(np.mean(vals)) if vals else float("nan")


def m2_count(k_hat, sparse_set) -> float:
    """Mean number of detections on truly-null features; NaN without nulls."""
    k = np.asarray(k_hat, dtype=np.float64).reshape(-1)
    s = np.asarray(sparse_set, dtype=np.int64).reshape(-1)
    if s.size == 0:
        return float("nan")
    if s.min() < 0 or s.max() >= k.shape[0]:
        raise ValidationError("sparse set indexes outside the feature range")
    return float(k[s].mean())


@dataclass(frozen=True)
class StepFunction:
    """Right-continuous step function equal to 1 before the first jump."""

    jump_times: np.ndarray
    values: np.ndarray

    def __call__(self, t) -> np.ndarray:
        return self._eval(t, "right")

    def left_limit(self, t) -> np.ndarray:
        return self._eval(t, "left")

    def _eval(self, t, side: str) -> np.ndarray:
        tv = np.asarray(t, dtype=np.float64)
        if self.jump_times.shape[0] == 0:
            return np.ones_like(tv)
        idx = np.searchsorted(self.jump_times, tv, side=side)
        return np.where(idx == 0, 1.0, self.values[np.maximum(idx - 1, 0)])


def kaplan_meier(times, flags) -> StepFunction:
    """Product-limit survival estimator of the flagged terminal event.

    ``flags[i]`` True marks the modeled event (pass the censoring indicator
    to estimate the censoring distribution). At tied times all subjects with
    that time stay in the risk set.
    """
    z = np.asarray(times, dtype=np.float64).reshape(-1)
    f = np.asarray(flags, dtype=bool).reshape(-1)
    if z.shape[0] != f.shape[0] or z.shape[0] == 0:
        raise ValidationError("times and flags must align and be non-empty")
    order = np.argsort(z, kind="stable")
    zs, fs = z[order], f[order]
    n = zs.shape[0]
    starts = np.concatenate(([0], np.flatnonzero(zs[:-1] != zs[1:]) + 1))
    d = np.add.reduceat(fs.astype(np.float64), starts)
    at_risk = (n - starts).astype(np.float64)
    keep = d > 0
    surv = np.cumprod(1.0 - d[keep] / at_risk[keep])
    return StepFunction(jump_times=zs[starts][keep], values=surv)


@dataclass(frozen=True)
class ConcordanceResult:
    value: float
    comparable_pairs: int
    dropped_pairs: int
    tau: float


def c_index(risks, times, events, tau: float | None = None,
            weight_floor: float = 1e-8) -> float:
    return c_index_detailed(risks, times, events, tau, weight_floor).value


def c_index_detailed(risks, times, events, tau: float | None = None,
                     weight_floor: float = 1e-8) -> ConcordanceResult:
    """Censoring-weighted concordance over pairs (i, j) with an observed
    failure at Z_i < Z_j and Z_i below the horizon ``tau``.

    Each pair is weighted by the inverse squared left limit of the
    Kaplan-Meier censoring survivor at Z_i; pairs whose weight denominator
    falls under ``weight_floor`` are dropped and counted. Risk ties score
    one half. ``tau`` defaults to the largest observed event time.
    """
    r = np.asarray(risks, dtype=np.float64).reshape(-1)
    z = np.asarray(times, dtype=np.float64).reshape(-1)
    d = np.asarray(events, dtype=bool).reshape(-1)
    if not (r.shape[0] == z.shape[0] == d.shape[0]):
        raise ValidationError("risks, times and events must align")
    if not d.any():
        raise ValidationError("no events: concordance undefined")
    if tau is None:
        tau = float(z[d].max())
    g = kaplan_meier(z, ~d)
    g_left = np.asarray(g.left_limit(z), dtype=np.float64)

    num = 0.0
    den = 0.0
    comparable = 0
    dropped = 0
    anchors = np.flatnonzero(d & (z < tau))
    for i in anchors:
        later = z > z[i]
        m = int(later.sum())
        if m == 0:
            continue
        if g_left[i] < weight_floor:
            dropped += m
            continue
        w = 1.0 / (g_left[i] * g_left[i])
        ri = r[i]
        rj = r[later]
        conc = float((ri > rj).sum()) + 0.5 * float((ri == rj).sum())
        num += w * conc
        den += w * m
        comparable += m
    if den == 0.0:
        raise ValidationError("no comparable pairs below the horizon")
    return ConcordanceResult(value=float(num / den), comparable_pairs=comparable,
                             dropped_pairs=dropped, tau=float(tau))

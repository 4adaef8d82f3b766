"""Proximal operator of the block penalty: weighted TV within each block,
then exact projection onto the count-weighted sum-to-zero hyperplane.

The TV prox is solved exactly in O(m) per block by dynamic programming over
the derivative of the Bellman functions (piecewise linear, stored as a deque
of breakpoint deltas). The projection is a rank-one update, applied after
the TV step; the composition is the definition of the penalty's prox step.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .data import BlockLayout, BlockVector, ValidationError

try:
    from numba import njit
except ImportError:  # pragma: no cover - numba is a declared dependency
    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]
        return lambda f: f


@njit(cache=True)
def _tv1d(y, lam):
    """Exact minimizer of 0.5*||x - y||^2 + sum_e lam[e] * |x[e+1] - x[e]|.

    Forward pass clips the running derivative at +/-lam and records the clip
    locations; the backward pass clamps each coordinate between them.
    """
    m = y.shape[0]
    x = np.empty(m)
    if m == 1:
        x[0] = y[0]
        return x
    allzero = True
    for e in range(m - 1):
        if lam[e] != 0.0:
            allzero = False
            break
    if allzero:
        for t in range(m):
            x[t] = y[t]
        return x

    kx = np.empty(2 * m)
    ka = np.empty(2 * m)
    kb = np.empty(2 * m)
    tm = np.empty(m - 1)
    tp = np.empty(m - 1)
    lo = m
    hi = m - 1
    afirst = 1.0
    bfirst = -y[0]
    alast = 1.0
    blast = -y[0]

    for k in range(1, m):
        lam_k = lam[k - 1]
        alo = afirst
        blo = bfirst
        while lo <= hi and alo * kx[lo] + blo < -lam_k:
            alo += ka[lo]
            blo += kb[lo]
            lo += 1
        tmk = (-lam_k - blo) / alo
        ahi = alast
        bhi = blast
        while hi >= lo and ahi * kx[hi] + bhi > lam_k:
            ahi -= ka[hi]
            bhi -= kb[hi]
            hi -= 1
        tpk = (lam_k - bhi) / ahi
        tm[k - 1] = tmk
        tp[k - 1] = tpk
        lo -= 1
        kx[lo] = tmk
        ka[lo] = alo
        kb[lo] = blo + lam_k
        hi += 1
        kx[hi] = tpk
        ka[hi] = -ahi
        kb[hi] = lam_k - bhi
        afirst = 1.0
        bfirst = -lam_k - y[k]
        alast = 1.0
        blast = lam_k - y[k]

    alo = afirst
    blo = bfirst
    while lo <= hi and alo * kx[lo] + blo < 0.0:
        alo += ka[lo]
        blo += kb[lo]
        lo += 1
    x[m - 1] = -blo / alo
    for k in range(m - 1, 0, -1):
        z = x[k]
        if z < tm[k - 1]:
            x[k - 1] = tm[k - 1]
        elif z > tp[k - 1]:
            x[k - 1] = tp[k - 1]
        else:
            x[k - 1] = z
    return x


@njit(cache=True)
def _prox_blocks(values, weights, counts, edges, step):
    out = np.empty_like(values)
    nb = edges.shape[0] - 1
    if nb == 0:
        return out
    max_m = 0
    for b in range(nb):
        m = edges[b + 1] - edges[b]
        if m > max_m:
            max_m = m
    # shared scratch across blocks; _tv1d's layout, sized for the largest one
    kx = np.empty(2 * max_m)
    ka = np.empty(2 * max_m)
    kb = np.empty(2 * max_m)
    tm = np.empty(max_m)
    tp = np.empty(max_m)
    for b in range(nb):
        a = edges[b]
        z = edges[b + 1]
        m = z - a
        allzero = True
        if step != 0.0:
            for e in range(m - 1):
                if weights[a + 1 + e] != 0.0:
                    allzero = False
                    break
        if m == 1 or allzero:
            for t in range(m):
                out[a + t] = values[a + t]
        else:
            lo = m
            hi = m - 1
            afirst = 1.0
            bfirst = -values[a]
            alast = 1.0
            blast = -values[a]
            for k in range(1, m):
                lam_k = step * weights[a + k]
                alo = afirst
                blo = bfirst
                while lo <= hi and alo * kx[lo] + blo < -lam_k:
                    alo += ka[lo]
                    blo += kb[lo]
                    lo += 1
                tmk = (-lam_k - blo) / alo
                ahi = alast
                bhi = blast
                while hi >= lo and ahi * kx[hi] + bhi > lam_k:
                    ahi -= ka[hi]
                    bhi -= kb[hi]
                    hi -= 1
                tpk = (lam_k - bhi) / ahi
                tm[k - 1] = tmk
                tp[k - 1] = tpk
                lo -= 1
                kx[lo] = tmk
                ka[lo] = alo
                kb[lo] = blo + lam_k
                hi += 1
                kx[hi] = tpk
                ka[hi] = -ahi
                kb[hi] = lam_k - bhi
                afirst = 1.0
                bfirst = -lam_k - values[a + k]
                alast = 1.0
                blast = lam_k - values[a + k]
            alo = afirst
            blo = bfirst
            while lo <= hi and alo * kx[lo] + blo < 0.0:
                alo += ka[lo]
                blo += kb[lo]
                lo += 1
            out[z - 1] = -blo / alo
            for k in range(m - 1, 0, -1):
                zk = out[a + k]
                if zk < tm[k - 1]:
                    out[a + k - 1] = tm[k - 1]
                elif zk > tp[k - 1]:
                    out[a + k - 1] = tp[k - 1]
                else:
                    out[a + k - 1] = zk
        num = 0.0
        den = 0.0
        for t in range(m):
            num += counts[a + t] * out[a + t]
            den += counts[a + t] * counts[a + t]
        if den > 0.0:
            coef = num / den
            for t in range(m):
                out[a + t] -= coef * counts[a + t]
    return out


@dataclass(frozen=True)
class WeightVector:
    """Non-negative per-coefficient TV weights; the first weight of every
    block is zero (there is no jump before the first bin)."""

    values: np.ndarray
    layout: BlockLayout

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64).reshape(-1)
        if v.shape[0] != self.layout.total:
            raise ValidationError(
                f"weight vector of length {v.shape[0]} for layout of size {self.layout.total}"
            )
        if (v < 0).any():
            raise ValidationError("negative TV weight")
        if v[self.layout.offsets].any():
            raise ValidationError("first weight of each block must be 0")
        object.__setattr__(self, "values", v)


def constant_weights(layout: BlockLayout, gamma: float) -> WeightVector:
    """All jump weights equal to ``gamma`` (the tuned-penalty regime)."""
    if gamma < 0:
        raise ValidationError("negative TV weight")
    v = np.full(layout.total, float(gamma))
    v[layout.offsets] = 0.0
    return WeightVector(v, layout)


def weight_scalar(n: int, total_columns: int, confidence: float = 1.0) -> float:
    """Closed-form data-driven weight level for an n-sample design with
    ``total_columns`` one-hot columns; ``confidence`` is the deviation-bound
    constant c > 0 (larger c, more conservative weights)."""
    if n < 1 or total_columns < 1:
        raise ValidationError("need n >= 1 and at least one column")
    if confidence <= 0:
        raise ValidationError("confidence constant must be positive")
    c = float(confidence)
    ll = 2.0 * math.log(math.log(max(2.0 * math.e * n + 24.0 * math.e * c, math.e)))
    base = c + math.log(total_columns) + ll
    return 5.64 * math.sqrt(base / n) + 18.62 * (base + 1.0) / n


def theoretical_weights(n: int, layout: BlockLayout, confidence: float = 1.0) -> WeightVector:
    """Constant-level weights at the closed-form theoretical value."""
    return constant_weights(layout, weight_scalar(n, layout.total, confidence))


def prox_tv_weighted(y: np.ndarray, weights: np.ndarray, step: float = 1.0) -> np.ndarray:
    """Exact weighted total-variation prox of a single block.

    ``weights[l]`` scales the jump |y[l] - y[l-1]|; ``weights[0]`` is ignored
    by convention. All weights must be non-negative and ``step`` positive.
    """
    y = np.asarray(y, dtype=np.float64).reshape(-1)
    w = np.asarray(weights, dtype=np.float64).reshape(-1)
    if w.shape[0] != y.shape[0]:
        raise ValidationError("weights must align with the block")
    if (w < 0).any():
        raise ValidationError("negative TV weight")
    if not step > 0:
        raise ValidationError("step must be positive")
    if y.shape[0] == 1:
        return y.copy()
    return _tv1d(y, step * w[1:])


def project_sum_zero(theta: np.ndarray, counts: np.ndarray) -> np.ndarray:
    """Euclidean projection onto {x : counts . x = 0}."""
    theta = np.asarray(theta, dtype=np.float64).reshape(-1)
    c = np.asarray(counts, dtype=np.float64).reshape(-1)
    if c.shape[0] != theta.shape[0]:
        raise ValidationError("counts must align with the block")
    if (c < 0).any():
        raise ValidationError("negative bin count")
    den = float(c @ c)
    if den == 0.0:
        raise ValidationError("all-zero bin counts")
    return theta - (float(c @ theta) / den) * c


def prox_binarsity(
    beta: BlockVector, weights: WeightVector, counts: np.ndarray, step: float = 1.0
) -> BlockVector:
    """Blockwise weighted-TV prox followed by the sum-to-zero projection.

    Blocks are independent; ``counts`` holds the per-column occupancies used
    in the constraint (the fit-data bin counts in the canonical pipeline).
    """
    if weights.layout is not beta.layout and weights.layout != beta.layout:
        raise ValidationError("weights layout does not match coefficient layout")
    c = np.asarray(counts, dtype=np.float64).reshape(-1)
    if c.shape[0] != beta.layout.total:
        raise ValidationError("counts must align with the layout")
    if (c < 0).any():
        raise ValidationError("negative bin count")
    if not step > 0:
        raise ValidationError("step must be positive")
    out = _prox_blocks(beta.values, weights.values, c, beta.layout.edges, float(step))
    return BlockVector(out, beta.layout)

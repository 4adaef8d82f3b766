"""Multiple-testing baselines: per-feature log-rank scans over candidate
thresholds, with Bonferroni or the asymptotic maximally-selected-statistic
correction, reporting at most one cut-point per feature.

Candidate thresholds live inside the central quantile band (10th to 90th by
default); the split at threshold g compares {x <= g} against {x > g}.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import stats

from .binarize import BinningScheme, empirical_quantile
from .data import CutPointModel, SurvivalDataset, ValidationError

_SCAN_CHUNK = 512


@dataclass(frozen=True)
class LogrankResult:
    statistic: float
    p_value: float
    score: float
    variance: float
    degenerate: bool


def _scan_core(x, times, events, thresholds):
    """Score and variance of the two-sample log-rank test at every threshold.

    Vectorized over thresholds: one time-sort, then tie-group reductions of
    the membership matrix. O(n * len(thresholds)) and chunked to bound memory.
    """
    n = times.shape[0]
    order = np.argsort(times, kind="stable")
    xs = x[order]
    ev = events[order].astype(np.float64)
    zs = times[order]
    starts = np.concatenate(([0], np.flatnonzero(zs[:-1] != zs[1:]) + 1))
    d_grp = np.add.reduceat(ev, starts)
    nt_grp = (n - starts).astype(np.float64)
    with np.errstate(divide="ignore", invalid="ignore"):
        u_out = np.empty(thresholds.shape[0])
        v_out = np.empty(thresholds.shape[0])
        for c0 in range(0, thresholds.shape[0], _SCAN_CHUNK):
            thr = thresholds[c0:c0 + _SCAN_CHUNK]
            member = xs[:, None] <= thr[None, :]
            n1 = np.cumsum(member[::-1], axis=0)[::-1][starts].astype(np.float64)
            d1 = np.add.reduceat(member * ev[:, None], starts, axis=0)
            frac = n1 / nt_grp[:, None]
            u = d1 - d_grp[:, None] * frac
            v = (d_grp[:, None] * frac * (1.0 - frac)
                 * (nt_grp[:, None] - d_grp[:, None]))
            v = np.where(nt_grp[:, None] > 1.0, v / np.maximum(nt_grp[:, None] - 1.0, 1.0), 0.0)
            u_out[c0:c0 + _SCAN_CHUNK] = u.sum(axis=0)
            v_out[c0:c0 + _SCAN_CHUNK] = v.sum(axis=0)
    return u_out, v_out


def logrank_statistic(times, events, in_group) -> LogrankResult:
    """Two-sample log-rank test of {in_group} vs the rest, chi-square(1).

    Ties are pooled (all tied subjects share one risk set). A split whose
    hypergeometric variance is zero is degenerate: statistic 0, p-value 1.
    """
    z = np.asarray(times, dtype=np.float64).reshape(-1)
    d = np.asarray(events, dtype=bool).reshape(-1)
    g = np.asarray(in_group, dtype=bool).reshape(-1)
    if not (z.shape[0] == d.shape[0] == g.shape[0]):
        raise ValidationError("times, events and group must align")
    if d.sum() == 0:
        raise ValidationError("no events: log-rank test undefined")
    # route the boolean split through the threshold kernel at 0.5; the kernel
    # scores the x <= threshold side, so in-group rows must encode as 0.0
    u, v = _scan_core((~g).astype(np.float64), z, d, np.array([0.5]))
    return _to_result(float(u[0]), float(v[0]))


def _to_result(u: float, v: float) -> LogrankResult:
    if v <= 0.0:
        return LogrankResult(0.0, 1.0, u, v, True)
    stat = u * u / v
    return LogrankResult(stat, float(stats.chi2.sf(stat, 1)), u, v, False)


@dataclass(frozen=True)
class ScanResult:
    candidates: np.ndarray
    statistics: np.ndarray
    p_values: np.ndarray
    scores: np.ndarray
    variances: np.ndarray
    band: tuple[float, float]

    @property
    def n_candidates(self) -> int:
        return int(self.candidates.shape[0])


def mt_scan(x, times, events, grid: str = "all",
            scheme: BinningScheme | None = None, feature: int | None = None,
            band: tuple[float, float] = (0.1, 0.9)) -> ScanResult:
    """Log-rank statistics over every candidate threshold of one feature.

    ``grid='all'`` takes every distinct observed value inside the quantile
    band; ``grid='scheme'`` takes the fitted binning boundaries inside the
    band (pass ``scheme`` and ``feature``). A feature without candidates
    (constant, or empty band) yields an empty scan.
    """
    xv = np.asarray(x, dtype=np.float64).reshape(-1)
    z = np.asarray(times, dtype=np.float64).reshape(-1)
    d = np.asarray(events, dtype=bool).reshape(-1)
    if not (xv.shape[0] == z.shape[0] == d.shape[0]):
        raise ValidationError("feature, times and events must align")
    if d.sum() == 0:
        raise ValidationError("no events: log-rank test undefined")
    if not (0.0 < band[0] < band[1] < 1.0):
        raise ValidationError("band must satisfy 0 < low < high < 1")
    lo = empirical_quantile(xv, band[0])
    hi = empirical_quantile(xv, band[1])
    if grid == "all":
        cand = np.unique(xv)
    elif grid == "scheme":
        if scheme is None or feature is None:
            raise ValidationError("grid='scheme' needs a scheme and feature index")
        cand = np.asarray(scheme.boundaries[feature], dtype=np.float64)
    else:
        raise ValidationError(f"unknown candidate grid '{grid}'")
    cand = cand[(cand >= lo) & (cand <= hi)]
    # a threshold at or above the sample max puts everyone in one group
    cand = cand[cand < xv.max()]
    if cand.size == 0:
        return ScanResult(cand, np.zeros(0), np.zeros(0), np.zeros(0), np.zeros(0), band)
    u, v = _scan_core(xv, z, d, cand)
    stat = np.where(v > 0.0, u * u / np.where(v > 0.0, v, 1.0), 0.0)
    p = np.where(v > 0.0, stats.chi2.sf(stat, 1), 1.0)
    return ScanResult(cand, stat, p, u, v, band)


@dataclass(frozen=True)
class MtSelection:
    cutpoint: float | None
    index: int
    p_raw: float
    p_corrected: float
    amplitude: float
    n_candidates: int
    low_statistic: bool


def ls_corrected_p(statistic: float, band: tuple[float, float] = (0.1, 0.9)) -> tuple[float, bool]:
    """Asymptotic p-value of the maximally selected log-rank statistic over a
    quantile band; returns (p, flag) where the flag marks |b| <= 1, for which
    the leading term is non-positive and only the 4*phi(b)/b term is kept."""
    b = math.sqrt(max(statistic, 0.0))
    if b == 0.0:
        return 1.0, True
    phi = float(stats.norm.pdf(b))
    tail = 4.0 * phi / b
    if b <= 1.0:
        return min(1.0, tail), True
    low, high = band
    ratio = ((1.0 - low) * high) / (low * (1.0 - high))
    p = phi * (b - 1.0 / b) * math.log(ratio) + tail
    return min(1.0, max(0.0, p)), False


def mt_select(scan: ScanResult, correction: str = "bonferroni",
              alpha: float = 0.05) -> MtSelection:
    """Pick the minimal-p candidate and test it at level ``alpha`` after
    multiplicity correction; at most one cut-point comes out."""
    if not 0.0 < alpha < 1.0:
        raise ValidationError("alpha must lie in (0, 1)")
    if scan.n_candidates == 0:
        return MtSelection(None, -1, 1.0, 1.0, 0.0, 0, False)
    i = int(np.argmin(scan.p_values))
    p_raw = float(scan.p_values[i])
    low_stat = False
    if correction == "bonferroni":
        p_corr = min(1.0, scan.n_candidates * p_raw)
    elif correction == "ls":
        p_corr, low_stat = ls_corrected_p(float(scan.statistics[i]), scan.band)
    else:
        raise ValidationError(f"unknown correction '{correction}'")
    if p_corr > alpha or scan.variances[i] <= 0.0:
        return MtSelection(None, i, p_raw, p_corr, 0.0,
                           scan.n_candidates, low_stat)
    # one-step log hazard-ratio of {x > g} vs {x <= g} from score/information
    amp = -float(scan.scores[i]) / float(scan.variances[i])
    return MtSelection(float(scan.candidates[i]), i, p_raw, p_corr, amp,
                       scan.n_candidates, low_stat)


def mt_detect(ds: SurvivalDataset, method: str = "mt-b", grid: str = "all",
              alpha: float = 0.05, scheme: BinningScheme | None = None,
              band: tuple[float, float] = (0.1, 0.9)) -> CutPointModel:
    """Run the scan-and-select baseline on every feature of a dataset."""
    if method not in ("mt-b", "mt-ls"):
        raise ValidationError(f"unknown method '{method}'")
    correction = "bonferroni" if method == "mt-b" else "ls"
    cuts, amps = [], []
    for j in range(ds.p):
        scan = mt_scan(ds.features[:, j], ds.times, ds.events, grid=grid,
                       scheme=scheme, feature=j, band=band)
        sel = mt_select(scan, correction, alpha)
        if sel.cutpoint is None:
            cuts.append(np.zeros(0))
            amps.append(np.zeros(0))
        else:
            cuts.append(np.array([sel.cutpoint]))
            amps.append(np.array([sel.amplitude]))
    return CutPointModel(feature_names=ds.feature_names, cutpoints=cuts, amplitudes=amps)

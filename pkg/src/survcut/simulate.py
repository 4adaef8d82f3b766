"""Synthetic survival data with step-function feature effects.

Features are correlated Gaussians; each signal feature acts on the hazard
through a piecewise-constant, zero-mean level pattern over its true
cut-points; failure times follow a Weibull transform of the conditional
hazard and censoring is geometric with its success probability tuned by
bisection to hit a target censoring fraction.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .binarize import binarize_at_cutpoints, empirical_quantile
from .coxloss import linear_predictor
from .data import BlockVector, SurvivalDataset, ValidationError, validate_dataset

_DECILES = np.arange(1, 10) / 10.0


@dataclass(frozen=True)
class SimConfig:
    """Design of one synthetic draw (defaults follow the benchmark design)."""

    n: int
    p: int
    rho: float = 0.5
    k_star: int = 2
    nu: float = 2.0
    sigma: float = 0.1
    censoring_rate: float = 0.3
    sparsity: float = 0.2
    seed: int = 0

    def __post_init__(self):
        if self.n < 2 or self.p < 1:
            raise ValidationError("need n >= 2 and p >= 1")
        if not -1.0 < self.rho < 1.0:
            raise ValidationError("correlation must lie in (-1, 1)")
        if not 1 <= self.k_star <= 9:
            raise ValidationError("k_star must lie in [1, 9] (decile grid)")
        if self.nu <= 0 or self.sigma <= 0:
            raise ValidationError("Weibull parameters must be positive")
        if not 0.0 <= self.censoring_rate < 1.0:
            raise ValidationError("censoring rate must lie in [0, 1)")
        if not 0.0 <= self.sparsity <= 1.0:
            raise ValidationError("sparsity must lie in [0, 1]")


@dataclass(frozen=True)
class GroundTruth:
    """True cut-points and block levels; null features have no cut-points."""

    mu_star: list[np.ndarray]
    beta_star: list[np.ndarray]
    sparse_set: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))

    def __post_init__(self):
        if len(self.mu_star) != len(self.beta_star):
            raise ValidationError("mu_star and beta_star must align")
        for j, (mu, beta) in enumerate(zip(self.mu_star, self.beta_star)):
            mu = np.asarray(mu, dtype=np.float64)
            if mu.size and (np.diff(mu) <= 0).any():
                raise ValidationError(f"cut-points of feature {j} must strictly increase")
            if len(beta) != mu.size + 1:
                raise ValidationError(
                    f"feature {j}: {len(beta)} levels for {mu.size} cut-points"
                )

    @property
    def p(self) -> int:
        return len(self.mu_star)

    def to_dict(self) -> dict:
        return {
            "mu_star": [[float(v) for v in m] for m in self.mu_star],
            "beta_star": [[float(v) for v in b] for b in self.beta_star],
            "sparse_set": [int(j) for j in self.sparse_set],
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "GroundTruth":
        return cls(
            mu_star=[np.asarray(m, dtype=np.float64) for m in obj["mu_star"]],
            beta_star=[np.asarray(b, dtype=np.float64) for b in obj["beta_star"]],
            sparse_set=np.asarray(obj["sparse_set"], dtype=np.int64),
        )


def gen_features(config: SimConfig, rng: np.random.Generator) -> np.ndarray:
    """I.i.d. rows from N(0, Sigma), Sigma[a, b] = rho^|a-b| (unit variance)."""
    idx = np.arange(config.p)
    cov = config.rho ** np.abs(idx[:, None] - idx[None, :])
    chol = np.linalg.cholesky(cov)
    return rng.standard_normal((config.n, config.p)) @ chol.T


def gen_truth(features: np.ndarray, config: SimConfig,
              rng: np.random.Generator) -> GroundTruth:
    """Sample cut-points on the decile grid and alternating-sign levels.

    Per feature, k_star deciles are drawn without replacement and sorted;
    levels start from sign-alternating folded normals and are centered, so
    every block sums to zero. A fraction ``sparsity`` of features is then
    nulled: their cut-points are removed and their level is identically 0.
    """
    x = np.asarray(features, dtype=np.float64)
    n, p = x.shape
    mu: list[np.ndarray] = []
    beta: list[np.ndarray] = []
    for j in range(p):
        deciles = np.array([empirical_quantile(x[:, j], u) for u in _DECILES])
        pick = rng.permutation(9)[: config.k_star]
        cuts = np.unique(deciles[pick])
        levels = np.abs(rng.normal(1.0, 0.5, cuts.size + 1))
        levels *= (-1.0) ** np.arange(1, cuts.size + 2)
        mu.append(cuts)
        beta.append(levels - levels.mean())
    n_null = int(round(config.sparsity * p))
    sparse = np.sort(rng.permutation(p)[:n_null])
    for j in sparse:
        mu[j] = np.zeros(0)
        beta[j] = np.zeros(1)
    return GroundTruth(mu_star=mu, beta_star=beta, sparse_set=sparse)


def _true_predictor(features: np.ndarray, truth: GroundTruth) -> np.ndarray:
    design = binarize_at_cutpoints(features, truth.mu_star)
    if design.layout.total == 0:
        return np.zeros(features.shape[0])
    flat = np.concatenate([truth.beta_star[j] for j in design.feature_ids])
    return linear_predictor(design, BlockVector(flat, design.layout))


def _geometric_draw(v: np.ndarray, alpha: float) -> np.ndarray:
    # inverse-transform geometric on {0, 1, 2, ...} (failures before the
    # first success); shared uniforms keep the draw monotone in alpha so the
    # calibration below can bisect. Support from zero keeps every censoring
    # fraction reachable even when most failure times fall below 1.
    c = np.ceil(np.log1p(-v) / np.log1p(-alpha))
    return np.maximum(c, 1.0) - 1.0


def gen_survival(features: np.ndarray, truth: GroundTruth, config: SimConfig,
                 rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """Observed pairs (Z, Delta) with Weibull failures and geometric censoring.

    Failure times are computed in the log domain (small Weibull shapes raise
    exponential draws to large powers) and capped at 1e300 to stay finite.
    The geometric success probability is tuned by bisection on this draw's
    own uniforms until the realized censoring fraction is within 0.005 of
    the target, warning if 0.02 cannot be reached.
    """
    x = np.asarray(features, dtype=np.float64)
    if x.shape[0] != config.n or truth.p != x.shape[1]:
        raise ValidationError("features shape does not match the configuration")
    pred = _true_predictor(x, truth)
    u = rng.uniform(size=config.n)
    log_t = (np.log(-np.log1p(-u)) - pred) / config.sigma - np.log(config.nu)
    t = np.exp(np.minimum(log_t, 690.0))

    if config.censoring_rate == 0.0:
        return t, np.ones(config.n, dtype=bool)

    v = rng.uniform(size=config.n)
    # bisect on log(alpha): the shape-0.1 times span hundreds of orders of
    # magnitude, so useful success probabilities can be as small as ~1/max(t)
    lo, hi = math.log(1e-300), math.log(1.0 - 1e-12)
    best_alpha, best_gap = math.exp(hi), np.inf
    for _ in range(200):
        smid = 0.5 * (lo + hi)
        mid = math.exp(smid)
        rate = float((t > _geometric_draw(v, mid)).mean())
        gap = abs(rate - config.censoring_rate)
        if gap < best_gap:
            best_alpha, best_gap = mid, gap
        if gap <= 0.005:
            break
        if rate < config.censoring_rate:
            lo = smid
        else:
            hi = smid
    if best_gap > 0.02:
        warnings.warn(
            f"censoring target {config.censoring_rate:.2f} unattainable; "
            f"closest realized rate differs by {best_gap:.3f}",
            stacklevel=2,
        )
    c = _geometric_draw(v, best_alpha)
    z = np.minimum(t, c)
    delta = t <= c
    return z, delta


def simulate_dataset(config: SimConfig) -> tuple[SurvivalDataset, GroundTruth]:
    """One full draw: features, ground truth, observed survival data."""
    rng = np.random.default_rng(config.seed)
    x = gen_features(config, rng)
    truth = gen_truth(x, config, rng)
    z, delta = gen_survival(x, truth, config, rng)
    return validate_dataset(x, z, delta), truth

"""Quantile one-hot binarization of continuous features.

Interval convention: with interior boundaries mu_1 < ... < mu_d, bin l
(0-based) is (mu_l, mu_{l+1}] with mu_0 = -inf and mu_{d+1} = +inf, so a
value equal to a boundary falls in the bin to its left, and unseen data
outside the fitted range lands in the edge bins.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .data import BlockLayout, SurvivalDataset, ValidationError


def empirical_quantile(x: np.ndarray, alpha: float) -> float:
    """Order-alpha empirical quantile: the value at 1-based index ceil(alpha*n)
    in the sorted sample (lowest observation for alpha near 0)."""
    xs = np.sort(np.asarray(x, dtype=np.float64).reshape(-1))
    n = xs.shape[0]
    if n == 0:
        raise ValidationError("quantile of empty sample")
    # the small epsilon absorbs float noise in alpha*n when the product is
    # mathematically an integer (e.g. 0.14 * 100 -> 14.000000000000002)
    idx = max(1, math.ceil(alpha * n - 1e-9))
    return float(xs[min(idx, n) - 1])


@dataclass(frozen=True)
class BinningScheme:
    """Fitted per-feature quantile grids.

    ``boundaries[j]`` are the strictly increasing interior boundaries of
    feature j (empty when the feature cannot support two bins), and
    ``counts[j]`` the per-bin occupancies on the fit data. ``layout`` spans
    usable features only, in feature order; ``feature_ids`` maps block index
    back to the original feature column.
    """

    boundaries: list[np.ndarray]
    counts: list[np.ndarray]
    usable: tuple[bool, ...]
    layout: BlockLayout = field(compare=False, default=None)
    feature_ids: np.ndarray = field(compare=False, default=None)

    def __post_init__(self):
        ids = np.flatnonzero(np.asarray(self.usable, dtype=bool))
        sizes = tuple(len(self.boundaries[j]) + 1 for j in ids)
        object.__setattr__(self, "layout", BlockLayout(sizes))
        object.__setattr__(self, "feature_ids", ids)

    @property
    def n_features(self) -> int:
        return len(self.boundaries)

    def counts_flat(self) -> np.ndarray:
        """Fit-data bin counts concatenated over usable blocks."""
        if self.feature_ids.size == 0:
            return np.zeros(0, dtype=np.float64)
        return np.concatenate([np.asarray(self.counts[j], dtype=np.float64) for j in self.feature_ids])

    def to_dict(self) -> dict:
        return {
            "features": [
                {
                    "feature_index": int(j),
                    "boundaries": [float(v) for v in self.boundaries[j]],
                    "counts": [int(v) for v in self.counts[j]],
                }
                for j in range(self.n_features)
            ]
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "BinningScheme":
        feats = sorted(obj["features"], key=lambda f: int(f["feature_index"]))
        bounds = [np.asarray(f["boundaries"], dtype=np.float64) for f in feats]
        counts = [np.asarray(f["counts"], dtype=np.int64) for f in feats]
        usable = tuple(len(b) >= 1 for b in bounds)
        return cls(boundaries=bounds, counts=counts, usable=usable)


@dataclass(frozen=True)
class BinarizedDesign:
    """One-hot design stored as per-row bin indices, one active column per block.

    ``bin_indices[i, b]`` is the bin of row i inside block b; the flat column
    index is ``layout.offsets[b] + bin_indices[i, b]``. Equivalent to a sparse
    0/1 matrix with exactly one 1 per (row, block).
    """

    bin_indices: np.ndarray
    layout: BlockLayout
    feature_ids: np.ndarray
    scheme: BinningScheme | None = None

    @property
    def n(self) -> int:
        return self.bin_indices.shape[0]

    @property
    def n_blocks(self) -> int:
        return self.bin_indices.shape[1]

    def column_index(self) -> np.ndarray:
        """Flat column index per (row, block); lazily cached and read-only."""
        cols = getattr(self, "_column_cache", None)
        if cols is None:
            cols = self.bin_indices + self.layout.offsets[None, :]
            cols.setflags(write=False)
            object.__setattr__(self, "_column_cache", cols)
        return cols

    def column_counts(self) -> np.ndarray:
        """Occupancy of every column among this design's own rows."""
        if self.n_blocks == 0:
            return np.zeros(0, dtype=np.float64)
        return np.bincount(
            self.column_index().ravel(), minlength=self.layout.total
        ).astype(np.float64)

    def row_subset(self, rows: np.ndarray) -> "BinarizedDesign":
        return BinarizedDesign(
            bin_indices=self.bin_indices[rows],
            layout=self.layout,
            feature_ids=self.feature_ids,
            scheme=self.scheme,
        )

    def to_dense(self) -> np.ndarray:
        """Explicit 0/1 matrix; test and oracle use only."""
        dense = np.zeros((self.n, self.layout.total if self.n_blocks else 0))
        if self.n_blocks:
            rows = np.repeat(np.arange(self.n), self.n_blocks)
            dense[rows, self.column_index().ravel()] = 1.0
        return dense


def _feature_matrix(data) -> np.ndarray:
    if isinstance(data, SurvivalDataset):
        return data.features
    x = np.asarray(data, dtype=np.float64)
    if x.ndim != 2:
        raise ValidationError(f"feature matrix must be 2-d, got shape {x.shape}")
    return x


def fit_bins(data, bins: int | list[int] | np.ndarray = 50) -> BinningScheme:
    """Fit per-feature quantile grids with ``bins`` intervals per feature.

    Interior boundaries sit at quantile orders l/(bins), l = 1..bins-1.
    Duplicate quantiles collapse, and boundaries equal to the column maximum
    are dropped so every fitted bin is occupied; a feature left without any
    boundary (a constant column) is flagged unusable and excluded from the
    design layout.
    """
    x = _feature_matrix(data)
    n, p = x.shape
    if np.isscalar(bins):
        req = np.full(p, int(bins), dtype=np.int64)
    else:
        req = np.asarray(bins, dtype=np.int64).reshape(-1)
        if req.shape[0] != p:
            raise ValidationError(f"{req.shape[0]} bin counts for {p} features")
    if (req < 2).any():
        raise ValidationError("need at least 2 bins per feature")

    bounds: list[np.ndarray] = []
    counts: list[np.ndarray] = []
    usable = np.zeros(p, dtype=bool)
    for j in range(p):
        col = np.sort(x[:, j])
        d = int(req[j]) - 1
        # integer ceil of l*n/bins: float quantile orders would round up on
        # products that are mathematically whole
        idx = -(np.arange(1, d + 1, dtype=np.int64) * n // -(d + 1))
        idx = np.clip(idx, 1, n)
        b = np.unique(col[idx - 1])
        b = b[b < col[-1]]
        bounds.append(b)
        if b.size == 0:
            counts.append(np.array([n], dtype=np.int64))
            continue
        usable[j] = True
        assign = np.searchsorted(b, x[:, j], side="left")
        counts.append(np.bincount(assign, minlength=b.size + 1).astype(np.int64))
    return BinningScheme(boundaries=bounds, counts=counts, usable=tuple(bool(u) for u in usable))


def transform(data, scheme: BinningScheme) -> BinarizedDesign:
    """Assign rows to the fitted bins (edge bins absorb out-of-range values)."""
    x = _feature_matrix(data)
    if x.shape[1] != scheme.n_features:
        raise ValidationError(
            f"{x.shape[1]} feature columns for a scheme fitted on {scheme.n_features}"
        )
    ids = scheme.feature_ids
    bin_idx = np.empty((x.shape[0], ids.size), dtype=np.int64)
    for b, j in enumerate(ids):
        bin_idx[:, b] = np.searchsorted(scheme.boundaries[j], x[:, j], side="left")
    return BinarizedDesign(
        bin_indices=bin_idx, layout=scheme.layout, feature_ids=ids, scheme=scheme
    )


def binarize_at_cutpoints(data, cutpoints: list[np.ndarray]) -> BinarizedDesign:
    """One-hot design split only at the given cut-points.

    Features with zero cut-points contribute no columns; with none anywhere
    the design is empty (its linear predictor is identically zero).
    """
    x = _feature_matrix(data)
    if x.shape[1] != len(cutpoints):
        raise ValidationError(
            f"{len(cutpoints)} cut-point lists for {x.shape[1]} features"
        )
    bounds = []
    for j, c in enumerate(cutpoints):
        c = np.asarray(c, dtype=np.float64).reshape(-1)
        if c.size and (np.diff(c) <= 0).any():
            raise ValidationError(f"cut-points of feature {j} must strictly increase")
        bounds.append(c)
    usable = np.array([c.size >= 1 for c in bounds])
    ids = np.flatnonzero(usable)
    bin_idx = np.empty((x.shape[0], ids.size), dtype=np.int64)
    counts = []
    for b, j in enumerate(ids):
        bin_idx[:, b] = np.searchsorted(bounds[j], x[:, j], side="left")
    scheme = BinningScheme(
        boundaries=bounds,
        counts=[
            np.bincount(
                np.searchsorted(bounds[j], x[:, j], side="left"),
                minlength=bounds[j].size + 1,
            )
            if usable[j]
            else np.array([x.shape[0]], dtype=np.int64)
            for j in range(len(bounds))
        ],
        usable=tuple(bool(u) for u in usable),
    )
    return BinarizedDesign(
        bin_indices=bin_idx, layout=scheme.layout, feature_ids=ids, scheme=scheme
    )

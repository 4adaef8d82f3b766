"""Core containers for right-censored survival data and block-structured coefficients."""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass, field

import numpy as np


class ValidationError(ValueError):
    """Raised when input data violates the documented contracts."""


@dataclass(frozen=True)
class SurvivalDataset:
    """Right-censored sample: features X (n, p), follow-up times Z, event flags.

    ``events[i]`` is True when the failure was observed, False when censored.
    Arrays are locked after construction; build instances through
    :func:`validate_dataset` or :func:`load_csv`.
    """

    features: np.ndarray
    times: np.ndarray
    events: np.ndarray
    feature_names: tuple[str, ...]
    rescaled: bool = False

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def p(self) -> int:
        return self.features.shape[1]

    @property
    def has_events(self) -> bool:
        return bool(self.events.any())

    def subset(self, rows: np.ndarray) -> "SurvivalDataset":
        """Row subset (fold extraction). Copies, so the result is writable-locked too."""
        return _freeze(
            SurvivalDataset(
                features=self.features[rows].copy(),
                times=self.times[rows].copy(),
                events=self.events[rows].copy(),
                feature_names=self.feature_names,
                rescaled=self.rescaled,
            )
        )


def _freeze(ds: SurvivalDataset) -> SurvivalDataset:
    for arr in (ds.features, ds.times, ds.events):
        arr.flags.writeable = False
    return ds


def validate_dataset(
    features,
    times=None,
    events=None,
    feature_names=None,
    rescale: bool = False,
) -> SurvivalDataset:
    """Check and assemble a :class:`SurvivalDataset`.

    Accepts either an already-validated dataset (returned unchanged, so the
    operation is idempotent) or raw arrays. Raises :class:`ValidationError`
    naming the offending row/column for non-finite entries, negative times,
    or event flags outside {0, 1}. An all-censored sample is accepted with a
    warning since the partial likelihood is then degenerate.

    When ``rescale`` is set, each feature column is mapped affinely onto
    [0, 1]; detection is invariant to this, so it is off by default.
    """
    if isinstance(features, SurvivalDataset):
        return features

    x = np.asarray(features, dtype=np.float64)
    if x.ndim != 2:
        raise ValidationError(f"feature matrix must be 2-d, got shape {x.shape}")
    n, p = x.shape
    z = np.asarray(times, dtype=np.float64).reshape(-1)
    d_raw = np.asarray(events).reshape(-1)
    if z.shape[0] != n or d_raw.shape[0] != n:
        raise ValidationError(
            f"length mismatch: {n} feature rows, {z.shape[0]} times, {d_raw.shape[0]} events"
        )
    if n == 0:
        raise ValidationError("empty dataset")

    if feature_names is None:
        feature_names = tuple(f"x{j}" for j in range(p))
    else:
        feature_names = tuple(str(s) for s in feature_names)
        if len(feature_names) != p:
            raise ValidationError(
                f"{len(feature_names)} feature names for {p} feature columns"
            )

    bad = ~np.isfinite(x)
    if bad.any():
        i, j = np.argwhere(bad)[0]
        raise ValidationError(
            f"non-finite value at row {i}, column {feature_names[j]}"
        )
    if not np.isfinite(z).all():
        i = int(np.flatnonzero(~np.isfinite(z))[0])
        raise ValidationError(f"non-finite survival time at row {i}")
    if (z < 0).any():
        i = int(np.flatnonzero(z < 0)[0])
        raise ValidationError(f"negative survival time at row {i}")

    d_float = np.asarray(d_raw, dtype=np.float64)
    if not np.isfinite(d_float).all() or not np.isin(d_float, (0.0, 1.0)).all():
        i = int(np.flatnonzero(~np.isin(d_float, (0.0, 1.0)))[0])
        raise ValidationError(f"event indicator must be 0 or 1 at row {i}")
    d = d_float.astype(bool)

    if not d.any():
        warnings.warn("all subjects censored; fit may be degenerate", stacklevel=2)

    if rescale:
        lo = x.min(axis=0)
        span = x.max(axis=0) - lo
        span[span == 0.0] = 1.0
        x = (x - lo) / span

    return _freeze(
        SurvivalDataset(
            features=np.ascontiguousarray(x),
            times=z.copy(),
            events=d,
            feature_names=feature_names,
            rescaled=bool(rescale),
        )
    )


# ---------------------------------------------------------------------------
# block layout over concatenated one-hot coefficient groups


@dataclass(frozen=True)
class BlockLayout:
    """Sizes and offsets of per-feature coefficient blocks.

    Block j occupies ``values[offsets[j] : offsets[j] + bins_per_block[j]]``
    in any flat coefficient vector over the layout.
    """

    bins_per_block: tuple[int, ...]
    offsets: np.ndarray = field(compare=False, default=None)

    def __post_init__(self):
        sizes = np.asarray(self.bins_per_block, dtype=np.int64).reshape(-1)
        if (sizes < 2).any():
            bad = int(np.flatnonzero(sizes < 2)[0])
            raise ValidationError(
                f"block {bad} has {sizes[bad]} bins; every block needs at least 2"
            )
        off = np.concatenate((np.zeros(1, dtype=np.int64), np.cumsum(sizes, dtype=np.int64)))
        off.flags.writeable = False
        object.__setattr__(self, "offsets", off[:-1])
        object.__setattr__(self, "_bounds", off)

    @property
    def n_blocks(self) -> int:
        return len(self.bins_per_block)

    @property
    def total(self) -> int:
        return int(self._bounds[-1])

    @property
    def edges(self) -> np.ndarray:
        """Block boundaries as one array: block j spans edges[j]:edges[j+1]."""
        return self._bounds

    def bounds(self, j: int) -> tuple[int, int]:
        if not 0 <= j < self.n_blocks:
            raise IndexError(f"block index {j} out of range for {self.n_blocks} blocks")
        return int(self._bounds[j]), int(self._bounds[j + 1])


def block_slice(values: np.ndarray, layout: BlockLayout, j: int) -> np.ndarray:
    """View of block j inside a flat vector over ``layout``."""
    a, b = layout.bounds(j)
    return values[a:b]


@dataclass(frozen=True)
class BlockVector:
    """Flat coefficient vector plus the layout that carves it into blocks."""

    values: np.ndarray
    layout: BlockLayout

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64).reshape(-1)
        if v.shape[0] != self.layout.total:
            raise ValidationError(
                f"vector of length {v.shape[0]} for layout of size {self.layout.total}"
            )
        object.__setattr__(self, "values", v)

    def block(self, j: int) -> np.ndarray:
        return block_slice(self.values, self.layout, j)

    def copy(self) -> "BlockVector":
        return BlockVector(self.values.copy(), self.layout)

    @classmethod
    def zeros(cls, layout: BlockLayout) -> "BlockVector":
        return cls(np.zeros(layout.total), layout)


@dataclass
class FitResult:
    """Solver output: coefficients plus convergence bookkeeping."""

    beta: BlockVector
    gamma: float
    objective_trace: np.ndarray
    iterations: int
    converged: bool
    message: str = ""


@dataclass
class CutPointModel:
    """Detected cut-points per feature, with jump amplitudes and counts.

    ``refit_coef[j]`` holds the constrained refit coefficients on the
    cut-point-binarized design (length k_hat[j] + 1) once a refit has been
    attached; it stays None otherwise and is not part of the JSON schema.
    """

    feature_names: tuple[str, ...]
    cutpoints: list[np.ndarray]
    amplitudes: list[np.ndarray]
    refit_coef: list[np.ndarray] | None = None

    def __post_init__(self):
        if not (len(self.cutpoints) == len(self.amplitudes) == len(self.feature_names)):
            raise ValidationError("per-feature lists must have equal length")
        for j, (c, a) in enumerate(zip(self.cutpoints, self.amplitudes)):
            if len(c) != len(a):
                raise ValidationError(
                    f"feature {j}: {len(c)} cut-points but {len(a)} amplitudes"
                )

    @property
    def k_hat(self) -> np.ndarray:
        return np.array([len(c) for c in self.cutpoints], dtype=np.int64)

    def to_dict(self) -> dict:
        return {
            "features": [
                {
                    "name": self.feature_names[j],
                    "cutpoints": [float(v) for v in self.cutpoints[j]],
                    "amplitudes": [float(v) for v in self.amplitudes[j]],
                    "k_hat": int(len(self.cutpoints[j])),
                }
                for j in range(len(self.feature_names))
            ]
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "CutPointModel":
        feats = obj["features"]
        names = tuple(f["name"] for f in feats)
        cuts = [np.asarray(f["cutpoints"], dtype=np.float64) for f in feats]
        amps = [np.asarray(f["amplitudes"], dtype=np.float64) for f in feats]
        for f, c in zip(feats, cuts):
            if int(f["k_hat"]) != len(c):
                raise ValidationError(
                    f"feature {f['name']}: k_hat={f['k_hat']} but {len(c)} cut-points"
                )
        return cls(feature_names=names, cutpoints=cuts, amplitudes=amps)


# ---------------------------------------------------------------------------
# CSV interface: columns `time`, `event` (0/1), then feature columns


def load_csv(path, rescale: bool = False) -> SurvivalDataset:
    """Read a survival dataset from CSV (UTF-8, comma-separated, headered)."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ValidationError(f"{path}: empty file") from None
        header = [h.strip() for h in header]
        if "time" not in header or "event" not in header:
            raise ValidationError(f"{path}: header must contain 'time' and 'event'")
        t_col = header.index("time")
        e_col = header.index("event")
        feat_cols = [k for k in range(len(header)) if k not in (t_col, e_col)]
        rows = []
        for ln, rec in enumerate(reader, start=2):
            if not rec:
                continue
            if len(rec) != len(header):
                raise ValidationError(f"{path}: line {ln} has {len(rec)} fields, expected {len(header)}")
            try:
                rows.append([float(v) for v in rec])
            except ValueError:
                raise ValidationError(f"{path}: non-numeric field on line {ln}") from None
    if not rows:
        raise ValidationError(f"{path}: no data rows")
    mat = np.asarray(rows, dtype=np.float64)
    return validate_dataset(
        mat[:, feat_cols],
        mat[:, t_col],
        mat[:, e_col],
        feature_names=[header[k] for k in feat_cols],
        rescale=rescale,
    )


def save_csv(ds: SurvivalDataset, path) -> None:
    """Write the dataset back out; float formatting round-trips exactly."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write(",".join(["time", "event", *ds.feature_names]) + "\n")
        for i in range(ds.n):
            cells = [repr(float(ds.times[i])), str(int(ds.events[i]))]
            cells.extend(repr(float(v)) for v in ds.features[i])
            fh.write(",".join(cells) + "\n")

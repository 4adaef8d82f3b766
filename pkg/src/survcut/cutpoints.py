"""Turning fitted block coefficients into cut-point estimates.

A jump at position k (0-based, k >= 1) inside a block means the step
function changes value between bin k-1 and bin k, i.e. exactly at the
fitted boundary with index k-1. Consecutive jump positions are treated as
one smeared detection and reduced to the largest jump among them.
"""

from __future__ import annotations

import numpy as np

from .binarize import BinningScheme
from .data import BlockVector, CutPointModel, ValidationError

DEFAULT_RELATIVE_TOLERANCE = 1e-8


def active_set(block_values: np.ndarray, tolerance: float) -> np.ndarray:
    """Positions k >= 1 with |v[k] - v[k-1]| > tolerance, ascending."""
    v = np.asarray(block_values, dtype=np.float64).reshape(-1)
    if tolerance < 0:
        raise ValidationError("tolerance must be non-negative")
    return np.flatnonzero(np.abs(np.diff(v)) > tolerance) + 1


def denoise(jumps: np.ndarray, amplitudes: np.ndarray) -> np.ndarray:
    """Keep one jump per run of consecutive positions: the largest amplitude
    in absolute value, ties resolved toward the smallest position."""
    jumps = np.asarray(jumps, dtype=np.int64).reshape(-1)
    amps = np.asarray(amplitudes, dtype=np.float64).reshape(-1)
    if jumps.shape[0] != amps.shape[0]:
        raise ValidationError("one amplitude per jump required")
    if jumps.size == 0:
        return jumps
    if (np.diff(jumps) <= 0).any():
        raise ValidationError("jump positions must strictly increase")
    keep = []
    start = 0
    for i in range(1, jumps.size + 1):
        if i == jumps.size or jumps[i] != jumps[i - 1] + 1:
            seg = np.abs(amps[start:i])
            keep.append(jumps[start + int(np.argmax(seg))])
            start = i
    return np.asarray(keep, dtype=np.int64)


def extract_cutpoints(
    beta: BlockVector,
    scheme: BinningScheme,
    feature_names=None,
    jump_tolerance: float | None = None,
) -> CutPointModel:
    """Detected cut-points for every original feature.

    The default jump tolerance is 1e-8 relative to each block's sup norm,
    so solver-level noise never spawns spurious detections. Unusable
    (constant) features report zero cut-points.
    """
    if beta.layout != scheme.layout:
        raise ValidationError("coefficient layout does not match the scheme")
    p = scheme.n_features
    if feature_names is None:
        feature_names = tuple(f"x{j}" for j in range(p))
    else:
        feature_names = tuple(str(s) for s in feature_names)
        if len(feature_names) != p:
            raise ValidationError(f"{len(feature_names)} names for {p} features")

    cuts: list[np.ndarray] = [np.zeros(0) for _ in range(p)]
    amps: list[np.ndarray] = [np.zeros(0) for _ in range(p)]
    for b, j in enumerate(scheme.feature_ids):
        block = beta.block(b)
        tol = (
            jump_tolerance
            if jump_tolerance is not None
            else DEFAULT_RELATIVE_TOLERANCE * float(np.abs(block).max(initial=0.0))
        )
        jumps = active_set(block, tol)
        if jumps.size == 0:
            continue
        diffs = np.diff(block)
        kept = denoise(jumps, diffs[jumps - 1])
        cuts[j] = scheme.boundaries[j][kept - 1]
        amps[j] = diffs[kept - 1]
    return CutPointModel(feature_names=feature_names, cutpoints=cuts, amplitudes=amps)

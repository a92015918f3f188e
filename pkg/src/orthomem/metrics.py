"""Segmentation overlap, boundary distance, and area-based function metrics.

Masks are 2-D boolean numpy arrays.  Conventions that the literature leaves
open are pinned here and exercised by the tests:

* Dice of two empty masks is 1.0 (both raters agree on absence); empty versus
  non-empty is 0.0.
* hd95 pools the two directed boundary-distance multisets and takes a single
  95th percentile with linear interpolation ("pooled"); the max of the two
  directed percentiles is available as "max-directed".
* Distances are in pixels; an optional isotropic ``spacing`` scales hd95.
* Variances/standard deviations are population (divide by N).
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np
from scipy.spatial import cKDTree

from .errors import FormatError, UndefinedMetricError

__all__ = [
    "EfStats",
    "dice",
    "boundary_points",
    "hd95",
    "ef_area",
    "ef_stats",
    "temporal_matching_error",
    "load_pgm",
    "pgm_bytes",
]

HD95_MODES = ("pooled", "max-directed")


def _as_mask(a, name="mask") -> np.ndarray:
    a = np.asarray(a)
    if a.dtype != bool:
        raise ValueError(f"{name} must be boolean, got dtype {a.dtype}")
    if a.ndim != 2 or 0 in a.shape:
        raise ValueError(f"{name} must be a non-empty 2-D grid, got shape {a.shape}")
    return a


def dice(a, b) -> float:
    """2|A n B| / (|A| + |B|); defined as 1.0 when both masks are empty."""
    a = _as_mask(a, "a")
    b = _as_mask(b, "b")
    if a.shape != b.shape:
        raise ValueError(f"mask shapes differ: {a.shape} vs {b.shape}")
    total = int(a.sum()) + int(b.sum())
    if total == 0:
        return 1.0
    return 2.0 * int(np.logical_and(a, b).sum()) / total


def boundary_points(mask) -> np.ndarray:
    """(N, 2) row/col coordinates of boundary pixels.

    A mask pixel is boundary when at least one 4-neighbour is outside the mask
    or it sits on the image edge (padding with background makes the edge case
    fall out of the same test).
    """
    mask = _as_mask(mask)
    padded = np.zeros((mask.shape[0] + 2, mask.shape[1] + 2), dtype=bool)
    padded[1:-1, 1:-1] = mask
    interior = (
        padded[:-2, 1:-1] & padded[2:, 1:-1] & padded[1:-1, :-2] & padded[1:-1, 2:]
    )
    return np.argwhere(mask & ~interior)


def _percentile_linear(values, q) -> float:
    """Linear interpolation between order statistics at rank (n-1) * q/100.

    Pinned explicitly (value = x[lo] + (x[hi] - x[lo]) * frac) so the result
    does not depend on any library's internal interpolation arithmetic.
    """
    xs = np.sort(np.asarray(values, dtype=float))
    if xs.size == 1:
        return float(xs[0])
    pos = (xs.size - 1) * (q / 100.0)
    lo = int(np.floor(pos))
    hi = int(np.ceil(pos))
    frac = pos - lo
    return float(xs[lo] + (xs[hi] - xs[lo]) * frac)


def hd95(a, b, mode="pooled", spacing=1.0) -> float:
    """95th percentile of boundary-to-boundary nearest-neighbour distances.

    Both masks must be non-empty.  "pooled" (default) interpolates the 95th
    percentile of the union of both directed distance multisets; the
    "max-directed" variant takes the max of the per-direction percentiles.
    """
    a = _as_mask(a, "a")
    b = _as_mask(b, "b")
    if a.shape != b.shape:
        raise ValueError(f"mask shapes differ: {a.shape} vs {b.shape}")
    if mode not in HD95_MODES:
        raise ValueError(f"unknown hd95 mode {mode!r}; expected one of {HD95_MODES}")
    if not a.any() or not b.any():
        raise UndefinedMetricError("hd95 is undefined for an empty mask")
    pa = boundary_points(a).astype(float)
    pb = boundary_points(b).astype(float)
    d_ab = cKDTree(pb).query(pa)[0]
    d_ba = cKDTree(pa).query(pb)[0]
    if mode == "pooled":
        value = _percentile_linear(np.concatenate([d_ab, d_ba]), 95.0)
    else:
        value = max(_percentile_linear(d_ab, 95.0), _percentile_linear(d_ba, 95.0))
    return value * float(spacing)


def ef_area(a_ed, a_es) -> float:
    """Area-change fraction (a_ed - a_es) / a_ed between the two phases."""
    a_ed = float(a_ed)
    a_es = float(a_es)
    if not (np.isfinite(a_ed) and a_ed > 0.0):
        raise ValueError(f"reference-phase area must be positive, got {a_ed}")
    if not (np.isfinite(a_es) and a_es >= 0.0):
        raise ValueError(f"contracted-phase area must be non-negative, got {a_es}")
    return (a_ed - a_es) / a_ed


class EfStats(NamedTuple):
    """Pearson correlation (None when a series is constant), mean bias, population std."""

    corr: float | None
    bias: float
    std: float


def ef_stats(pred, ref) -> EfStats:
    """Agreement statistics between predicted and reference value series.

    bias = mean(pred - ref); std = population standard deviation of the
    differences.  The correlation is undefined when either series is constant
    and is reported as None (bias and std are still returned).
    """
    pred = np.asarray(pred, dtype=float)
    ref = np.asarray(ref, dtype=float)
    if pred.shape != ref.shape or pred.ndim != 1 or pred.shape[0] < 2:
        raise ValueError("pred and ref must be equal-length 1-D series with >= 2 entries")
    diff = pred - ref
    bias = float(diff.mean())
    std = float(np.sqrt(np.mean((diff - diff.mean()) ** 2)))
    dp = pred - pred.mean()
    dr = ref - ref.mean()
    denom = np.sqrt(np.sum(dp * dp) * np.sum(dr * dr))
    corr = None if denom == 0.0 else float(np.sum(dp * dr) / denom)
    return EfStats(corr=corr, bias=bias, std=std)


def temporal_matching_error(pred_frames, ref_frames) -> float:
    """Mean absolute gap between the frame-to-frame Dice chains of two sequences.

    Both sequences must have the same length T >= 2 and uniform frame shape;
    Dice uses this module's empty-empty = 1 convention.
    """
    pred = [_as_mask(m, "pred frame") for m in pred_frames]
    ref = [_as_mask(g, "ref frame") for g in ref_frames]
    if len(pred) != len(ref):
        raise ValueError(f"sequence lengths differ: {len(pred)} vs {len(ref)}")
    if len(pred) < 2:
        raise ValueError("temporal matching needs at least 2 frames")
    for seq in (pred, ref):
        if any(m.shape != seq[0].shape for m in seq):
            raise ValueError("all frames in a sequence must share one shape")
    total = 0.0
    for t in range(1, len(pred)):
        total += abs(dice(pred[t], pred[t - 1]) - dice(ref[t], ref[t - 1]))
    return total / (len(pred) - 1)


def load_pgm(path) -> np.ndarray:
    """Read a binary PGM (P5, maxval 255); values above 127 are foreground."""
    with open(path, "rb") as f:
        data = f.read()
    tokens = []
    i = 0
    while len(tokens) < 4 and i < len(data):
        if data[i : i + 1].isspace():
            i += 1
        elif data[i : i + 1] == b"#":
            while i < len(data) and data[i : i + 1] not in (b"\n", b"\r"):
                i += 1
        else:
            j = i
            while j < len(data) and not data[j : j + 1].isspace():
                j += 1
            tokens.append(data[i:j])
            i = j
    if len(tokens) < 4 or tokens[0] != b"P5":
        raise FormatError(f"{path}: not a binary P5 PGM")
    try:
        width, height, maxval = int(tokens[1]), int(tokens[2]), int(tokens[3])
    except ValueError:
        raise FormatError(f"{path}: malformed PGM header")
    if maxval != 255:
        raise FormatError(f"{path}: expected maxval 255, got {maxval}")
    i += 1  # single whitespace after maxval
    pixels = data[i : i + width * height]
    if len(pixels) != width * height:
        raise FormatError(f"{path}: payload has {len(pixels)} bytes, expected {width * height}")
    img = np.frombuffer(pixels, dtype=np.uint8).reshape(height, width)
    return img > 127


def pgm_bytes(mask) -> bytes:
    """Serialise a boolean mask as a P5 PGM (foreground 255, background 0)."""
    mask = _as_mask(mask)
    header = f"P5\n{mask.shape[1]} {mask.shape[0]}\n255\n".encode("ascii")
    return header + (mask.astype(np.uint8) * 255).tobytes()

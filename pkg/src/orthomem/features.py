"""Polarity-aware feature enhancement for speckled intensity maps.

A feature map X (batch x channel x height x width) is split against its local
mean field M into a positive residual (structure brighter than its
surroundings) and a negative residual (darker, homogeneous regions).  The two
residuals run through independent conv-affine-relu branches and are recombined
per pixel by a learned sigmoid gate.  Everything is plain float64 numpy with a
fixed accumulation order, so outputs are reproducible across runs.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass

import numpy as np

from .errors import FormatError

__all__ = [
    "BranchWeights",
    "local_field",
    "decompose",
    "branch",
    "fuse",
    "enhance",
    "random_branch_weights",
    "load_branch_weights",
    "save_branch_weights",
]


def _as_tensor4(x, name="x") -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim != 4:
        raise ValueError(f"{name} must be 4-D (b, c, h, w), got ndim={x.ndim}")
    if not np.all(np.isfinite(x)):
        raise ValueError(f"{name} contains non-finite entries")
    return x


@dataclass(frozen=True)
class BranchWeights:
    """Weights for the two branches and the fusion gate.

    Conv kernels are (C, C, 3, 3); ``scale``/``shift`` are the per-channel
    inference-mode normalisation affine (no batch statistics are kept);
    ``gate_kernel`` is (C, 2C) acting on the channel-concatenated branches,
    ``gate_bias`` is (C,).
    """

    conv_pos: np.ndarray
    scale_pos: np.ndarray
    shift_pos: np.ndarray
    conv_neg: np.ndarray
    scale_neg: np.ndarray
    shift_neg: np.ndarray
    gate_kernel: np.ndarray
    gate_bias: np.ndarray

    def __post_init__(self):
        for name in ("conv_pos", "scale_pos", "shift_pos", "conv_neg",
                     "scale_neg", "shift_neg", "gate_kernel", "gate_bias"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=float))
        c = self.channels
        expect = {
            "conv_pos": (c, c, 3, 3), "scale_pos": (c,), "shift_pos": (c,),
            "conv_neg": (c, c, 3, 3), "scale_neg": (c,), "shift_neg": (c,),
            "gate_kernel": (c, 2 * c), "gate_bias": (c,),
        }
        for name, shape in expect.items():
            arr = getattr(self, name)
            if arr.shape != shape:
                raise ValueError(f"{name} must have shape {shape}, got {arr.shape}")
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"{name} contains non-finite entries")

    @property
    def channels(self) -> int:
        return int(np.asarray(self.conv_pos).shape[0])


def _window_sums(x, k):
    """Per-axis sliding sums over a centred k-window, in-image entries only.

    Separable direct shifted adds (no running-sum cancellation): first along
    height, then width.
    """
    r = k // 2
    b, c, h, w = x.shape
    sh = np.zeros_like(x)
    for d in range(-r, r + 1):
        lo = max(0, -d)
        hi = h - max(0, d)
        sh[:, :, lo:hi, :] += x[:, :, lo + d : hi + d, :]
    out = np.zeros_like(sh)
    for d in range(-r, r + 1):
        lo = max(0, -d)
        hi = w - max(0, d)
        out[:, :, :, lo:hi] += sh[:, :, :, lo + d : hi + d]
    return out


def _window_counts(n, k) -> np.ndarray:
    i = np.arange(n)
    r = k // 2
    return np.minimum(i + r, n - 1) - np.maximum(i - r, 0) + 1.0


def local_field(x, k) -> np.ndarray:
    """Local mean field: same-shape K x K average with count-valid borders.

    Border windows average over in-image pixels only; zero padding would drag
    the field estimate down exactly where attenuation correction matters most.
    """
    x = _as_tensor4(x)
    if k % 2 != 1 or k < 1:
        raise ValueError(f"window size must be odd and positive, got {k}")
    h, w = x.shape[2], x.shape[3]
    # beyond 2*dim - 1 on the larger axis every window covers the whole map
    if k > 2 * max(h, w) - 1:
        raise ValueError(f"window {k} too large for {h}x{w} map")
    counts = np.outer(_window_counts(h, k), _window_counts(w, k))
    return _window_sums(x, k) / counts


def decompose(x, m):
    """Polarity split against the local field: relu(x - m) and relu(m - x).

    The two parts are disjoint (one is always exactly zero) and
    x_plus - x_minus + m reconstructs x up to one rounding of x - m.
    """
    x = _as_tensor4(x)
    m = _as_tensor4(m, "m")
    if x.shape != m.shape:
        raise ValueError(f"shape mismatch: {x.shape} vs {m.shape}")
    d = x - m
    return np.maximum(d, 0.0), np.maximum(-d, 0.0)


def _conv3x3(x, kern) -> np.ndarray:
    """3x3 convolution, stride 1, zero padding 1, fixed accumulation order.

    Accumulates contributions in ascending (c_in, dy, dx) order per output
    channel, matching a scalar reference loop term for term.
    """
    b, c_in, h, w = x.shape
    c_out = kern.shape[0]
    xp = np.zeros((b, c_in, h + 2, w + 2))
    xp[:, :, 1:-1, 1:-1] = x
    out = np.zeros((b, c_out, h, w))
    for co in range(c_out):
        acc = out[:, co]
        for ci in range(c_in):
            for dy in range(3):
                for dx in range(3):
                    acc += kern[co, ci, dy, dx] * xp[:, ci, dy : dy + h, dx : dx + w]
    return out


def branch(x, kern, scale, shift) -> np.ndarray:
    """One pathway: 3x3 conv -> per-channel affine -> relu (inference mode)."""
    x = _as_tensor4(x)
    kern = np.asarray(kern, dtype=float)
    if kern.ndim != 4 or kern.shape[1] != x.shape[1] or kern.shape[2:] != (3, 3):
        raise ValueError(f"kernel shape {kern.shape} incompatible with input {x.shape}")
    scale = np.asarray(scale, dtype=float).reshape(-1)
    shift = np.asarray(shift, dtype=float).reshape(-1)
    if scale.shape[0] != kern.shape[0] or shift.shape[0] != kern.shape[0]:
        raise ValueError("scale/shift must have one entry per output channel")
    y = _conv3x3(x, kern)
    y = y * scale[:, None, None] + shift[:, None, None]
    return np.maximum(y, 0.0)


def _sigmoid(x) -> np.ndarray:
    # branch-stable form avoids overflow in exp for large negative inputs
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def fuse(h_plus, h_minus, gate_kernel, gate_bias):
    """Per-pixel gated blend of the two branches.

    lambda = sigmoid(W_g [h_plus; h_minus] + bias) through a 1x1 convolution;
    the output is the convex combination lambda*h_plus + (1-lambda)*h_minus,
    so it lies between the branches elementwise.  Returns (z, lambda).
    lambda is open-interval (0,1) mathematically but saturates to exactly 0
    or 1 in double arithmetic once |pre-activation| exceeds about 37.
    """
    hp = _as_tensor4(h_plus, "h_plus")
    hn = _as_tensor4(h_minus, "h_minus")
    if hp.shape != hn.shape:
        raise ValueError(f"shape mismatch: {hp.shape} vs {hn.shape}")
    gate_kernel = np.asarray(gate_kernel, dtype=float)
    gate_bias = np.asarray(gate_bias, dtype=float).reshape(-1)
    c = hp.shape[1]
    if gate_kernel.shape != (c, 2 * c):
        raise ValueError(f"gate kernel must be {(c, 2 * c)}, got {gate_kernel.shape}")
    if gate_bias.shape[0] != c:
        raise ValueError(f"gate bias must have {c} entries, got {gate_bias.shape[0]}")
    cat = np.concatenate([hp, hn], axis=1)
    pre = np.einsum("oc,bchw->bohw", gate_kernel, cat) + gate_bias[None, :, None, None]
    lam = _sigmoid(pre)
    z = lam * hp + (1.0 - lam) * hn
    return z, lam


def enhance(x, k, weights: BranchWeights) -> np.ndarray:
    """Full pipeline: local field -> polarity split -> branches -> gated fuse."""
    x = _as_tensor4(x)
    if x.shape[1] != weights.channels:
        raise ValueError(f"input has {x.shape[1]} channels, weights expect {weights.channels}")
    m = local_field(x, k)
    x_plus, x_minus = decompose(x, m)
    h_plus = branch(x_plus, weights.conv_pos, weights.scale_pos, weights.shift_pos)
    h_minus = branch(x_minus, weights.conv_neg, weights.scale_neg, weights.shift_neg)
    z, _lam = fuse(h_plus, h_minus, weights.gate_kernel, weights.gate_bias)
    return z


def random_branch_weights(channels, seed=0) -> BranchWeights:
    """Seeded weight draw with fan-in scaled kernels; affine starts at identity."""
    rng = np.random.default_rng(seed)
    kscale = 1.0 / np.sqrt(9.0 * channels)
    gscale = 1.0 / np.sqrt(2.0 * channels)
    return BranchWeights(
        conv_pos=rng.standard_normal((channels, channels, 3, 3)) * kscale,
        scale_pos=np.ones(channels),
        shift_pos=np.zeros(channels),
        conv_neg=rng.standard_normal((channels, channels, 3, 3)) * kscale,
        scale_neg=np.ones(channels),
        shift_neg=np.zeros(channels),
        gate_kernel=rng.standard_normal((channels, 2 * channels)) * gscale,
        gate_bias=np.zeros(channels),
    )


_TENSOR_NAMES = ("conv_pos", "scale_pos", "shift_pos", "conv_neg",
                 "scale_neg", "shift_neg", "gate_kernel", "gate_bias")


def save_branch_weights(weights: BranchWeights, directory, manifest_name="weights.json") -> str:
    """Write each tensor as an OST1 file plus a manifest listing names/shapes."""
    from .io import write_ost1  # deferred to keep module import order simple

    os.makedirs(directory, exist_ok=True)
    manifest = {"channels": weights.channels, "tensors": {}}
    for name in _TENSOR_NAMES:
        fname = f"{name}.ost1"
        arr = getattr(weights, name)
        write_ost1(os.path.join(directory, fname), arr)
        manifest["tensors"][name] = {"file": fname, "dims": list(arr.shape)}
    path = os.path.join(directory, manifest_name)
    with open(path, "w", encoding="utf-8") as f:
        json.dump(manifest, f, indent=2, sort_keys=True)
        f.write("\n")
    return path


def load_branch_weights(manifest_path) -> BranchWeights:
    """Load weights from a manifest written by :func:`save_branch_weights`."""
    from .io import read_ost1

    with open(manifest_path, "r", encoding="utf-8") as f:
        manifest = json.load(f)
    if not isinstance(manifest, dict) or "tensors" not in manifest:
        raise FormatError("weights manifest must be an object with a 'tensors' map")
    tensors = manifest["tensors"]
    missing = [n for n in _TENSOR_NAMES if n not in tensors]
    if missing:
        raise FormatError(f"weights manifest missing tensors: {missing}")
    base = os.path.dirname(os.path.abspath(manifest_path))
    loaded = {}
    for name in _TENSOR_NAMES:
        entry = tensors[name]
        arr = read_ost1(os.path.join(base, entry["file"]))
        if "dims" in entry and list(arr.shape) != list(entry["dims"]):
            raise FormatError(
                f"tensor {name}: manifest dims {entry['dims']} != file dims {list(arr.shape)}"
            )
        loaded[name] = arr
    return BranchWeights(**loaded)

"""Trajectory driver: synthetic streams, ablation variants, recall probes.

Streams are generated from numpy's PCG64 generator (seeded through
SeedSequence so key, value, gate, and init draws are independent), which is
version-pinned through the package requirements; identical seeds give
byte-identical streams and therefore byte-identical runs.

Variant semantics on the unconstrained intermediate state S_euc:

* ``baseline``     -- S_euc unchanged (pure gated delta rule).
* ``no-ortho``     -- gamma * S_euc / (||S_euc||_F + eps): Frobenius norm is
                      pinned to gamma, no orthogonalisation.  With
                      gamma = ||S_euc||_F this reduces to the baseline.
* ``no-spectral``  -- polynomial projection without the gamma scale; the
                      state lives on the unit manifold (all sigma = 1).
* ``full``         -- projection plus gamma scale (all sigma = gamma).
"""

from __future__ import annotations

import dataclasses
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import Enum
from typing import NamedTuple

import numpy as np

from . import state as st
from .diagnostics import TrajectoryReport, step_diagnostics, summarize
from .linalg import frobenius_norm, svd

__all__ = [
    "Variant",
    "GateSchedule",
    "StreamSpec",
    "VariantConfig",
    "Stream",
    "RunResult",
    "generate_stream",
    "run",
    "run_many",
    "recall",
]


class Variant(str, Enum):
    BASELINE = "baseline"
    NO_ORTHO = "no-ortho"
    NO_SPECTRAL = "no-spectral"
    FULL = "full"


@dataclass(frozen=True)
class GateSchedule:
    """Constant gates or per-step gates drawn uniformly from ranges within [0,1].

    A random schedule draws from a stream derived from the StreamSpec seed
    unless it carries its own ``seed``, which decouples gate draws from the
    key/value draws.
    """

    kind: str
    alpha: float = 1.0
    beta: float = 1.0
    alpha_range: tuple = (0.0, 1.0)
    beta_range: tuple = (0.0, 1.0)
    seed: int | None = None

    def __post_init__(self):
        if self.kind not in ("constant", "random"):
            raise ValueError(f"unknown gate schedule kind {self.kind!r}")
        if self.kind == "constant":
            st.GateParams(self.alpha, self.beta)  # reuse its range validation
        else:
            for name in ("alpha_range", "beta_range"):
                lo, hi = getattr(self, name)
                if not (0.0 <= lo <= hi <= 1.0):
                    raise ValueError(f"{name} must satisfy 0 <= lo <= hi <= 1, got {(lo, hi)}")

    @classmethod
    def constant(cls, alpha, beta):
        return cls(kind="constant", alpha=alpha, beta=beta)

    @classmethod
    def random(cls, alpha_range, beta_range, seed=None):
        return cls(kind="random", alpha_range=tuple(alpha_range),
                   beta_range=tuple(beta_range), seed=seed)


@dataclass(frozen=True)
class StreamSpec:
    """Synthetic associative-recall stream description."""

    c_v: int
    c_k: int
    length: int
    gates: GateSchedule
    key_mode: str = "random-unit"
    probe_count: int = 0
    seed: int = 0

    def __post_init__(self):
        if self.c_v < self.c_k or self.c_k < 1:
            raise ValueError(f"need c_v >= c_k >= 1, got c_v={self.c_v}, c_k={self.c_k}")
        if self.length < 1:
            raise ValueError(f"length must be >= 1, got {self.length}")
        if not 0 <= self.probe_count <= self.length:
            raise ValueError(f"probe_count must be in [0, length], got {self.probe_count}")
        if self.key_mode not in ("random-unit", "orthonormal-set"):
            raise ValueError(f"unknown key_mode {self.key_mode!r}")


@dataclass(frozen=True)
class VariantConfig:
    variant: Variant
    ns: st.NsConfig
    gamma: float = 2.0

    def __post_init__(self):
        if not (np.isfinite(self.gamma) and self.gamma > 0):
            raise ValueError(f"gamma must be positive and finite, got {self.gamma}")


class Stream(NamedTuple):
    keys: np.ndarray         # (T, c_k), unit rows
    values: np.ndarray       # (T, c_v)
    alphas: np.ndarray       # (T,)
    betas: np.ndarray        # (T,)
    probe_steps: np.ndarray  # sorted unique step indices


class RunResult(NamedTuple):
    report: TrajectoryReport | None
    final_state: st.StateMatrix
    steps: list  # recorded StepDiagnostics


def generate_stream(spec: StreamSpec) -> Stream:
    """Deterministic stream for a seed: unit keys, N(0,1) values, gates."""
    key_ss, val_ss, gate_ss, _init_ss = np.random.SeedSequence(spec.seed).spawn(4)
    T, c_k, c_v = spec.length, spec.c_k, spec.c_v

    key_rng = np.random.default_rng(key_ss)
    if spec.key_mode == "random-unit":
        keys = key_rng.standard_normal((T, c_k))
        norms = np.linalg.norm(keys, axis=1, keepdims=True)
        if np.any(norms == 0.0):
            raise ValueError("degenerate zero key drawn; use another seed")
        keys = keys / norms
    else:
        q = st._canonical_q(key_rng.standard_normal((c_k, c_k)))
        keys = q.T[np.arange(T) % c_k]  # cycle through the orthonormal set

    values = np.random.default_rng(val_ss).standard_normal((T, c_v))

    if spec.gates.kind == "constant":
        alphas = np.full(T, spec.gates.alpha)
        betas = np.full(T, spec.gates.beta)
    else:
        gate_rng = np.random.default_rng(
            gate_ss if spec.gates.seed is None else spec.gates.seed)
        alphas = gate_rng.uniform(*spec.gates.alpha_range, size=T)
        betas = gate_rng.uniform(*spec.gates.beta_range, size=T)

    # Probe keys are re-queried at the end of the run to measure drift; spread
    # them evenly across the post-warmup span, excluding the final step (a
    # probe written at the final step would measure zero drift vacuously).
    if spec.probe_count > 0:
        start = min(c_k, T - 1)
        probe_steps = np.unique(
            np.floor(np.linspace(start, max(start, T - 2), spec.probe_count)).astype(int)
        )
    else:
        probe_steps = np.array([], dtype=int)

    return Stream(keys=keys, values=values, alphas=alphas, betas=betas, probe_steps=probe_steps)


def recall(s, q) -> np.ndarray:
    """Linear associative readout S @ q."""
    mat = s.s if isinstance(s, st.StateMatrix) else np.asarray(s, dtype=float)
    q = np.asarray(q, dtype=float).reshape(-1)
    if q.shape[0] != mat.shape[1]:
        raise ValueError(f"query length {q.shape[0]} does not match C_k={mat.shape[1]}")
    return mat @ q


def _record_mask(length, record) -> np.ndarray:
    if record == "none":
        return np.zeros(length, dtype=bool)
    if record == "every":
        return np.ones(length, dtype=bool)
    n = int(record)
    if n < 1:
        raise ValueError(f"recording cadence must be >= 1, got {record!r}")
    mask = np.zeros(length, dtype=bool)
    mask[::n] = True
    mask[-1] = True  # the final step is always recorded
    return mask


def _initial_state(spec: StreamSpec, gamma_eff, init) -> st.StateMatrix:
    if init == "zero":
        return st.zero_state(spec.c_v, spec.c_k, gamma=gamma_eff)
    if init == "random-orthogonal":
        init_ss = np.random.SeedSequence(spec.seed).spawn(4)[3]
        rng = np.random.default_rng(init_ss)
        q = st._canonical_q(rng.standard_normal((spec.c_v, spec.c_k)))
        return st.StateMatrix(s=gamma_eff * q, gamma=gamma_eff, warming_up=False)
    raise ValueError(f"unknown init {init!r}")


def run(spec: StreamSpec, cfg: VariantConfig, record="every", init="zero") -> RunResult:
    """Drive one trajectory; strictly sequential, bitwise reproducible.

    ``record`` is "every", "none", or an integer cadence n (every n-th step
    plus the final one).  ``init`` is "zero" or "random-orthogonal" (seeded
    from the stream seed).
    """
    stream = generate_stream(spec)
    gamma_eff = 1.0 if cfg.variant in (Variant.BASELINE, Variant.NO_SPECTRAL) else cfg.gamma
    s = _initial_state(spec, gamma_eff, init)

    record_now = _record_mask(spec.length, record)
    probe_set = {int(t) for t in stream.probe_steps}
    probes = []  # (key, recall at insertion)
    recorded = []

    for t in range(spec.length):
        k = stream.keys[t]
        v = stream.values[t]
        g = st.GateParams(float(stream.alphas[t]), float(stream.betas[t]))
        # From a zero start the first c_k steps cannot have reached full rank;
        # tag them warming for aggregate purposes in every variant.
        engine_warm = init == "zero" and t < spec.c_k

        if cfg.variant is Variant.FULL:
            s_new, diag = st.step(s, k, v, g, cfg.ns,
                                  want_diagnostics=bool(record_now[t]), step_index=t)
        else:
            s_euc = st.euclidean_update(s, k, v, g)
            grad = st.surrogate_gradient(s, k, v, g)
            if cfg.variant is Variant.BASELINE:
                new_mat = s_euc
            elif cfg.variant is Variant.NO_ORTHO:
                new_mat = gamma_eff * st.prescale(s_euc, cfg.ns.epsilon)
            else:  # NO_SPECTRAL: projection without the spectral scale
                new_mat = st.orthogonalize(s_euc, cfg.ns, gamma=1.0)
            s_new = st.StateMatrix(s=new_mat, gamma=gamma_eff, warming_up=engine_warm)
            diag = None
            if record_now[t]:
                degenerate = frobenius_norm(s_euc) == 0.0
                if cfg.variant is Variant.BASELINE:
                    diag = step_diagnostics(s_new, s, grad, step=t,
                                            degenerate=degenerate, warming_up=engine_warm)
                    # no projection happens, so pre- and post-spectra coincide
                    diag = dataclasses.replace(diag, sigma_pre=diag.sigma)
                else:
                    sigma_pre = np.zeros(spec.c_k) if degenerate else svd(s_euc).sigma
                    diag = step_diagnostics(s_new, s, grad, step=t, sigma_pre=sigma_pre,
                                            degenerate=degenerate, warming_up=engine_warm)

        if diag is not None and engine_warm and not diag.warming_up:
            diag = dataclasses.replace(diag, warming_up=True)
        if diag is not None:
            recorded.append(diag)
        s = s_new
        if t in probe_set:
            probes.append((stream.keys[t].copy(), recall(s, stream.keys[t])))

    drift_pairs = [(stored, recall(s, key)) for key, stored in probes] or None
    report = summarize(recorded, drift_pairs) if recorded else None
    return RunResult(report=report, final_state=s, steps=recorded)


def run_many(jobs, max_workers=None):
    """Run independent (spec, cfg[, record, init]) jobs in a thread pool.

    Each run is pure and sequential internally, so results do not depend on
    scheduling; the output list preserves the input order.
    """
    def _one(job):
        return run(*job)

    with ThreadPoolExecutor(max_workers=max_workers) as pool:
        return list(pool.map(_one, jobs))

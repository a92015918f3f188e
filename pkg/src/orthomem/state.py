"""Gated recurrent memory update with orthogonal-manifold projection.

The memory is a C_v x C_k matrix (C_v >= C_k).  Each step applies a gated
rank-1 write, then projects the result back to the set of matrices whose
columns are orthonormal up to a fixed scale ``gamma``, using a prescaled
polynomial iteration built from matrix products only.  The exact projection
(via the Jacobi SVD in :mod:`orthomem.linalg`) is reserved for tests and
diagnostics.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import diagnostics as _diag
from .linalg import frobenius_norm, svd

__all__ = [
    "GateParams",
    "NsConfig",
    "StateMatrix",
    "STRICT_COEFFS",
    "FAST_COEFFS",
    "ns_config",
    "zero_state",
    "random_orthogonal_state",
    "surrogate_gradient",
    "euclidean_update",
    "prescale",
    "ns_step",
    "orthogonalize",
    "step",
]

# Quintic orthogonalisation presets.  "strict" is the degree-2 Taylor scheme
# for the inverse square root (fixed point exactly 1, first and second
# derivative zero there), so iterates converge to the exact polar factor.
# "fast" trades the exact fixed point for a faster early phase and settles in
# a band around 1; quality-critical paths and all tolerance tests use strict.
STRICT_COEFFS = (15.0 / 8.0, -10.0 / 8.0, 3.0 / 8.0)
FAST_COEFFS = (3.4445, -4.7750, 2.0315)

_PRESETS = {"strict": STRICT_COEFFS, "fast": FAST_COEFFS}


@dataclass(frozen=True)
class GateParams:
    """Per-step retention gate ``alpha`` and write gate ``beta``, both in [0,1]."""

    alpha: float
    beta: float

    def __post_init__(self):
        for name in ("alpha", "beta"):
            x = getattr(self, name)
            if not np.isfinite(x) or not 0.0 <= x <= 1.0:
                raise ValueError(f"{name} must be finite and in [0,1], got {x!r}")


@dataclass(frozen=True)
class NsConfig:
    """Coefficients and iteration count for the polynomial projection.

    ``a + b + c == 1`` makes sigma = 1 an exact fixed point of the induced
    spectral map; configs without that property are allowed but do not
    converge to the exact polar factor (see ``exact_fixed_point``).
    """

    a: float
    b: float
    c: float
    iterations: int = 5
    epsilon: float = 1e-8

    def __post_init__(self):
        if not all(np.isfinite(x) for x in (self.a, self.b, self.c, self.epsilon)):
            raise ValueError("NsConfig coefficients must be finite")
        if not 1 <= self.iterations <= 64:
            raise ValueError(f"iterations must be in [1, 64], got {self.iterations}")
        if self.epsilon <= 0:
            raise ValueError(f"epsilon must be positive, got {self.epsilon}")

    @property
    def exact_fixed_point(self) -> bool:
        return abs(self.a + self.b + self.c - 1.0) <= 1e-12


def ns_config(preset="strict", iterations=5, epsilon=1e-8) -> NsConfig:
    """Build an NsConfig from a named preset ("strict" or "fast")."""
    try:
        a, b, c = _PRESETS[preset]
    except KeyError:
        raise ValueError(f"unknown preset {preset!r}; expected one of {sorted(_PRESETS)}")
    return NsConfig(a=a, b=b, c=c, iterations=iterations, epsilon=epsilon)


@dataclass(frozen=True)
class StateMatrix:
    """Recurrent memory ``s`` (C_v x C_k, C_v >= C_k) with manifold scale ``gamma``.

    ``warming_up`` is True until the unconstrained intermediate state first
    reaches numerically full rank (smallest singular value above epsilon); the
    manifold invariant s.T @ s = gamma^2 * I is only meaningful after that.
    """

    s: np.ndarray
    gamma: float
    warming_up: bool = True

    def __post_init__(self):
        s = np.asarray(self.s, dtype=float)
        if s.ndim != 2:
            raise ValueError(f"state must be 2-D, got ndim={s.ndim}")
        if s.shape[0] < s.shape[1]:
            raise ValueError(f"state requires C_v >= C_k, got {s.shape}")
        if not np.all(np.isfinite(s)):
            raise ValueError("state contains non-finite entries")
        if not (np.isfinite(self.gamma) and self.gamma > 0):
            raise ValueError(f"gamma must be positive and finite, got {self.gamma}")
        object.__setattr__(self, "s", s)

    @property
    def c_v(self) -> int:
        return self.s.shape[0]

    @property
    def c_k(self) -> int:
        return self.s.shape[1]


def zero_state(c_v, c_k, gamma=2.0) -> StateMatrix:
    """All-zero initial state; the first writes fill it one rank per step."""
    return StateMatrix(s=np.zeros((c_v, c_k)), gamma=gamma, warming_up=True)


def _canonical_q(a) -> np.ndarray:
    """Q from QR with the R diagonal forced non-negative (sign-unambiguous)."""
    q, r = np.linalg.qr(a)
    return q * np.where(np.diagonal(r) >= 0.0, 1.0, -1.0)


def random_orthogonal_state(c_v, c_k, gamma=2.0, seed=0) -> StateMatrix:
    """Seeded full-rank start: gamma times a random column-orthonormal matrix."""
    rng = np.random.default_rng(seed)
    q = _canonical_q(rng.standard_normal((c_v, c_k)))
    return StateMatrix(s=gamma * q, gamma=gamma, warming_up=False)


def _vec(x, n, name) -> np.ndarray:
    x = np.asarray(x, dtype=float).reshape(-1)
    if x.shape[0] != n:
        raise ValueError(f"{name} must have length {n}, got {x.shape[0]}")
    if not np.all(np.isfinite(x)):
        raise ValueError(f"{name} contains non-finite entries")
    return x


def _state_array(s_prev) -> np.ndarray:
    return s_prev.s if isinstance(s_prev, StateMatrix) else np.asarray(s_prev, dtype=float)


def surrogate_gradient(s_prev, k, v, g: GateParams) -> np.ndarray:
    """Gradient of the linearised recall objective: beta * (v - alpha*S k) k^T."""
    s = _state_array(s_prev)
    k = _vec(k, s.shape[1], "k")
    v = _vec(v, s.shape[0], "v")
    return g.beta * np.outer(v - g.alpha * (s @ k), k)


def euclidean_update(s_prev, k, v, g: GateParams) -> np.ndarray:
    """Unconstrained gated update S @ (alpha (I - beta k k^T)) + beta v k^T.

    Equals alpha*S_prev plus the surrogate gradient, i.e. the minimiser of the
    linearised recall loss plus a proximity penalty to alpha*S_prev.
    """
    s = _state_array(s_prev)
    k = _vec(k, s.shape[1], "k")
    v = _vec(v, s.shape[0], "v")
    sk = s @ k
    return g.alpha * (s - g.beta * np.outer(sk, k)) + g.beta * np.outer(v, k)


def prescale(x, epsilon=1e-8) -> np.ndarray:
    """x / (||x||_F + epsilon); bounds the spectral norm by 1 since ||.||_2 <= ||.||_F."""
    x = np.asarray(x, dtype=float)
    return x / (frobenius_norm(x) + epsilon)


def ns_step(x, cfg: NsConfig) -> np.ndarray:
    """One polynomial iteration a*X + b*X(X^T X) + c*X(X^T X)^2.

    Acts on singular values as p(s) = a s + b s^3 + c s^5 while leaving the
    singular vectors unchanged.
    """
    x = np.asarray(x, dtype=float)
    if x.ndim != 2 or 0 in x.shape:
        raise ValueError(f"ns_step requires a non-degenerate 2-D matrix, got shape {x.shape}")
    a = x.T @ x
    return cfg.a * x + x @ (cfg.b * a + cfg.c * (a @ a))


def orthogonalize(x, cfg: NsConfig, gamma=1.0) -> np.ndarray:
    """Prescale, iterate ns_step, scale by gamma.

    A zero matrix stays zero (every iterate is zero); callers that care flag
    this degenerate case rather than erroring, since a recurrence may start
    from an all-zero state.
    """
    y = prescale(x, cfg.epsilon)
    for _ in range(cfg.iterations):
        y = ns_step(y, cfg)
    return gamma * y


def step(s_prev: StateMatrix, k, v, g: GateParams, cfg: NsConfig, want_diagnostics=False, step_index=0):
    """Full update: gated write, then projection back to the scaled manifold.

    Returns ``(new_state, StepDiagnostics | None)``.  Spectral diagnostics run
    the SVD oracle and dominate runtime, so they are computed only on request;
    while the state is warming up the oracle also runs once per step on the
    intermediate state to decide when full rank is reached.
    """
    s_euc = euclidean_update(s_prev, k, v, g)
    grad = surrogate_gradient(s_prev, k, v, g)

    degenerate = frobenius_norm(s_euc) == 0.0
    sigma_pre = None
    warming = s_prev.warming_up
    if (warming and not degenerate) or want_diagnostics:
        sigma_pre = svd(s_euc).sigma if not degenerate else np.zeros(s_prev.c_k)
        if warming and sigma_pre[-1] > cfg.epsilon:
            warming = False

    y = orthogonalize(s_euc, cfg, s_prev.gamma)
    new_state = StateMatrix(s=y, gamma=s_prev.gamma, warming_up=warming)

    diag = None
    if want_diagnostics:
        diag = _diag.step_diagnostics(
            new_state,
            s_prev,
            grad,
            step=step_index,
            sigma_pre=sigma_pre,
            degenerate=degenerate,
            warming_up=s_prev.warming_up or warming,
        )
    return new_state, diag

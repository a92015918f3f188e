"""Minimal dense linear algebra used as the package's independent oracle.

Everything here favours reproducibility and accuracy over speed.  The SVD is
a one-sided Jacobi iteration driven to full convergence, which is slow
compared to LAPACK but quadratically convergent, simple to audit, and
accurate to a few ULPs for the matrix sizes this package works with
(cols <= 256).  ``matmul`` accumulates strictly in ascending-k order so its
output is bit-identical to a naive triple loop, which lets tests compare
against brute-force oracles with zero tolerance.
"""

from __future__ import annotations

from functools import lru_cache
from typing import NamedTuple

import numpy as np

from .errors import RankDeficientError

__all__ = ["SvdResult", "matmul", "frobenius_norm", "svd", "polar_factor"]

# Relative off-diagonal threshold at which a Jacobi rotation is skipped.
_JACOBI_TOL = 1e-14
_MAX_SWEEPS = 60


class SvdResult(NamedTuple):
    """Thin SVD: ``u @ np.diag(sigma) @ vt`` reconstructs the input.

    ``u`` is rows x cols with orthonormal columns, ``sigma`` is descending and
    non-negative, ``vt`` is cols x cols with orthonormal rows.
    """

    u: np.ndarray
    sigma: np.ndarray
    vt: np.ndarray


def _as_matrix(a, name="a") -> np.ndarray:
    a = np.asarray(a, dtype=float)
    if a.ndim != 2:
        raise ValueError(f"{name} must be 2-D, got ndim={a.ndim}")
    return a


def matmul(a, b) -> np.ndarray:
    """Matrix product with sequential ascending-k accumulation.

    Each output element is built by adding one rounded product at a time in
    ascending k, exactly like ``for k: s += a[i,k]*b[k,j]``, so results are
    bit-reproducible and comparable to a triple-loop oracle with ``==``.
    """
    a = _as_matrix(a, "a")
    b = _as_matrix(b, "b")
    if a.shape[1] != b.shape[0]:
        raise ValueError(f"dimension mismatch: {a.shape} @ {b.shape}")
    out = np.zeros((a.shape[0], b.shape[1]))
    for k in range(a.shape[1]):
        out += a[:, k : k + 1] * b[k : k + 1, :]
    return out


def frobenius_norm(a) -> float:
    """sqrt of the sum of squared entries."""
    a = np.asarray(a, dtype=float)
    return float(np.sqrt(np.sum(a * a)))


@lru_cache(maxsize=64)
def _round_robin_rounds(n: int) -> tuple:
    """Round-robin tournament schedule covering every column pair once.

    Returns n-1 rounds (n even, padded internally when odd) of disjoint
    (p, q) pairs with p < q.  Disjoint pairs let one-sided Jacobi apply a
    whole round of rotations vectorised; the fixed schedule keeps the
    iteration deterministic.
    """
    m = n + (n % 2)
    arr = list(range(m))
    rounds = []
    for _ in range(m - 1):
        pairs = []
        for i in range(m // 2):
            p, q = arr[i], arr[m - 1 - i]
            if p < n and q < n:
                pairs.append((min(p, q), max(p, q)))
        rounds.append((np.array([p for p, _ in pairs]), np.array([q for _, q in pairs])))
        arr = [arr[0]] + [arr[-1]] + arr[1:-1]
    return tuple(rounds)


def _complete_orthonormal(u: np.ndarray, fill: np.ndarray) -> None:
    """Fill the columns listed in ``fill`` with orthonormal completions.

    Deterministic Gram-Schmidt against the existing columns using standard
    basis vectors as candidates; needed when the input is rank deficient so
    that u keeps orthonormal columns.
    """
    m = u.shape[0]
    cand = 0
    for j in fill:
        while True:
            if cand >= m:
                raise RuntimeError("orthonormal completion exhausted basis vectors")
            w = np.zeros(m)
            w[cand] = 1.0
            cand += 1
            w -= u @ (u.T @ w)
            w -= u @ (u.T @ w)  # second pass for orthogonality near roundoff
            nrm = np.sqrt(np.sum(w * w))
            if nrm > 0.5:  # candidate not (nearly) inside the current span
                u[:, j] = w / nrm
                break


def svd(a) -> SvdResult:
    """Thin SVD by one-sided Jacobi rotations, run to full convergence.

    Requires rows >= cols (transpose externally otherwise).  Rotations are
    applied in a fixed round-robin schedule until a full sweep finds no
    column pair with relative inner product above 1e-14.
    """
    a = _as_matrix(a)
    m, n = a.shape
    if m < n:
        raise ValueError(f"svd requires rows >= cols, got {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError("svd input contains non-finite entries")
    if n == 0 or m == 0:
        raise ValueError("svd input must be non-empty")

    # power-of-two prescale keeps column-norm squares inside the exponent
    # range for extreme input scales; scaling by 2^k is exact, so results are
    # bit-identical to the unscaled computation whenever both representable
    scale = 1.0
    amax = float(np.max(np.abs(a))) if a.size else 0.0
    if amax > 2.0 ** 500 or (0.0 < amax < 2.0 ** -500):
        scale = 2.0 ** np.floor(np.log2(amax))
    A = a / scale if scale != 1.0 else a.copy()
    V = np.eye(n)
    if n > 1:
        rounds = _round_robin_rounds(n)
        for _ in range(_MAX_SWEEPS):
            rotated = False
            for ps, qs in rounds:
                P = A[:, ps]
                Q = A[:, qs]
                app = np.einsum("ij,ij->j", P, P)
                aqq = np.einsum("ij,ij->j", Q, Q)
                apq = np.einsum("ij,ij->j", P, Q)
                mask = np.abs(apq) > _JACOBI_TOL * np.sqrt(app * aqq)
                if not np.any(mask):
                    continue
                rotated = True
                sel_p = ps[mask]
                sel_q = qs[mask]
                tau = (aqq[mask] - app[mask]) / (2.0 * apq[mask])
                t = np.sign(tau) / (np.abs(tau) + np.sqrt(1.0 + tau * tau))
                t = np.where(tau == 0.0, 1.0, t)  # 45-degree rotation when diagonal is tied
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = c * t
                Pm = A[:, sel_p]
                Qm = A[:, sel_q]
                A[:, sel_p] = c * Pm - s * Qm
                A[:, sel_q] = s * Pm + c * Qm
                Pv = V[:, sel_p]
                Qv = V[:, sel_q]
                V[:, sel_p] = c * Pv - s * Qv
                V[:, sel_q] = s * Pv + c * Qv
            if not rotated:
                break
        else:
            raise RuntimeError("Jacobi SVD failed to converge")

    sigma = np.sqrt(np.einsum("ij,ij->j", A, A))
    order = np.argsort(-sigma, kind="stable")
    sigma = sigma[order]
    u = np.zeros((m, n))
    nonzero = sigma > 0.0
    u[:, nonzero] = A[:, order[nonzero]] / sigma[nonzero]
    vt = V[:, order].T
    if not np.all(nonzero):
        _complete_orthonormal(u, np.flatnonzero(~nonzero))
    return SvdResult(u=u, sigma=sigma * scale, vt=vt)


def polar_factor(a) -> np.ndarray:
    """Closest matrix with orthonormal columns, U @ Vt from the thin SVD.

    This is the exact minimiser of the Frobenius distance over matrices with
    orthonormal columns and serves as the oracle the iterative projection is
    tested against.  Raises RankDeficientError when sigma_min < 1e-12 *
    sigma_max, where the minimiser is not unique.
    """
    res = svd(a)
    smax = res.sigma[0]
    if res.sigma[-1] < 1e-12 * smax or smax == 0.0:
        raise RankDeficientError(
            f"polar factor undefined: sigma_min={res.sigma[-1]:.3e} vs sigma_max={smax:.3e}"
        )
    return res.u @ res.vt

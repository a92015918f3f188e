"""Spectral and numerical stability metrics over recorded state trajectories.

Per-step measurements use the Jacobi SVD oracle, so they are exact to a few
ULPs but slow; trajectory drivers only request them at the recording cadence.
Aggregates follow population conventions (divide by N): a recorded trajectory
is treated as the complete population, not a sample.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .linalg import frobenius_norm, svd

__all__ = ["StepDiagnostics", "TrajectoryReport", "step_diagnostics", "summarize"]

# Collapse threshold: a step "collapses" when sigma_min drops below this.
COLLAPSE_THRESHOLD = 1e-3


@dataclass(frozen=True)
class StepDiagnostics:
    """Per-step spectrum and update statistics.

    ``sigma`` is the descending singular-value spectrum of the post-update
    state; ``sigma_pre`` (optional) is the spectrum of the unconstrained
    intermediate state before projection.  ``orth_err`` is
    ||(S/gamma)^T (S/gamma) - I||_F.
    """

    step: int
    sigma: np.ndarray
    orth_err: float
    update_norm: float
    grad_norm: float
    warming_up: bool
    degenerate: bool = False
    sigma_pre: np.ndarray | None = None

    def __post_init__(self):
        sig = np.asarray(self.sigma, dtype=float)
        if np.any(np.diff(sig) > 0):
            raise ValueError("sigma must be sorted descending")
        if not (np.all(np.isfinite(sig)) and np.isfinite(self.orth_err)
                and np.isfinite(self.update_norm) and np.isfinite(self.grad_norm)):
            raise ValueError("diagnostics fields must be finite")
        object.__setattr__(self, "sigma", sig)


@dataclass
class TrajectoryReport:
    """Aggregates over a trajectory (spectral fields exclude warm-up steps).

    ``col_r`` counts post-projection collapse steps, ``col_r_pre`` the same on
    the pre-projection spectra when those were recorded; both are reported
    because the two can differ arbitrarily for projected variants.  ``drift``
    is the mean relative change, in percent, of what the memory recalls for
    probe keys between their insertion step and the final step; it is None
    when no probes were recorded.
    """

    msv: float | None
    svvar: float | None
    orth_e: float | None
    col_r: float | None
    col_r_pre: float | None
    grad_var: float
    upd_var: float
    drift: float | None
    msv_series: list = field(default_factory=list)
    sigma_min_series: list = field(default_factory=list)


def step_diagnostics(s, s_prev, grad, step=0, sigma_pre=None, degenerate=False, warming_up=None):
    """Measure one recorded step; ``s`` and ``s_prev`` carry ``.s`` and ``.gamma``."""
    if s.s.shape != s_prev.s.shape:
        raise ValueError(f"state shape changed: {s_prev.s.shape} -> {s.s.shape}")
    grad = np.asarray(grad, dtype=float)
    if grad.shape != s.s.shape:
        raise ValueError(f"gradient shape {grad.shape} does not match state {s.s.shape}")
    scaled = s.s / s.gamma
    gram = scaled.T @ scaled
    orth_err = frobenius_norm(gram - np.eye(gram.shape[0]))
    if warming_up is None:
        warming_up = s.warming_up or s_prev.warming_up
    return StepDiagnostics(
        step=step,
        sigma=svd(s.s).sigma,
        orth_err=orth_err,
        update_norm=frobenius_norm(s.s - s_prev.s),
        grad_norm=frobenius_norm(grad),
        warming_up=bool(warming_up),
        degenerate=bool(degenerate),
        sigma_pre=None if sigma_pre is None else np.asarray(sigma_pre, dtype=float),
    )


def _population_var(xs) -> float:
    xs = np.asarray(xs, dtype=float)
    return float(np.mean((xs - xs.mean()) ** 2))


def summarize(trajectory, drift_probes=None) -> TrajectoryReport:
    """Aggregate recorded steps into a TrajectoryReport.

    Warm-up steps stay in the per-step series and in the norm variance
    aggregates but are excluded from the spectral aggregates (MSV, SVVar,
    OrthE, ColR); if every step is warming up, the spectral fields are None.

    ``drift_probes`` is an optional list of (recall_at_insertion,
    recall_at_end) vector pairs; pairs whose stored recall is zero are
    skipped (they can only arise from an all-zero state).
    """
    trajectory = list(trajectory)
    if not trajectory:
        raise ValueError("summarize requires a non-empty trajectory")

    msv_series = [float(np.mean(d.sigma)) for d in trajectory]
    sigma_min_series = [float(d.sigma[-1]) for d in trajectory]

    settled = [d for d in trajectory if not d.warming_up]
    if settled:
        msv = float(np.mean([np.mean(d.sigma) for d in settled]))
        svvar = float(np.mean([_population_var(d.sigma) for d in settled]))
        orth_e = float(np.mean([d.orth_err for d in settled]))
        col_r = 100.0 * float(np.mean([d.sigma[-1] < COLLAPSE_THRESHOLD for d in settled]))
        pre = [d for d in settled if d.sigma_pre is not None]
        col_r_pre = (
            100.0 * float(np.mean([d.sigma_pre[-1] < COLLAPSE_THRESHOLD for d in pre]))
            if pre
            else None
        )
    else:
        msv = svvar = orth_e = col_r = col_r_pre = None

    grad_var = _population_var([d.grad_norm for d in trajectory])
    upd_var = _population_var([d.update_norm for d in trajectory])

    drift = None
    if drift_probes is not None:
        ratios = []
        for stored, final in drift_probes:
            stored = np.asarray(stored, dtype=float)
            final = np.asarray(final, dtype=float)
            base = float(np.linalg.norm(stored))
            if base > 0.0:
                ratios.append(float(np.linalg.norm(final - stored)) / base)
        if ratios:
            drift = 100.0 * float(np.mean(ratios))

    return TrajectoryReport(
        msv=msv,
        svvar=svvar,
        orth_e=orth_e,
        col_r=col_r,
        col_r_pre=col_r_pre,
        grad_var=grad_var,
        upd_var=upd_var,
        drift=drift,
        msv_series=msv_series,
        sigma_min_series=sigma_min_series,
    )

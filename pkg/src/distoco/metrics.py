"""
Performance measures: network regret, cumulative and standard constraint
violation, comparator path length, disagreement and empirical growth rates.

Every measure accepts an optional horizon ``T`` and then only looks at the
first ``T`` rounds of the trace, so one long run can be scored at several
checkpoints.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

__all__ = [
    "RunTrace",
    "ComparatorSequence",
    "loss_table",
    "violation_table",
    "network_regret",
    "cumulative_violation",
    "standard_violation",
    "path_length",
    "disagreement",
    "empirical_rate",
    "mean_and_stderr",
    "comparator_losses",
]

_CHUNK = 512


@dataclass
class RunTrace:
    """
    Decisions of every agent at every round, ``x`` with shape ``(T, n, p)``.

    ``checks`` holds optional per-round invariant diagnostics recorded while
    the run was produced (see ``harness.simulate``).
    """

    x: np.ndarray
    checks: dict = field(default_factory=dict)
    label: str = ""

    @property
    def T(self):
        return self.x.shape[0]

    @property
    def n(self):
        return self.x.shape[1]

    def prefix(self, T) -> "RunTrace":
        return RunTrace(self.x[:T], {k: v[:T] for k, v in self.checks.items()}, self.label)


@dataclass
class ComparatorSequence:
    """
    Benchmark decisions ``points`` with shape ``(T, p)``.

    ``certificate`` is ``max_t ||[g_t(y_t)]_+||``; ``objective`` is
    ``sum_t f_t(y_t)``.
    """

    kind: str
    points: np.ndarray
    certificate: float = 0.0
    objective: float = float("nan")

    @property
    def T(self):
        return self.points.shape[0]


def _horizon(trace, T):
    if T is None:
        return trace.T
    if not 1 <= T <= trace.T:
        raise ValueError(f"horizon {T} outside 1..{trace.T}")
    return T


def loss_table(trace: RunTrace, instance, T=None) -> np.ndarray:
    """``L[t-1, i] = f_t(x_{i,t})`` with ``f_t`` the agent-averaged global loss."""
    T = _horizon(trace, T)
    out = np.empty((T, trace.n))
    for s in range(0, T, _CHUNK):
        e = min(s + _CHUNK, T)
        r = np.einsum("tjdp,tip->tijd", instance.H[s:e], trace.x[s:e]) - instance.z[s:e, None]
        out[s:e] = 0.5 * np.einsum("tijd,tijd->ti", r, r) / instance.n
    return out


def _constraint_values(x, instance, s, e):
    # stacked global constraint g_t(x_{i,t}) for rounds s+1..e, shape (e-s, n_agents, m)
    g = np.einsum("tjmp,tip->tijm", instance.A[s:e], x[s:e]) - instance.a[s:e, None]
    return g.reshape(e - s, x.shape[1], -1)


def violation_table(trace: RunTrace, instance, T=None) -> np.ndarray:
    """``V[t-1, i] = ||[g_t(x_{i,t})]_+||``."""
    T = _horizon(trace, T)
    out = np.empty((T, trace.n))
    for s in range(0, T, _CHUNK):
        e = min(s + _CHUNK, T)
        out[s:e] = np.linalg.norm(np.maximum(_constraint_values(trace.x, instance, s, e), 0.0), axis=-1)
    return out


def comparator_losses(comp: ComparatorSequence, instance, T=None) -> np.ndarray:
    """``f_t(y_t)`` for the first ``T`` rounds."""
    T = comp.T if T is None else T
    if T > comp.T:
        raise ValueError(f"comparator has {comp.T} rounds, need {T}")
    r = np.einsum("tjdp,tp->tjd", instance.H[:T], comp.points[:T]) - instance.z[:T]
    return 0.5 * np.einsum("tjd,tjd->t", r, r) / instance.n


def network_regret(trace: RunTrace, comp: ComparatorSequence, instance, T=None) -> float:
    """``(1/n) sum_i sum_t f_t(x_{i,t}) - sum_t f_t(y_t)`` over the first ``T`` rounds."""
    T = _horizon(trace, T)
    if comp.T < T:
        raise ValueError(f"comparator has {comp.T} rounds, trace horizon is {T}")
    return float(loss_table(trace, instance, T).mean(axis=1).sum() - comparator_losses(comp, instance, T).sum())


def cumulative_violation(trace: RunTrace, instance, T=None) -> float:
    """``(1/n) sum_i sum_t ||[g_t(x_{i,t})]_+||``; clipping happens before summing."""
    return float(violation_table(trace, instance, T).mean(axis=1).sum())


def standard_violation(trace: RunTrace, instance, T=None) -> float:
    """``(1/n) sum_i ||[sum_t g_t(x_{i,t})]_+||``; rounds may offset each other."""
    T = _horizon(trace, T)
    total = 0.0
    for s in range(0, T, _CHUNK):
        e = min(s + _CHUNK, T)
        total = total + _constraint_values(trace.x, instance, s, e).sum(axis=0)
    return float(np.linalg.norm(np.maximum(total, 0.0), axis=-1).mean())


def path_length(comp: ComparatorSequence, T=None) -> float:
    """``sum_{t<T} ||y_{t+1} - y_t||``."""
    pts = comp.points if T is None else comp.points[:T]
    if len(pts) < 1:
        raise ValueError("empty comparator")
    return float(np.linalg.norm(np.diff(pts, axis=0), axis=1).sum())


def disagreement(trace: RunTrace, t) -> float:
    """``max_i ||x_{i,t} - mean_j x_{j,t}||`` at round ``t`` (1-based)."""
    if not 1 <= t <= trace.T:
        raise ValueError(f"round {t} outside 1..{trace.T}")
    x = trace.x[t - 1]
    return float(np.max(np.linalg.norm(x - x.mean(axis=0), axis=1)))


def empirical_rate(horizons, values) -> float:
    """
    Least-squares slope of ``log(value)`` against ``log(T)``.

    Raises ``ValueError`` for fewer than three points, non-increasing
    horizons or nonpositive values (the log-log fit is undefined there).
    """
    T = np.asarray(horizons, dtype=float)
    v = np.asarray(values, dtype=float)
    if T.shape != v.shape or T.ndim != 1:
        raise ValueError("horizons and values must be matching 1-d sequences")
    if len(T) < 3:
        raise ValueError("need at least three points")
    if np.any(np.diff(T) <= 0) or T[0] <= 0:
        raise ValueError("horizons must be positive and increasing")
    if np.any(~np.isfinite(v)) or np.any(v <= 0):
        raise ValueError("values must be positive for a log-log fit")
    slope, _ = np.polyfit(np.log(T), np.log(v), 1)
    return float(slope)


def mean_and_stderr(samples, axis=0):
    """Mean and standard error across repetitions (stderr 0 for one sample)."""
    a = np.asarray(samples, dtype=float)
    k = a.shape[axis]
    mean = a.mean(axis=axis)
    if k < 2:
        return mean, np.zeros_like(mean)
    return mean, a.std(axis=axis, ddof=1) / np.sqrt(k)

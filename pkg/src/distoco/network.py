"""
Time-varying communication graphs and consensus mixing.

A round's graph is carried by its mixing matrix ``W``: ``W[i, j] > 0`` means
agent ``i`` receives from agent ``j`` (the diagonal is always positive).
"""

from __future__ import annotations

import csv
from collections import deque
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence

import numpy as np

__all__ = [
    "MixingMatrix",
    "GraphSequence",
    "ValidationReport",
    "generate_er_path_mixing",
    "er_path_sequence",
    "validate_mixing_sequence",
    "mix_states",
    "mixing_constants",
    "is_strongly_connected",
    "dump_graph_trace",
]

_GRAPH_STREAM = 7  # separates graph draws from problem draws under one master seed


@dataclass(frozen=True)
class MixingMatrix:
    """Nonnegative ``n x n`` weights ``W`` with positive-entry lower bound ``w``."""

    W: np.ndarray
    w: float

    def __post_init__(self):
        W = np.array(self.W, dtype=float)
        if W.ndim != 2 or W.shape[0] != W.shape[1]:
            raise ValueError("mixing matrix must be square")
        W.flags.writeable = False
        object.__setattr__(self, "W", W)

    @property
    def n(self):
        return self.W.shape[0]

    def neighbors(self, i) -> np.ndarray:
        """Agents ``j`` whose state agent ``i`` reads (including ``i``)."""
        return np.flatnonzero(self.W[i] > 0)


@dataclass
class GraphSequence:
    """
    Per-round mixing matrices with connectivity window ``B``.

    ``matrices`` holds the rounds explicitly; alternatively ``factory`` builds
    round ``t`` on demand and ``length`` gives the number of rounds.
    """

    B: int
    w: float
    matrices: Optional[List[MixingMatrix]] = None
    factory: Optional[Callable[[int], MixingMatrix]] = None
    length: Optional[int] = None

    def __post_init__(self):
        if self.matrices is None and self.factory is None:
            raise ValueError("need explicit matrices or a factory")
        if self.length is None:
            if self.matrices is None:
                raise ValueError("factory-backed sequences need a length")
            self.length = len(self.matrices)

    def __len__(self):
        return self.length

    def __getitem__(self, t) -> MixingMatrix:
        """Matrix of round ``t`` (1-based)."""
        if not 1 <= t <= self.length:
            raise IndexError(f"round {t} outside 1..{self.length}")
        if self.matrices is not None:
            return self.matrices[t - 1]
        return self.factory(t)

    @property
    def n(self):
        return self[1].n

    @property
    def constants(self):
        """(tau, lambda) for this sequence."""
        return mixing_constants(self.w, self.n, self.B)


def mixing_constants(w, n, B):
    """
    Geometric mixing constants for B-connected doubly stochastic sequences.

    Returns ``tau = (1 - w/4n^2)^-2`` and ``lam = (1 - w/4n^2)^(1/B)``; the
    product ``W_t ... W_s`` then satisfies ``|[.]_ij - 1/n| <= tau lam^(t-s)``.
    """
    if not 0.0 < w < 1.0:
        raise ValueError(f"w must lie in (0, 1), got {w}")
    if n < 1 or B < 1:
        raise ValueError("n and B must be positive")
    base = 1.0 - w / (4.0 * n * n)
    return base ** -2, base ** (1.0 / B)


def generate_er_path_mixing(n, rho, round, seed) -> MixingMatrix:
    """
    Random undirected graph plus the path ``0-1-...-(n-1)``, weights ``1/n``.

    Each pair is linked with probability ``rho``; off-diagonal weights of
    linked pairs are ``1/n`` and the diagonal takes the remainder of each row.
    The draw depends only on ``(seed, round)``.
    """
    if n < 2:
        raise ValueError("need at least two agents")
    if not 0.0 <= rho <= 1.0:
        raise ValueError(f"edge probability must lie in [0, 1], got {rho}")
    rng = np.random.default_rng([seed, _GRAPH_STREAM, round])
    E = np.triu(rng.random((n, n)) < rho, 1)
    idx = np.arange(n - 1)
    E[idx, idx + 1] = True
    E = E | E.T
    W = E / n
    # (n - deg)/n rounds once, so the diagonal never drops below the float 1/n
    W[np.diag_indices(n)] = (n - E.sum(axis=1)) / n
    assert np.all(np.diag(W) >= 1.0 / n)
    return MixingMatrix(W, 1.0 / n)


def er_path_sequence(n, rho, T, seed) -> GraphSequence:
    """Lazily generated random-graph sequence; the path keeps every round connected."""
    return GraphSequence(B=1, w=1.0 / n, length=T,
                         factory=lambda t: generate_er_path_mixing(n, rho, t, seed))


def mix_states(W, X) -> np.ndarray:
    """
    One consensus step: row ``i`` of the result is ``sum_j W[i, j] X[j]``.

    Only rows ``j`` with ``W[i, j] > 0`` are read for agent ``i``.
    """
    Wm = W.W if isinstance(W, MixingMatrix) else np.asarray(W, dtype=float)
    n = Wm.shape[0]
    if len(X) != n:
        raise ValueError(f"state has {len(X)} rows, mixing matrix expects {n}")
    out = np.empty(np.shape(X), dtype=float)
    for i in range(n):
        nb = np.flatnonzero(Wm[i] > 0)
        out[i] = Wm[i, nb] @ X[nb]
    return out


def is_strongly_connected(adj) -> bool:
    """Reachability from node 0 in the graph and in its transpose."""
    adj = np.asarray(adj, dtype=bool)
    n = adj.shape[0]

    def reach_all(M):
        seen = np.zeros(n, dtype=bool)
        seen[0] = True
        queue = deque([0])
        while queue:
            u = queue.popleft()
            for v in np.flatnonzero(M[u] & ~seen):
                seen[v] = True
                queue.append(v)
        return bool(seen.all())

    return reach_all(adj) and reach_all(adj.T)


@dataclass
class ValidationReport:
    """Outcome of checking a graph sequence against the connectivity assumptions."""

    row_residual: float
    col_residual: float
    min_positive: float
    w: float
    diagonal_positive: bool
    windows_connected: List[bool] = field(default_factory=list)
    tol: float = 1e-12

    @property
    def stochastic_ok(self):
        return self.row_residual <= self.tol and self.col_residual <= self.tol

    @property
    def weights_ok(self):
        return self.min_positive >= self.w and self.diagonal_positive

    @property
    def connected_ok(self):
        return all(self.windows_connected)

    @property
    def passed(self):
        return self.stochastic_ok and self.weights_ok and self.connected_ok

    def summary(self) -> str:
        lines = [
            f"doubly stochastic: max row residual {self.row_residual:.3e}, "
            f"max column residual {self.col_residual:.3e} -> {'ok' if self.stochastic_ok else 'FAIL'}",
            f"positive weights: min {self.min_positive:.6g} vs w={self.w:.6g}, "
            f"diagonal positive={self.diagonal_positive} -> {'ok' if self.weights_ok else 'FAIL'}",
            f"connectivity windows: {sum(self.windows_connected)}/{len(self.windows_connected)} "
            f"strongly connected -> {'ok' if self.connected_ok else 'FAIL'}",
            f"overall: {'PASS' if self.passed else 'FAIL'}",
        ]
        return "\n".join(lines)


def validate_mixing_sequence(seq: GraphSequence, tol=1e-12) -> ValidationReport:
    """Check double stochasticity, the weight floor and B-window strong connectivity."""
    T = len(seq)
    if T == 0:
        raise ValueError("empty graph sequence")
    row_res = col_res = 0.0
    min_pos = np.inf
    diag_ok = True
    adjs = []
    for t in range(1, T + 1):
        W = seq[t].W
        row_res = max(row_res, float(np.max(np.abs(W.sum(axis=1) - 1.0))))
        col_res = max(col_res, float(np.max(np.abs(W.sum(axis=0) - 1.0))))
        pos = W[W > 0]
        min_pos = min(min_pos, float(pos.min()) if pos.size else np.inf)
        diag_ok &= bool(np.all(np.diag(W) > 0))
        adjs.append(W > 0)
    windows = []
    for s in range(max(T - seq.B + 1, 1)):
        union = np.logical_or.reduce(adjs[s:s + seq.B])
        windows.append(is_strongly_connected(union))
    return ValidationReport(row_res, col_res, min_pos, seq.w, diag_ok, windows, tol)


def dump_graph_trace(seq: GraphSequence, path, rounds: Optional[Sequence[int]] = None):
    """Write ``round,i,j,weight`` rows for every positive weight."""
    rounds = range(1, len(seq) + 1) if rounds is None else rounds
    with open(path, "w", newline="", encoding="utf-8") as fh:
        out = csv.writer(fh, lineterminator="\n")
        out.writerow(["round", "i", "j", "weight"])
        for t in rounds:
            W = seq[t].W
            for i, j in zip(*np.nonzero(W)):
                out.writerow([t, int(i), int(j), repr(float(W[i, j]))])

"""
Problem model: decision sets, loss/constraint oracles and the regression
benchmark stream.

The benchmark is distributed online linear regression with time-varying
linear inequality constraints. Agent ``i`` at round ``t`` holds

    f_{i,t}(x) = 1/2 ||H_{i,t} x - z_{i,t}||^2,    g_{i,t}(x) = A_{i,t} x - a_{i,t}.

All per-round data are stored as dense arrays indexed ``[t-1, i, ...]`` so
that a round can be evaluated for every agent at once.
"""

from __future__ import annotations

import csv
import itertools
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

__all__ = [
    "DecisionSet",
    "UnsupportedSetError",
    "QuadraticRegressionLoss",
    "AffineConstraint",
    "ProblemConstants",
    "ProblemInstance",
    "RoundOracles",
    "OracleList",
    "project",
    "shrink_set",
    "clipped_value",
    "clipped_subgradient",
    "generate_regression_stream",
    "compute_constants",
]


class UnsupportedSetError(ValueError):
    """Raised when an operation needs an origin-symmetric decision set."""


#%% DECISION SETS

@dataclass(frozen=True)
class DecisionSet:
    """
    A closed convex decision set: an axis-aligned box or a Euclidean ball.

    Use :meth:`box` and :meth:`ball` rather than the raw constructor.
    """

    kind: str
    dim: int
    lower: Optional[np.ndarray] = None
    upper: Optional[np.ndarray] = None
    center: Optional[np.ndarray] = None
    radius: float = 0.0

    @classmethod
    def box(cls, lower, upper, dim=None):
        """Box ``[lower, upper]``; scalars are broadcast to ``dim`` coordinates."""
        if dim is None:
            dim = np.size(lower) if np.ndim(lower) else np.size(upper)
        lo = np.broadcast_to(np.asarray(lower, dtype=float), (dim,)).copy()
        hi = np.broadcast_to(np.asarray(upper, dtype=float), (dim,)).copy()
        if np.any(lo > hi):
            raise ValueError("box lower bound exceeds upper bound")
        lo.flags.writeable = False
        hi.flags.writeable = False
        return cls("box", int(dim), lower=lo, upper=hi)

    @classmethod
    def ball(cls, radius, dim, center=None):
        if radius < 0:
            raise ValueError("ball radius must be nonnegative")
        c = np.zeros(dim) if center is None else np.asarray(center, dtype=float).copy()
        if c.shape != (dim,):
            raise ValueError("ball center has wrong dimension")
        c.flags.writeable = False
        return cls("ball", int(dim), center=c, radius=float(radius))

    @property
    def inner_radius(self) -> float:
        """Largest r with r*B^p contained in the set (0 if the origin is outside)."""
        if self.kind == "box":
            return float(max(0.0, min(np.min(-self.lower), np.min(self.upper))))
        return float(max(0.0, self.radius - np.linalg.norm(self.center)))

    @property
    def outer_radius(self) -> float:
        """Smallest R with the set contained in R*B^p."""
        if self.kind == "box":
            return float(np.linalg.norm(np.maximum(np.abs(self.lower), np.abs(self.upper))))
        return float(self.radius + np.linalg.norm(self.center))

    @property
    def is_origin_symmetric(self) -> bool:
        if self.kind == "box":
            return bool(np.array_equal(self.lower, -self.upper))
        return bool(not np.any(self.center))

    def contains(self, x, tol=0.0) -> np.ndarray:
        """Membership test along the last axis of ``x``."""
        x = np.asarray(x, dtype=float)
        if self.kind == "box":
            return np.all((x >= self.lower - tol) & (x <= self.upper + tol), axis=-1)
        return np.linalg.norm(x - self.center, axis=-1) <= self.radius + tol

    def corners(self) -> np.ndarray:
        """The 2^p vertices of a box, shape ``(2^p, p)``."""
        if self.kind != "box":
            raise UnsupportedSetError("corners are only defined for boxes")
        return np.array(list(itertools.product(*zip(self.lower, self.upper))))


def project(dset: DecisionSet, x) -> np.ndarray:
    """
    Euclidean projection onto ``dset``.

    Works on a single point or a stack of points (last axis is the
    coordinate axis).
    """
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != dset.dim:
        raise ValueError(f"point has dimension {x.shape[-1]}, set has {dset.dim}")
    if dset.kind == "box":
        return np.clip(x, dset.lower, dset.upper)
    d = x - dset.center
    nrm = np.linalg.norm(d, axis=-1, keepdims=True)
    scale = np.where(nrm > dset.radius, dset.radius / np.where(nrm > 0, nrm, 1.0), 1.0)
    return dset.center + d * scale


def shrink_set(dset: DecisionSet, xi: float) -> DecisionSet:
    """Return ``(1 - xi) * dset`` for an origin-symmetric set and ``0 < xi < 1``."""
    if not 0.0 < xi < 1.0:
        raise ValueError(f"shrinkage must lie in (0, 1), got {xi}")
    if not dset.is_origin_symmetric:
        raise UnsupportedSetError("shrinkage requires a set symmetric about the origin")
    s = 1.0 - xi
    if dset.kind == "box":
        return DecisionSet.box(s * dset.lower, s * dset.upper, dset.dim)
    return DecisionSet.ball(s * dset.radius, dset.dim)


#%% CLIPPING

def clipped_value(g) -> np.ndarray:
    """Componentwise ``max(g, 0)``."""
    return np.maximum(np.asarray(g, dtype=float), 0.0)


def clipped_subgradient(constraint, x) -> np.ndarray:
    """
    Subgradient of ``[g(x)]_+`` as a ``p x m`` matrix.

    Column ``j`` is zero where ``g_j(x) < 0`` and the ``j``-th column of the
    constraint Jacobian otherwise (``g_j(x) = 0`` keeps the Jacobian column).
    """
    g = np.atleast_1d(constraint.value(x))
    jac = np.atleast_2d(constraint.jacobian(x))
    return np.where(g >= 0, jac, 0.0)


#%% ORACLES

@dataclass(frozen=True)
class QuadraticRegressionLoss:
    """f(x) = 1/2 ||H x - z||^2 with exact gradient H^T (H x - z)."""

    H: np.ndarray
    z: np.ndarray

    def value(self, x) -> float:
        r = self.H @ x - self.z
        return 0.5 * float(r @ r)

    def gradient(self, x) -> np.ndarray:
        return self.H.T @ (self.H @ x - self.z)

    subgradient = gradient


@dataclass(frozen=True)
class AffineConstraint:
    """g(x) = A x - a; the Jacobian (as p x m) is A^T."""

    A: np.ndarray
    a: np.ndarray

    def value(self, x) -> np.ndarray:
        return self.A @ x - self.a

    def jacobian(self, x) -> np.ndarray:
        return self.A.T.copy()


@dataclass(frozen=True)
class RoundOracles:
    """
    Every agent's oracles for one round, evaluated in batch.

    Arrays have a leading agent axis: ``H (n, d, p)``, ``z (n, d)``,
    ``A (n, m, p)``, ``a (n, m)``. Methods take agent decisions ``X (n, p)``
    and evaluate agent ``i``'s oracle at row ``i``.
    """

    H: np.ndarray
    z: np.ndarray
    A: np.ndarray
    a: np.ndarray
    t: Optional[int] = None

    @property
    def n(self):
        return self.H.shape[0]

    def loss_values(self, X) -> np.ndarray:
        r = np.einsum("idp,ip->id", self.H, X) - self.z
        return 0.5 * np.einsum("id,id->i", r, r)

    def loss_gradients(self, X) -> np.ndarray:
        r = np.einsum("idp,ip->id", self.H, X) - self.z
        return np.einsum("idp,id->ip", self.H, r)

    def constraint_values(self, X) -> np.ndarray:
        return np.einsum("imp,ip->im", self.A, X) - self.a

    def constraint_jacobians(self, X=None) -> np.ndarray:
        """Jacobians as ``(n, p, m)`` (the transpose of each ``A``)."""
        return np.transpose(self.A, (0, 2, 1))

    def loss(self, i) -> QuadraticRegressionLoss:
        return QuadraticRegressionLoss(self.H[i], self.z[i])

    def constraint(self, i) -> AffineConstraint:
        return AffineConstraint(self.A[i], self.a[i])


@dataclass(frozen=True)
class OracleList:
    """
    Batched view over arbitrary per-agent oracle objects.

    Losses need ``value``/``gradient``; constraints need ``value``/``jacobian``
    (Jacobian as ``p x m``). All constraints must share ``m``.
    """

    losses: Sequence
    constraints: Sequence
    t: Optional[int] = None

    @property
    def n(self):
        return len(self.losses)

    def loss_values(self, X):
        return np.array([f.value(x) for f, x in zip(self.losses, X)], dtype=float)

    def loss_gradients(self, X):
        return np.array([f.gradient(x) for f, x in zip(self.losses, X)], dtype=float)

    def constraint_values(self, X):
        return np.array([np.atleast_1d(g.value(x)) for g, x in zip(self.constraints, X)], dtype=float)

    def constraint_jacobians(self, X):
        return np.array([np.atleast_2d(g.jacobian(x)) for g, x in zip(self.constraints, X)], dtype=float)

    def loss(self, i):
        return self.losses[i]

    def constraint(self, i):
        return self.constraints[i]


#%% INSTANCES

@dataclass(frozen=True)
class ProblemConstants:
    """
    Uniform bounds over the whole stream.

    ``F1`` bounds loss variation and ``||g||`` on the set, ``F2`` bounds
    subgradient norms, ``mu`` is the strong-convexity modulus (0 if absent).
    """

    F1: float
    F2: float
    mu: float
    r: float
    R: float


@dataclass
class ProblemInstance:
    """
    A finite-horizon stream of quadratic losses and affine constraints.

    ``H`` has shape ``(T, n, d, p)``, ``z`` ``(T, n, d)``, ``A``
    ``(T, n, m_i, p)`` and ``a`` ``(T, n, m_i)``. All agents share ``d`` and
    ``m_i``.
    """

    decision_set: DecisionSet
    H: np.ndarray
    z: np.ndarray
    A: np.ndarray
    a: np.ndarray
    constants: Optional[ProblemConstants] = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        T, n, d, p = self.H.shape
        if self.z.shape != (T, n, d):
            raise ValueError("z has inconsistent shape")
        if self.A.shape[:2] != (T, n) or self.A.shape[3] != p or self.a.shape != self.A.shape[:3]:
            raise ValueError("A/a have inconsistent shapes")
        if p != self.decision_set.dim:
            raise ValueError("decision set dimension does not match H")
        if self.constants is None:
            self.constants = compute_constants(self)

    @property
    def T(self):
        return self.H.shape[0]

    @property
    def n(self):
        return self.H.shape[1]

    @property
    def p(self):
        return self.H.shape[3]

    @property
    def m_i(self) -> list:
        return [self.A.shape[2]] * self.n

    @property
    def m(self):
        return self.A.shape[2] * self.n

    def round(self, t) -> RoundOracles:
        """Oracles of round ``t`` (1-based)."""
        if not 1 <= t <= self.T:
            raise IndexError(f"round {t} outside 1..{self.T}")
        k = t - 1
        return RoundOracles(self.H[k], self.z[k], self.A[k], self.a[k], t)

    def loss(self, i, t) -> QuadraticRegressionLoss:
        return QuadraticRegressionLoss(self.H[t - 1, i], self.z[t - 1, i])

    def constraint(self, i, t) -> AffineConstraint:
        return AffineConstraint(self.A[t - 1, i], self.a[t - 1, i])

    def global_loss(self, t, x) -> float:
        """f_t(x): the agent average of the local losses at round ``t``."""
        return float(np.mean(self.round(t).loss_values(np.broadcast_to(x, (self.n, self.p)))))

    def global_constraint(self, t, x) -> np.ndarray:
        """g_t(x): all agents' constraint values stacked into one m-vector."""
        return self.round(t).constraint_values(np.broadcast_to(x, (self.n, self.p))).ravel()

    def centralized(self) -> "ProblemInstance":
        """
        Single-agent view of the same stream.

        The agent holds the global loss f_t (rows scaled by 1/sqrt(n) so the
        squared residual averages over agents) and the stacked constraints.
        """
        T, n, d, p = self.H.shape
        m = self.A.shape[2]
        s = 1.0 / np.sqrt(n)
        return ProblemInstance(
            self.decision_set,
            (self.H * s).reshape(T, 1, n * d, p),
            (self.z * s).reshape(T, 1, n * d),
            self.A.reshape(T, 1, n * m, p),
            self.a.reshape(T, 1, n * m),
            meta={**self.meta, "centralized": True},
        )

    def truncated(self, T) -> "ProblemInstance":
        """First ``T`` rounds, constants recomputed."""
        return ProblemInstance(self.decision_set, self.H[:T], self.z[:T], self.A[:T],
                               self.a[:T], meta=dict(self.meta))

    def dump_csv(self, path, rounds: Optional[Sequence[int]] = None):
        """Debug dump: ``round,agent,matrix,row,col,value`` (vectors use col 0)."""
        rounds = range(1, self.T + 1) if rounds is None else rounds
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["round", "agent", "matrix", "row", "col", "value"])
            for t in rounds:
                for i in range(self.n):
                    for name, arr in (("H", self.H), ("z", self.z), ("A", self.A), ("a", self.a)):
                        block = np.atleast_2d(arr[t - 1, i].T).T if arr[t - 1, i].ndim == 1 else arr[t - 1, i]
                        for (r, c), v in np.ndenumerate(block):
                            w.writerow([t, i, name, r, c, repr(float(v))])


def compute_constants(instance: ProblemInstance) -> ProblemConstants:
    """
    Sound bounds F1, F2 and the strong-convexity modulus over the stream.

    Residual ranges come from interval arithmetic on the set: on a box each
    row satisfies |h.x - z| <= sum_k max(|h_k lo_k|, |h_k hi_k|) + |z|; on a
    ball |h.x - z| <= |h.c| + rho ||h|| + |z|. Loss values lie in
    [0, 1/2 sum rmax^2], so that upper end bounds the variation.
    """
    X = instance.decision_set
    H, z, A, a = instance.H, instance.z, instance.A, instance.a

    def row_bound(M, v):
        if X.kind == "box":
            reach = np.maximum(np.abs(M * X.lower), np.abs(M * X.upper)).sum(-1)
        else:
            reach = np.abs(M @ X.center) + X.radius * np.linalg.norm(M, axis=-1)
        return reach + np.abs(v)

    r_loss = row_bound(H, z)
    f_var = 0.5 * np.max(np.sum(r_loss ** 2, axis=-1))
    g_max = np.max(np.sqrt(np.sum(row_bound(A, a) ** 2, axis=-1)))
    F1 = float(max(f_var, g_max))

    R = X.outer_radius
    h_norm = np.linalg.norm(H, ord=2, axis=(-2, -1))
    a_norm = np.linalg.norm(A, ord=2, axis=(-2, -1))
    grad_bound = h_norm * (h_norm * R + np.linalg.norm(z, axis=-1))
    F2 = float(max(np.max(grad_bound), np.max(a_norm)))

    gram = np.einsum("...dp,...dq->...pq", H, H)
    mu = float(max(0.0, np.min(np.linalg.eigvalsh(gram)[..., 0])))
    return ProblemConstants(F1=F1, F2=F2, mu=mu, r=X.inner_radius, R=R)


def generate_regression_stream(n, p, d, m_i, T, seed, bound=5.0, ridge=0.0) -> ProblemInstance:
    """
    Regression stream with time-varying linear constraints.

    ``H`` entries are U[-1, 1], ``z = H 1_p + eps`` with standard normal
    ``eps``, ``A`` entries U[0, 2] and ``a`` entries U[0, 1]; the decision
    set is ``[-bound, bound]^p``. Each round draws from its own generator
    keyed by ``(seed, round)``, so any prefix of the stream is reproducible
    on its own.

    With ``ridge > 0`` every local loss gains ``ridge/2 ||x||^2``, realised
    as ``p`` extra rows ``sqrt(ridge) I`` with zero targets, which makes
    every ``H`` full column rank.
    """
    if min(n, p, d, m_i, T) < 1:
        raise ValueError("all sizes must be positive")
    rows = d + (p if ridge > 0 else 0)
    H = np.empty((T, n, rows, p))
    z = np.empty((T, n, rows))
    A = np.empty((T, n, m_i, p))
    a = np.empty((T, n, m_i))
    ones = np.ones(p)
    for k in range(T):
        rng = np.random.default_rng([seed, k + 1])
        Hk = rng.uniform(-1.0, 1.0, (n, d, p))
        eps = rng.standard_normal((n, d))
        A[k] = rng.uniform(0.0, 2.0, (n, m_i, p))
        a[k] = rng.uniform(0.0, 1.0, (n, m_i))
        H[k, :, :d] = Hk
        z[k, :, :d] = Hk @ ones + eps
    if ridge > 0:
        H[:, :, d:] = np.sqrt(ridge) * np.eye(p)
        z[:, :, d:] = 0.0
    inst = ProblemInstance(
        DecisionSet.box(-bound, bound, p), H, z, A, a,
        meta=dict(n=n, p=p, d=d, m_i=m_i, T=T, seed=seed, bound=bound, ridge=ridge),
    )
    # g(0) = -a <= 0: the origin is feasible at every round
    assert np.all(a >= 0)
    return inst

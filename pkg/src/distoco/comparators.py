"""
Static and dynamic comparator sequences for the quadratic/affine stream.

The global loss of a round is a quadratic ``1/2 x'P_t x - q_t'x + c_t`` and
its constraints are half-spaces, so both comparators are convex QPs over
the decision set. Both are handed to the Clarabel interior-point solver;
the independent per-round dynamic problems go in as one block-diagonal QP.
Either solution is then pulled radially towards the origin (feasible every
round) just far enough to satisfy every constraint exactly.
"""

from __future__ import annotations

import numpy as np
from scipy import sparse

from .metrics import ComparatorSequence, comparator_losses
from .problem import project

__all__ = [
    "InfeasibleComparatorError",
    "round_quadratics",
    "static_comparator",
    "dynamic_comparator",
]


class InfeasibleComparatorError(RuntimeError):
    """The comparator solve could not reach the feasibility tolerance."""


def round_quadratics(instance, T=None):
    """
    Coefficients of ``f_t(x) = 1/2 x'P_t x - q_t'x + c_t``.

    Returns ``P (T, p, p)``, ``q (T, p)``, ``c (T,)``.
    """
    T = instance.T if T is None else T
    H, z, n = instance.H[:T], instance.z[:T], instance.n
    P = np.einsum("tjdp,tjdq->tpq", H, H) / n
    q = np.einsum("tjdp,tjd->tp", H, z) / n
    c = 0.5 * np.einsum("tjd,tjd->t", z, z) / n
    return P, q, c


def _pull_inside(x, C, c):
    """Largest ``s`` in [0, 1] with ``C (s x) <= c``, given ``c >= 0``."""
    Cx = C @ x
    over = Cx > c
    if not np.any(over):
        return x
    return x * float(np.min(c[over] / Cx[over]))


def _set_rows(dset, T):
    """Conic rows ``G x + s = h`` describing ``x_t`` in the set for ``T`` stacked copies."""
    import clarabel

    p = dset.dim
    if dset.kind == "box":
        G = sparse.vstack([sparse.eye(T * p), -sparse.eye(T * p)])
        h = np.concatenate([np.tile(dset.upper, T), -np.tile(dset.lower, T)])
        return G, h, [clarabel.NonnegativeConeT(2 * T * p)]
    blocks, rhs = [], []
    for t in range(T):
        sel = sparse.csr_matrix((np.full(p, -1.0), (np.arange(1, p + 1), t * p + np.arange(p))),
                                shape=(p + 1, T * p))
        blocks.append(sel)
        rhs.append(np.concatenate([[dset.radius], -dset.center]))
    return sparse.vstack(blocks), np.concatenate(rhs), [clarabel.SecondOrderConeT(p + 1)] * T


def _solve_qp(P, q, C, c, dset, T=1):
    """
    ``min 1/2 x'Px - q'x`` s.t. ``C x <= c`` and every length-``p`` block of
    ``x`` in the set. ``P`` and ``C`` may be sparse.
    """
    import clarabel

    G, h, set_cones = _set_rows(dset, T)
    A = sparse.vstack([sparse.csr_matrix(C), G]).tocsc()
    b = np.concatenate([c, h])
    cones = [clarabel.NonnegativeConeT(len(c))] + set_cones
    Pu = sparse.triu(sparse.csc_matrix(0.5 * (P + P.T))).tocsc()
    settings = clarabel.DefaultSettings()
    settings.verbose = False
    sol = clarabel.DefaultSolver(Pu, -np.asarray(q, dtype=float), A, b, cones, settings).solve()
    status = str(sol.status)
    if "Solved" not in status:
        raise InfeasibleComparatorError(f"QP solver returned status {status}")
    return np.asarray(sol.x, dtype=float)


def static_comparator(instance, T=None, tol=1e-6, max_rounds=200) -> ComparatorSequence:
    """
    Best fixed decision in hindsight over the first ``T`` rounds.

    Minimises ``sum_t f_t(x)`` subject to ``g_t(x) <= 0`` for every round
    and ``x`` in the decision set.
    """
    T = instance.T if T is None else T
    P, q, c0 = (a.sum(axis=0) for a in round_quadratics(instance, T))
    p = instance.p
    C = instance.A[:T].reshape(-1, p)
    c = instance.a[:T].reshape(-1)
    if np.any(c < 0):
        raise InfeasibleComparatorError("origin is not feasible; cannot certify a feasible comparator")

    # few rows are active at the optimum: grow a working set of violated rows
    work = np.zeros(0, dtype=int)
    for _ in range(max_rounds):
        x = _solve_qp(P, q, C[work], c[work], instance.decision_set)
        viol = C @ x - c
        bad = np.flatnonzero(viol > 1e-10)
        if bad.size == 0:
            break
        work = np.union1d(work, bad[np.argsort(viol[bad])[::-1][:64]])
    x = project(instance.decision_set, _pull_inside(x, C, c))
    cert = float(np.max(np.maximum(C @ x - c, 0.0), initial=0.0))
    if cert > tol:
        raise InfeasibleComparatorError(f"static comparator violates constraints by {cert:.3e}")
    pts = np.broadcast_to(x, (T, p)).copy()
    comp = ComparatorSequence("static", pts, certificate=cert)
    comp.objective = float(comparator_losses(comp, instance, T).sum())
    return comp


def dynamic_comparator(instance, T=None, tol=1e-6) -> ComparatorSequence:
    """Per-round constrained minimisers ``x*_t`` of ``f_t``."""
    T = instance.T if T is None else T
    P, q, _ = round_quadratics(instance, T)
    p = instance.p
    C = instance.A[:T].reshape(T, -1, p)
    c = instance.a[:T].reshape(T, -1)
    if np.any(c < 0):
        raise InfeasibleComparatorError("origin is not feasible; cannot certify a feasible comparator")
    # the rounds are independent: one block-diagonal QP
    x = _solve_qp(sparse.block_diag(list(P), format="csc"), q.ravel(),
                  sparse.block_diag(list(C), format="csr"), c.ravel(),
                  instance.decision_set, T).reshape(T, p)
    Cx = np.einsum("tkp,tp->tk", C, x)
    ratio = np.where(Cx > c, c / np.where(Cx > c, Cx, 1.0), 1.0)
    x = project(instance.decision_set, x * ratio.min(axis=1, keepdims=True))
    cert = float(np.max(np.maximum(np.einsum("tkp,tp->tk", C, x) - c, 0.0), initial=0.0))
    if cert > tol:
        raise InfeasibleComparatorError(f"dynamic comparator violates constraints by {cert:.3e}")
    comp = ComparatorSequence("dynamic", x, certificate=cert)
    comp.objective = float(comparator_losses(comp, instance, T).sum())
    return comp

"""
Independent straight-line reference implementations used as test oracles.

Everything here is written with explicit per-agent loops over plain Python
floats and lists; nothing is shared with the package beyond the input data.
"""

import math


def _clamp(v, lo, hi):
    return [min(max(vi, l), h) for vi, l, h in zip(v, lo, hi)]


def _matvec(M, v):
    return [sum(M[r][c] * v[c] for c in range(len(v))) for r in range(len(M))]


def _loss(H, z, x):
    r = [a - b for a, b in zip(_matvec(H, x), z)]
    return 0.5 * sum(ri * ri for ri in r)


def _loss_grad(H, z, x):
    r = [a - b for a, b in zip(_matvec(H, x), z)]
    p = len(x)
    return [sum(H[k][c] * r[k] for k in range(len(r))) for c in range(p)]


def _g(A, a, x):
    return [gv - av for gv, av in zip(_matvec(A, x), a)]


def reference_full_info(W, X, Q, H, Z, A, Aoff, alpha, beta, gamma, lo, hi):
    """
    One full-information round for every agent, returning new (X, Q).

    ``H[i]`` is a list of rows, ``A[i]`` likewise; ``lo``/``hi`` are box bounds.
    """
    n = len(X)
    p = len(X[0])
    newX, newQ = [], []
    for i in range(n):
        z = [sum(W[i][j] * X[j][c] for j in range(n)) for c in range(p)]
        gi = _g(A[i], Aoff[i], X[i])
        m = len(gi)
        # clipped Jacobian columns: A row j when g_j >= 0
        cols = [[A[i][j][c] if gi[j] >= 0 else 0.0 for c in range(p)] for j in range(m)]
        grad = _loss_grad(H[i], Z[i], X[i])
        omega = [grad[c] + sum(cols[j][c] * Q[i][j] for j in range(m)) for c in range(p)]
        xn = _clamp([z[c] - alpha * omega[c] for c in range(p)], lo, hi)
        dx = [xn[c] - X[i][c] for c in range(p)]
        qn = []
        for j in range(m):
            b = max(gi[j], 0.0) + sum(cols[j][c] * dx[c] for c in range(p))
            qn.append(max((1 - beta * gamma) * Q[i][j] + gamma * b, 0.0))
        newX.append(xn)
        newQ.append(qn)
    return newX, newQ


def reference_bandit(W, X, Q, U, H, Z, A, Aoff, alpha, beta, gamma, delta, lo, hi, xi_next):
    """One two-point bandit round; the projection is onto the box scaled by ``1 - xi_next``."""
    n = len(X)
    p = len(X[0])
    s = 1.0 - xi_next
    slo, shi = [s * v for v in lo], [s * v for v in hi]
    newX, newQ = [], []
    for i in range(n):
        z = [sum(W[i][j] * X[j][c] for j in range(n)) for c in range(p)]
        y = [X[i][c] + delta * U[i][c] for c in range(p)]
        df = _loss(H[i], Z[i], y) - _loss(H[i], Z[i], X[i])
        fhat = [(p / delta) * df * U[i][c] for c in range(p)]
        g0 = _g(A[i], Aoff[i], X[i])
        g1 = _g(A[i], Aoff[i], y)
        m = len(g0)
        cols = [[(p / delta) * (max(g1[j], 0.0) - max(g0[j], 0.0)) * U[i][c] for c in range(p)]
                for j in range(m)]
        omega = [fhat[c] + sum(cols[j][c] * Q[i][j] for j in range(m)) for c in range(p)]
        xn = _clamp([z[c] - alpha * omega[c] for c in range(p)], slo, shi)
        dx = [xn[c] - X[i][c] for c in range(p)]
        qn = []
        for j in range(m):
            b = max(g0[j], 0.0) + sum(cols[j][c] * dx[c] for c in range(p))
            qn.append(max((1 - beta * gamma) * Q[i][j] + gamma * b, 0.0))
        newX.append(xn)
        newQ.append(qn)
    return newX, newQ


def reference_regret(xs, ys, H, Z):
    """Brute-force network regret; ``xs[t][i]`` decisions, ``ys[t]`` comparator, ``H[t][j]`` data."""
    T, n = len(xs), len(xs[0])
    total = 0.0
    for t in range(T):
        for i in range(n):
            total += sum(_loss(H[t][j], Z[t][j], xs[t][i]) for j in range(n)) / n / n
        total -= sum(_loss(H[t][j], Z[t][j], ys[t]) for j in range(n)) / n
    return total


def reference_cum_violation(xs, A, Aoff):
    T, n = len(xs), len(xs[0])
    total = 0.0
    for t in range(T):
        for i in range(n):
            g = []
            for j in range(n):
                g += _g(A[t][j], Aoff[t][j], xs[t][i])
            total += math.sqrt(sum(max(v, 0.0) ** 2 for v in g))
    return total / n

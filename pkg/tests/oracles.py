"""Reference computations that share no code with the package."""

from itertools import combinations

import numpy as np


def project_active_set(v, G, h, E=None, e=None):
    """Euclidean projection onto ``{z : G z <= h, E z = e}`` by enumerating active sets.

    For each subset of inequality rows, project onto the affine hull where
    those rows hold with equality; the feasible candidate nearest ``v`` is the
    projection. Exponential in the number of rows, so only for tiny problems.
    """
    v = np.asarray(v, float)
    n = v.size
    G = np.asarray(G, float).reshape(-1, n)
    h = np.asarray(h, float).reshape(-1)
    E = np.zeros((0, n)) if E is None else np.asarray(E, float).reshape(-1, n)
    e = np.zeros(0) if e is None else np.asarray(e, float).reshape(-1)
    best, best_dist = None, np.inf
    rows = range(G.shape[0])
    for size in range(0, min(n, G.shape[0]) + 1):
        for S in combinations(rows, size):
            M = np.vstack([E, G[list(S)]])
            rhs = np.concatenate([e, h[list(S)]])
            if M.shape[0] == 0:
                z = v.copy()
            else:
                # minimum-distance point of the affine set: v - M^+ (M v - rhs)
                z = v - np.linalg.pinv(M) @ (M @ v - rhs)
                if np.max(np.abs(M @ z - rhs)) > 1e-9:
                    continue
            if np.all(G @ z <= h + 1e-10) and (E.shape[0] == 0 or np.max(np.abs(E @ z - e)) <= 1e-9):
                dist = np.linalg.norm(z - v)
                if dist < best_dist - 1e-14:
                    best, best_dist = z, dist
    if best is None:
        raise ValueError("empty polytope")
    return best


def box_rows(lo, hi):
    """Inequality rows ``lo <= z <= hi`` (infinite bounds skipped)."""
    lo, hi = np.asarray(lo, float), np.asarray(hi, float)
    n = lo.size
    G, h = [], []
    for i in range(n):
        if np.isfinite(hi[i]):
            row = np.zeros(n)
            row[i] = 1.0
            G.append(row)
            h.append(hi[i])
        if np.isfinite(lo[i]):
            row = np.zeros(n)
            row[i] = -1.0
            G.append(row)
            h.append(-lo[i])
    return np.array(G).reshape(-1, n), np.array(h)


def quadratic_saddle(P, C, R, p, q, A=None, B=None, lam=None):
    """Unconstrained saddle of ``1/2 x'Px + x'Cy - 1/2 y'Ry + p'x + q'y - lam'(Ax + By)``.

    Stationarity gives the block system ``[[P, C], [C', -R]] [x; y] = -[p - A'lam; q - B'lam]``.
    """
    P, C, R = (np.atleast_2d(np.asarray(M, float)) for M in (P, C, R))
    n, m = C.shape
    p, q = np.asarray(p, float), np.asarray(q, float)
    if lam is not None:
        p = p - np.asarray(A).T @ lam
        q = q - np.asarray(B).T @ lam
    K = np.block([[P, C], [C.T, -R]])
    z = np.linalg.solve(K, -np.concatenate([p, q]))
    return z[:n], z[n:]


def central_difference(fun, z, h=1e-6):
    z = np.asarray(z, float)
    g = np.zeros_like(z)
    for i in range(z.size):
        step = np.zeros_like(z)
        step[i] = h
        g[i] = (fun(z + step) - fun(z - step)) / (2 * h)
    return g


def lagrangian_direct(P, C, R, p, q, A, B, c, x, y, lam):
    """``f - lam'(Ax + By - c)`` written out term by term."""
    f = 0.5 * x @ P @ x + x @ C @ y - 0.5 * y @ R @ y + p @ x + q @ y
    return f - lam @ (A @ x + B @ y - c)


def dual_constants_by_hand(sigma, mu_x, mu_y, L_x, L_y):
    """Smoothness constants of the inner value and of the dual, written out directly."""
    L_H = (L_x + sigma) * (L_y + mu_y) / mu_y + sigma * (L_x + sigma + mu_y) / mu_y
    L_G = sigma * (1 + L_y / mu_y) * L_H / mu_x + sigma ** 2 / mu_y
    return L_H, L_G


def min_cost_two_edges(w, cap, demand, points=200_001):
    """Quadratic-cost routing over two parallel edges by scanning the split finely."""
    x1 = np.linspace(0, demand, points)
    x2 = demand - x1
    ok = (x1 <= cap[0] + 1e-12) & (x2 <= cap[1] + 1e-12)
    if not np.any(ok):
        return np.inf, None
    cost = np.where(ok, w[0] * x1 ** 2 + w[1] * x2 ** 2, np.inf)
    i = int(np.argmin(cost))
    return float(cost[i]), np.array([x1[i], x2[i]])

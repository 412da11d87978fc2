"""Named test instances."""

from __future__ import annotations

import numpy as np

from .errors import ConfigurationError
from .geometry import Box, Simplex
from .problem import (CouplingConstraints, JammingObjective, ProblemInstance, QuadraticObjective,
                      estimate_constants)


def _equality(a, b, rhs):
    """Rows encoding ``a.x + b.y = rhs`` as two inequalities."""
    a = np.atleast_2d(np.asarray(a, float))
    b = np.atleast_2d(np.asarray(b, float))
    rhs = np.atleast_1d(np.asarray(rhs, float))
    return np.vstack([a, -a]), np.vstack([b, -b]), np.concatenate([rhs, -rhs])


def _build(name, objective, X, Y, A, B, c, params, exact=True):
    constants = estimate_constants(objective, X, Y, exact=exact)
    return ProblemInstance(name, objective, X, Y, CouplingConstraints(A, B, c), constants, params)


def eq23_divergence(params):
    """``1/2 x^2 + xy - 1/2 y^2`` on ``[-1,1] x [-2,0]`` with ``x - y = 1``; saddle at ``(0, -1)``."""
    A, B, c = _equality([[1.0]], [[-1.0]], [1.0])
    obj = QuadraticObjective([[1.0]], [[1.0]], [[1.0]])
    return _build("eq23-divergence", obj, Box(-1.0, 1.0), Box(-2.0, 0.0), A, B, c, dict(params))


def prop1_quadratic(params):
    """``x^2 - y^2`` on two intervals, coupled by ``x + sign*y = rhs`` (or uncoupled)."""
    x_iv = params.get("x_iv", [0.0, 1.0])
    y_iv = params.get("y_iv", [0.0, 1.0])
    sign = params.get("sign", "+")
    if sign not in ("+", "-"):
        raise ConfigurationError(f"sign must be '+' or '-', got {sign!r}")
    rhs = float(params.get("rhs", 1.0))
    obj = QuadraticObjective([[2.0]], [[0.0]], [[2.0]])
    if params.get("coupled", True):
        A, B, c = _equality([[1.0]], [[1.0 if sign == "+" else -1.0]], [rhs])
    else:
        A, B, c = np.zeros((0, 1)), np.zeros((0, 1)), np.zeros(0)
    full = {"x_iv": list(x_iv), "y_iv": list(y_iv), "sign": sign, "rhs": rhs,
            "coupled": bool(params.get("coupled", True))}
    return _build("prop1-quadratic", obj, Box(*x_iv), Box(*y_iv), A, B, c, full)


def eq10_hard(params):
    """``|x|^2 + 1/2 x'Qy - |y|^2 + d'x`` on unit boxes with ``x = y`` and ``Q`` negative semidefinite."""
    Q = np.asarray(params.get("Q", [[-2.0, -1.0], [-1.0, -2.0]]), float)
    n = Q.shape[0]
    d = np.asarray(params.get("d", np.linspace(0.5, -0.5, n)), float)
    if Q.shape != (n, n) or not np.allclose(Q, Q.T) or np.linalg.eigvalsh(Q)[-1] > 1e-12:
        raise ConfigurationError("Q must be symmetric negative semidefinite")
    obj = QuadraticObjective(2 * np.eye(n), 0.5 * Q, 2 * np.eye(n), d)
    A, B, c = _equality(np.eye(n), -np.eye(n), np.zeros(n))
    return _build("eq10-hard", obj, Box(np.zeros(n), np.ones(n)), Box(np.zeros(n), np.ones(n)),
                  A, B, c, {"Q": Q.tolist(), "d": d.tolist()})


def example3_dual(params):
    """``max -y^2 + 2y`` over ``y in [0, 2]`` with ``y <= 1``; ``x`` is pinned to 0."""
    obj = QuadraticObjective([[2.0]], [[0.0]], [[2.0]], [0.0], [2.0])
    return _build("example3-dual", obj, Box(0.0, 0.0), Box(0.0, 2.0), [[0.0]], [[1.0]], [1.0], {})


def jamming(params):
    """Jammer (minimiser ``x``) against a user (maximiser ``y``) over parallel channels."""
    n = int(params.get("channels", 3))
    gu = np.asarray(params.get("gain_user", np.linspace(1.0, 0.5, n)), float)
    gj = np.asarray(params.get("gain_jammer", np.linspace(0.5, 1.0, n)), float)
    noise = float(params.get("noise", 1.0))
    user_budget = float(params.get("user_budget", 1.0))
    jammer_budget = float(params.get("jammer_budget", 1.0))
    cap = float(params.get("cap", 1.0))
    eta = float(params.get("eta", 0.0))
    eta_x = float(params.get("eta_x", 0.0))
    if min(gu.min(), gj.min(), noise, user_budget, jammer_budget, cap) <= 0 or min(eta, eta_x) < 0:
        raise ConfigurationError("jamming gains, noise, budgets and cap must be positive")
    obj = JammingObjective(gu, gj, noise, eta_x, eta)
    X = Simplex(n, jammer_budget, "le", 0.0, cap)
    Y = Simplex(n, user_budget, "le", 0.0, cap)
    full = {"channels": n, "gain_user": gu.tolist(), "gain_jammer": gj.tolist(), "noise": noise,
            "user_budget": user_budget, "jammer_budget": jammer_budget, "cap": cap, "eta": eta,
            "eta_x": eta_x}
    return _build("jamming", obj, X, Y, np.eye(n), np.eye(n), np.full(n, cap), full, exact=False)


def random_quadratic(rng, n, m, k, margin=0.2, box=1.0):
    """Random strongly-convex-concave quadratic on boxes with a Slater margin.

    ``c`` is chosen so that ``y = 0`` leaves slack at least ``margin`` in every
    row for every ``x`` in the box.
    """
    def spd(d):
        G = rng.standard_normal((d, d))
        return G @ G.T / d + (0.5 + rng.random()) * np.eye(d)

    P, R = spd(n), spd(m)
    C = rng.standard_normal((n, m))
    p, q = rng.standard_normal(n), 2.0 * rng.standard_normal(m)
    A = 0.5 * rng.standard_normal((k, n))
    B = rng.standard_normal((k, m))
    # orient each row against the unconstrained best response so that it tends to bind
    y_free = np.clip(np.linalg.solve(R, q), -box, box)
    B *= np.where(B @ y_free < 0, -1.0, 1.0)[:, None]
    c = box * np.abs(A).sum(axis=1) + margin
    return P, C, R, p, q, A, B, c


def custom_quadratic(params):
    """Quadratic from explicit blocks, or a random one from ``n, m, k, seed``."""
    if "P" in params:
        P, C, R = (np.atleast_2d(np.asarray(params[key], float)) for key in ("P", "C", "R"))
        n, m = C.shape
        p = np.asarray(params.get("p", np.zeros(n)), float)
        q = np.asarray(params.get("q", np.zeros(m)), float)
        A = np.asarray(params.get("A", np.zeros((0, n))), float).reshape(-1, n)
        B = np.asarray(params.get("B", np.zeros((0, m))), float).reshape(-1, m)
        c = np.asarray(params.get("c", np.zeros(A.shape[0])), float).reshape(-1)
    else:
        n, m, k = (int(params.get(key, 2)) for key in ("n", "m", "k"))
        rng = np.random.default_rng(int(params.get("seed", 0)))
        P, C, R, p, q, A, B, c = random_quadratic(rng, n, m, k, float(params.get("margin", 0.2)))
    if not params.get("allow_indefinite", False):
        if np.linalg.eigvalsh(0.5 * (P + P.T))[0] < 0 or np.linalg.eigvalsh(0.5 * (R + R.T))[0] < 0:
            raise ConfigurationError("P and R must be positive semidefinite (set allow_indefinite)")
    x_box = params.get("x_box", [-1.0, 1.0])
    y_box = params.get("y_box", [-1.0, 1.0])
    X = Box(np.full(n, x_box[0]), np.full(n, x_box[1]))
    Y = Box(np.full(m, y_box[0]), np.full(m, y_box[1]))
    obj = QuadraticObjective(P, C, R, p, q)
    full = {"P": P.tolist(), "C": C.tolist(), "R": R.tolist(), "p": p.tolist(), "q": q.tolist(),
            "A": A.tolist(), "B": B.tolist(), "c": c.tolist(), "x_box": list(x_box),
            "y_box": list(y_box), "allow_indefinite": bool(params.get("allow_indefinite", False))}
    return _build("custom-quadratic", obj, X, Y, A, B, c, full)


ZOO = {
    "eq23-divergence": eq23_divergence,
    "prop1-quadratic": prop1_quadratic,
    "eq10-hard": eq10_hard,
    "example3-dual": example3_dual,
    "jamming": jamming,
    "custom-quadratic": custom_quadratic,
}


def zoo_instance(name, params=None):
    if name not in ZOO:
        raise ConfigurationError(f"unknown instance {name!r}; known: {', '.join(ZOO)}")
    return ZOO[name](dict(params or {}))


def zoo_catalog():
    """``(name, one-line description)`` for every instance."""
    return [(name, (fn.__doc__ or "").strip().splitlines()[0].replace("``", "")) for name, fn in ZOO.items()]

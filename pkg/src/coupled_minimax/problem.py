"""Problem instances for coupled minimax: min over x, max over y, subject to A x + B y <= c."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import ConfigurationError, DimensionError, DomainError
from .geometry import ConvexSet, set_from_dict

SAMPLES_FOR_CONSTANTS = 1000
SAMPLES_FOR_BOUNDS = 10_000
SAFETY_MARGIN = 0.10


class ObjectiveOracle:
    """Smooth objective ``f(x, y)``, convex in ``x`` and concave in ``y``.

    ``value``, ``grad_x`` and ``grad_y`` broadcast over leading batch axes.
    """

    n: int
    m: int

    def value(self, x, y):
        raise NotImplementedError

    def grad_x(self, x, y):
        raise NotImplementedError

    def grad_y(self, x, y):
        raise NotImplementedError

    def exact_constants(self):
        """``(mu_x, mu_y, L_x, L_y)`` when available in closed form, else ``None``."""
        return None

    def to_dict(self):
        raise NotImplementedError


class QuadraticObjective(ObjectiveOracle):
    """``f = 1/2 x'Px + x'Cy - 1/2 y'Ry + p'x + q'y + r0``."""

    def __init__(self, P, C, R, p=None, q=None, r0=0.0):
        self.P = np.atleast_2d(np.asarray(P, dtype=float))
        self.C = np.atleast_2d(np.asarray(C, dtype=float))
        self.R = np.atleast_2d(np.asarray(R, dtype=float))
        self.n, self.m = self.C.shape
        if self.P.shape != (self.n, self.n) or self.R.shape != (self.m, self.m):
            raise DimensionError("quadratic blocks", ((self.n, self.n), (self.m, self.m)),
                                 (self.P.shape, self.R.shape))
        self.p = np.zeros(self.n) if p is None else np.asarray(p, dtype=float).reshape(self.n)
        self.q = np.zeros(self.m) if q is None else np.asarray(q, dtype=float).reshape(self.m)
        self.r0 = float(r0)

    def value(self, x, y):
        x, y = np.asarray(x, float), np.asarray(y, float)
        return (0.5 * np.einsum("...i,ij,...j->...", x, self.P, x)
                + np.einsum("...i,ij,...j->...", x, self.C, y)
                - 0.5 * np.einsum("...i,ij,...j->...", y, self.R, y)
                + x @ self.p + y @ self.q + self.r0)

    def grad_x(self, x, y):
        return np.asarray(x, float) @ self.P.T + np.asarray(y, float) @ self.C.T + self.p

    def grad_y(self, x, y):
        return np.asarray(x, float) @ self.C - np.asarray(y, float) @ self.R.T + self.q

    def exact_constants(self):
        sym_p = 0.5 * (self.P + self.P.T)
        sym_r = 0.5 * (self.R + self.R.T)
        mu_x = float(np.linalg.eigvalsh(sym_p)[0]) if self.n else 0.0
        mu_y = float(np.linalg.eigvalsh(sym_r)[0]) if self.m else 0.0
        lx = float(np.linalg.norm(np.hstack([self.P, self.C]), 2))
        ly = float(np.linalg.norm(np.hstack([self.C.T, -self.R]), 2))
        return mu_x, mu_y, lx, ly

    def to_dict(self):
        return {"type": "quadratic", "P": self.P.tolist(), "C": self.C.tolist(), "R": self.R.tolist(),
                "p": self.p.tolist(), "q": self.q.tolist(), "r0": self.r0}


class JammingObjective(ObjectiveOracle):
    """Sum rate ``sum_i log(1 + gu_i v_i / (noise + gj_i u_i))`` of a jammed user.

    ``u`` (the minimising variable) is the jammer's power, ``v`` the user's.
    Optional ``eta_u``/``eta_v`` add ``eta_u/2 |u|^2 - eta_v/2 |v|^2``.
    """

    def __init__(self, gain_user, gain_jammer, noise, eta_u=0.0, eta_v=0.0):
        self.gain_user = np.asarray(gain_user, dtype=float)
        self.gain_jammer = np.asarray(gain_jammer, dtype=float)
        self.noise = float(noise)
        self.eta_u = float(eta_u)
        self.eta_v = float(eta_v)
        self.n = self.m = self.gain_user.shape[0]

    def _denom(self, u):
        return self.noise + self.gain_jammer * u

    def value(self, u, v):
        u, v = np.asarray(u, float), np.asarray(v, float)
        rate = np.log1p(self.gain_user * v / self._denom(u)).sum(axis=-1)
        return rate + 0.5 * self.eta_u * (u * u).sum(-1) - 0.5 * self.eta_v * (v * v).sum(-1)

    def grad_x(self, u, v):
        u, v = np.asarray(u, float), np.asarray(v, float)
        d = self._denom(u)
        s = self.gain_user * v
        return -s * self.gain_jammer / (d * (d + s)) + self.eta_u * u

    def grad_y(self, u, v):
        u, v = np.asarray(u, float), np.asarray(v, float)
        return self.gain_user / (self._denom(u) + self.gain_user * v) - self.eta_v * v

    def to_dict(self):
        return {"type": "jamming", "gain_user": self.gain_user.tolist(),
                "gain_jammer": self.gain_jammer.tolist(), "noise": self.noise,
                "eta_u": self.eta_u, "eta_v": self.eta_v}


def objective_from_dict(d):
    if d["type"] == "quadratic":
        return QuadraticObjective(d["P"], d["C"], d["R"], d["p"], d["q"], d["r0"])
    if d["type"] == "jamming":
        return JammingObjective(d["gain_user"], d["gain_jammer"], d["noise"], d["eta_u"], d["eta_v"])
    raise ConfigurationError(f"unknown objective type {d['type']!r}")


@dataclass
class ProblemConstants:
    mu_x: float
    mu_y: float
    L_x: float
    L_y: float
    D: float
    f_lower: float
    f_upper: float
    estimated: bool = False

    @property
    def mu(self):
        return min(self.mu_x, self.mu_y)

    @property
    def strongly_convex_concave(self):
        return self.mu_x > 0 and self.mu_y > 0


def _rows(M, k):
    M = np.asarray(M, dtype=float)
    return (M if M.ndim == 2 else M.reshape(k, -1)).copy()


class CouplingConstraints:
    """Linear coupling ``A x + B y <= c``."""

    def __init__(self, A, B, c):
        self.c = np.atleast_1d(np.asarray(c, dtype=float)).copy()
        k = self.c.shape[0]
        self.A = _rows(A, k)
        self.B = _rows(B, k)

    @property
    def k(self):
        return self.c.shape[0]

    @property
    def sigma_max(self):
        if self.k == 0:
            return 0.0
        return max(float(np.linalg.norm(self.A, 2)), float(np.linalg.norm(self.B, 2)))

    def residual(self, x, y):
        """``A x + B y - c`` (broadcasts over batches)."""
        return np.asarray(x, float) @ self.A.T + np.asarray(y, float) @ self.B.T - self.c

    def equality_pairs(self):
        """Index pairs ``(i, j)`` with row ``j`` equal to minus row ``i``: an equality encoded twice."""
        pairs, used = [], set()
        for i in range(self.k):
            if i in used:
                continue
            for j in range(i + 1, self.k):
                if j in used:
                    continue
                if (np.array_equal(self.A[j], -self.A[i]) and np.array_equal(self.B[j], -self.B[i])
                        and self.c[j] == -self.c[i]):
                    pairs.append((i, j))
                    used.update((i, j))
                    break
        return pairs


@dataclass
class ProblemInstance:
    name: str
    objective: ObjectiveOracle
    X: ConvexSet
    Y: ConvexSet
    coupling: CouplingConstraints
    constants: ProblemConstants
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        n, m, k = self.X.dim, self.Y.dim, self.coupling.k
        if self.objective.n != n or self.objective.m != m:
            raise DimensionError("objective dims", (n, m), (self.objective.n, self.objective.m))
        if self.coupling.A.shape != (k, n):
            raise DimensionError("coupling A", (k, n), self.coupling.A.shape)
        if self.coupling.B.shape != (k, m):
            raise DimensionError("coupling B", (k, m), self.coupling.B.shape)

    @property
    def n(self):
        return self.X.dim

    @property
    def m(self):
        return self.Y.dim

    @property
    def k(self):
        return self.coupling.k

    @property
    def A(self):
        return self.coupling.A

    @property
    def B(self):
        return self.coupling.B

    @property
    def c(self):
        return self.coupling.c

    def check_point(self, x=None, y=None, lam=None):
        for val, dim, what in ((x, self.n, "x"), (y, self.m, "y"), (lam, self.k, "lambda")):
            if val is not None and np.shape(val) != (dim,):
                raise DimensionError(what, (dim,), np.shape(val))
        if lam is not None and np.any(np.asarray(lam) < 0):
            raise DomainError(f"multipliers must be non-negative, got min {np.min(lam):.3e}")

    def to_dict(self):
        return {"name": self.name, "n": self.n, "m": self.m, "k": self.k,
                "A": self.A.tolist(), "B": self.B.tolist(), "c": self.c.tolist(),
                "X": self.X.to_dict(), "Y": self.Y.to_dict(),
                "objective": self.objective.to_dict(),
                "constants": asdict(self.constants), "params": self.params}

    def to_json(self, **kw):
        return json.dumps(self.to_dict(), **kw)

    @classmethod
    def from_dict(cls, d):
        inst = cls(d["name"], objective_from_dict(d["objective"]), set_from_dict(d["X"]),
                   set_from_dict(d["Y"]),
                   CouplingConstraints(np.reshape(np.asarray(d["A"], float), (d["k"], d["n"])),
                                       np.reshape(np.asarray(d["B"], float), (d["k"], d["m"])), d["c"]),
                   ProblemConstants(**d["constants"]), d.get("params", {}))
        if (inst.n, inst.m, inst.k) != (d["n"], d["m"], d["k"]):
            raise DimensionError("instance header", (d["n"], d["m"], d["k"]), (inst.n, inst.m, inst.k))
        return inst

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))


def lagrangian_eval(inst, x, y, lam):
    """``f(x, y) - lam'(A x + B y - c)``."""
    inst.check_point(x, y, lam)
    return float(inst.objective.value(x, y) - lam @ inst.coupling.residual(x, y))


def lagrangian_grads(inst, x, y, lam):
    """Gradients of the Lagrangian in ``x``, ``y`` and ``lam``."""
    inst.check_point(x, y, lam)
    gx = inst.objective.grad_x(x, y) - inst.A.T @ lam
    gy = inst.objective.grad_y(x, y) - inst.B.T @ lam
    glam = -inst.coupling.residual(x, y)
    return gx, gy, glam


def estimate_constants(objective, X, Y, rng=None, exact=True, samples=SAMPLES_FOR_BOUNDS):
    """Strong-convexity/Lipschitz moduli, set radius and sampled value range.

    Quadratics use their closed-form moduli.  Other objectives are probed
    with finite differences of the gradient along random directions; the
    extremes are widened by ``SAFETY_MARGIN`` and flagged as estimated.
    """
    rng = np.random.default_rng(0) if rng is None else rng
    closed = objective.exact_constants() if exact else None
    count = samples if closed is not None else max(samples, SAMPLES_FOR_CONSTANTS)
    xs = X.sample(rng, count)
    ys = Y.sample(rng, count)
    vals = objective.value(xs, ys)
    spread = float(np.std(vals))
    f_lower, f_upper = float(np.min(vals)) - spread, float(np.max(vals)) + spread
    D = max(X.norm_bound(), Y.norm_bound())
    if closed is not None:
        mu_x, mu_y, lx, ly = closed
        return ProblemConstants(max(mu_x, 0.0), max(mu_y, 0.0), lx, ly, D, f_lower, f_upper, False)

    n, m = objective.n, objective.m
    pts_x, pts_y = xs[:SAMPLES_FOR_CONSTANTS], ys[:SAMPLES_FOR_CONSTANTS]
    h = 1e-5
    dx = rng.standard_normal((SAMPLES_FOR_CONSTANTS, n))
    dy = rng.standard_normal((SAMPLES_FOR_CONSTANTS, m))
    norm = np.sqrt((dx ** 2).sum(1, keepdims=True) + (dy ** 2).sum(1, keepdims=True))
    dx, dy = dx / norm, dy / norm
    hx = objective.grad_x(pts_x + h * dx, pts_y + h * dy) - objective.grad_x(pts_x - h * dx, pts_y - h * dy)
    hy = objective.grad_y(pts_x + h * dx, pts_y + h * dy) - objective.grad_y(pts_x - h * dx, pts_y - h * dy)
    lx = float(np.max(np.linalg.norm(hx, axis=1)) / (2 * h)) * (1 + SAFETY_MARGIN)
    ly = float(np.max(np.linalg.norm(hy, axis=1)) / (2 * h)) * (1 + SAFETY_MARGIN)
    ux = dx / np.linalg.norm(dx, axis=1, keepdims=True)
    uy = dy / np.linalg.norm(dy, axis=1, keepdims=True)
    cx = ((objective.grad_x(pts_x + h * ux, pts_y) - objective.grad_x(pts_x - h * ux, pts_y)) * ux).sum(1) / (2 * h)
    cy = -((objective.grad_y(pts_x, pts_y + h * uy) - objective.grad_y(pts_x, pts_y - h * uy)) * uy).sum(1) / (2 * h)
    mu_x = max(float(np.min(cx)) / (1 + SAFETY_MARGIN), 0.0)
    mu_y = max(float(np.min(cy)) / (1 + SAFETY_MARGIN), 0.0)
    return ProblemConstants(mu_x, mu_y, lx, ly, D, f_lower, f_upper, True)


def _max_violation_lp(inst, x):
    from scipy.optimize import linprog

    m, k = inst.m, inst.k
    cost = np.zeros(m + 1)
    cost[-1] = 1.0
    A_ub = np.hstack([inst.B, -np.ones((k, 1))])
    b_ub = inst.c - inst.A @ x
    bounds = [(lo, hi) for lo, hi in zip(inst.Y.lo, inst.Y.hi)] + [(None, None)]
    out = linprog(cost, A_ub=A_ub, b_ub=b_ub, bounds=bounds, method="highs")
    if out.status != 0:
        return None
    return float(out.x[-1]), out.x[:m]


def _max_violation_min(inst, x, iters=400):
    """Smallest achievable ``max_i (A x + B y - c)_i`` over ``y`` in ``Y``.

    Solved as a linear program when ``Y`` is a box, otherwise by projected
    subgradient descent.
    """
    from .geometry import Box

    if isinstance(inst.Y, Box):
        lp = _max_violation_lp(inst, x)
        if lp is not None:
            return lp
    y = inst.Y.project(np.zeros(inst.m))
    base = inst.A @ x - inst.c
    best = np.max(base + inst.B @ y)
    best_y = y
    scale = max(inst.Y.norm_bound(), 1.0)
    for t in range(iters):
        viol = base + inst.B @ y
        i = int(np.argmax(viol))
        if viol[i] < best:
            best, best_y = viol[i], y
        g = inst.B[i]
        gn = np.linalg.norm(g)
        if gn == 0:
            break
        y = inst.Y.project(y - scale / np.sqrt(t + 1) * g / gn)
    return float(best), best_y


@dataclass
class FeasibilityReport:
    feasible: bool
    worst_residual: float
    slater_margin: float
    worst_x: np.ndarray


def inner_feasibility(inst, x):
    """``(residual, y)`` where residual is the least coupling violation reachable from ``x``."""
    inst.check_point(x=x)
    if inst.k == 0:
        return 0.0, inst.Y.project(np.zeros(inst.m))
    best, y = _max_violation_min(inst, np.asarray(x, float))
    return max(best, 0.0), y


def feasibility_check(inst, samples=256, seed=0, tol=1e-9):
    """Probe whether every ``x`` admits a feasible ``y``.

    ``x`` is sampled quasi-randomly (scrambled Sobol) over ``X``; box
    vertices are added when ``n`` is small.  The Slater margin is the
    smallest slack ``-max_i (A x + B y - c)_i`` found over the samples.
    """
    from scipy.stats import qmc

    if inst.k == 0:
        return FeasibilityReport(True, 0.0, np.inf, inst.X.project(np.zeros(inst.n)))
    lo, hi = inst.X.bounding_box()
    lo = np.where(np.isfinite(lo), lo, -1.0)
    hi = np.where(np.isfinite(hi), hi, lo + 2.0)
    u = qmc.Sobol(inst.n, scramble=True, seed=seed).random(samples)
    pts = [inst.X.project(lo + (hi - lo) * u)]
    if inst.n <= 8:
        corners = np.array(np.meshgrid(*[[a, b] for a, b in zip(lo, hi)], indexing="ij")).reshape(inst.n, -1).T
        pts.append(inst.X.project(corners))
    pts = np.vstack(pts)
    worst, worst_x = -np.inf, pts[0]
    for x in pts:
        val, _ = _max_violation_min(inst, x)
        if val > worst:
            worst, worst_x = val, x
    return FeasibilityReport(worst <= tol, max(worst, 0.0), -worst, worst_x)

"""Saddle-point solvers for the Lagrangian at a fixed multiplier.

At fixed ``lam`` the Lagrangian is convex-concave in ``(x, y)`` over ``X x Y``;
these solvers approximate its saddle point.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import ConfigurationError, DivergenceError

METHODS = ("gda_multistep", "ogda", "extragradient")


@dataclass
class InnerSolverConfig:
    method: str = "extragradient"
    step_x: float | None = None
    step_y: float | None = None
    ascent_steps_per_descent: int = 1
    max_iters: int = 100_000
    target_residual: float = 1e-8
    warm_start: bool = True

    def __post_init__(self):
        if self.method not in METHODS:
            raise ConfigurationError(f"unknown inner method {self.method!r}; choose from {METHODS}")
        if self.ascent_steps_per_descent < 1 or self.max_iters < 0:
            raise ConfigurationError("ascent_steps_per_descent >= 1 and max_iters >= 0 required")
        for s in (self.step_x, self.step_y):
            if s is not None and s <= 0:
                raise ConfigurationError("step sizes must be positive")


@dataclass
class InnerSolution:
    x: np.ndarray
    y: np.ndarray
    residual: float
    iters_used: int
    certified_d_bound: float
    heuristic: bool


def operator_lipschitz(inst):
    """Lipschitz constant of ``(grad_x f, -grad_y f)`` on the joint space."""
    k = inst.constants
    return float(np.hypot(k.L_x, k.L_y))


def default_steps(inst, method):
    L = max(inst.constants.L_x, inst.constants.L_y, 1e-12)
    s = 1.0 / (4 * L) if method == "ogda" else 1.0 / (2 * L)
    return s, s


def resolve_steps(inst, cfg):
    sx, sy = default_steps(inst, cfg.method)
    return (cfg.step_x or sx), (cfg.step_y or sy)


def _grads(inst, x, y, lam):
    gx = inst.objective.grad_x(x, y) - inst.A.T @ lam
    gy = inst.objective.grad_y(x, y) - inst.B.T @ lam
    return gx, gy


def residual(inst, lam, x, y, step_x, step_y, grads=None):
    """Scaled projected-gradient residual of the Lagrangian at fixed ``lam``."""
    gx, gy = _grads(inst, x, y, lam) if grads is None else grads
    rx = x - inst.X.project(x - step_x * gx)
    ry = y - inst.Y.project(y + step_y * gy)
    return float(np.sqrt(rx @ rx + ry @ ry) / min(step_x, step_y))


def distance_bound(inst, res, step):
    """Bound on the squared distance to the saddle point implied by residual ``res``.

    For an operator that is ``mu``-strongly monotone and ``L``-Lipschitz,
    ``|z - z*| <= (1 + step*L) * res / mu`` for the residual computed with a
    common step ``step``.
    """
    mu = inst.constants.mu
    if mu <= 0:
        return np.inf
    return float(((1.0 + step * operator_lipschitz(inst)) * res / mu) ** 2)


def residual_target_for(inst, delta, step):
    """Residual that certifies squared distance ``<= delta**2 / 4``."""
    mu = inst.constants.mu
    return 0.5 * delta * mu / (1.0 + step * operator_lipschitz(inst))


def inner_solve(inst, lam, cfg, x0=None, y0=None):
    """Approximate saddle point of the Lagrangian at fixed multiplier ``lam``.

    Stops at the first iterate whose residual (evaluated with the common step
    ``min(step_x, step_y)``) is at most ``cfg.target_residual`` or after
    ``cfg.max_iters`` iterations.
    """
    lam = np.asarray(lam, dtype=float)
    inst.check_point(lam=lam)
    sx, sy = resolve_steps(inst, cfg)
    s = min(sx, sy)
    x = inst.X.project(np.zeros(inst.n) if x0 is None else np.asarray(x0, float))
    y = inst.Y.project(np.zeros(inst.m) if y0 is None else np.asarray(y0, float))
    prev = None
    it = 0
    check_every_step = cfg.target_residual > 0
    while True:
        g = _grads(inst, x, y, lam)
        if check_every_step or it >= cfg.max_iters:
            res = residual(inst, lam, x, y, s, s, grads=g)
            if not np.isfinite(res):
                raise DivergenceError(f"inner {cfg.method} produced non-finite iterates after {it} iterations")
            if res <= cfg.target_residual or it >= cfg.max_iters:
                break
        it += 1
        gx, gy = g
        if cfg.method == "gda_multistep":
            for j in range(cfg.ascent_steps_per_descent):
                if j:
                    gy = _grads(inst, x, y, lam)[1]
                y = inst.Y.project(y + sy * gy)
            gx = _grads(inst, x, y, lam)[0]
            x = inst.X.project(x - sx * gx)
        elif cfg.method == "ogda":
            pgx, pgy = (gx, gy) if prev is None else prev
            prev = (gx, gy)
            x = inst.X.project(x - sx * (2 * gx - pgx))
            y = inst.Y.project(y + sy * (2 * gy - pgy))
        else:
            xh = inst.X.project(x - sx * gx)
            yh = inst.Y.project(y + sy * gy)
            hx, hy = _grads(inst, xh, yh, lam)
            x = inst.X.project(x - sx * hx)
            y = inst.Y.project(y + sy * hy)
    heuristic = inst.constants.mu <= 0
    return InnerSolution(x, y, res, it, distance_bound(inst, res, s), heuristic)


def reference_config(inst, cfg=None):
    """High-accuracy extragradient settings used for diagnostics."""
    base = InnerSolverConfig() if cfg is None else cfg
    mu = max(inst.constants.mu, 1e-12)
    return replace(base, method="extragradient", step_x=None, step_y=None, ascent_steps_per_descent=1,
                   target_residual=1e-9 * mu, max_iters=max(base.max_iters, 200_000))

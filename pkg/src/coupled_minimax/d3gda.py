"""Gradient descent-ascent on the joint problem min over (x, lam), max over y, of the Lagrangian."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, DivergenceError
from .trace import IterationRecord, SolverTrace


@dataclass
class D3Config:
    alpha: float | None = None
    beta: float | None = None
    T: int = 1000
    ascent_steps: int = 1
    x0: np.ndarray | None = None
    y0: np.ndarray | None = None
    lambda0: np.ndarray | None = None

    def __post_init__(self):
        if self.T < 0 or self.ascent_steps < 1:
            raise ConfigurationError("T >= 0 and ascent_steps >= 1 required")


def default_steps(inst):
    """``beta = 1/(2 L_y)`` and ``alpha = min(1/(2 L_x), 1/(2 sigma))``."""
    k = inst.constants
    s = inst.coupling.sigma_max
    beta = 1.0 / (2 * max(k.L_y, 1e-12))
    alpha = 1.0 / (2 * max(k.L_x, 1e-12))
    if s > 0:
        alpha = min(alpha, 1.0 / (2 * s))
    return alpha, beta


def p_residuals(inst, x, y, lam, alpha, beta):
    """Norms of the projected-gradient residuals of the ``(x, lam)`` block and the ``y`` block."""
    f = inst.objective
    gx = f.grad_x(x, y) - inst.A.T @ lam
    gy = f.grad_y(x, y) - inst.B.T @ lam
    glam = -inst.coupling.residual(x, y)
    px = (x - inst.X.project(x - alpha * gx)) / alpha
    pl = (lam - np.maximum(lam - alpha * glam, 0.0)) / alpha
    py = (y - inst.Y.project(y + beta * gy)) / beta
    return float(np.sqrt(px @ px + pl @ pl)), float(np.linalg.norm(py))


def d3_gda_run(inst, cfg=None):
    """Alternating projected steps: ascent in ``y``, then descent in ``x`` and ``lam``.

    The ``lam`` step uses the coupling residual at the previous ``x`` and the
    new ``y``.  With ``ascent_steps > 1`` the ``y`` step is repeated before
    each descent step.
    """
    cfg = D3Config() if cfg is None else cfg
    da, db = default_steps(inst)
    alpha = da if cfg.alpha is None else cfg.alpha
    beta = db if cfg.beta is None else cfg.beta
    f = inst.objective
    x = inst.X.project(np.zeros(inst.n) if cfg.x0 is None else np.asarray(cfg.x0, float))
    y = inst.Y.project(np.zeros(inst.m) if cfg.y0 is None else np.asarray(cfg.y0, float))
    lam = np.zeros(inst.k) if cfg.lambda0 is None else np.asarray(cfg.lambda0, float).copy()
    inst.check_point(x, y, lam)
    trace = SolverTrace("d3-gda", metadata={"instance": inst.name, "alpha": alpha, "beta": beta, "T": cfg.T})
    for r in range(cfg.T):
        for _ in range(cfg.ascent_steps):
            y = inst.Y.project(y + beta * (f.grad_y(x, y) - inst.B.T @ lam))
        x_new = inst.X.project(x - alpha * (f.grad_x(x, y) - inst.A.T @ lam))
        res_old = inst.coupling.residual(x, y)
        lam_new = np.maximum(lam - alpha * (-res_old), 0.0)
        x = x_new
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y)) and np.all(np.isfinite(lam_new))):
            raise DivergenceError(f"D3 gradient descent-ascent diverged at iteration {r}")
        res = inst.coupling.residual(x, y)
        pxl, py = p_residuals(inst, x, y, lam_new, alpha, beta)
        trace.records.append(IterationRecord(r, x, y, lam_new.copy(), float(np.linalg.norm(lam_new)),
                                             float(np.max(res, initial=0.0)), lam_new * res,
                                             p_xl=pxl, p_y=py))
        lam = lam_new
    trace.final_x, trace.final_y, trace.final_lambda = x, y, lam
    return trace

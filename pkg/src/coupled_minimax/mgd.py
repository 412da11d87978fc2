"""Multiplier gradient descent.

The dual function ``G(lam) = min_x max_y L(x, y, lam)`` is smooth when the
objective is strongly convex-concave, with gradient ``c - A x(lam) - B y(lam)``
at the Lagrangian saddle point.  The method alternates an approximate inner
saddle solve with a projected gradient step on ``lam``.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ConfigurationError, NotApplicableError
from .inner import (InnerSolverConfig, inner_solve, reference_config, resolve_steps,
                    residual_target_for)
from .problem import lagrangian_eval
from .trace import IterationRecord, SolverTrace

log = logging.getLogger(__name__)

DELTA_MODES = ("fixed", "schedule", "iterations")


@dataclass
class DualConstants:
    sigma: float
    L_H: float
    L_G: float
    D: float
    D1: float
    f_lower: float

    @property
    def alpha_max(self):
        return np.inf if self.L_G == 0 else 1.0 / self.L_G


def dual_constants(inst):
    """Smoothness constants of the inner value ``H(x, lam)`` and of the dual ``G``."""
    k = inst.constants
    if k.mu_y <= 0 or k.mu_x <= 0:
        raise NotApplicableError("dual smoothness constants need mu_x > 0 and mu_y > 0")
    s = inst.coupling.sigma_max
    lh = (k.L_x + s) * (k.L_y + k.mu_y) / k.mu_y + s * (k.L_x + s + k.mu_y) / k.mu_y
    lg = s * (1 + k.L_y / k.mu_y) * lh / k.mu_x + s * s / k.mu_y
    d1 = 2 * s * k.D + float(np.linalg.norm(inst.c))
    return DualConstants(s, lh, lg, k.D, d1, k.f_lower)


def dual_oracle(inst, lam, cfg=None, x0=None, y0=None):
    """``(grad G(lam), G(lam), inner solution)`` from one inner solve."""
    cfg = reference_config(inst) if cfg is None else cfg
    sol = inner_solve(inst, lam, cfg, x0, y0)
    grad = -inst.coupling.residual(sol.x, sol.y)
    return grad, lagrangian_eval(inst, sol.x, sol.y, lam), sol


def grad_G(inst, lam, cfg=None):
    """Gradient of the dual function at ``lam``."""
    return dual_oracle(inst, np.asarray(lam, float), cfg)[0]


def projected_dual_gradient(lam, grad, alpha):
    """``(lam - max(lam - alpha * grad, 0)) / alpha``; zero exactly at dual stationary points."""
    return (lam - np.maximum(lam - alpha * grad, 0.0)) / alpha


@dataclass
class MgdConfig:
    alpha: float | None = None
    T: int = 100
    delta_mode: str = "fixed"
    delta: float = 1e-3
    inner: InnerSolverConfig = field(default_factory=InnerSolverConfig)
    lambda0: np.ndarray | None = None
    diagnostics: bool = True
    epsilon: float = 1e-3
    allow_large_alpha: bool = False

    def __post_init__(self):
        if self.delta_mode not in DELTA_MODES:
            raise ConfigurationError(f"delta_mode must be one of {DELTA_MODES}")
        if self.T < 0 or self.delta <= 0:
            raise ConfigurationError("T >= 0 and delta > 0 required")
        if self.alpha is not None and self.alpha <= 0:
            raise ConfigurationError("alpha must be positive")


def resolve_alpha(inst, cfg):
    """Dual step: ``0.9 / L_G`` by default; larger values need ``allow_large_alpha``."""
    try:
        dc = dual_constants(inst)
    except NotApplicableError:
        dc = None
    if cfg.alpha is None:
        if dc is None:
            raise ConfigurationError("alpha must be given when the dual constants are unavailable")
        return 1.0 if dc.L_G == 0 else 0.9 / dc.L_G
    if dc is not None and cfg.alpha > dc.alpha_max * (1 + 1e-12):
        if not cfg.allow_large_alpha:
            raise ConfigurationError(f"alpha={cfg.alpha:g} exceeds 1/L_G={dc.alpha_max:g}; "
                                     "set allow_large_alpha to override")
        warnings.warn(f"alpha={cfg.alpha:g} exceeds 1/L_G={dc.alpha_max:g}; rate bounds do not apply",
                      stacklevel=3)
    return float(cfg.alpha)


def delta_at(cfg, r):
    if cfg.delta_mode == "schedule":
        return 1.0 / max(r, 1) ** 2
    return cfg.delta


def _inner_config_at(inst, cfg, r):
    if cfg.delta_mode == "iterations":
        return replace(cfg.inner, target_residual=0.0)
    sx, sy = resolve_steps(inst, cfg.inner)
    target = residual_target_for(inst, delta_at(cfg, r), min(sx, sy))
    return replace(cfg.inner, target_residual=target)


def mgd_run(inst, cfg=None, x0=None, y0=None):
    """Run multiplier gradient descent for ``cfg.T`` outer iterations.

    In ``"iterations"`` mode every inner solve runs exactly
    ``cfg.inner.max_iters`` iterations; the other modes stop the inner solver
    once its residual certifies the requested accuracy.
    """
    cfg = MgdConfig() if cfg is None else cfg
    alpha = resolve_alpha(inst, cfg)
    if cfg.delta_mode != "iterations" and inst.constants.mu <= 0:
        raise NotApplicableError("accuracy-driven inner solves need mu_x > 0 and mu_y > 0")
    lam = np.zeros(inst.k) if cfg.lambda0 is None else np.asarray(cfg.lambda0, float).copy()
    inst.check_point(lam=lam)
    x = inst.X.project(np.zeros(inst.n) if x0 is None else np.asarray(x0, float))
    y = inst.Y.project(np.zeros(inst.m) if y0 is None else np.asarray(y0, float))
    ref_cfg = reference_config(inst, cfg.inner) if cfg.diagnostics else None
    rx, ry = x, y
    trace = SolverTrace("mgd", metadata={"instance": inst.name, "alpha": alpha, "T": cfg.T,
                                         "delta_mode": cfg.delta_mode, "delta": cfg.delta,
                                         "inner_method": cfg.inner.method})
    for r in range(cfg.T):
        icfg = _inner_config_at(inst, cfg, r)
        sol = inner_solve(inst, lam, icfg, x if cfg.inner.warm_start else None,
                          y if cfg.inner.warm_start else None)
        x, y = sol.x, sol.y
        res = inst.coupling.residual(x, y)
        rec = IterationRecord(r, x, y, lam.copy(), float(np.linalg.norm(lam)),
                              float(np.max(res, initial=0.0)), lam * res, d_bound=sol.certified_d_bound)
        if cfg.diagnostics:
            grad, g_val, ref = dual_oracle(inst, lam, ref_cfg, rx, ry)
            rx, ry = ref.x, ref.y
            rec.q_norm = float(np.linalg.norm(projected_dual_gradient(lam, grad, alpha)))
            rec.q_error = float(np.sqrt(2 * ref.certified_d_bound) * inst.coupling.sigma_max)
            rec.g_estimate = g_val
        trace.records.append(rec)
        lam = np.maximum(lam - alpha * (-res), 0.0)
        if r % 50 == 0:
            log.debug("mgd r=%d |lam|=%.3e viol=%.3e q=%.3e", r, rec.lambda_norm, rec.max_violation, rec.q_norm)
    trace.final_x, trace.final_y, trace.final_lambda = x, y, lam
    if cfg.diagnostics and trace.records:
        last = trace.records[-1]
        delta = delta_at(cfg, cfg.T - 1)
        trace.metadata["certified"] = bool(last.q_norm + last.q_error <= cfg.epsilon
                                           and last.d_bound <= delta ** 2)
        trace.metadata["epsilon"] = cfg.epsilon
    return trace


@dataclass
class RateCheck:
    T: int
    measured: float
    bound: float

    @property
    def passed(self):
        return self.measured <= self.bound


@dataclass
class RateReport:
    mode: str
    checks: list

    @property
    def passed(self):
        return all(c.passed for c in self.checks)


def rate_report(trace, inst, horizons=None, r0=1):
    """Compare the running mean of ``|Q|^2`` with the guaranteed decay.

    Fixed accuracy ``delta``: mean over ``r < T`` of ``|Q(lam^r)|^2`` against
    ``(G(lam^0) - f_lower) / (T h) + (a s D1 delta + a^2 L_G s^2 delta^2) / h``
    with ``h = a - L_G a^2``.  Scheduled accuracy ``1/r^2``: mean over
    ``t = 1..T`` of ``|Q(lam^(r0+t))|^2`` against the analogous bound with the
    floor replaced by ``(a s D1 + a^2 L_G s^2)/h * mean_t 1/(t + r0)^2``.
    """
    dc = dual_constants(inst)
    meta = trace.metadata
    alpha = meta["alpha"]
    h = alpha - dc.L_G * alpha ** 2
    q2 = trace.column("Q_norm") ** 2
    g_est = trace.column("G_estimate")
    s = dc.sigma
    total = len(q2)
    checks = []
    if meta["delta_mode"] == "fixed":
        delta = meta["delta"]
        horizons = horizons or [total]
        for T in horizons:
            if T > total:
                raise ConfigurationError(f"horizon {T} exceeds trace length {total}")
            bound = np.inf if h <= 0 else ((g_est[0] - dc.f_lower) / (T * h)
                                           + (alpha * s * dc.D1 * delta + alpha ** 2 * dc.L_G * s * s * delta ** 2) / h)
            checks.append(RateCheck(T, float(np.mean(q2[:T])), float(bound)))
    elif meta["delta_mode"] == "schedule":
        horizons = horizons or [total - r0 - 1]
        for T in horizons:
            if r0 + T >= total:
                raise ConfigurationError(f"horizon {T} with r0={r0} exceeds trace length {total}")
            t = np.arange(1, T + 1)
            tail = np.mean(1.0 / (t + r0) ** 2)
            bound = np.inf if h <= 0 else ((g_est[r0 + 1] - dc.f_lower) / (T * h)
                                           + (alpha * s * dc.D1 + alpha ** 2 * dc.L_G * s * s) / h * tail)
            checks.append(RateCheck(T, float(np.mean(q2[r0 + 1: r0 + T + 1])), float(bound)))
    else:
        raise NotApplicableError("rate bounds need an accuracy-driven delta mode")
    return RateReport(meta["delta_mode"], checks)

"""Certificates of approximate stationarity for a primal-dual point."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .inner import reference_config
from .mgd import dual_oracle, projected_dual_gradient


@dataclass
class DualStationarity:
    q: np.ndarray
    grad: np.ndarray
    error: float
    x_bar: np.ndarray
    y_bar: np.ndarray
    d_ref: float

    @property
    def q_norm(self):
        return float(np.linalg.norm(self.q))


def q_of_lambda(inst, lam, alpha, cfg=None):
    """Projected dual gradient at ``lam`` from a high-accuracy inner solve.

    ``error`` bounds how far the computed vector can be from the exact one,
    given the certified accuracy of the reference solve.
    """
    lam = np.asarray(lam, float)
    inst.check_point(lam=lam)
    grad, _, sol = dual_oracle(inst, lam, reference_config(inst, cfg))
    err = float(np.sqrt(2 * sol.certified_d_bound) * inst.coupling.sigma_max)
    return DualStationarity(projected_dual_gradient(lam, grad, alpha), grad, err, sol.x, sol.y,
                            sol.certified_d_bound)


@dataclass
class BoundCheck:
    name: str
    measured: float
    bound: float

    @property
    def passed(self):
        return bool(self.measured <= self.bound)


@dataclass
class StationarityReport:
    q_norm: float
    d_value: float
    per_constraint_violation: np.ndarray
    comp_gap: np.ndarray
    epsilon_certified: float
    delta_certified: float
    lambda_bound: float
    lambda_bound_measured: bool
    bound_checks: list = field(default_factory=list)

    @property
    def passed(self):
        return all(c.passed for c in self.bound_checks)

    def failed(self):
        return [c for c in self.bound_checks if not c.passed]

    def summary(self):
        lines = [f"|Q| = {self.q_norm:.3e}  d = {self.d_value:.3e}  "
                 f"eps_cert = {self.epsilon_certified:.3e}  delta_cert = {self.delta_certified:.3e}  "
                 f"b_bar = {self.lambda_bound:.3e}{'' if self.lambda_bound_measured else ' (from |lambda|)'}"]
        for c in self.bound_checks:
            lines.append(f"  [{'ok' if c.passed else 'FAIL'}] {c.name}: {c.measured:.3e} <= {c.bound:.3e}")
        return "\n".join(lines)


def stationarity_report(inst, x, y, lam, eps, delta, alpha, lambda_bound=None, cfg=None):
    """Check the consequences of ``(eps, delta)``-stationarity at ``(x, y, lam)``.

    The premises are ``|Q(lam)| <= eps`` and ``|x - x(lam)|^2 + |y - y(lam)|^2
    <= delta^2``.  The consequences checked are the row-wise coupling
    violation ``<= 2 sigma delta + eps`` and the two-sided bound on
    ``lam_i (A x + B y - c)_i``.  ``lambda_bound`` is the largest multiplier
    norm along the run; without it ``|lam|`` is used and the report says so.
    """
    x, y, lam = (np.asarray(v, float) for v in (x, y, lam))
    inst.check_point(x, y, lam)
    ds = q_of_lambda(inst, lam, alpha, cfg)
    d_value = float(np.sum((ds.x_bar - x) ** 2) + np.sum((ds.y_bar - y) ** 2))
    res = inst.coupling.residual(x, y)
    viol = np.maximum(res, 0.0)
    comp = lam * res
    measured = lambda_bound is not None
    b_bar = float(lambda_bound) if measured else float(np.linalg.norm(lam))
    s = inst.coupling.sigma_max
    eps_cert = ds.q_norm + ds.error
    delta_cert = np.sqrt(d_value) + np.sqrt(ds.d_ref)
    D1 = 2 * s * inst.constants.D + float(np.linalg.norm(inst.c))
    upper = b_bar * (2 * s * delta + eps)
    lower = min(-b_bar * eps, -eps * alpha * D1) - 2 * b_bar * s * delta
    checks = [
        BoundCheck("premise |Q(lambda)| <= eps", eps_cert, eps),
        BoundCheck("premise d <= delta^2", delta_cert ** 2, delta ** 2),
    ]
    for i in range(inst.k):
        checks.append(BoundCheck(f"violation row {i} <= 2 sigma delta + eps", float(viol[i]), 2 * s * delta + eps))
        checks.append(BoundCheck(f"complementarity row {i} upper", float(comp[i]), upper))
        checks.append(BoundCheck(f"complementarity row {i} lower", -float(comp[i]), -lower))
    return StationarityReport(ds.q_norm, d_value, viol, comp, float(eps_cert), float(delta_cert), b_bar,
                              measured, checks)


def report_from_trace(inst, trace, eps=None, delta=None):
    """Report for the last record of an MGD trace, at its certified accuracy by default."""
    rec = trace.records[-1]
    alpha = trace.metadata["alpha"]
    if eps is None or delta is None:
        probe = stationarity_report(inst, rec.x, rec.y, rec.lam, 1.0, 1.0, alpha, trace.lambda_bound)
        eps = probe.epsilon_certified if eps is None else eps
        delta = probe.delta_certified if delta is None else delta
    return stationarity_report(inst, rec.x, rec.y, rec.lam, eps, delta, alpha, trace.lambda_bound)

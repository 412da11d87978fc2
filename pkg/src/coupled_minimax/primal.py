"""Naive primal baselines that treat the coupling as a state-dependent set for ``y``.

The maximiser projects onto ``{y in Y : A x + B y <= c}`` for the current
``x``, and the minimiser takes plain projected steps.  They find stationary
points of the wrong problem in general, which is what makes them useful as
baselines.
"""

from __future__ import annotations

import numpy as np

from .errors import ConfigurationError, DivergenceError
from .geometry import HalfSpace, Polytope


def coupled_y_set(inst, x):
    rhs = inst.c - inst.A @ x
    return Polytope([inst.Y] + [HalfSpace(inst.B[i], rhs[i]) for i in range(inst.k)])


def primal_run(inst, method="gda", step=None, T=50, x0=None, y0=None):
    """Run primal GDA or optimistic GDA; returns the list of ``(x, y)`` iterates."""
    if method not in ("gda", "ogda"):
        raise ConfigurationError(f"unknown primal method {method!r}")
    L = max(inst.constants.L_x, inst.constants.L_y, 1e-12)
    step = (1 / (2 * L) if method == "gda" else 1 / (4 * L)) if step is None else step
    x = inst.X.project(np.zeros(inst.n) if x0 is None else np.asarray(x0, float))
    y = coupled_y_set(inst, x).project(np.zeros(inst.m) if y0 is None else np.asarray(y0, float))
    f = inst.objective
    path = [(x, y)]
    prev = None
    for _ in range(T):
        gx, gy = f.grad_x(x, y), f.grad_y(x, y)
        if method == "gda":
            y = coupled_y_set(inst, x).project(y + step * gy)
            x = inst.X.project(x - step * f.grad_x(x, y))
        else:
            pgx, pgy = (gx, gy) if prev is None else prev
            prev = (gx, gy)
            x = inst.X.project(x - step * (2 * gx - pgx))
            y = coupled_y_set(inst, x).project(y + step * (2 * gy - pgy))
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
            raise DivergenceError(f"primal {method} diverged")
        path.append((x, y))
    return path

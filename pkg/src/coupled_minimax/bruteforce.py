"""Exhaustive grid evaluation of the four coupled minimax values and of the Lagrangian duals.

Only box-constrained instances are supported, and only in small dimension.
Empty inner maximisations count as ``-inf`` and empty inner minimisations
as ``+inf``.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError, InfeasibilityError
from .geometry import Box

MAX_GRID_CELLS = 60_000_000


@dataclass
class GridSpec:
    points_per_dim: int = 201
    equality_tolerance: float | None = None
    argmax_tolerance: float = 1e-9
    outer_semantics: str = "any"

    def __post_init__(self):
        if self.points_per_dim < 11:
            raise ConfigurationError("points_per_dim must be at least 11")
        if self.outer_semantics not in ("any", "all"):
            raise ConfigurationError("outer_semantics must be 'any' or 'all'")


def box_grid(setobj, points):
    """Cartesian grid over a box (a pinned coordinate contributes one point)."""
    if not isinstance(setobj, Box):
        raise ConfigurationError(f"grid evaluation needs box sets, got {type(setobj).__name__}")
    if not (np.all(np.isfinite(setobj.lo)) and np.all(np.isfinite(setobj.hi))):
        raise ConfigurationError("grid evaluation needs bounded boxes")
    axes = [np.array([lo]) if lo == hi else np.linspace(lo, hi, points) for lo, hi in zip(setobj.lo, setobj.hi)]
    mesh = np.meshgrid(*axes, indexing="ij")
    spacing = np.array([a[1] - a[0] if a.size > 1 else 0.0 for a in axes])
    return np.stack([g.ravel() for g in mesh], axis=1), spacing


class GridProblem:
    """Objective values and coupling residuals tabulated on ``X_grid x Y_grid``."""

    def __init__(self, inst, grid=None):
        self.inst = inst
        self.grid = grid or GridSpec()
        self.xs, self.hx = box_grid(inst.X, self.grid.points_per_dim)
        self.ys, self.hy = box_grid(inst.Y, self.grid.points_per_dim)
        if len(self.xs) * len(self.ys) * max(inst.k, 1) > MAX_GRID_CELLS:
            raise ConfigurationError("grid too large; lower points_per_dim")
        self.F = inst.objective.value(self.xs[:, None, :], self.ys[None, :, :])
        self.R = (self.xs @ inst.A.T)[:, None, :] + (self.ys @ inst.B.T)[None, :, :] - inst.c
        self.pairs = inst.coupling.equality_pairs()
        self.feasible = self._feasible_mask()

    def equality_tolerance(self, row):
        """Half the largest residual change between neighbouring grid points, per variable block."""
        if self.grid.equality_tolerance is not None:
            return self.grid.equality_tolerance
        a = np.abs(self.inst.A[row]) @ self.hx
        b = np.abs(self.inst.B[row]) @ self.hy
        return 0.5 * max(a, b) + 1e-9

    def _feasible_mask(self):
        k = self.inst.k
        if k == 0:
            return np.ones(self.F.shape, dtype=bool)
        scale = 1e-12 * (1 + np.abs(self.inst.c))
        ok = np.all(self.R <= scale, axis=-1) if not self.pairs else None
        if self.pairs:
            in_pair = {i for p in self.pairs for i in p}
            ok = np.ones(self.F.shape, dtype=bool)
            for i in range(k):
                if i not in in_pair:
                    ok &= self.R[..., i] <= scale[i]
            for i, _ in self.pairs:
                ok &= np.abs(self.R[..., i]) <= self.equality_tolerance(i)
        return ok

    def cell_tolerance(self):
        """Largest objective change across one grid cell, from gradients sampled on the grid."""
        f = self.inst.objective
        sub_x = self.xs[:: max(1, len(self.xs) // 200)]
        sub_y = self.ys[:: max(1, len(self.ys) // 200)]
        gx = f.grad_x(sub_x[:, None, :], sub_y[None, :, :])
        gy = f.grad_y(sub_x[:, None, :], sub_y[None, :, :])
        lip = np.sqrt(np.max(np.sum(gx ** 2, -1)) + np.max(np.sum(gy ** 2, -1)))
        return float(lip * np.sqrt(self.hx @ self.hx + self.hy @ self.hy))

    def multiplier_bound(self):
        """Bound on ``|lam|_1`` for every inner maximisation's optimal multiplier.

        At each grid ``x`` the most interior grid ``y`` is a Slater point, and
        ``(max_y f - f(x, y_slater)) / slack`` bounds its multipliers. Returns
        ``inf`` when some ``x`` has no strictly feasible ``y``.
        """
        if self.inst.k == 0:
            return 0.0
        slack = (-self.R).min(axis=-1)
        j = slack.argmax(axis=1)
        rows = np.arange(len(self.xs))
        s = slack[rows, j]
        if np.any(s <= 0):
            return np.inf
        gap = self.F.max(axis=1) - self.F[rows, j] + self.cell_tolerance()
        return float(np.max(gap / s))

    def value_mMI(self):
        inner = np.where(self.feasible, self.F, -np.inf).max(axis=1)
        if np.all(inner == -np.inf):
            raise InfeasibilityError("no grid x admits a coupled-feasible y", 0.0)
        return float(inner.min())

    def value_MmI(self):
        inner = np.where(self.feasible, self.F, np.inf).min(axis=0)
        if np.all(inner == np.inf):
            raise InfeasibilityError("no grid y admits a coupled-feasible x", 0.0)
        return float(inner.max())

    def _reduce(self, best, axis):
        atol = self.grid.argmax_tolerance * (1 + np.abs(best))
        hit = np.abs(self.F - np.expand_dims(best, axis)) <= np.expand_dims(atol, axis)
        if self.grid.outer_semantics == "any":
            return np.any(hit & self.feasible, axis=axis)
        return np.all(~hit | self.feasible, axis=axis)

    def value_mMO(self):
        best = self.F.max(axis=1)
        ok = self._reduce(best, 1)
        if not np.any(ok):
            raise InfeasibilityError("no grid x has a coupled-feasible best response", 0.0)
        return float(best[ok].min())

    def value_MmO(self):
        best = self.F.min(axis=0)
        ok = self._reduce(best, 0)
        if not np.any(ok):
            raise InfeasibilityError("no grid y has a coupled-feasible best response", 0.0)
        return float(best[ok].max())

    def lagrangian_table(self, lambda_max=10.0, lambda_points=None, lambda_lo=None):
        """``M[l, i] = max_j L(x_i, y_j, lam_l)`` on a multiplier grid over ``[lambda_lo, lambda_max]``."""
        k = self.inst.k
        pts = lambda_points or self.grid.points_per_dim
        lo = np.zeros(k) if lambda_lo is None else np.asarray(lambda_lo, float)
        hi = np.broadcast_to(np.asarray(lambda_max, float), (k,))
        lams, hl = box_grid(Box(lo, hi), pts)
        M = np.empty((len(lams), len(self.xs)))
        for idx, lam in enumerate(lams):
            M[idx] = (self.F - self.R @ lam).max(axis=1)
        return lams, hl, M

    def value_duals(self, lambda_max=10.0, lambda_points=None, refine=0, refine_points=11):
        """Three orderings of the dual minimisations; identical by construction on one grid.

        With ``refine > 0`` the multiplier grid is re-laid ``refine`` times over
        two cells either side of the best multiplier found so far. Returns
        ``(d1, d2, d3, lambda_cell_diameter, max |Ax + By - c|)``.
        """
        lams, hl, M = self.lagrangian_table(lambda_max, lambda_points)
        for _ in range(refine):
            best = lams[M.min(axis=1).argmin()]
            lo = np.maximum(best - 2 * hl, 0.0)
            hi = np.maximum(best + 2 * hl, lo + 1e-12)
            lams, hl, M = self.lagrangian_table(hi, refine_points, lo)
        d1 = float(M.min(axis=0).min())
        d2 = float(M.min(axis=1).min())
        d3 = float(M.min())
        return d1, d2, d3, float(np.sqrt(hl @ hl)), float(np.max(np.abs(self.R)))


def value_mMI(inst, grid=None):
    return GridProblem(inst, grid).value_mMI()


def value_MmI(inst, grid=None):
    return GridProblem(inst, grid).value_MmI()


def value_mMO(inst, grid=None):
    return GridProblem(inst, grid).value_mMO()


def value_MmO(inst, grid=None):
    return GridProblem(inst, grid).value_MmO()


def value_duals(inst, grid=None, lambda_max=None, lambda_points=None, refine=0):
    """``(D1, D2, D3)`` grid values.

    Without ``lambda_max`` the multiplier box is ``[0, max(10, b)]^k`` with
    ``b`` the grid bound of :meth:`GridProblem.multiplier_bound`.
    """
    gp = GridProblem(inst, grid)
    if lambda_max is None:
        bound = gp.multiplier_bound()
        lambda_max = max(10.0, bound) if np.isfinite(bound) else 10.0
    return gp.value_duals(lambda_max, lambda_points, refine)[:3]


def inner_solution_sets(inst, x, grid=None, lambda_max=10.0, lambda_points=None, tol=1e-12):
    """For a fixed ``x``: grid solutions of ``max_y min_lam L`` and of ``min_lam max_y L``.

    Returns two arrays of ``(y..., lam...)`` rows.  The first set pairs every
    maximising ``y`` with all minimising multipliers; the second pairs every
    minimising multiplier with all maximising ``y``.
    """
    g = grid or GridSpec()
    ys, _ = box_grid(inst.Y, g.points_per_dim)
    lams, _ = box_grid(Box(np.zeros(inst.k), np.full(inst.k, float(lambda_max))), lambda_points or g.points_per_dim)
    x = np.asarray(x, float)
    f = inst.objective.value(np.broadcast_to(x, (len(ys), inst.n)), ys)
    res = x @ inst.A.T + ys @ inst.B.T - inst.c
    L = f[:, None] - res @ lams.T
    primal = L.min(axis=1)
    sa = []
    for j in np.flatnonzero(primal >= primal.max() - tol * (1 + abs(primal.max()))):
        for l in np.flatnonzero(L[j] <= primal[j] + tol * (1 + abs(primal[j]))):
            sa.append(np.concatenate([ys[j], lams[l]]))
    dual = L.max(axis=0)
    sb = []
    for l in np.flatnonzero(dual <= dual.min() + tol * (1 + abs(dual.min()))):
        for j in np.flatnonzero(L[:, l] >= dual[l] - tol * (1 + abs(dual[l]))):
            sb.append(np.concatenate([ys[j], lams[l]]))
    return np.array(sa), np.array(sb)


FORMULATIONS = ("mM-I", "Mm-I", "mM-O", "Mm-O")
UNIVERSAL = (("mM-I", "<=", "mM-O"), ("Mm-I", ">=", "Mm-O"), ("mM-O", ">=", "Mm-O"))
INDEFINITE = (("mM-I", "Mm-I"), ("mM-I", "Mm-O"), ("mM-O", "Mm-I"))


@dataclass
class RelationsReport:
    values: dict
    tolerance: dict
    universal: list = field(default_factory=list)
    realized: dict = field(default_factory=dict)

    @property
    def universal_hold(self):
        return all(ok for *_, ok in self.universal)

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["instance", *FORMULATIONS, "tolerance"])
        for name, vals in self.values.items():
            w.writerow([name, *[repr(vals[f]) for f in FORMULATIONS], repr(self.tolerance[name])])
        return buf.getvalue()

    def to_text(self):
        width = max(len(n) for n in self.values) if self.values else 8
        lines = ["instance".ljust(width) + "".join(f"{f:>10}" for f in FORMULATIONS)]
        for name, vals in self.values.items():
            lines.append(name.ljust(width) + "".join(f"{vals[f]:>10.4f}" for f in FORMULATIONS))
        lines.append("")
        lines.append("always-valid orderings:")
        for name, lhs, op, rhs, ok in self.universal:
            lines.append(f"  [{'ok' if ok else 'FAIL'}] {name}: {lhs} {op} {rhs}")
        lines.append("pairs without a fixed ordering (relations observed):")
        for (a, b), seen in self.realized.items():
            lines.append(f"  {a} vs {b}: {' '.join(sorted(seen)) or '-'}")
        return "\n".join(lines)


def _sign(a, b, tol):
    if a < b - tol:
        return "<"
    if a > b + tol:
        return ">"
    return "="


def relations_check(suite, grid=None):
    """Grid values of the four formulations for each ``(name, instance)`` in ``suite``."""
    report = RelationsReport({}, {}, [], {pair: set() for pair in INDEFINITE})
    for name, inst in suite:
        gp = GridProblem(inst, grid)
        vals = {"mM-I": gp.value_mMI(), "Mm-I": gp.value_MmI(), "mM-O": gp.value_mMO(), "Mm-O": gp.value_MmO()}
        tol = 2 * gp.cell_tolerance()
        report.values[name] = vals
        report.tolerance[name] = tol
        for lhs, op, rhs in UNIVERSAL:
            ok = vals[lhs] <= vals[rhs] + tol if op == "<=" else vals[lhs] >= vals[rhs] - tol
            report.universal.append((name, lhs, op, rhs, bool(ok)))
        for a, b in INDEFINITE:
            report.realized[(a, b)].add(_sign(vals[a], vals[b], tol))
    return report


def relations_suite():
    """Instances that realise every ordering between the formulations."""
    from .zoo import custom_quadratic, prop1_quadratic

    return [
        ("square", prop1_quadratic({"x_iv": [0, 1], "y_iv": [0, 1]})),
        ("wide-y", prop1_quadratic({"x_iv": [-1, 1], "y_iv": [0, 2]})),
        ("shifted", prop1_quadratic({"x_iv": [1, 2], "y_iv": [-1, 0]})),
        ("uncoupled", prop1_quadratic({"coupled": False})),
        ("uncoupled-gap", custom_quadratic({"P": [[2.0]], "C": [[-2.0]], "R": [[-2.0]],
                                            "x_box": [0, 1], "y_box": [0, 1], "allow_indefinite": True})),
    ]

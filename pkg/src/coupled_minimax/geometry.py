"""Closed convex sets and Euclidean projections onto them.

Every ``project`` accepts a single point of shape ``(dim,)`` or a batch of
shape ``(batch, dim)`` and returns an array of the same shape.
"""

from __future__ import annotations

import numpy as np

from .errors import ConfigurationError, DimensionError, InfeasibilityError

DYKSTRA_TOL = 1e-10
DYKSTRA_MAX_SWEEPS = 10_000
SIMPLEX_TOL = 1e-12


def _as_vec(a, dim=None, name="vector"):
    arr = np.asarray(a, dtype=float)
    if arr.ndim == 0 and dim is not None:
        arr = np.full(dim, float(arr))
    if arr.ndim != 1 or (dim is not None and arr.shape[0] != dim):
        raise DimensionError(name, (dim,), arr.shape)
    return arr


class ConvexSet:
    """Common interface for the sets below."""

    dim: int

    def project(self, v):
        raise NotImplementedError

    def membership_residual(self, v):
        """Largest constraint violation of ``v`` (0 inside the set)."""
        raise NotImplementedError

    def bounding_box(self):
        """Coordinate bounds ``(lo, hi)`` enclosing the set (may be infinite)."""
        raise NotImplementedError

    def norm_bound(self):
        """Upper bound on ``||z||`` over the set."""
        lo, hi = self.bounding_box()
        return float(np.linalg.norm(np.maximum(np.abs(lo), np.abs(hi))))

    def sample(self, rng, count):
        """``count`` points of the set, drawn by projecting uniform draws from the bounding box."""
        lo, hi = self.bounding_box()
        if not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi))):
            lo = np.where(np.isfinite(lo), lo, -1.0)
            hi = np.where(np.isfinite(hi), hi, lo + 2.0)
        return self.project(lo + (hi - lo) * rng.random((count, self.dim)))

    def to_dict(self):
        raise NotImplementedError

    def _check(self, v):
        v = np.asarray(v, dtype=float)
        if v.shape[-1:] != (self.dim,) or v.ndim > 2:
            raise DimensionError(type(self).__name__ + " point", (self.dim,), v.shape)
        return v

    def __eq__(self, other):
        return type(self) is type(other) and _dict_equal(self.to_dict(), other.to_dict())

    def __repr__(self):
        return f"{type(self).__name__}(dim={self.dim})"


def _dict_equal(a, b):
    if isinstance(a, dict):
        return isinstance(b, dict) and a.keys() == b.keys() and all(_dict_equal(a[k], b[k]) for k in a)
    if isinstance(a, list):
        return isinstance(b, list) and len(a) == len(b) and all(_dict_equal(x, y) for x, y in zip(a, b))
    return a == b


class Box(ConvexSet):
    def __init__(self, lo, hi):
        lo = np.atleast_1d(np.asarray(lo, dtype=float))
        hi = np.atleast_1d(np.asarray(hi, dtype=float))
        lo, hi = np.broadcast_arrays(lo, hi)
        if np.any(lo > hi):
            raise ConfigurationError(f"Box with lo > hi: {lo} > {hi}")
        self.lo = lo.copy()
        self.hi = hi.copy()
        self.dim = lo.shape[0]

    def project(self, v):
        return np.clip(self._check(v), self.lo, self.hi)

    def membership_residual(self, v):
        v = self._check(v)
        return np.maximum(np.max(np.maximum(self.lo - v, v - self.hi), axis=-1), 0.0)

    def bounding_box(self):
        return self.lo.copy(), self.hi.copy()

    def to_dict(self):
        return {"type": "box", "lo": self.lo.tolist(), "hi": self.hi.tolist()}


class NonnegOrthant(ConvexSet):
    def __init__(self, dim):
        self.dim = int(dim)

    def project(self, v):
        return np.maximum(self._check(v), 0.0)

    def membership_residual(self, v):
        return np.maximum(np.max(-self._check(v), axis=-1), 0.0)

    def bounding_box(self):
        return np.zeros(self.dim), np.full(self.dim, np.inf)

    def to_dict(self):
        return {"type": "nonneg", "dim": self.dim}


class Ball(ConvexSet):
    def __init__(self, center, radius):
        self.center = np.atleast_1d(np.asarray(center, dtype=float)).copy()
        self.radius = float(radius)
        if self.radius < 0:
            raise ConfigurationError("Ball radius must be non-negative")
        self.dim = self.center.shape[0]

    def project(self, v):
        v = self._check(v)
        diff = v - self.center
        dist = np.linalg.norm(diff, axis=-1, keepdims=True)
        scale = np.where(dist > self.radius, self.radius / np.maximum(dist, 1e-300), 1.0)
        return self.center + diff * scale

    def membership_residual(self, v):
        v = self._check(v)
        return np.maximum(np.linalg.norm(v - self.center, axis=-1) - self.radius, 0.0)

    def bounding_box(self):
        return self.center - self.radius, self.center + self.radius

    def norm_bound(self):
        return float(np.linalg.norm(self.center) + self.radius)

    def sample(self, rng, count):
        d = rng.standard_normal((count, self.dim))
        d /= np.linalg.norm(d, axis=1, keepdims=True)
        r = self.radius * rng.random((count, 1)) ** (1.0 / self.dim)
        return self.center + r * d

    def to_dict(self):
        return {"type": "ball", "center": self.center.tolist(), "radius": self.radius}


class Simplex(ConvexSet):
    """``{lo <= z <= hi, sum(z) = budget}`` (mode ``"eq"``) or ``sum(z) <= budget`` (mode ``"le"``).

    The projection is ``clip(v - tau, lo, hi)``; the scalar ``tau`` is found by
    bisection and then polished on the free coordinates so the budget holds
    to rounding error.
    """

    def __init__(self, dim, budget, mode="eq", lo=0.0, hi=np.inf):
        if mode not in ("eq", "le"):
            raise ConfigurationError(f"Simplex mode must be 'eq' or 'le', got {mode!r}")
        self.dim = int(dim)
        self.budget = float(budget)
        self.mode = mode
        self.lo = _as_vec(lo, self.dim, "Simplex lo")
        self.hi = _as_vec(hi, self.dim, "Simplex hi")
        if not np.all(np.isfinite(self.lo)):
            raise ConfigurationError("Simplex lower bounds must be finite")
        slack = self.budget - self.lo.sum()
        if slack < -1e-12 or np.any(self.lo > self.hi):
            raise InfeasibilityError("Simplex lower bounds exceed the budget", residual=max(-slack, 0.0))
        if mode == "eq" and self.hi.sum() < self.budget - 1e-12:
            raise InfeasibilityError("Simplex upper bounds cannot reach the budget", self.budget - self.hi.sum())
        # sum(z) <= budget together with z >= lo caps every coordinate
        self._hi_eff = np.minimum(self.hi, self.lo + max(slack, 0.0))

    def _eq_project(self, v):
        lo, hi, b = self.lo, self._hi_eff, self.budget
        t_lo = np.min(v - hi, axis=1)
        t_hi = np.max(v - lo, axis=1)
        for _ in range(200):
            mid = 0.5 * (t_lo + t_hi)
            s = np.clip(v - mid[:, None], lo, hi).sum(axis=1)
            above = s > b
            t_lo = np.where(above, mid, t_lo)
            t_hi = np.where(above, t_hi, mid)
            if np.all(t_hi - t_lo <= SIMPLEX_TOL * np.maximum(1.0, np.abs(mid))):
                break
        tau = 0.5 * (t_lo + t_hi)
        z = np.clip(v - tau[:, None], lo, hi)
        free = (v - tau[:, None] > lo) & (v - tau[:, None] < hi)
        nfree = free.sum(axis=1)
        fixed_sum = np.where(free, 0.0, z).sum(axis=1)
        free_v = np.where(free, v, 0.0).sum(axis=1)
        ok = nfree > 0
        tau_exact = np.where(ok, (free_v - (b - fixed_sum)) / np.maximum(nfree, 1), tau)
        polished = np.clip(v - tau_exact[:, None], lo, hi)
        same_face = ((v - tau_exact[:, None] > lo) & (v - tau_exact[:, None] < hi)) == free
        use = ok & np.all(same_face, axis=1)
        return np.where(use[:, None], polished, z)

    def project(self, v):
        v = self._check(v)
        flat = np.atleast_2d(v)
        if self.mode == "le":
            clipped = np.clip(flat, self.lo, self._hi_eff)
            inside = clipped.sum(axis=1) <= self.budget
            out = clipped.copy()
            if not np.all(inside):
                out[~inside] = self._eq_project(flat[~inside])
        else:
            out = self._eq_project(flat)
        return out.reshape(v.shape)

    def membership_residual(self, v):
        v = self._check(v)
        box = np.max(np.maximum(self.lo - v, v - self.hi), axis=-1)
        gap = v.sum(axis=-1) - self.budget
        gap = np.abs(gap) if self.mode == "eq" else gap
        return np.maximum(np.maximum(box, gap), 0.0)

    def bounding_box(self):
        return self.lo.copy(), self._hi_eff.copy()

    def norm_bound(self):
        if np.all(self.lo >= 0):
            # |z|^2 <= max(z) * sum(z) for non-negative z
            return float(min(np.sqrt(self._hi_eff.max() * self.budget), super().norm_bound()))
        return super().norm_bound()

    def sample(self, rng, count):
        room = self.budget - self.lo.sum()
        w = rng.exponential(size=(count, self.dim + (self.mode == "le")))
        w /= w.sum(axis=1, keepdims=True)
        return self.project(self.lo + room * w[:, : self.dim])

    def to_dict(self):
        return {"type": "simplex", "dim": self.dim, "budget": self.budget, "mode": self.mode,
                "lo": self.lo.tolist(), "hi": self.hi.tolist()}


class HalfSpace(ConvexSet):
    """``{z : a.z <= b}``; used as a polytope component."""

    def __init__(self, a, b):
        self.a = np.atleast_1d(np.asarray(a, dtype=float)).copy()
        self.b = float(b)
        self.dim = self.a.shape[0]
        self._nrm2 = float(self.a @ self.a)

    def project(self, v):
        v = self._check(v)
        if self._nrm2 == 0.0:
            if self.b < 0:
                raise InfeasibilityError("empty half-space 0.z <= b", -self.b)
            return v.copy()
        excess = np.maximum(v @ self.a - self.b, 0.0)
        return v - np.multiply.outer(excess, self.a) / self._nrm2

    def membership_residual(self, v):
        return np.maximum(self._check(v) @ self.a - self.b, 0.0)

    def bounding_box(self):
        return np.full(self.dim, -np.inf), np.full(self.dim, np.inf)

    def to_dict(self):
        return {"type": "halfspace", "a": self.a.tolist(), "b": self.b}


class AffineEquality(ConvexSet):
    """``{z : E z = e}``; used as a polytope component."""

    def __init__(self, E, e):
        self.E = np.atleast_2d(np.asarray(E, dtype=float)).copy()
        self.e = np.atleast_1d(np.asarray(e, dtype=float)).copy()
        if self.E.shape[0] != self.e.shape[0]:
            raise DimensionError("AffineEquality rhs", (self.E.shape[0],), self.e.shape)
        self.dim = self.E.shape[1]
        self._pinv = np.linalg.pinv(self.E)

    def project(self, v):
        v = self._check(v)
        return v - (v @ self.E.T - self.e) @ self._pinv.T

    def membership_residual(self, v):
        return np.max(np.abs(self._check(v) @ self.E.T - self.e), axis=-1)

    def bounding_box(self):
        return np.full(self.dim, -np.inf), np.full(self.dim, np.inf)

    def to_dict(self):
        return {"type": "affine", "E": self.E.tolist(), "e": self.e.tolist()}


class Polytope(ConvexSet):
    """Intersection of simpler sets.

    ``method="dykstra"`` runs Dykstra's alternating projections over the
    components.  ``method="dual-newton"`` is available when the components
    are exactly one :class:`Box` and one :class:`AffineEquality`; it solves the
    projection through its multiplier equation with a damped semismooth
    Newton iteration and falls back to Dykstra if that stalls.
    """

    def __init__(self, components, method="dykstra", tol=DYKSTRA_TOL, max_sweeps=DYKSTRA_MAX_SWEEPS):
        self.components = list(components)
        if not self.components:
            raise ConfigurationError("Polytope needs at least one component")
        dims = {c.dim for c in self.components}
        if len(dims) != 1:
            raise DimensionError("Polytope components", sorted(dims)[:1], sorted(dims))
        self.dim = dims.pop()
        if method not in ("dykstra", "dual-newton"):
            raise ConfigurationError(f"unknown polytope projection method {method!r}")
        if method == "dual-newton":
            kinds = sorted(type(c).__name__ for c in self.components)
            if kinds != ["AffineEquality", "Box"]:
                raise ConfigurationError("dual-newton needs exactly one Box and one AffineEquality")
        self.method = method
        self.tol = tol
        self.max_sweeps = max_sweeps
        self.last_sweeps = 0

    def project(self, v):
        v = self._check(v)
        if self.method == "dual-newton":
            flat = np.atleast_2d(v)
            out = np.stack([self._newton(row) for row in flat])
            return out.reshape(v.shape)
        return self._dykstra(v)

    def _dykstra(self, v):
        flat = np.atleast_2d(v).copy()
        x = flat.copy()
        incs = [np.zeros_like(x) for _ in self.components]
        active = np.ones(x.shape[0], dtype=bool)
        sweeps = 0
        while np.any(active) and sweeps < self.max_sweeps:
            sweeps += 1
            xa = x[active]
            start = xa.copy()
            change = np.zeros(xa.shape[0])
            for i, comp in enumerate(self.components):
                shifted = xa + incs[i][active]
                proj = comp.project(shifted)
                inc = shifted - proj
                # the iterate can stall for a sweep while the corrections still move
                change = np.maximum(change, np.max(np.abs(inc - incs[i][active]), axis=1))
                incs[i][active] = inc
                xa = proj
            x[active] = xa
            change = np.maximum(change, np.max(np.abs(xa - start), axis=1))
            idx = np.flatnonzero(active)
            active[idx[change <= self.tol]] = False
        self.last_sweeps = sweeps
        res = self.membership_residual(x)
        if np.any(active) or np.any(res > 1e-6):
            raise InfeasibilityError(f"Dykstra did not converge after {sweeps} sweeps", float(np.max(res)))
        return x.reshape(v.shape)

    def _newton(self, v):
        box = next(c for c in self.components if isinstance(c, Box))
        aff = next(c for c in self.components if isinstance(c, AffineEquality))
        E, e, lo, hi = aff.E, aff.e, box.lo, box.hi
        if np.any(lo > hi):
            raise InfeasibilityError("empty box", float(np.max(lo - hi)))
        nu = np.zeros(E.shape[0])

        def dual(nu):
            z = np.clip(v - E.T @ nu, lo, hi)
            return 0.5 * np.sum((z - v) ** 2) + nu @ (E @ z - e), z

        q, z = dual(nu)
        scale = 1.0 + np.max(np.abs(e)) + np.max(np.abs(v))
        for _ in range(200):
            g = E @ z - e
            if np.max(np.abs(g)) <= 1e-12 * scale:
                return z
            u = v - E.T @ nu
            free = ((u > lo) & (u < hi)).astype(float)
            H = (E * free) @ E.T
            # with no free coordinate the dual is locally linear; the ridge turns the
            # Newton step into a long ascent step that backtracking then shortens
            H[np.diag_indices_from(H)] += 1e-8 * (1.0 + np.trace(H))
            step = np.linalg.lstsq(H, g, rcond=None)[0]
            t = 1.0
            while t > 1e-14:
                q_new, z_new = dual(nu + t * step)
                if q_new >= q + 1e-4 * t * (g @ step) - 1e-15 * abs(q):
                    break
                t *= 0.5
            else:
                break
            nu, q, z = nu + t * step, q_new, z_new
        return Polytope(self.components, "dykstra", self.tol, self.max_sweeps)._dykstra(v)

    def membership_residual(self, v):
        v = self._check(v)
        return np.max(np.stack([c.membership_residual(v) for c in self.components]), axis=0)

    def bounding_box(self):
        lo = np.full(self.dim, -np.inf)
        hi = np.full(self.dim, np.inf)
        for c in self.components:
            clo, chi = c.bounding_box()
            lo, hi = np.maximum(lo, clo), np.minimum(hi, chi)
        return lo, hi

    def to_dict(self):
        return {"type": "polytope", "method": self.method,
                "components": [c.to_dict() for c in self.components]}


def project(setobj, v):
    return setobj.project(v)


def membership_residual(setobj, v):
    return setobj.membership_residual(v)


def set_from_dict(d):
    kind = d.get("type")
    if kind == "box":
        return Box(d["lo"], d["hi"])
    if kind == "nonneg":
        return NonnegOrthant(d["dim"])
    if kind == "ball":
        return Ball(d["center"], d["radius"])
    if kind == "simplex":
        return Simplex(d["dim"], d["budget"], d["mode"], d["lo"], d["hi"])
    if kind == "halfspace":
        return HalfSpace(d["a"], d["b"])
    if kind == "affine":
        return AffineEquality(d["E"], d["e"])
    if kind == "polytope":
        return Polytope([set_from_dict(c) for c in d["components"]], d.get("method", "dykstra"))
    raise ConfigurationError(f"unknown set descriptor {kind!r}")

"""Per-iteration solver records with CSV and JSON export."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field

import numpy as np

MGD_COLUMNS = ("r", "Q_norm", "d_bound", "max_violation", "comp_gap", "G_estimate", "lambda_norm")
D3_COLUMNS = ("r", "P_xl", "P_y", "max_violation", "comp_gap", "lambda_norm")


@dataclass
class IterationRecord:
    """State after outer iteration ``r``.

    ``lam`` is the multiplier the primal pair ``(x, y)`` was computed against,
    so ``comp_gap`` pairs quantities that belong together.
    """

    r: int
    x: np.ndarray
    y: np.ndarray
    lam: np.ndarray
    lambda_norm: float
    max_violation: float
    comp_gap: np.ndarray
    q_norm: float = float("nan")
    q_error: float = float("nan")
    d_bound: float = float("nan")
    g_estimate: float = float("nan")
    p_xl: float = float("nan")
    p_y: float = float("nan")

    @property
    def comp_gap_abs(self):
        return float(np.max(np.abs(self.comp_gap))) if self.comp_gap.size else 0.0

    def row(self, kind):
        if kind == "mgd":
            return [self.r, self.q_norm, self.d_bound, self.max_violation, self.comp_gap_abs,
                    self.g_estimate, self.lambda_norm]
        return [self.r, self.p_xl, self.p_y, self.max_violation, self.comp_gap_abs, self.lambda_norm]


@dataclass
class SolverTrace:
    kind: str
    records: list = field(default_factory=list)
    final_x: np.ndarray | None = None
    final_y: np.ndarray | None = None
    final_lambda: np.ndarray | None = None
    metadata: dict = field(default_factory=dict)

    @property
    def columns(self):
        return MGD_COLUMNS if self.kind == "mgd" else D3_COLUMNS

    @property
    def lambda_bound(self):
        """Largest multiplier norm seen along the run (including the final one)."""
        norms = [rec.lambda_norm for rec in self.records]
        if self.final_lambda is not None:
            norms.append(float(np.linalg.norm(self.final_lambda)))
        return max(norms) if norms else 0.0

    def column(self, name):
        idx = self.columns.index(name)
        return np.array([rec.row(self.kind)[idx] for rec in self.records], dtype=float)

    def to_csv(self, path=None):
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(self.columns)
        for rec in self.records:
            writer.writerow([repr(v) if isinstance(v, float) else v for v in rec.row(self.kind)])
        text = buf.getvalue()
        if path is not None:
            with open(path, "w") as fh:
                fh.write(text)
        return text

    def to_json(self, path=None):
        def vec(a):
            return None if a is None else np.asarray(a).tolist()

        payload = {
            "kind": self.kind,
            "metadata": self.metadata,
            "final": {"x": vec(self.final_x), "y": vec(self.final_y), "lambda": vec(self.final_lambda)},
            "records": [
                {"r": rec.r, "x": vec(rec.x), "y": vec(rec.y), "lambda": vec(rec.lam),
                 "lambda_norm": rec.lambda_norm, "max_violation": rec.max_violation,
                 "comp_gap": vec(rec.comp_gap), "q_norm": rec.q_norm, "q_error": rec.q_error,
                 "d_bound": rec.d_bound, "g_estimate": rec.g_estimate, "p_xl": rec.p_xl, "p_y": rec.p_y}
                for rec in self.records
            ],
        }
        text = json.dumps(payload)
        if path is not None:
            with open(path, "w") as fh:
                fh.write(text)
        return text

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
TIME_LIMIT = "time_limit"


class SolverError(RuntimeError):
    pass


@dataclass(frozen=True)
class SolveOptions:
    time_limit: float = 60.0
    abs_gap: float = 1e-6
    node_limit: int = 1_000_000
    branching: str = "most-fractional"  # or "pseudo-cost"
    seed: int = 0

    def __post_init__(self):
        if self.time_limit <= 0 or self.node_limit <= 0 or self.abs_gap < 0:
            raise ValueError("solve limits must be positive")
        if self.branching not in ("most-fractional", "pseudo-cost"):
            raise ValueError(f"unknown branching rule {self.branching!r}")


@dataclass
class Solution:
    status: str
    values: Optional[np.ndarray]
    objective: Optional[float]
    bound: Optional[float]
    node_count: int = 0
    wall_time: float = 0.0
    backend: str = "bnb"

    @property
    def gap(self) -> Optional[float]:
        if self.objective is None or self.bound is None:
            return None
        return abs(self.objective - self.bound)

    @property
    def has_assignment(self) -> bool:
        return self.values is not None

    def to_dict(self, model=None) -> dict:
        doc = {
            "status": self.status,
            "objective": self.objective,
            "bound": self.bound,
            "gap": self.gap,
            "node_count": self.node_count,
            "wall_time": self.wall_time,
            "backend": self.backend,
        }
        if self.values is not None and model is not None:
            doc["values"] = {v.name: float(self.values[v.id]) for v in model.variables}
        return doc

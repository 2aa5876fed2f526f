"""HiGHS backend through ``scipy.optimize.milp`` for desk-scale models."""
from __future__ import annotations

import time

import numpy as np
from scipy.optimize import Bounds, LinearConstraint, milp

from ..model_ir import MilpModel
from .core import INFEASIBLE, OPTIMAL, TIME_LIMIT, Solution, SolveOptions, SolverError


def solve_highs(model: MilpModel, opts: SolveOptions = SolveOptions()) -> Solution:
    t0 = time.perf_counter()
    arr = model.arrays()
    sign = -1.0 if arr.maximize else 1.0
    constraints = []
    if arr.A.shape[0]:
        constraints.append(LinearConstraint(arr.A, arr.row_lo, arr.row_hi))
    options = {"time_limit": float(opts.time_limit), "mip_rel_gap": 0.0, "disp": False}
    res = milp(sign * arr.c, integrality=arr.is_int.astype(int), bounds=Bounds(arr.lo, arr.hi),
               constraints=constraints, options=options)
    wall = time.perf_counter() - t0
    bound = getattr(res, "mip_dual_bound", None)
    bound = None if bound is None or not np.isfinite(bound) else float(sign * bound)
    values = None
    if res.x is not None:
        values = np.asarray(res.x, dtype=float).copy()
        values[arr.is_int] = np.round(values[arr.is_int])
    nodes = int(getattr(res, "mip_node_count", 0) or 0)
    if res.status == 0:
        obj = model.objective_value(values)
        return Solution(OPTIMAL, values, obj, obj if bound is None else bound, nodes, wall, "highs")
    if res.status == 2:
        return Solution(INFEASIBLE, None, None, None, max(nodes, 1), wall, "highs")
    if res.status == 1:
        obj = None if values is None else model.objective_value(values)
        return Solution(TIME_LIMIT, values, obj, bound, nodes, wall, "highs")
    raise SolverError(f"HiGHS failed: {res.message}")

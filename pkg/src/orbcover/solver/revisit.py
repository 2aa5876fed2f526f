"""Decomposed solves for the revisit-time problems.

The big-M gap-counter models have weak relaxations once there are a few
hundred slots. Both problems here are solved through a sequence of smaller
MILPs on the same data, and the answer is mapped back onto the compiled model
so ``verify`` checks it like any other assignment.

MMRT (maximum variant). ``MRT <= z`` holds exactly when every run of ``z + 1``
consecutive steps (wrapping when cyclic) contains a covered step. That is a
covering condition on the coverage indicators, so the minimal ``z`` is found
by bisection over feasibility problems.

MART (one target). ART is the ratio U / G of uncovered steps to gaps. The
Dinkelbach iteration minimizes ``U - lam * G`` and updates ``lam`` to the
ratio of the pattern it finds; it stops when the minimum reaches zero.
A subproblem that stops on its time limit still yields the lower bound
``lam + F_lb`` from its dual bound ``F_lb``.
"""
from __future__ import annotations

import math
import time
from typing import Callable, Optional

import numpy as np

from .. import metrics
from ..formulations import CompiledProblem, CoverageData
from ..model_ir import MilpModel
from ..scenario import Kind
from .core import INFEASIBLE, OPTIMAL, TIME_LIMIT, Solution, SolveOptions, SolverError
from .exhaustive import full_assignment

SubSolver = Callable[[MilpModel, SolveOptions], Solution]


def _pattern_model(data: CoverageData, N: int, name: str, with_y=None):
    """x and y with ``y_tp <= [b_tp >= r_tp]`` and a cardinality row.

    ``with_y`` (one flag per target) skips the y block for targets that do not need it.
    """
    T, J, P = data.shape
    with_y = [True] * P if with_y is None else with_y
    m = MilpModel(name)
    x = np.array([m.binary(f"x_{j + 1}") for j in range(J)])
    y = np.full((T, P), -1, dtype=int)
    for t in range(T):
        for p in range(P):
            if with_y[p]:
                y[t, p] = m.binary(f"y_{t + 1}_{p + 1}")
    for t in range(T):
        for p in range(P):
            if not with_y[p]:
                continue
            vis = np.flatnonzero(data.V[t, :, p])
            terms = [(int(x[j]), 1.0) for j in vis] + [(int(y[t, p]), -float(data.r[t, p]))]
            m.add_constraint(terms, ">=", 0.0, f"link_{t + 1}_{p + 1}")
    m.add_constraint([(int(v), 1.0) for v in x], "=", float(N), "cardinality")
    return m, x, y


def _windows(T: int, length: int, cyclic: bool):
    starts = range(T) if cyclic else range(T - length + 1)
    return [[(s + k) % T for k in range(length)] for s in starts]


def _remaining(opts: SolveOptions, t0: float) -> Optional[SolveOptions]:
    left = opts.time_limit - (time.perf_counter() - t0)
    if left <= 0:
        return None
    return SolveOptions(left, opts.abs_gap, opts.node_limit, opts.branching, opts.seed)


def _selection(sol: Solution, x_ids) -> np.ndarray:
    return np.rint(sol.values[x_ids]).astype(int)


def _finish(problem, status, x, bound, t0, nodes, backend):
    if x is None:
        return Solution(status, None, None, bound, nodes, time.perf_counter() - t0, backend)
    values = full_assignment(problem, x)
    obj = problem.model.objective_value(values)
    if status == OPTIMAL:
        bound = obj
    return Solution(status, values, obj, bound, nodes, time.perf_counter() - t0, backend)


def mrt_window_feasible(data: CoverageData, N: int, z: int, cyclic: bool, sub: SubSolver,
                        opts: SolveOptions) -> Solution:
    """Feasibility of a pattern of N slots keeping every target's MRT at most ``z``."""
    T, _, P = data.shape
    single = [bool(np.all(data.r[:, p] == 1)) for p in range(P)]
    m, x, y = _pattern_model(data, N, f"mrt_le_{z}", with_y=[not s for s in single])
    for p in range(P):
        for k, win in enumerate(_windows(T, z + 1, cyclic)):
            if single[p]:
                # single fold: some slot visible somewhere in the window is selected
                seen = np.flatnonzero(data.V[win, :, p].any(axis=0))
                terms = [(int(x[j]), 1.0) for j in seen]
            else:
                terms = [(int(y[t, p]), 1.0) for t in win]
            m.add_constraint(terms, ">=", 1.0, f"window_{k + 1}_{p + 1}")
    m.set_objective("min", [])
    sol = sub(m, opts)
    sol.values = None if sol.values is None else sol.values[x]
    return sol


def _max_mrt(data: CoverageData, x: np.ndarray, cyclic: bool) -> int:
    y = metrics.covered(data.V[:, x == 1, :].sum(axis=1), data.r)
    return max(metrics.revisit_stats(y[:, p], cyclic)[0] for p in range(y.shape[1]))


def solve_mmrt_windows(problem: CompiledProblem, opts: SolveOptions, sub: SubSolver,
                       backend: str = "windows") -> Solution:
    spec, data = problem.spec, problem.data
    if problem.kind != Kind.MMRT or spec.sum_of_mrts:
        raise SolverError("window bisection solves the maximum-MRT form of MMRT only")
    T, J, _ = data.shape
    N = int(spec.N)
    cyclic = bool(spec.cyclic)
    t0 = time.perf_counter()
    nodes = 0

    def probe(z):
        nonlocal nodes
        o = _remaining(opts, t0)
        if o is None:
            return None
        res = mrt_window_feasible(data, N, z, cyclic, sub, o)
        nodes += res.node_count
        return res

    lo = 0  # every z below lo is proven infeasible
    if cyclic:
        # the wrap rows need at least one covered step
        res = probe(T - 1)
        if res is None or res.status == TIME_LIMIT:
            x = None if res is None or res.values is None else res.values.astype(int)
            return _finish(problem, TIME_LIMIT, x, None, t0, nodes, backend)
        if res.status == INFEASIBLE:
            return _finish(problem, INFEASIBLE, None, None, t0, nodes, backend)
        best = res.values.astype(int)
    else:
        best = np.zeros(J, dtype=int)
        best[:N] = 1
    hi = _max_mrt(data, best, cyclic)
    while lo < hi:
        z = (lo + hi - 1) // 2
        res = probe(z)
        if res is None or res.status == TIME_LIMIT:
            return _finish(problem, TIME_LIMIT, best, float(lo), t0, nodes, backend)
        if res.status == OPTIMAL:
            best = res.values.astype(int)
            hi = _max_mrt(data, best, cyclic)
        else:
            lo = z + 1
    return _finish(problem, OPTIMAL, best, float(lo), t0, nodes, backend)


def _ratio_model(data: CoverageData, N: int, lam: float, cyclic: bool):
    """min (T - sum y) - lam * sum i over patterns of N slots, y exact."""
    T, J, _ = data.shape
    V = data.V[:, :, 0]
    r = data.r[:, 0]
    m, x, y = _pattern_model(data, N, "art_ratio")
    y = y[:, 0]
    i = np.array([m.binary(f"i_{t + 1}") for t in range(T)])
    for t in range(T):
        vis = np.flatnonzero(V[t])
        # y_t = 1 whenever coverage reaches r_t
        if r[t] == 1:
            for j in vis:
                m.add_constraint([(int(y[t]), 1.0), (int(x[j]), -1.0)], ">=", 0.0, f"cov_{t + 1}_{j + 1}")
        elif vis.size >= r[t]:
            M = float(vis.size - r[t] + 1)
            terms = [(int(x[j]), 1.0) for j in vis] + [(int(y[t]), -M)]
            m.add_constraint(terms, "<=", float(r[t]) - 1.0, f"cov_{t + 1}")
        m.add_constraint([(int(i[t]), 1.0), (int(y[t]), 1.0)], "<=", 1.0, f"gap_open_{t + 1}")
        if t > 0 or cyclic:
            prev = int(y[t - 1]) if t > 0 else int(y[T - 1])
            m.add_constraint([(int(i[t]), 1.0), (prev, -1.0)], "<=", 0.0, f"gap_prev_{t + 1}")
    m.set_objective("min", [(int(v), -1.0) for v in y] + [(int(v), -lam) for v in i])
    return m, x


def solve_mart_dinkelbach(problem: CompiledProblem, opts: SolveOptions, sub: SubSolver,
                          start=None, backend: str = "dinkelbach", max_rounds: int = 100) -> Solution:
    spec, data = problem.spec, problem.data
    T, J, P = data.shape
    if problem.kind != Kind.MART or P != 1:
        raise SolverError("the ratio iteration solves single-target MART only")
    cyclic = bool(spec.cyclic)
    N = int(spec.N)
    t0 = time.perf_counter()
    nodes = 0

    def ratio(x):
        y = metrics.covered(data.V[:, x == 1, 0].sum(axis=1), data.r[:, 0])
        if cyclic and not y.any():
            return math.inf
        return metrics.revisit_stats(y, cyclic)[1]

    # full coverage (ART 0) has no gaps, so the ratio iteration cannot see it
    o = _remaining(opts, t0)
    full = mrt_window_feasible(data, N, 0, cyclic, sub, o)
    nodes += full.node_count
    if full.status == OPTIMAL:
        return _finish(problem, OPTIMAL, full.values.astype(int), 0.0, t0, nodes, backend)
    if full.status != INFEASIBLE:
        return _finish(problem, TIME_LIMIT, None if start is None else np.asarray(start, int), 0.0, t0, nodes,
                       backend)

    best = None if start is None else np.asarray(start, dtype=int)
    lam = float(T) if best is None else ratio(best)
    if not np.isfinite(lam):
        best, lam = None, float(T)
    bound = 1.0  # with no full coverage every pattern has a gap, so U >= G
    for _ in range(max_rounds):
        o = _remaining(opts, t0)
        if o is None:
            break
        model, x_ids = _ratio_model(data, N, lam, cyclic)
        res = sub(model, o)
        nodes += res.node_count
        if res.status == INFEASIBLE:
            return _finish(problem, INFEASIBLE, None, None, t0, nodes, backend)
        if res.values is not None:
            cand = _selection(res, x_ids)
            val = ratio(cand)
            if best is None or val < lam - 1e-12:
                best, lam = cand, val
                if res.status == OPTIMAL:
                    continue
        if res.status == OPTIMAL:
            # min over patterns of U - lam G is zero, so no pattern beats lam
            if best is None:
                return _finish(problem, INFEASIBLE, None, None, t0, nodes, backend)
            return _finish(problem, OPTIMAL, best, lam, t0, nodes, backend)
        if res.bound is not None:
            # U - lam G >= F_lb for every pattern; the ratio is weakest at G = 1
            bound = max(bound, lam + min(res.bound + T, 0.0))
        break
    return _finish(problem, TIME_LIMIT, best, min(bound, lam), t0, nodes, backend)

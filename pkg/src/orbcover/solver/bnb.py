"""Best-first branch-and-bound over the LP relaxation.

Each node carries its own variable box and the parent's simplex basis. Node
boxes are tightened by bound propagation before the relaxation is solved, and
when every objective coefficient sits on an integer variable with an integral
coefficient, the node bound is rounded up to the next integer.
"""
from __future__ import annotations

import heapq
import math
import time
from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..model_ir import MilpModel
from .core import INFEASIBLE, OPTIMAL, TIME_LIMIT, Solution, SolveOptions, SolverError
from .propagate import Propagator
from .simplex import Basis, BoundedSimplex, SimplexError

INT_TOL = 1e-6
# open nodes beyond this count drop their cached basis inverse to bound memory
KEEP_INVERSE_NODES = 256


@dataclass
class _Node:
    lo: np.ndarray
    hi: np.ndarray
    basis: Optional[Basis]
    bound: float
    depth: int


class _PseudoCosts:
    def __init__(self, n: int):
        self.sum = np.zeros((2, n))
        self.cnt = np.zeros((2, n))

    def update(self, var: int, up: bool, gain: float, frac: float):
        if frac > INT_TOL and np.isfinite(gain):
            self.sum[int(up), var] += max(gain, 0.0) / frac
            self.cnt[int(up), var] += 1

    def score(self, cand: np.ndarray, f: np.ndarray) -> np.ndarray:
        avg_all = np.where(self.cnt.sum(axis=1) > 0, self.sum.sum(axis=1) / np.maximum(self.cnt.sum(axis=1), 1), 1.0)
        down = np.where(self.cnt[0, cand] > 0, self.sum[0, cand] / np.maximum(self.cnt[0, cand], 1), avg_all[0])
        up = np.where(self.cnt[1, cand] > 0, self.sum[1, cand] / np.maximum(self.cnt[1, cand], 1), avg_all[1])
        return np.maximum(down * f, 1e-6) * np.maximum(up * (1 - f), 1e-6)


def default_priority(model: MilpModel) -> np.ndarray:
    """Branch on the slot selection binaries x_j before auxiliary variables."""
    return np.array([0 if v.name.startswith("x_") else 1 for v in model.variables], dtype=int)


def solve_bnb(model: MilpModel, opts: SolveOptions = SolveOptions(),
              priority: Optional[np.ndarray] = None) -> Solution:
    t0 = time.perf_counter()
    arr = model.arrays()
    n = model.num_vars
    sign = -1.0 if arr.maximize else 1.0
    c = sign * arr.c
    is_int = arr.is_int
    if np.any(~np.isfinite(arr.lo)) or np.any(~np.isfinite(arr.hi)):
        raise SolverError("branch-and-bound needs every variable bounded")
    prio = default_priority(model) if priority is None else np.asarray(priority)
    rng = np.random.default_rng(opts.seed)

    nz = c != 0
    integral_obj = bool(np.all(is_int[nz]) and np.allclose(c[nz], np.round(c[nz])))

    def round_bound(v: float) -> float:
        return math.ceil(v - INT_TOL) if integral_obj else v

    prop = Propagator(arr.A, arr.row_lo, arr.row_hi, is_int)
    lp = BoundedSimplex(arr.A.toarray(), arr.row_lo, arr.row_hi, c)
    pseudo = _PseudoCosts(n) if opts.branching == "pseudo-cost" else None

    def finish(status, inc_x, inc_obj, bound, nodes):
        obj = None if inc_obj is None else float(sign * inc_obj)
        bnd = None if bound is None else float(sign * bound)
        return Solution(status, inc_x, obj, bnd, nodes, time.perf_counter() - t0, "bnb")

    lo = arr.lo.astype(float).copy()
    hi = arr.hi.astype(float).copy()
    nodes = 0
    if not prop.run(lo, hi):
        return finish(INFEASIBLE, None, None, None, 1)

    inc_x: Optional[np.ndarray] = None
    inc_obj = math.inf
    heap: list = []
    counter = 0

    def push(node: _Node):
        nonlocal counter
        counter += 1
        heapq.heappush(heap, (node.bound, -node.depth, float(rng.random()), counter, node))

    push(_Node(lo, hi, None, -math.inf, 0))
    final_bound = None
    while heap:
        if time.perf_counter() - t0 > opts.time_limit or nodes >= opts.node_limit:
            bound = min(heap[0][0], inc_obj)
            return finish(TIME_LIMIT, inc_x, None if inc_x is None else inc_obj,
                          None if not np.isfinite(bound) else bound, nodes)
        bound, _, _, _, node = heapq.heappop(heap)
        if bound >= inc_obj - opts.abs_gap:
            final_bound = min(bound, inc_obj)
            heap.clear()
            break
        nodes += 1
        try:
            res = lp.solve(node.lo, node.hi, node.basis)
        except SimplexError as exc:
            raise SolverError(f"LP relaxation failed at node {nodes}: {exc}") from exc
        if res.status == "infeasible":
            continue
        if res.status != "optimal":
            raise SolverError(f"LP relaxation ended with status {res.status} at node {nodes}")
        node_bound = max(node.bound, round_bound(res.objective))
        if node_bound >= inc_obj - opts.abs_gap:
            continue
        x = res.x
        frac = np.abs(x - np.round(x))
        fractional = np.flatnonzero(is_int & (frac > INT_TOL))
        if fractional.size == 0:
            cand_x = x.copy()
            cand_x[is_int] = np.round(cand_x[is_int])
            cand_obj = float(c @ cand_x)
            if cand_obj < inc_obj and not model.violations(cand_x, 1e-6):
                inc_x, inc_obj = cand_x, cand_obj
            continue
        # branching variable: best class first, then rule, then lowest id
        cls = prio[fractional]
        pool = fractional[cls == cls.min()]
        f = x[pool] - np.floor(x[pool])
        if pseudo is not None:
            score = pseudo.score(pool, f)
        else:
            score = np.minimum(f, 1 - f)
        best = np.flatnonzero(score >= score.max() - 1e-12)
        var = int(pool[best[0]])
        val = x[var]
        fv = val - math.floor(val)
        for up in (False, True):
            clo, chi = node.lo.copy(), node.hi.copy()
            if up:
                clo[var] = math.ceil(val)
            else:
                chi[var] = math.floor(val)
            if not prop.run(clo, chi):
                continue
            basis = res.basis if len(heap) < KEEP_INVERSE_NODES else res.basis.without_inverse()
            child = _Node(clo, chi, basis, node_bound, node.depth + 1)
            if pseudo is not None:
                # one-step lookahead keeps the pseudo-costs informative
                probe = lp.solve(clo, chi, res.basis)
                gain = (probe.objective - res.objective) if probe.status == "optimal" else math.inf
                pseudo.update(var, up, gain, (1 - fv) if up else fv)
                if probe.status == "infeasible":
                    continue
                if probe.status == "optimal":
                    child.bound = max(node_bound, round_bound(probe.objective))
                    child.basis = probe.basis if len(heap) < KEEP_INVERSE_NODES else probe.basis.without_inverse()
            push(child)

    if inc_x is None:
        return finish(INFEASIBLE, None, None, None, max(nodes, 1))
    return finish(OPTIMAL, inc_x, inc_obj, inc_obj if final_bound is None else final_bound, nodes)

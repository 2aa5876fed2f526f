"""Enumerative reference solver for tiny instances.

Pattern vectors are enumerated in batches; every quantity the formulation
would otherwise model (coverage indicators, gap counters, gap starts, ART
bounds) is recomputed from the timeline with the metrics module, and the
resulting full assignment is checked against the model's rows.
"""
from __future__ import annotations

import itertools
import math
import time

import numpy as np

from .. import metrics
from ..formulations import CompiledProblem
from ..scenario import Kind
from .core import INFEASIBLE, OPTIMAL, Solution, SolverError

BATCH = 4096
EPS = 1e-9


def _patterns(J: int, N):
    """Yield (B, J) 0/1 batches: all N-subsets, or every subset when N is None."""
    if N is None:
        total = 1 << J
        bits = 1 << np.arange(J, dtype=np.int64)
        for start in range(0, total, BATCH):
            codes = np.arange(start, min(start + BATCH, total), dtype=np.int64)
            yield ((codes[:, None] & bits) > 0).astype(np.int8)
    else:
        it = itertools.combinations(range(J), N)
        while True:
            chunk = list(itertools.islice(it, BATCH))
            if not chunk:
                return
            X = np.zeros((len(chunk), J), dtype=np.int8)
            rows = np.repeat(np.arange(len(chunk)), N)
            X[rows, np.array(chunk, dtype=np.int64).ravel()] = 1
            yield X


def enumeration_size(problem: CompiledProblem) -> int:
    J = problem.data.shape[1]
    N = _cardinality(problem)
    return math.comb(J, N) if N is not None else 1 << J


def _cardinality(problem: CompiledProblem):
    spec = problem.spec
    if problem.kind in (Kind.MMRT, Kind.MART):
        return spec.N
    if problem.kind == Kind.MCLP and spec.N is not None:
        return spec.N
    return None


def _art(uncovered, n_gaps):
    return np.where(n_gaps > 0, uncovered / np.maximum(n_gaps, 1), 0.0)


def _score(problem: CompiledProblem, X: np.ndarray):
    """Objective (to minimize) and feasibility mask for a batch of patterns."""
    d = problem.data
    spec = problem.spec
    kind = problem.kind
    T, J, P = d.shape
    cyc = bool(spec.cyclic)
    B = np.einsum("tjp,bj->btp", d.V.astype(np.int32), X.astype(np.int32))
    Y = B >= d.r[None]
    cost = X @ d.costs
    feas = np.ones(len(X), dtype=bool)

    if kind in (Kind.MMRT, Kind.MART, Kind.ZMRT, Kind.GAMMA_ART):
        mrt, n_gaps, unc = metrics.batch_revisit(Y, cyc)
        if cyc:
            # the cyclic models have no all-uncovered solution
            feas &= ~np.any(unc == T, axis=1)

    if kind == Kind.SCLP:
        feas &= Y.all(axis=(1, 2))
        obj = cost
    elif kind == Kind.PSCLP:
        if spec.D is not None:
            feas &= np.all(Y.sum(axis=1) >= np.asarray(spec.D)[None] - EPS, axis=1)
        else:
            feas &= Y.sum(axis=(1, 2)) >= spec.D_mean - EPS
        obj = cost
    elif kind == Kind.MCLP:
        pi = np.ones((T, P)) if spec.rewards is None else np.broadcast_to(np.asarray(spec.rewards, float), (T, P))
        if spec.budget is not None:
            feas &= cost <= spec.budget + EPS
        obj = -np.einsum("btp,tp->b", Y, pi)
    elif kind == Kind.MMRT:
        obj = mrt.sum(axis=1) if spec.sum_of_mrts else mrt.max(axis=1)
        obj = obj.astype(float)
    elif kind == Kind.MART:
        obj = _art(unc, n_gaps).sum(axis=1)
    elif kind == Kind.ZMRT:
        feas &= np.all(mrt <= np.asarray(spec.z, float)[None] + EPS, axis=1)
        obj = cost
    elif kind == Kind.GAMMA_ART:
        feas &= np.all(_art(unc, n_gaps) <= np.asarray(spec.gamma, float)[None] + EPS, axis=1)
        obj = cost
    elif kind == Kind.MAX_ISL:
        feas &= Y.all(axis=(1, 2))
        n_sel = X.sum(axis=1)
        feas &= n_sel >= 3
        deg = np.einsum("tjk,bj->btk", d.W.astype(np.int32), X.astype(np.int32))
        ok = deg >= (n_sel[:, None, None] / 2.0) - EPS
        if spec.isl_mode == "corrected":
            ok |= (X[:, None, :] == 0)
        feas &= ok.all(axis=(1, 2))
        obj = cost
    else:
        raise SolverError(f"no enumerative oracle for {kind}")
    return np.asarray(obj, dtype=float), feas


def full_assignment(problem: CompiledProblem, x) -> np.ndarray:
    """Every model variable derived from the pattern ``x`` via the metrics oracle."""
    d = problem.data
    T, J, P = d.shape
    cyc = bool(problem.spec.cyclic)
    x = np.asarray(x, dtype=int)
    vals = np.zeros(problem.model.num_vars)
    ids = problem.ids
    vals[ids["x"]] = x
    b = np.einsum("tjp,j->tp", d.V.astype(int), x)
    y = (b >= d.r).astype(int)
    if "y" in ids:
        vals[ids["y"]] = y
    if "w" in ids:
        w = np.stack([metrics.gap_counters(y[:, p], cyc) for p in range(P)], axis=1)
        vals[ids["w"]] = w
        if "u" in ids:
            vals[ids["u"]] = w[T - 1] * y[0]
        Z = w.max(axis=0)
        if "Z" in ids:
            vals[ids["Z"]] = Z if len(ids["Z"]) == P else [Z.max()]
    if "i" in ids:
        i = np.stack([metrics.gap_starts(y[:, p], cyc) for p in range(P)], axis=1)
        alpha = np.array([metrics.revisit_stats(y[:, p], cyc)[1] for p in range(P)])
        vals[ids["i"]] = i
        vals[ids["alpha"]] = alpha
        vals[ids["a"]] = i * alpha[None, :]
    return vals


def solve_exhaustive(problem: CompiledProblem, limit: int = 1 << 20) -> Solution:
    t0 = time.perf_counter()
    size = enumeration_size(problem)
    if size > limit:
        raise SolverError(f"enumeration budget exceeded: {size} patterns > limit {limit}")
    J = problem.data.shape[1]
    N = _cardinality(problem)
    best_obj = math.inf
    best_x = None
    count = 0
    if N is None or N <= J:
        for X in _patterns(J, N):
            count += len(X)
            obj, feas = _score(problem, X)
            obj = np.where(feas, obj, np.inf)
            k = int(np.argmin(obj))
            if obj[k] < best_obj - EPS:
                best_obj, best_x = float(obj[k]), X[k].copy()
    wall = time.perf_counter() - t0
    if best_x is None:
        return Solution(INFEASIBLE, None, None, None, max(count, 1), wall, "exhaustive")
    vals = full_assignment(problem, best_x)
    bad = problem.model.violations(vals, 1e-6)
    if bad:
        raise SolverError(f"oracle assignment violates model rows: {bad[:5]}")
    obj = problem.model.objective_value(vals)
    if abs(obj - (-best_obj if problem.kind == Kind.MCLP else best_obj)) > 1e-6:
        raise SolverError(f"oracle objective {best_obj} disagrees with model objective {obj}")
    return Solution(OPTIMAL, vals, obj, obj, count, time.perf_counter() - t0, "exhaustive")

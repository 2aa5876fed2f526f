"""Solvers for compiled problems: enumeration, branch-and-bound, and HiGHS."""
from __future__ import annotations

from typing import Union

from ..formulations import CompiledProblem
from ..model_ir import MilpModel
from ..scenario import Kind
from .bnb import default_priority, solve_bnb
from .core import INFEASIBLE, OPTIMAL, TIME_LIMIT, Solution, SolveOptions, SolverError
from .exhaustive import full_assignment, solve_exhaustive
from .highs import solve_highs
from .revisit import solve_mart_dinkelbach, solve_mmrt_windows
from .verify import VerifyReport, verify

BACKENDS = ("bnb", "highs", "exhaustive")
STRATEGIES = ("direct", "decomposed")


def solve(problem: Union[CompiledProblem, MilpModel], opts: SolveOptions = SolveOptions(),
          backend: str = "bnb", strategy: str = "direct") -> Solution:
    """Solve with the named backend; ``exhaustive`` needs a compiled problem.

    ``strategy="decomposed"`` routes MMRT (maximum form) and single-target MART
    through the sequences of smaller MILPs in :mod:`.revisit`, each solved by
    ``backend``; other problems are solved directly.
    """
    if strategy not in STRATEGIES:
        raise SolverError(f"unknown strategy {strategy!r}; expected one of {STRATEGIES}")
    if strategy == "decomposed" and isinstance(problem, CompiledProblem) and decomposable(problem):
        if backend not in ("bnb", "highs"):
            raise SolverError("decomposed solves need the bnb or highs backend")
        sub = solve_bnb if backend == "bnb" else solve_highs
        name = f"{backend}+"
        if problem.kind == Kind.MMRT:
            return solve_mmrt_windows(problem, opts, sub, name + "windows")
        return solve_mart_dinkelbach(problem, opts, sub, backend=name + "dinkelbach")
    model = problem.model if isinstance(problem, CompiledProblem) else problem
    if backend == "bnb":
        return solve_bnb(model, opts)
    if backend == "highs":
        return solve_highs(model, opts)
    if backend == "exhaustive":
        if not isinstance(problem, CompiledProblem):
            raise SolverError("the enumerative solver needs a compiled coverage problem")
        return solve_exhaustive(problem)
    raise SolverError(f"unknown backend {backend!r}; expected one of {BACKENDS}")


def decomposable(problem: CompiledProblem) -> bool:
    if problem.kind == Kind.MMRT:
        return not problem.spec.sum_of_mrts
    return problem.kind == Kind.MART and problem.data.shape[2] == 1


__all__ = [
    "BACKENDS", "STRATEGIES", "INFEASIBLE", "OPTIMAL", "TIME_LIMIT", "Solution", "SolveOptions", "SolverError",
    "VerifyReport", "decomposable", "default_priority", "full_assignment", "solve", "solve_bnb", "solve_exhaustive",
    "solve_highs", "solve_mart_dinkelbach", "solve_mmrt_windows", "verify",
]

"""Random tiny coverage instances for oracle cross-checks and benchmarks."""
from __future__ import annotations

import numpy as np

from .formulations import CompiledProblem, CoverageData, build
from .scenario import FormulationSpec, Kind


def random_data(rng: np.random.Generator, J: int, T: int, P: int, density: float, max_r: int = 1,
                with_isl: bool = False, unit_cost: bool = False) -> CoverageData:
    V = rng.random((T, J, P)) < density
    r = rng.integers(1, max_r + 1, size=(T, P))
    costs = np.ones(J) if unit_cost else rng.integers(1, 6, size=J).astype(float)
    W = None
    if with_isl:
        upper = np.triu(rng.random((T, J, J)) < 0.7, k=1)
        W = upper | upper.transpose(0, 2, 1)
    return CoverageData(V, r, costs, W)


def random_spec(rng: np.random.Generator, kind: Kind, T: int, J: int, P: int) -> FormulationSpec:
    N = int(rng.integers(1, min(3, J) + 1))
    cyclic = bool(rng.random() < 0.5)
    if kind == Kind.SCLP:
        return FormulationSpec(kind)
    if kind == Kind.PSCLP:
        if rng.random() < 0.5:
            return FormulationSpec(kind, D=tuple(int(v) for v in rng.integers(0, T + 1, size=P)))
        return FormulationSpec(kind, D_mean=int(rng.integers(0, T * P + 1)))
    if kind == Kind.MCLP:
        if rng.random() < 0.5:
            return FormulationSpec(kind, N=N, rewards=rng.integers(0, 4, size=(T, P)).astype(float))
        return FormulationSpec(kind, budget=float(rng.integers(0, 10)))
    if kind == Kind.MMRT:
        return FormulationSpec(kind, N=N, cyclic=cyclic, sum_of_mrts=bool(rng.random() < 0.3))
    if kind == Kind.MART:
        return FormulationSpec(kind, N=N, cyclic=cyclic)
    if kind == Kind.ZMRT:
        return FormulationSpec(kind, z=tuple(int(v) for v in rng.integers(0, T + 1, size=P)), cyclic=cyclic)
    if kind == Kind.GAMMA_ART:
        return FormulationSpec(kind, gamma=tuple(float(v) for v in rng.integers(0, 2 * T + 1, size=P) / 2),
                               cyclic=cyclic)
    if kind == Kind.MAX_ISL:
        return FormulationSpec(kind, isl_mode="corrected" if rng.random() < 0.7 else "literal")
    raise ValueError(kind)


def random_problem(rng: np.random.Generator, kind: Kind, max_J: int = 12, max_T: int = 20, max_P: int = 2,
                   density=(0.2, 0.8)) -> CompiledProblem:
    J = int(rng.integers(3, max_J + 1))
    T = int(rng.integers(2, max_T + 1))
    P = int(rng.integers(1, max_P + 1))
    dens = float(rng.uniform(*density))
    max_r = 2 if kind in (Kind.SCLP, Kind.MAX_ISL, Kind.PSCLP) and rng.random() < 0.3 else 1
    data = random_data(rng, J, T, P, dens, max_r=max_r, with_isl=kind == Kind.MAX_ISL)
    return build(random_spec(rng, kind, T, J, P), data)

import numpy as np
import pytest
from conftest import columns
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import linprog

from orbcover.formulations import CoverageData, build_mart, build_mmrt, build_sclp
from orbcover.instances import random_problem
from orbcover.model_ir import MilpModel
from orbcover.scenario import Kind
from orbcover.solver import (INFEASIBLE, OPTIMAL, TIME_LIMIT, SolveOptions, SolverError, full_assignment, solve,
                             solve_bnb, solve_exhaustive, solve_highs, verify)
from orbcover.solver.simplex import AT_LO, BASIC, BoundedSimplex


def interval_cover(seed):
    """Covering rows with the consecutive-ones property: every slot sees one
    contiguous run of steps, so the constraint matrix is totally unimodular."""
    rng = np.random.default_rng(seed)
    T, J = 12, 8
    V = np.zeros((T, J, 1), dtype=bool)
    for j in range(J):
        s = int(rng.integers(0, T))
        V[s:s + int(rng.integers(2, 6)), j, 0] = True
    V[:, 0, 0] |= ~V.any(axis=1)[:, 0]  # keep it feasible
    return build_sclp(CoverageData(V, 1, rng.integers(1, 6, size=J)))


@pytest.mark.parametrize("seed", range(5))
def test_totally_unimodular_cover_solves_at_root(seed):
    problem = interval_cover(seed)
    sol = solve_bnb(problem.model)
    assert sol.status == OPTIMAL and sol.node_count == 1
    assert sol.objective == solve_exhaustive(problem).objective


def test_infeasible_model_reports_nodes():
    sol = solve_bnb(build_sclp(CoverageData(columns([1, 1, 1]), 2, 1)).model)
    assert sol.status == INFEASIBLE and sol.node_count >= 1 and sol.values is None
    m = MilpModel()
    x = m.continuous("x", 0, 1)
    y = m.continuous("y", 0, 1)
    m.add_constraint([(x, 1), (y, 1)], ">=", 3)
    assert solve_bnb(m).status == INFEASIBLE


def test_tiny_mart_matches_enumeration():
    problem = build_mart(CoverageData(columns([0, 1, 0, 0, 1]), 1, 1), N=1)
    a, b = solve_bnb(problem.model), solve_exhaustive(problem)
    assert a.objective == pytest.approx(1.5, abs=1e-6)
    assert b.objective == pytest.approx(1.5, abs=1e-6)


@pytest.mark.parametrize("kind", [Kind.MMRT, Kind.MART, Kind.PSCLP])
def test_deterministic_given_seed(kind):
    problem = random_problem(np.random.default_rng(7), kind)
    for branching in ("most-fractional", "pseudo-cost"):
        opts = SolveOptions(seed=3, branching=branching)
        a, b = solve_bnb(problem.model, opts), solve_bnb(problem.model, opts)
        assert a.node_count == b.node_count
        assert a.status == b.status
        if a.values is not None:
            np.testing.assert_array_equal(a.values, b.values)


@pytest.mark.parametrize("kind", list(Kind))
def test_bound_never_crosses_incumbent(kind):
    rng = np.random.default_rng(21)
    for _ in range(5):
        problem = random_problem(rng, kind, max_J=10, max_T=12)
        sol = solve_bnb(problem.model)
        if sol.status != OPTIMAL:
            continue
        maximize = problem.model.objective.sense == "max"
        slack = (sol.bound - sol.objective) if maximize else (sol.objective - sol.bound)
        assert -1e-9 <= slack <= 1e-6
        assert verify(problem, sol).ok


def test_node_limit_reports_incumbent_and_bound():
    rng = np.random.default_rng(2)
    cut = None
    while cut is None or cut.status == OPTIMAL:
        problem = random_problem(rng, Kind.MART, max_J=12, max_T=20)
        cut = solve_bnb(problem.model, SolveOptions(node_limit=2))
    full = solve_bnb(problem.model)
    assert cut.status == TIME_LIMIT and cut.node_count == 2
    if cut.bound is not None:
        assert cut.bound <= full.objective + 1e-6
    if cut.objective is not None:
        assert cut.objective >= full.objective - 1e-6


def test_options_validated():
    with pytest.raises(ValueError):
        SolveOptions(time_limit=0)
    with pytest.raises(ValueError):
        SolveOptions(branching="strong")


def test_unbounded_variables_rejected():
    m = MilpModel()
    m.continuous("z", 0, float("inf"))
    with pytest.raises(SolverError, match="bounded"):
        solve_bnb(m)


def test_enumeration_budget():
    V = np.ones((2, 25, 1), dtype=bool)
    with pytest.raises(SolverError, match="budget"):
        solve_exhaustive(build_sclp(CoverageData(V, 1, 1)), limit=1000)


def test_unknown_backend(tiny_sclp_data):
    with pytest.raises(SolverError, match="backend"):
        solve(build_sclp(tiny_sclp_data), backend="cplex")
    with pytest.raises(SolverError):
        solve(build_sclp(tiny_sclp_data).model, backend="exhaustive")


# --------------------------------------------------------------------------
# verification


def test_verify_accepts_optimum_and_flags_flipped_slot(tiny_sclp_data):
    problem = build_sclp(tiny_sclp_data)
    sol = solve_bnb(problem.model)
    assert verify(problem, sol).ok
    flipped = sol.values.copy()
    flipped[problem.ids["x"][1]] = 0
    sol.values, sol.objective = flipped, None
    rep = verify(problem, sol)
    assert not rep.ok
    assert [n for n, _ in rep.violations] == ["cover_2_1"]
    assert rep.oracle


def test_verify_rejects_alpha_below_oracle_art():
    problem = build_mart(CoverageData(columns([0, 1, 0, 0, 1]), 1, 1), N=1)
    sol = solve_bnb(problem.model)
    bad = sol.values.copy()
    bad[problem.ids["alpha"][0]] = 1.0
    sol.values, sol.objective = bad, None
    rep = verify(problem, sol)
    assert not rep.ok
    assert any("below oracle ART" in msg for msg in rep.oracle)


def test_verify_rejects_wrong_optimal_z(tiny_revisit_data):
    problem = build_mmrt(tiny_revisit_data, N=1)
    sol = solve_bnb(problem.model)
    vals = sol.values.copy()
    vals[problem.ids["Z"][0]] = 2
    sol.values, sol.objective = vals, None
    assert any("differs from oracle MRT" in m for m in verify(problem, sol).oracle)


def test_verify_reports_objective_mismatch(tiny_sclp_data):
    problem = build_sclp(tiny_sclp_data)
    sol = solve_bnb(problem.model)
    sol.objective = 5.0
    assert not verify(problem, sol).ok


@pytest.mark.parametrize("kind", list(Kind))
def test_full_assignment_satisfies_model(kind):
    rng = np.random.default_rng(5)
    for _ in range(10):
        problem = random_problem(rng, kind, max_J=6, max_T=8)
        sol = solve_exhaustive(problem)
        if sol.status == OPTIMAL:
            x = sol.values[problem.ids["x"]]
            vals = full_assignment(problem, x)
            assert problem.model.violations(vals) == []


# --------------------------------------------------------------------------
# cross-checks against HiGHS


@pytest.mark.parametrize("kind", [Kind.SCLP, Kind.MCLP, Kind.MMRT, Kind.MART])
def test_highs_agrees_with_branch_and_bound(kind):
    rng = np.random.default_rng(99)
    for _ in range(5):
        problem = random_problem(rng, kind)
        a, b = solve_bnb(problem.model), solve_highs(problem.model)
        assert a.status == b.status
        if a.status == OPTIMAL:
            assert a.objective == pytest.approx(b.objective, abs=1e-6)


@settings(max_examples=80)
@given(st.integers(0, 10_000), st.integers(1, 6), st.integers(1, 6))
def test_bounded_simplex_matches_reference_lp(seed, m, n):
    rng = np.random.default_rng(seed)
    A = rng.integers(-3, 4, size=(m, n)).astype(float)
    x0 = rng.uniform(-1, 1, size=n)
    act = A @ x0
    row_lo = np.where(rng.random(m) < 0.3, -np.inf, act - rng.uniform(0, 2, m))
    row_hi = np.where(rng.random(m) < 0.3, np.inf, act + rng.uniform(0, 2, m))
    eq = rng.random(m) < 0.2
    row_lo[eq] = row_hi[eq] = act[eq]
    lo = -rng.uniform(0.5, 3, n)
    hi = rng.uniform(0.5, 3, n)
    c = rng.normal(size=n)
    res = BoundedSimplex(A, row_lo, row_hi, c).solve(lo, hi)
    A_ub = np.vstack([A, -A])
    b_ub = np.concatenate([row_hi, -row_lo])
    keep = np.isfinite(b_ub)
    ref = linprog(c, A_ub=A_ub[keep], b_ub=b_ub[keep], bounds=list(zip(lo, hi)), method="highs")
    if ref.status == 2:
        assert res.status == "infeasible"
    else:
        assert res.status == "optimal"
        assert res.objective == pytest.approx(ref.fun, abs=1e-7)
        assert np.all(A @ res.x >= row_lo - 1e-7) and np.all(A @ res.x <= row_hi + 1e-7)


def test_warm_start_breakdown_recovers():
    # this draw once drove a warm-started basis singular at node 10
    rng = np.random.default_rng(1000)
    for _ in range(10):
        problem = random_problem(rng, Kind.MART, max_J=12, max_T=20, max_P=2)
    a, b = solve_bnb(problem.model), solve_exhaustive(problem)
    assert a.status == b.status == OPTIMAL
    assert a.objective == pytest.approx(b.objective, abs=1e-6)



def test_refactor_repairs_singular_basis():
    # a cold root solve on this draw reached an exactly singular basis at refactorization
    rng = np.random.default_rng(20_004)
    for _ in range(87):
        problem = random_problem(rng, Kind.MART, max_J=12, max_T=20, max_P=2)
    a, b = solve_bnb(problem.model), solve_exhaustive(problem)
    assert a.status == b.status == OPTIMAL
    assert a.objective == pytest.approx(b.objective, abs=1e-6)


def test_repair_swaps_dependent_columns_for_logicals():
    A = np.array([[1.0, 2.0], [2.0, 4.0]])
    lp = BoundedSimplex(A, np.zeros(2), np.full(2, 10.0), np.array([-1.0, -1.0]))
    basis = lp.initial_basis()
    basic, status = np.array([0, 1]), basis.status.copy()
    status[:] = AT_LO
    status[basic] = BASIC
    assert lp._repair(basic, status)
    assert np.linalg.matrix_rank(lp._basis_matrix(basic)) == 2
    assert (status == BASIC).sum() == 2 and set(np.flatnonzero(status == BASIC)) == set(basic)


# --------------------------------------------------------------------------
# decomposed revisit solves


@pytest.mark.parametrize("kind", [Kind.MMRT, Kind.MART])
@pytest.mark.parametrize("backend", ["bnb", "highs"])
def test_decomposed_matches_enumeration(kind, backend):
    rng = np.random.default_rng(17)
    seen = 0
    while seen < 25:
        problem = random_problem(rng, kind, max_J=10, max_T=16, max_P=1 if kind == Kind.MART else 2)
        if problem.spec.sum_of_mrts:
            continue
        seen += 1
        ref = solve_exhaustive(problem)
        sol = solve(problem, backend=backend, strategy="decomposed")
        assert sol.backend.endswith("windows" if kind == Kind.MMRT else "dinkelbach")
        assert sol.status == ref.status
        if sol.status == OPTIMAL:
            assert sol.objective == pytest.approx(ref.objective, abs=1e-6)
            assert sol.bound == pytest.approx(sol.objective)
            assert verify(problem, sol).ok


def test_decomposed_falls_back_to_direct_model():
    problem = build_mmrt(CoverageData(columns([1, 0, 0, 1], [1, 1, 0, 1]), 1, 1), N=1, sum_of_mrts=True)
    assert solve(problem, backend="bnb", strategy="decomposed").backend == "bnb"
    with pytest.raises(SolverError, match="strategy"):
        solve(problem, strategy="clever")


def test_decomposed_mart_full_coverage_is_zero():
    problem = build_mart(CoverageData(columns([1, 1, 0], [0, 1, 1]), 1, 1), N=2)
    sol = solve(problem, backend="highs", strategy="decomposed")
    assert sol.status == OPTIMAL and sol.objective == 0.0


def test_decomposed_time_limit_keeps_bound_below_incumbent():
    rng = np.random.default_rng(3)
    problem = random_problem(rng, Kind.MART, max_J=12, max_T=20, max_P=1)
    sol = solve(problem, SolveOptions(time_limit=1e-4), backend="bnb", strategy="decomposed")
    assert sol.status == TIME_LIMIT
    if sol.objective is not None and sol.bound is not None:
        assert sol.bound <= sol.objective + 1e-9

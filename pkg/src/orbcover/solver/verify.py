"""Independent certification of a solution against the model and the metrics oracle."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .. import metrics
from ..formulations import CompiledProblem
from ..scenario import Kind
from .core import Solution

TOL = 1e-6


@dataclass
class VerifyReport:
    ok: bool
    objective: float
    violations: list = field(default_factory=list)  # (row or variable name, amount)
    oracle: list = field(default_factory=list)  # human-readable oracle mismatches

    def to_dict(self) -> dict:
        return {"ok": self.ok, "objective": self.objective,
                "violations": [[n, float(a)] for n, a in self.violations], "oracle": list(self.oracle)}


def _oracle_checks(problem: CompiledProblem, values: np.ndarray, optimal: bool) -> list[str]:
    d = problem.data
    spec = problem.spec
    kind = problem.kind
    T, J, P = d.shape
    cyc = bool(spec.cyclic)
    ids = problem.ids
    x = np.rint(values[ids["x"]]).astype(int)
    b = np.einsum("tjp,j->tp", d.V.astype(int), x)
    Y = b >= d.r
    out = []
    stats = [metrics.revisit_stats(Y[:, p], cyc) for p in range(P)]
    mrt = np.array([s[0] for s in stats], dtype=float)
    art = np.array([s[1] for s in stats])

    if "y" in ids:
        y = np.rint(values[ids["y"]]).astype(bool)
        if kind in (Kind.PSCLP, Kind.MCLP):
            bad = np.argwhere(y & ~Y)
            for t, p in bad[:10]:
                out.append(f"y[{t + 1},{p + 1}]=1 but b={b[t, p]} < r={d.r[t, p]}")
        else:
            bad = np.argwhere(y != Y)
            for t, p in bad[:10]:
                out.append(f"y[{t + 1},{p + 1}]={int(y[t, p])} but oracle says {int(Y[t, p])}")
    if kind in (Kind.SCLP, Kind.MAX_ISL) and not Y.all():
        out.append(f"{int((~Y).sum())} (t, p) pairs are under-covered")
    if kind == Kind.PSCLP:
        got = Y.sum(axis=0)
        if spec.D is not None and np.any(got < np.asarray(spec.D)):
            out.append(f"covered steps {got.tolist()} below D={list(spec.D)}")
        if spec.D_mean is not None and got.sum() < spec.D_mean:
            out.append(f"covered pairs {int(got.sum())} below D={spec.D_mean}")
    if "w" in ids:
        w = values[ids["w"]]
        ref = np.stack([metrics.gap_counters(Y[:, p], cyc) for p in range(P)], axis=1)
        if np.any(np.abs(w - ref) > TOL):
            out.append("gap counters differ from the oracle run lengths")
    if kind == Kind.MMRT:
        Z = values[ids["Z"]]
        need = mrt if spec.sum_of_mrts else np.array([mrt.max()])
        if np.any(Z < need - TOL):
            out.append(f"Z={Z.tolist()} below oracle MRT {need.tolist()}")
        if optimal and np.any(np.abs(Z - need) > TOL):
            out.append(f"optimal Z={Z.tolist()} differs from oracle MRT {need.tolist()}")
    if kind == Kind.ZMRT and np.any(mrt > np.asarray(spec.z) + TOL):
        out.append(f"oracle MRT {mrt.tolist()} exceeds z={list(spec.z)}")
    if "alpha" in ids:
        alpha = values[ids["alpha"]]
        if np.any(alpha < art - TOL):
            out.append(f"alpha={alpha.tolist()} below oracle ART {art.tolist()}")
        if optimal and kind == Kind.MART and np.any(np.abs(alpha - art) > TOL):
            out.append(f"optimal alpha={alpha.tolist()} differs from oracle ART {art.tolist()}")
        if kind == Kind.GAMMA_ART and np.any(art > np.asarray(spec.gamma) + TOL):
            out.append(f"oracle ART {art.tolist()} exceeds gamma={list(spec.gamma)}")
    if kind == Kind.MAX_ISL:
        for t in range(1, T + 1):
            audit = metrics.isl_audit(d.W, x, t)
            if not audit["dirac_ok"]:
                out.append(f"Dirac condition fails at t={t}: n={audit['n']}, min degree {audit['min_degree']}")
                break
    return out


def verify(problem: CompiledProblem, solution: Solution, tol: float = TOL) -> VerifyReport:
    """Re-check every bound and row, recompute the objective, and cross-check the
    coverage variables against timelines recomputed from ``x`` alone."""
    if solution.values is None:
        raise ValueError(f"nothing to verify: solution status {solution.status} has no assignment")
    values = np.asarray(solution.values, dtype=float)
    model = problem.model
    if values.shape != (model.num_vars,):
        raise ValueError(f"assignment has {values.size} values, model has {model.num_vars}")
    violations = model.violations(values, tol)
    obj = model.objective_value(values)
    oracle = []
    if solution.objective is not None and abs(obj - solution.objective) > tol * max(1.0, abs(obj)):
        oracle.append(f"recomputed objective {obj} differs from reported {solution.objective}")
    oracle += _oracle_checks(problem, values, solution.status == "optimal")
    return VerifyReport(not violations and not oracle, obj, violations, oracle)

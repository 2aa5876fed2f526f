"""Compile coverage data into the constellation MILPs and decode solutions.

Formulations:

* SCLP      min cost, every (t, p) covered r_tp-fold
* PSCLP     min cost, at least D_p covered steps per target (or D overall)
* MCLP      max collected reward with N satellites (or a cost budget)
* MMRT      min maximum revisit time with N satellites
* MART      min sum of per-target average revisit times with N satellites
* MaxISL    SCLP plus Dirac degree conditions on the ISL graph
* ZMRT      min cost with per-target MRT caps
* GammaART  min cost with per-target ART caps

Symbols and their variable names (indices 1-based in names, 0-based in
``ids``): x_j, y_t_p (covered), w_t_p (gap counter), Z / Z_p (MRT),
u_p (cyclic link), i_t_p (gap start), alpha_p (ART bound), a_t_p
(alpha_p * i_t_p).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .model_ir import BINARY, CONTINUOUS, INTEGER, MilpModel
from .scenario import FormulationSpec, Kind


class FormulationError(ValueError):
    pass


@dataclass
class CoverageData:
    """Everything a formulation needs from the scenario."""

    V: np.ndarray  # (T, J, P) bool
    r: np.ndarray  # (T, P) int
    costs: np.ndarray  # (J,)
    W: Optional[np.ndarray] = None  # (T, J, J) bool
    dt: float = 1.0

    @property
    def shape(self) -> tuple[int, int, int]:
        return self.V.shape

    def __post_init__(self):
        self.V = np.asarray(self.V, dtype=bool)
        if self.V.ndim != 3:
            raise FormulationError(f"V must be (T, J, P), got shape {self.V.shape}")
        T, J, P = self.V.shape
        self.r = np.broadcast_to(np.asarray(self.r, dtype=np.int64), (T, P)).copy()
        if np.any(self.r < 1):
            raise FormulationError("r_tp must be >= 1")
        self.costs = np.broadcast_to(np.asarray(self.costs, dtype=float), (J,)).copy()
        if np.any(self.costs < 0):
            raise FormulationError("costs must be >= 0")
        if self.W is not None:
            self.W = np.asarray(self.W, dtype=bool)
            if self.W.shape != (T, J, J):
                raise FormulationError(f"W must be (T, J, J) = {(T, J, J)}, got {self.W.shape}")


@dataclass
class CompiledProblem:
    model: MilpModel
    spec: FormulationSpec
    data: CoverageData
    ids: dict = field(default_factory=dict)  # symbol -> ndarray of variable ids
    big_m: float = 0.0

    @property
    def var_index(self) -> dict:
        """(symbol, index tuple) -> variable id, 0-based indices."""
        out = {}
        for sym, arr in self.ids.items():
            for idx in np.ndindex(arr.shape):
                out[(sym, idx)] = int(arr[idx])
        return out

    @property
    def kind(self) -> Kind:
        return self.spec.kind


@dataclass
class Decoded:
    x: np.ndarray
    objective: float
    y: Optional[np.ndarray] = None
    w: Optional[np.ndarray] = None
    Z: Optional[np.ndarray] = None
    u: Optional[np.ndarray] = None
    i: Optional[np.ndarray] = None
    alpha: Optional[np.ndarray] = None
    a: Optional[np.ndarray] = None

    @property
    def selected(self) -> np.ndarray:
        return np.flatnonzero(self.x > 0.5)


# --------------------------------------------------------------------------
# building blocks


def _add_grid(m: MilpModel, name: str, shape, domain, lo=0.0, hi=1.0) -> np.ndarray:
    ids = np.empty(shape, dtype=np.int64)
    for idx in np.ndindex(*shape):
        label = "_".join(str(k + 1) for k in idx)
        ids[idx] = m.add_variable(f"{name}_{label}" if label else name, domain, lo, hi)
    return ids


def _cover_terms(V, x_ids, t, p):
    js = np.flatnonzero(V[t, :, p])
    return [(int(x_ids[j]), 1.0) for j in js]


def _merge(pairs):
    """Sum coefficients of repeated variables (T = 1 cyclic rows refer to one step twice)."""
    out: dict[int, float] = {}
    for vid, coef in pairs:
        out[int(vid)] = out.get(int(vid), 0.0) + coef
    return list(out.items())


def _add_x(m: MilpModel, J: int) -> np.ndarray:
    return _add_grid(m, "x", (J,), BINARY)


def _add_cover_rows(m, data, x_ids):
    """sum_j V_tjp x_j >= r_tp."""
    T, _, P = data.shape
    for t in range(T):
        for p in range(P):
            m.add_constraint(_cover_terms(data.V, x_ids, t, p), ">=", data.r[t, p], f"cover_{t + 1}_{p + 1}")


def _add_linking_rows(m, data, x_ids, y_ids):
    """sum_j V_tjp x_j >= r_tp y_tp."""
    T, _, P = data.shape
    for t in range(T):
        for p in range(P):
            terms = _cover_terms(data.V, x_ids, t, p) + [(int(y_ids[t, p]), -float(data.r[t, p]))]
            m.add_constraint(terms, ">=", 0.0, f"link_{t + 1}_{p + 1}")


def _indicator_big_m(data: CoverageData, tight: bool, beta: float):
    """Big-M pair for the two coverage indicator rows, shape (T, P) each.

    The default is M = T everywhere. T is only valid while more than T - r
    visible satellites cannot occur; when the data breaks that, M is raised
    to the smallest value that keeps the indicator exact.
    """
    T, _, P = data.shape
    nvis = data.V.sum(axis=1)
    if tight:
        return data.r.astype(float), np.maximum(nvis - data.r + 1, 1).astype(float)
    need = max(float(data.r.max()), float((nvis - data.r).max()) + 1.0)
    M = float(T) if T >= need else float(np.ceil(need))
    full = np.full((T, P), M)
    return full, full


def _add_indicator_rows(m, data, x_ids, y_ids, beta: float, tight: bool) -> float:
    """y_tp = 1 iff sum_j V_tjp x_j >= r_tp, via the two big-M rows."""
    T, _, P = data.shape
    M1, M2 = _indicator_big_m(data, tight, beta)
    for t in range(T):
        for p in range(P):
            cov = _cover_terms(data.V, x_ids, t, p)
            y = int(y_ids[t, p])
            r = float(data.r[t, p])
            # sum V x - r >= -M (1 - y) - beta
            m.add_constraint(cov + [(y, -M1[t, p])], ">=", r - M1[t, p] - beta, f"ind_lo_{t + 1}_{p + 1}")
            # sum V x - r <= M y - beta
            m.add_constraint(cov + [(y, -M2[t, p])], "<=", r - beta, f"ind_hi_{t + 1}_{p + 1}")
    return float(M1.max())


def _add_cardinality(m, x_ids, N: int, J: int):
    if N > J:
        raise FormulationError(f"N={N} exceeds the number of slots J={J}")
    m.add_constraint([(int(v), 1.0) for v in x_ids], "=", float(N), "cardinality")


def _add_gap_counters(m, T, P, y_ids, cyclic: bool):
    """w_tp counts consecutive uncovered steps up to t; returns (w_ids, u_ids)."""
    w = _add_grid(m, "w", (T, P), INTEGER, 0.0, float(T))
    u_ids = None
    if cyclic:
        u_ids = _add_grid(m, "u", (P,), INTEGER, 0.0, float(T))
    for p in range(P):
        if cyclic:
            # w_1 = w_T + 1 - y_1 - u ;  u = w_T * y_1 linearized
            u = int(u_ids[p])
            m.add_constraint(_merge([(w[0, p], 1.0), (w[T - 1, p], -1.0), (y_ids[0, p], 1.0), (u, 1.0)]),
                             "=", 1.0, f"wrap_w_{p + 1}")
            m.add_constraint([(u, 1.0), (int(y_ids[0, p]), -float(T))], "<=", 0.0, f"wrap_u1_{p + 1}")
            m.add_constraint([(u, 1.0), (int(w[T - 1, p]), -1.0)], "<=", 0.0, f"wrap_u2_{p + 1}")
            m.add_constraint([(u, 1.0), (int(w[T - 1, p]), -1.0), (int(y_ids[0, p]), -float(T))], ">=", -float(T),
                             f"wrap_u3_{p + 1}")
        else:
            m.add_constraint([(int(w[0, p]), 1.0), (int(y_ids[0, p]), 1.0)], "=", 1.0, f"w_init_{p + 1}")
        for t in range(T):
            m.add_constraint([(int(w[t, p]), 1.0), (int(y_ids[t, p]), float(T))], "<=", float(T),
                             f"w_reset_{t + 1}_{p + 1}")
            if t == 0:
                continue
            m.add_constraint([(int(w[t, p]), 1.0), (int(w[t - 1, p]), -1.0)], "<=", 1.0, f"w_step_{t + 1}_{p + 1}")
            m.add_constraint([(int(w[t, p]), 1.0), (int(w[t - 1, p]), -1.0), (int(y_ids[t, p]), float(T))], ">=",
                             1.0, f"w_grow_{t + 1}_{p + 1}")
    return w, u_ids


def _add_art_block(m, T, P, y_ids, cyclic: bool):
    """Gap-start indicators i_tp and the linearized alpha_p * i_tp products."""
    i_ids = _add_grid(m, "i", (T, P), BINARY)
    alpha = _add_grid(m, "alpha", (P,), CONTINUOUS, 0.0, float(T))
    a_ids = _add_grid(m, "a", (T, P), CONTINUOUS, 0.0, float(T))
    fT = float(T)
    for p in range(P):
        al = int(alpha[p])
        for t in range(T):
            a, i = int(a_ids[t, p]), int(i_ids[t, p])
            m.add_constraint([(a, 1.0), (i, -fT)], "<=", 0.0, f"a_le_ti_{t + 1}_{p + 1}")
            m.add_constraint([(a, 1.0), (al, -1.0)], "<=", 0.0, f"a_le_alpha_{t + 1}_{p + 1}")
            m.add_constraint([(a, 1.0), (al, -1.0), (i, -fT)], ">=", -fT, f"a_ge_{t + 1}_{p + 1}")
        # sum_t a_tp >= T - sum_t y_tp
        terms = [(int(a_ids[t, p]), 1.0) for t in range(T)] + [(int(y_ids[t, p]), 1.0) for t in range(T)]
        m.add_constraint(terms, ">=", fT, f"art_num_{p + 1}")
        # gap starts
        i1, y1 = int(i_ids[0, p]), int(y_ids[0, p])
        if cyclic:
            yT = int(y_ids[T - 1, p])
            _gap_start_rows(m, i1, y1, yT, fT, f"1_{p + 1}")
        else:
            m.add_constraint([(i1, 1.0), (y1, 1.0)], "<=", 1.0, f"gs_init_{p + 1}")
        for t in range(1, T):
            _gap_start_rows(m, int(i_ids[t, p]), int(y_ids[t, p]), int(y_ids[t - 1, p]), fT, f"{t + 1}_{p + 1}")
    return i_ids, alpha, a_ids


def _gap_start_rows(m, i, y, y_prev, fT, label):
    # i <= T(1 - y);  i >= y_prev - T y;  i <= y_prev + y
    m.add_constraint([(i, 1.0), (y, fT)], "<=", fT, f"gs_a_{label}")
    m.add_constraint(_merge([(i, 1.0), (y_prev, -1.0), (y, fT)]), ">=", 0.0, f"gs_b_{label}")
    m.add_constraint(_merge([(i, 1.0), (y_prev, -1.0), (y, -1.0)]), "<=", 0.0, f"gs_c_{label}")


def _new_model(kind: Kind, data: CoverageData) -> MilpModel:
    T, J, P = data.shape
    return MilpModel(kind.value, {"kind": kind.value, "T": T, "J": J, "P": P})


def _per_target(values, P):
    return np.broadcast_to(np.asarray(values, dtype=float), (P,))


# --------------------------------------------------------------------------
# formulations


def build_sclp(data: CoverageData, spec: Optional[FormulationSpec] = None) -> CompiledProblem:
    spec = spec or FormulationSpec(Kind.SCLP)
    T, J, P = data.shape
    m = _new_model(Kind.SCLP, data)
    x = _add_x(m, J)
    _add_cover_rows(m, data, x)
    m.set_objective("min", [(int(x[j]), data.costs[j]) for j in range(J)])
    return CompiledProblem(m, spec, data, {"x": x})


def build_psclp(data: CoverageData, D=None, D_mean: Optional[int] = None,
                spec: Optional[FormulationSpec] = None) -> CompiledProblem:
    T, J, P = data.shape
    if D is None and D_mean is None:
        raise FormulationError("PSCLP needs per-target D or a mean D")
    if D is not None:
        D = _per_target(D, P)
        if np.any(D < 0) or np.any(D > T):
            raise FormulationError(f"D_p must lie in [0, T={T}]")
    if D_mean is not None and not 0 <= D_mean <= T * P:
        raise FormulationError(f"mean D must lie in [0, T*P={T * P}]")
    spec = spec or FormulationSpec(Kind.PSCLP, D=None if D is None else tuple(D), D_mean=D_mean)
    m = _new_model(Kind.PSCLP, data)
    x = _add_x(m, J)
    y = _add_grid(m, "y", (T, P), BINARY)
    _add_linking_rows(m, data, x, y)
    if D is not None:
        for p in range(P):
            m.add_constraint([(int(y[t, p]), 1.0) for t in range(T)], ">=", float(D[p]), f"pct_{p + 1}")
    else:
        m.add_constraint([(int(v), 1.0) for v in y.ravel()], ">=", float(D_mean), "pct_mean")
    m.set_objective("min", [(int(x[j]), data.costs[j]) for j in range(J)])
    return CompiledProblem(m, spec, data, {"x": x, "y": y})


def build_mclp(data: CoverageData, N: Optional[int] = None, rewards=None, budget: Optional[float] = None,
               spec: Optional[FormulationSpec] = None) -> CompiledProblem:
    T, J, P = data.shape
    if N is None and budget is None:
        raise FormulationError("MCLP needs N or a cost budget")
    if budget is not None and budget < 0:
        raise FormulationError("budget must be >= 0")
    pi = np.ones((T, P)) if rewards is None else np.broadcast_to(np.asarray(rewards, dtype=float), (T, P))
    if np.any(pi < 0):
        raise FormulationError("rewards must be >= 0")
    spec = spec or FormulationSpec(Kind.MCLP, N=N, rewards=np.array(pi), budget=budget)
    m = _new_model(Kind.MCLP, data)
    x = _add_x(m, J)
    y = _add_grid(m, "y", (T, P), BINARY)
    _add_linking_rows(m, data, x, y)
    if N is not None:
        _add_cardinality(m, x, N, J)
    if budget is not None:
        m.add_constraint([(int(x[j]), data.costs[j]) for j in range(J)], "<=", float(budget), "budget")
    m.set_objective("max", [(int(y[t, p]), pi[t, p]) for t in range(T) for p in range(P)])
    return CompiledProblem(m, spec, data, {"x": x, "y": y})


def build_mmrt(data: CoverageData, N: int, cyclic: bool = False, sum_of_mrts: bool = False, beta: float = 0.5,
               tight_big_m: bool = False, spec: Optional[FormulationSpec] = None) -> CompiledProblem:
    T, J, P = data.shape
    if not 0 < beta < 1:
        raise FormulationError("beta must lie in (0, 1)")
    spec = spec or FormulationSpec(Kind.MMRT, N=N, cyclic=cyclic, sum_of_mrts=sum_of_mrts, beta=beta,
                                   tight_big_m=tight_big_m)
    m = _new_model(Kind.MMRT, data)
    x = _add_x(m, J)
    y = _add_grid(m, "y", (T, P), BINARY)
    _add_cardinality(m, x, N, J)
    big_m = _add_indicator_rows(m, data, x, y, beta, tight_big_m)
    w, u = _add_gap_counters(m, T, P, y, cyclic)
    ids = {"x": x, "y": y, "w": w}
    if u is not None:
        ids["u"] = u
    if sum_of_mrts:
        Z = _add_grid(m, "Z", (P,), INTEGER, 0.0, float(T))
        for t in range(T):
            for p in range(P):
                m.add_constraint([(int(w[t, p]), 1.0), (int(Z[p]), -1.0)], "<=", 0.0, f"mrt_{t + 1}_{p + 1}")
        m.set_objective("min", [(int(z), 1.0) for z in Z])
    else:
        Z = np.array([m.add_variable("Z", INTEGER, 0.0, float(T))])
        for t in range(T):
            for p in range(P):
                m.add_constraint([(int(w[t, p]), 1.0), (int(Z[0]), -1.0)], "<=", 0.0, f"mrt_{t + 1}_{p + 1}")
        m.set_objective("min", [(int(Z[0]), 1.0)])
    ids["Z"] = Z
    return CompiledProblem(m, spec, data, ids, big_m)


def build_mart(data: CoverageData, N: int, cyclic: bool = False, beta: float = 0.5, tight_big_m: bool = False,
               spec: Optional[FormulationSpec] = None) -> CompiledProblem:
    T, J, P = data.shape
    if not 0 < beta < 1:
        raise FormulationError("beta must lie in (0, 1)")
    spec = spec or FormulationSpec(Kind.MART, N=N, cyclic=cyclic, beta=beta, tight_big_m=tight_big_m)
    m = _new_model(Kind.MART, data)
    x = _add_x(m, J)
    y = _add_grid(m, "y", (T, P), BINARY)
    _add_cardinality(m, x, N, J)
    big_m = _add_indicator_rows(m, data, x, y, beta, tight_big_m)
    i, alpha, a = _add_art_block(m, T, P, y, cyclic)
    m.set_objective("min", [(int(v), 1.0) for v in alpha])
    return CompiledProblem(m, spec, data, {"x": x, "y": y, "i": i, "alpha": alpha, "a": a}, big_m)


def build_max_isl(data: CoverageData, mode: str = "corrected",
                  spec: Optional[FormulationSpec] = None) -> CompiledProblem:
    """SCLP plus: at least 3 satellites and every vertex of the ISL graph with
    degree >= half the constellation size, at every step.

    ``mode="literal"`` applies the degree row to every slot k, selected or not;
    ``mode="corrected"`` relaxes it by J (1 - x_k) so only selected slots count.
    """
    if data.W is None:
        raise FormulationError("MaxISL needs the ISL tensor W")
    if mode not in ("corrected", "literal"):
        raise FormulationError(f"unknown ISL mode {mode!r}")
    T, J, P = data.shape
    W = data.W
    if np.any(W != W.transpose(0, 2, 1)) or np.any(W[:, np.arange(J), np.arange(J)]):
        raise FormulationError("W must be symmetric with a zero diagonal")
    spec = spec or FormulationSpec(Kind.MAX_ISL, isl_mode=mode)
    m = _new_model(Kind.MAX_ISL, data)
    x = _add_x(m, J)
    _add_cover_rows(m, data, x)
    m.add_constraint([(int(v), 1.0) for v in x], ">=", 3.0, "isl_min_sats")
    for t in range(T):
        for k in range(J):
            coef = W[t, :, k].astype(float) - 0.5
            rhs = 0.0
            if mode == "corrected":
                coef[k] -= J
                rhs = -float(J)
            m.add_constraint([(int(x[j]), coef[j]) for j in range(J)], ">=", rhs, f"isl_deg_{t + 1}_{k + 1}")
    m.set_objective("min", [(int(x[j]), data.costs[j]) for j in range(J)])
    return CompiledProblem(m, spec, data, {"x": x})


def build_z_mrt(data: CoverageData, z, cyclic: bool = False, beta: float = 0.5, tight_big_m: bool = False,
                spec: Optional[FormulationSpec] = None) -> CompiledProblem:
    T, J, P = data.shape
    z = _per_target(z, P)
    if np.any(z < 0) or np.any(z > T):
        raise FormulationError(f"z_p must lie in [0, T={T}]")
    spec = spec or FormulationSpec(Kind.ZMRT, z=tuple(z), cyclic=cyclic, beta=beta, tight_big_m=tight_big_m)
    m = _new_model(Kind.ZMRT, data)
    x = _add_x(m, J)
    y = _add_grid(m, "y", (T, P), BINARY)
    big_m = _add_indicator_rows(m, data, x, y, beta, tight_big_m)
    w, u = _add_gap_counters(m, T, P, y, cyclic)
    for t in range(T):
        for p in range(P):
            m.add_constraint([(int(w[t, p]), 1.0)], "<=", float(z[p]), f"mrt_cap_{t + 1}_{p + 1}")
    m.set_objective("min", [(int(x[j]), data.costs[j]) for j in range(J)])
    ids = {"x": x, "y": y, "w": w}
    if u is not None:
        ids["u"] = u
    return CompiledProblem(m, spec, data, ids, big_m)


def build_gamma_art(data: CoverageData, gamma, cyclic: bool = False, beta: float = 0.5, tight_big_m: bool = False,
                    spec: Optional[FormulationSpec] = None) -> CompiledProblem:
    T, J, P = data.shape
    gamma = _per_target(gamma, P)
    if np.any(gamma < 0):
        raise FormulationError("gamma_p must be >= 0")
    spec = spec or FormulationSpec(Kind.GAMMA_ART, gamma=tuple(gamma), cyclic=cyclic, beta=beta,
                                   tight_big_m=tight_big_m)
    m = _new_model(Kind.GAMMA_ART, data)
    x = _add_x(m, J)
    y = _add_grid(m, "y", (T, P), BINARY)
    big_m = _add_indicator_rows(m, data, x, y, beta, tight_big_m)
    i, alpha, a = _add_art_block(m, T, P, y, cyclic)
    for p in range(P):
        m.add_constraint([(int(alpha[p]), 1.0)], "<=", float(gamma[p]), f"art_cap_{p + 1}")
    m.set_objective("min", [(int(x[j]), data.costs[j]) for j in range(J)])
    return CompiledProblem(m, spec, data, {"x": x, "y": y, "i": i, "alpha": alpha, "a": a}, big_m)


def build(spec: FormulationSpec, data: CoverageData) -> CompiledProblem:
    """Dispatch on ``spec.kind``."""
    k = spec.kind
    if k == Kind.SCLP:
        return build_sclp(data, spec)
    if k == Kind.PSCLP:
        return build_psclp(data, spec.D, spec.D_mean, spec)
    if k == Kind.MCLP:
        return build_mclp(data, spec.N, spec.rewards, spec.budget, spec)
    if k == Kind.MMRT:
        return build_mmrt(data, spec.N, spec.cyclic, spec.sum_of_mrts, spec.beta, spec.tight_big_m, spec)
    if k == Kind.MART:
        return build_mart(data, spec.N, spec.cyclic, spec.beta, spec.tight_big_m, spec)
    if k == Kind.MAX_ISL:
        return build_max_isl(data, spec.isl_mode, spec)
    if k == Kind.ZMRT:
        return build_z_mrt(data, spec.z, spec.cyclic, spec.beta, spec.tight_big_m, spec)
    if k == Kind.GAMMA_ART:
        return build_gamma_art(data, spec.gamma, spec.cyclic, spec.beta, spec.tight_big_m, spec)
    raise FormulationError(f"unknown formulation {k}")


# --------------------------------------------------------------------------
# decoding


def decode(problem: CompiledProblem, values, reported_objective: Optional[float] = None,
           tol: float = 1e-6) -> Decoded:
    values = np.asarray(values, dtype=float)
    if values.shape != (problem.model.num_vars,):
        raise FormulationError(f"assignment has {values.size} values, model has {problem.model.num_vars}")
    obj = problem.model.objective_value(values)
    if reported_objective is not None and abs(obj - reported_objective) > tol * max(1.0, abs(obj)):
        raise FormulationError(f"recomputed objective {obj} differs from reported {reported_objective}")

    def grab(sym):
        arr = problem.ids.get(sym)
        return None if arr is None else values[arr]

    x = np.rint(values[problem.ids["x"]]).astype(int)
    return Decoded(x=x, objective=obj, y=grab("y"), w=grab("w"), Z=grab("Z"), u=grab("u"), i=grab("i"),
                   alpha=grab("alpha"), a=grab("a"))


def objective_in_time(problem: CompiledProblem, objective: float) -> Optional[float]:
    """Objective in seconds for the revisit-time formulations, else None."""
    if problem.kind in (Kind.MMRT, Kind.MART):
        return objective * problem.data.dt
    return None

"""Solver-agnostic MILP model, CPLEX-LP text export and a small LP reader.

Variable ids are 0-based insertion indices. Terms are ``(var_id, coef)``
pairs; zero coefficients are dropped when a constraint or objective is added.
"""
from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass, field
from typing import Iterable, Optional

import numpy as np
import scipy.sparse as sp

BINARY = "binary"
INTEGER = "integer"
CONTINUOUS = "continuous"
SENSES = ("<=", ">=", "=")

_NAME_RE = re.compile(r"^[A-Za-z_][A-Za-z0-9_.]*$")


class ModelError(ValueError):
    pass


@dataclass(frozen=True)
class Variable:
    id: int
    name: str
    domain: str
    lo: float
    hi: float

    @property
    def is_integer(self) -> bool:
        return self.domain in (BINARY, INTEGER)


@dataclass(frozen=True)
class LinearConstraint:
    name: str
    terms: tuple  # ((var_id, coef), ...)
    sense: str
    rhs: float


@dataclass(frozen=True)
class Objective:
    sense: str = "min"
    terms: tuple = ()


@dataclass
class ModelArrays:
    """Dense/CSR view of a model for the numeric solvers."""

    c: np.ndarray
    A: sp.csr_matrix
    row_lo: np.ndarray
    row_hi: np.ndarray
    lo: np.ndarray
    hi: np.ndarray
    is_int: np.ndarray
    maximize: bool


class MilpModel:
    def __init__(self, name: str = "model", metadata: Optional[dict] = None):
        self.name = name
        self.variables: list[Variable] = []
        self.constraints: list[LinearConstraint] = []
        self.objective = Objective()
        self.metadata: dict = dict(metadata or {})
        self._names: dict[str, int] = {}
        self._row_names: set[str] = set()
        self._arrays: Optional[ModelArrays] = None

    # ------------------------------------------------------------------ builder

    def add_variable(self, name: str, domain: str = BINARY, lo: float = 0.0, hi: float = 1.0) -> int:
        if name in self._names:
            raise ModelError(f"duplicate variable name {name!r}")
        if not _NAME_RE.match(name):
            raise ModelError(f"variable name {name!r} is not LP-safe")
        if domain not in (BINARY, INTEGER, CONTINUOUS):
            raise ModelError(f"unknown domain {domain!r}")
        if domain == BINARY:
            lo, hi = 0.0, 1.0
        lo, hi = float(lo), float(hi)
        if lo > hi:
            raise ModelError(f"variable {name!r}: lower bound {lo} exceeds upper bound {hi}")
        vid = len(self.variables)
        self.variables.append(Variable(vid, name, domain, lo, hi))
        self._names[name] = vid
        self._arrays = None
        return vid

    def binary(self, name: str) -> int:
        return self.add_variable(name, BINARY)

    def integer(self, name: str, lo: float, hi: float) -> int:
        return self.add_variable(name, INTEGER, lo, hi)

    def continuous(self, name: str, lo: float, hi: float) -> int:
        return self.add_variable(name, CONTINUOUS, lo, hi)

    def _clean_terms(self, terms, where: str) -> tuple:
        if isinstance(terms, dict):
            terms = terms.items()
        out = []
        seen = set()
        n = len(self.variables)
        for vid, coef in terms:
            vid = int(vid)
            if not 0 <= vid < n:
                raise ModelError(f"{where}: unknown variable id {vid}")
            if vid in seen:
                raise ModelError(f"{where}: variable id {vid} appears twice")
            seen.add(vid)
            coef = float(coef)
            if not math.isfinite(coef):
                raise ModelError(f"{where}: non-finite coefficient for variable {vid}")
            if coef != 0.0:
                out.append((vid, coef))
        return tuple(out)

    def add_constraint(self, terms, sense: str, rhs: float, name: Optional[str] = None) -> int:
        if sense == "==":
            sense = "="
        if sense not in SENSES:
            raise ModelError(f"unknown sense {sense!r}")
        cid = len(self.constraints)
        name = name or f"c{cid + 1}"
        if name in self._row_names:
            raise ModelError(f"duplicate constraint name {name!r}")
        if not _NAME_RE.match(name):
            raise ModelError(f"constraint name {name!r} is not LP-safe")
        self.constraints.append(LinearConstraint(name, self._clean_terms(terms, name), sense, float(rhs)))
        self._row_names.add(name)
        self._arrays = None
        return cid

    def set_objective(self, sense: str, terms) -> None:
        """Replace the objective (calling twice keeps only the second)."""
        if sense not in ("min", "max"):
            raise ModelError(f"objective sense must be 'min' or 'max', got {sense!r}")
        self.objective = Objective(sense, self._clean_terms(terms, "objective"))
        self._arrays = None

    # ------------------------------------------------------------------ queries

    def var_id(self, name: str) -> int:
        return self._names[name]

    @property
    def num_vars(self) -> int:
        return len(self.variables)

    @property
    def num_constraints(self) -> int:
        return len(self.constraints)

    def arrays(self) -> ModelArrays:
        if self._arrays is None:
            n, m = len(self.variables), len(self.constraints)
            c = np.zeros(n)
            for vid, coef in self.objective.terms:
                c[vid] = coef
            rows, cols, vals = [], [], []
            row_lo = np.full(m, -np.inf)
            row_hi = np.full(m, np.inf)
            for i, con in enumerate(self.constraints):
                for vid, coef in con.terms:
                    rows.append(i)
                    cols.append(vid)
                    vals.append(coef)
                if con.sense in ("<=", "="):
                    row_hi[i] = con.rhs
                if con.sense in (">=", "="):
                    row_lo[i] = con.rhs
            A = sp.csr_matrix((vals, (rows, cols)), shape=(m, n))
            self._arrays = ModelArrays(
                c=c,
                A=A,
                row_lo=row_lo,
                row_hi=row_hi,
                lo=np.array([v.lo for v in self.variables]),
                hi=np.array([v.hi for v in self.variables]),
                is_int=np.array([v.is_integer for v in self.variables], dtype=bool),
                maximize=self.objective.sense == "max",
            )
        return self._arrays

    def objective_value(self, values) -> float:
        values = np.asarray(values, dtype=float)
        return float(sum(coef * values[vid] for vid, coef in self.objective.terms))

    def violations(self, values, tol: float = 1e-6) -> list[tuple[str, float]]:
        """(name, amount) for every bound, integrality or row violated beyond ``tol``."""
        values = np.asarray(values, dtype=float)
        out = []
        for v in self.variables:
            x = values[v.id]
            if x < v.lo - tol or x > v.hi + tol:
                out.append((f"bound:{v.name}", max(v.lo - x, x - v.hi)))
            if v.is_integer and abs(x - round(x)) > tol:
                out.append((f"integrality:{v.name}", abs(x - round(x))))
        ar = self.arrays()
        act = ar.A @ values
        lo_viol = ar.row_lo - act
        hi_viol = act - ar.row_hi
        bad = np.flatnonzero((lo_viol > tol) | (hi_viol > tol))
        for i in bad:
            out.append((self.constraints[i].name, float(max(lo_viol[i], hi_viol[i]))))
        return out

    def __eq__(self, other) -> bool:
        if not isinstance(other, MilpModel):
            return NotImplemented
        return (self.variables == other.variables and self.constraints == other.constraints
                and self.objective == other.objective and self.metadata == other.metadata)

    __hash__ = None

    # ------------------------------------------------------------------ json

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "metadata": self.metadata,
            "variables": [{"name": v.name, "domain": v.domain, "lo": v.lo, "hi": v.hi} for v in self.variables],
            "objective": {"sense": self.objective.sense, "terms": [list(t) for t in self.objective.terms]},
            "constraints": [
                {"name": c.name, "sense": c.sense, "rhs": c.rhs, "terms": [list(t) for t in c.terms]}
                for c in self.constraints
            ],
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "MilpModel":
        m = cls(doc.get("name", "model"), doc.get("metadata"))
        for v in doc["variables"]:
            m.add_variable(v["name"], v["domain"], v["lo"], v["hi"])
        for c in doc["constraints"]:
            m.add_constraint(c["terms"], c["sense"], c["rhs"], c["name"])
        m.set_objective(doc["objective"]["sense"], doc["objective"]["terms"])
        return m

    def dump_json(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh, indent=1)


# --------------------------------------------------------------------------
# LP format

_LINE_WIDTH = 200


def _num(x: float) -> str:
    if math.isinf(x):
        return "+inf" if x > 0 else "-inf"
    s = f"{x:.17g}"
    return "0" if s == "-0" else s


def _expr(terms: Iterable[tuple[int, float]], names: list[str]) -> list[str]:
    parts = []
    for k, (vid, coef) in enumerate(terms):
        sign = "-" if coef < 0 else "+"
        mag = _num(abs(coef))
        if k == 0:
            parts.append(f"{'-' if coef < 0 else ''}{mag} {names[vid]}")
        else:
            parts.append(f"{sign} {mag} {names[vid]}")
    return parts


def _wrap(head: str, parts: list[str]) -> list[str]:
    lines, cur = [], head
    for p in parts:
        if len(cur) + 1 + len(p) > _LINE_WIDTH and cur.strip():
            lines.append(cur)
            cur = "   " + p
        else:
            cur = f"{cur} {p}" if cur else p
    lines.append(cur)
    return lines


def export_lp(model: MilpModel) -> str:
    """CPLEX LP text. Deterministic: variables and rows in id order.

    An empty objective is written as ``obj: 0 <first variable>``; the reader
    drops zero terms so it comes back empty. Every variable appears in the
    Bounds section in id order, which fixes ids on re-read.
    """
    names = [v.name for v in model.variables]
    out = [f"\\ Problem: {model.name}"]
    for key in sorted(model.metadata):
        out.append(f"\\ meta {key}: {json.dumps(model.metadata[key])}")
    out.append("Maximize" if model.objective.sense == "max" else "Minimize")
    terms = _expr(model.objective.terms, names)
    if not terms:
        terms = [f"0 {names[0]}"] if names else []
    out.extend(_wrap(" obj:", terms))
    out.append("Subject To")
    for con in model.constraints:
        parts = _expr(con.terms, names) or ([f"0 {names[0]}"] if names else [])
        op = {"<=": "<=", ">=": ">=", "=": "="}[con.sense]
        out.extend(_wrap(f" {con.name}:", parts + [op, _num(con.rhs)]))
    out.append("Bounds")
    for v in model.variables:
        if math.isinf(v.lo) and math.isinf(v.hi):
            out.append(f" {v.name} free")
        else:
            out.append(f" {_num(v.lo)} <= {v.name} <= {_num(v.hi)}")
    gens = [v.name for v in model.variables if v.domain == INTEGER]
    bins = [v.name for v in model.variables if v.domain == BINARY]
    if gens:
        out.append("Generals")
        out.extend(_wrap("", gens))
    if bins:
        out.append("Binaries")
        out.extend(_wrap("", bins))
    out.append("End")
    return "\n".join(out) + "\n"


_SECTIONS = {
    "minimize": "min", "minimum": "min", "min": "min",
    "maximize": "max", "maximum": "max", "max": "max",
    "subject to": "st", "such that": "st", "st": "st", "s.t.": "st",
    "bounds": "bounds", "bound": "bounds",
    "generals": "gen", "general": "gen", "gen": "gen",
    "binaries": "bin", "binary": "bin", "bin": "bin",
    "end": "end",
}


def _parse_float(tok: str) -> float:
    t = tok.lower()
    if t in ("inf", "+inf", "infinity", "+infinity"):
        return math.inf
    if t in ("-inf", "-infinity"):
        return -math.inf
    return float(tok)


def _parse_linear(tokens: list[str]) -> list[tuple[float, str]]:
    """Parse ``[+|-] [coef] name ...`` into (coef, name) pairs."""
    out = []
    k = 0
    while k < len(tokens):
        sign = 1.0
        while tokens[k] in "+-":
            if tokens[k] == "-":
                sign = -sign
            k += 1
        coef = 1.0
        try:
            coef = float(tokens[k])
            k += 1
        except ValueError:
            pass
        out.append((sign * coef, tokens[k]))
        k += 1
    return out


def read_lp(text: str) -> MilpModel:
    """Reader for the subset of LP syntax produced by :func:`export_lp`."""
    meta = {}
    name = "model"
    sections: dict[str, list[str]] = {k: [] for k in ("min", "max", "st", "bounds", "gen", "bin")}
    current = None
    for raw in text.splitlines():
        line = raw.strip()
        if line.startswith("\\"):
            body = line[1:].strip()
            if body.startswith("Problem:"):
                name = body.split(":", 1)[1].strip()
            elif body.startswith("meta "):
                key, val = body[5:].split(":", 1)
                meta[key.strip()] = json.loads(val)
            continue
        if not line:
            continue
        low = line.lower()
        if low in _SECTIONS:
            current = _SECTIONS[low]
            if current == "end":
                break
            continue
        if current is None:
            raise ModelError(f"LP text before first section: {line!r}")
        if raw.startswith("   ") and sections[current]:
            sections[current][-1] += " " + line
        else:
            sections[current].append(line)

    sense = "max" if sections["max"] else "min"
    model = MilpModel(name, meta)
    gens = set(" ".join(sections["gen"]).split())
    bins = set(" ".join(sections["bin"]).split())
    for line in sections["bounds"]:
        tok = line.split()
        if len(tok) == 2 and tok[1].lower() == "free":
            vname, lo, hi = tok[0], -math.inf, math.inf
        elif len(tok) == 5 and tok[1] == "<=" and tok[3] == "<=":
            vname, lo, hi = tok[2], _parse_float(tok[0]), _parse_float(tok[4])
        else:
            raise ModelError(f"unsupported bound line {line!r}")
        domain = BINARY if vname in bins else INTEGER if vname in gens else CONTINUOUS
        model.add_variable(vname, domain, lo, hi)

    def terms_of(tokens):
        out = []
        for coef, vname in _parse_linear(tokens):
            if vname not in model._names:
                raise ModelError(f"variable {vname!r} missing from Bounds section")
            out.append((model.var_id(vname), coef))
        return out

    obj_lines = sections[sense]
    if obj_lines:
        body = " ".join(obj_lines)
        if ":" in body:
            body = body.split(":", 1)[1]
        model.set_objective(sense, terms_of(body.split()))
    else:
        model.set_objective(sense, [])
    for line in sections["st"]:
        label, body = line.split(":", 1)
        tok = body.split()
        op_at = next(k for k, t in enumerate(tok) if t in ("<=", ">=", "=", "=<", "=>"))
        op = {"=<": "<=", "=>": ">="}.get(tok[op_at], tok[op_at])
        model.add_constraint(terms_of(tok[:op_at]), op, _parse_float(tok[op_at + 1]), label.strip())
    return model


# --------------------------------------------------------------------------
# external solution files: "<name> <value>" per line


def write_solution_file(path, model: MilpModel, values) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for v in model.variables:
            fh.write(f"{v.name} {_num(float(values[v.id]))}\n")


def read_solution_file(path, model: MilpModel) -> np.ndarray:
    values = np.full(model.num_vars, np.nan)
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            if len(parts) != 2:
                raise ModelError(f"{path}:{lineno}: expected '<name> <value>'")
            if parts[0] not in model._names:
                raise ModelError(f"{path}:{lineno}: unknown variable {parts[0]!r}")
            values[model.var_id(parts[0])] = float(parts[1])
    missing = [model.variables[i].name for i in np.flatnonzero(np.isnan(values))]
    if missing:
        raise ModelError(f"{path}: no value for {len(missing)} variables, e.g. {missing[:3]}")
    return values

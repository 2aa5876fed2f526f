"""Scenario to compiled problem: the glue shared by the CLI and the scripts."""
from __future__ import annotations

import copy
import json
from pathlib import Path
from typing import Optional

from .formulations import CompiledProblem, CoverageData, build
from .geometry import IslGeometry
from .scenario import Kind, Scenario, scenario_from_dict
from .solver import SolveOptions
from .visibility import build_isl, build_visibility


def parse_param(text: str) -> tuple[str, object]:
    """``k=v`` with ``v`` read as JSON when possible, else kept as a string."""
    if "=" not in text:
        raise ValueError(f"--param expects k=v, got {text!r}")
    key, raw = text.split("=", 1)
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    return key.strip(), value


def with_overrides(sc: Scenario, kind: Optional[str] = None, params: Optional[dict] = None,
                   base: Path = Path(".")) -> Scenario:
    """Re-validate the scenario document with a different formulation kind or parameters."""
    if kind is None and not params:
        return sc
    doc = copy.deepcopy(sc.source)
    form = doc.setdefault("formulation", {})
    if kind is not None:
        form["kind"] = Kind.parse(kind).value
    form.setdefault("params", {}).update(params or {})
    return scenario_from_dict(doc, base)


def needs_isl(sc: Scenario) -> bool:
    return sc.formulation.kind == Kind.MAX_ISL


def coverage_data(sc: Scenario, V=None, W=None) -> CoverageData:
    """Tensors and parameters for ``sc``; precomputed V or W are used as given."""
    if V is None:
        V = build_visibility(sc.slots, sc.targets, sc.grid)
    if W is None and needs_isl(sc):
        geo = IslGeometry(sc.formulation.epsilon, sc.formulation.isl_max_range)
        W = build_isl(sc.slots, sc.grid, geo)
    return CoverageData(V, sc.requirements(), sc.costs(), W, sc.grid.dt)


def compile_scenario(sc: Scenario, V=None, W=None) -> CompiledProblem:
    problem = build(sc.formulation, coverage_data(sc, V, W))
    problem.model.metadata["scenario_sha256"] = sc.digest()
    return problem


def solve_options(sc: Scenario, seed: Optional[int] = None, time_limit: Optional[float] = None) -> SolveOptions:
    s = sc.solver
    return SolveOptions(time_limit=s.time_limit if time_limit is None else time_limit, abs_gap=s.abs_gap,
                        node_limit=int(s.node_limit), branching=s.branching, seed=s.seed if seed is None else seed)

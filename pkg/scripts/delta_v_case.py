"""Continuous coverage of Seoul from 2000 km slots, priced by deployment
delta-V from a 500 km parking orbit, against the unit-cost optimum.

    python scripts/delta_v_case.py --time-limit 900
"""
from __future__ import annotations

import argparse
import json
from pathlib import Path

import numpy as np

from common import ROOT, update_summary
from orbcover.formulations import CoverageData, build_sclp, decode
from orbcover.scenario import load_scenario
from orbcover.solver import SolveOptions, solve_highs, verify
from orbcover.visibility import build_visibility


def solve_with_costs(V, r, costs, time_limit):
    problem = build_sclp(CoverageData(V, r, costs))
    sol = solve_highs(problem.model, SolveOptions(time_limit=time_limit))
    entry = {"status": sol.status, "objective": sol.objective, "bound": sol.bound,
             "wall_time_s": round(sol.wall_time, 1)}
    if sol.values is not None:
        x = decode(problem, sol.values).x
        entry.update(selected=[int(j) for j in np.flatnonzero(x)], num_selected=int(x.sum()),
                     verified=verify(problem, sol).ok)
    return entry


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--scenario", default=str(ROOT / "scenarios/seoul_delta_v.json"))
    ap.add_argument("--time-limit", type=float, default=900.0)
    ap.add_argument("--out", default=str(ROOT / "results/delta_v"))
    args = ap.parse_args()

    path = Path(args.scenario)
    sc = load_scenario(path)
    V = build_visibility(sc.slots, sc.targets, sc.grid)
    r, dv = sc.requirements(), sc.costs()
    by_dv = solve_with_costs(V, r, dv, args.time_limit)
    by_count = solve_with_costs(V, r, np.ones(sc.J), args.time_limit)
    for entry in (by_dv, by_count):
        if "selected" in entry:
            entry["delta_v_km_s"] = round(float(dv[entry["selected"]].sum()), 4)
    increase = None
    if "delta_v_km_s" in by_dv and "delta_v_km_s" in by_count:
        increase = round(100.0 * (by_count["delta_v_km_s"] / by_dv["delta_v_km_s"] - 1.0), 2)
    doc = update_summary(Path(args.out), path, sc, "", {}, delta_v=by_dv, unit=by_count,
                         percent_increase_unit_vs_delta_v=increase)
    print(json.dumps({k: doc[k] for k in ("delta_v", "unit", "percent_increase_unit_vs_delta_v")}, default=str)[:600])


if __name__ == "__main__":
    main()

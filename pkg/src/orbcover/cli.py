"""Command line front end: ``orbcover visibility|solve|report``.

Exit codes: 0 optimal (or success), 2 infeasible, 3 time limit, 1 error.
All angles in output files are degrees and all times are seconds.
"""
from __future__ import annotations

import argparse
import contextlib
import csv
import hashlib
import json
import os
import sys
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Optional

import numpy as np

from . import metrics
from .formulations import CompiledProblem, decode, objective_in_time
from .model_ir import export_lp, read_solution_file
from .pipeline import compile_scenario, needs_isl, parse_param, solve_options, with_overrides
from .scenario import Kind, Scenario, ScenarioError, load_scenario
from .solver import (BACKENDS, INFEASIBLE, OPTIMAL, STRATEGIES, TIME_LIMIT, Solution, SolverError, solve,
                     verify)
from .visibility import build_isl, build_visibility, read_sparse_csv, reference_profile, write_sparse_csv
from .geometry import IslGeometry

EXIT_OK, EXIT_ERROR, EXIT_INFEASIBLE, EXIT_TIME_LIMIT = 0, 1, 2, 3
STATUS_EXIT = {OPTIMAL: EXIT_OK, INFEASIBLE: EXIT_INFEASIBLE, TIME_LIMIT: EXIT_TIME_LIMIT}


class CliError(RuntimeError):
    pass


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds").replace("+00:00", "Z")


def file_sha256(path: Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


@dataclass
class RunManifest:
    command: str
    scenario_sha256: str
    formulation: str
    solver_options: dict
    timestamps: dict = field(default_factory=dict)
    outputs: list = field(default_factory=list)  # [{"path", "sha256", "bytes"}]
    notes: list = field(default_factory=list)

    def record(self, path: Path, out_dir: Path) -> None:
        path = Path(path)
        self.outputs.append({"path": str(path.relative_to(out_dir)), "sha256": file_sha256(path),
                             "bytes": path.stat().st_size})

    def write(self, out_dir: Path) -> Path:
        self.timestamps["finished_utc"] = _now()
        path = out_dir / f"manifest.{self.command}.json"
        path.write_text(json.dumps(asdict(self), indent=2, sort_keys=True) + "\n", encoding="utf-8")
        return path


def _write_json(path: Path, doc) -> Path:
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path


def _threads() -> Optional[int]:
    raw = os.environ.get("ORBCOVER_THREADS")
    if not raw:
        return None
    try:
        n = int(raw)
    except ValueError:
        raise CliError(f"ORBCOVER_THREADS must be a positive integer, got {raw!r}") from None
    if n < 1:
        raise CliError(f"ORBCOVER_THREADS must be a positive integer, got {raw!r}")
    return n


def _load(args) -> Scenario:
    sc = load_scenario(args.scenario)
    params = dict(parse_param(p) for p in (args.param or []))
    return with_overrides(sc, getattr(args, "formulation", None), params, Path(args.scenario).parent)


def _tensors(args, sc: Scenario):
    """V and W from --visibility / --isl-tensor files when given, else None."""
    V = W = None
    if getattr(args, "visibility", None):
        V = read_sparse_csv(args.visibility)
        if V.shape != (sc.T, sc.J, sc.P):
            raise CliError(f"{args.visibility}: shape {V.shape} != (T, J, P) = {(sc.T, sc.J, sc.P)}")
    if getattr(args, "isl_tensor", None):
        W = read_sparse_csv(args.isl_tensor)
        if W.shape != (sc.T, sc.J, sc.J):
            raise CliError(f"{args.isl_tensor}: shape {W.shape} != (T, J, J) = {(sc.T, sc.J, sc.J)}")
    return V, W


def _manifest(cmd: str, sc: Scenario, opts: Optional[dict] = None) -> RunManifest:
    return RunManifest(cmd, sc.digest(), sc.formulation.kind.value, opts or {}, {"started_utc": _now()})


# --------------------------------------------------------------------------
# visibility


def cmd_visibility(args) -> int:
    sc = _load(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    man = _manifest("visibility", sc)
    V = build_visibility(sc.slots, sc.targets, sc.grid)
    summary = {"T": sc.T, "J": sc.J, "P": sc.P, "V_nonzeros": int(V.sum()),
               "visible_steps_per_target": {t.id: int(V[:, :, p].any(axis=1).sum()) for p, t in enumerate(sc.targets)}}
    man.record(_sparse(out / "V.csv", V), out)
    if args.isl or needs_isl(sc):
        W = build_isl(sc.slots, sc.grid, IslGeometry(sc.formulation.epsilon, sc.formulation.isl_max_range))
        summary["W_nonzeros"] = int(W.sum())
        man.record(_sparse(out / "W.csv", W, ("t", "j", "k", "value")), out)
    man.record(_write_json(out / "visibility_summary.json", summary), out)
    man.write(out)
    print(json.dumps(summary))
    return EXIT_OK


def _sparse(path: Path, tensor, header=("t", "j", "p", "value")) -> Path:
    write_sparse_csv(path, tensor, header)
    return path


# --------------------------------------------------------------------------
# solve


def _solution_doc(sc: Scenario, problem: CompiledProblem, sol: Solution) -> dict:
    doc = {
        "scenario_sha256": sc.digest(),
        "formulation": problem.kind.value,
        "status": sol.status,
        "backend": sol.backend,
        "objective": sol.objective,
        "bound": sol.bound,
        "gap": sol.gap,
        "node_count": sol.node_count,
    }
    if sol.values is not None:
        dec = decode(problem, sol.values, sol.objective)
        doc["objective_time_s"] = objective_in_time(problem, dec.objective)
        doc["x"] = [int(v) for v in dec.x]
        doc["selected_slots"] = [sc.slots[j].id for j in dec.selected]
        doc["num_selected"] = int(dec.x.sum())
        doc["values"] = {v.name: float(sol.values[v.id]) for v in problem.model.variables}
    return doc


def cmd_solve(args) -> int:
    sc = _load(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    opts = solve_options(sc, args.seed, args.time_limit)
    backend = args.backend or sc.solver.backend
    strategy = args.strategy or sc.solver.strategy
    man = _manifest("solve", sc, {**asdict(opts), "backend": backend, "strategy": strategy})
    V, W = _tensors(args, sc)
    problem = compile_scenario(sc, V, W)
    if problem.big_m > sc.T:
        man.notes.append(f"indicator big-M raised from T={sc.T} to {problem.big_m:g} to keep the indicator exact")

    if args.export_lp:
        lp_path = out / "model.lp"
        lp_path.write_text(export_lp(problem.model), encoding="utf-8")
        man.record(lp_path, out)
        if args.export_lp == "only":
            man.write(out)
            print(f"wrote {lp_path}")
            return EXIT_OK

    if args.solution_file:
        values = read_solution_file(args.solution_file, problem.model)
        sol = Solution("external", values, problem.model.objective_value(values), None, 0, 0.0, "external")
    else:
        sol = solve(problem, opts, backend, strategy)
    man.timestamps["solve_wall_s"] = round(sol.wall_time, 3)

    report = verify(problem, sol) if sol.values is not None else None
    doc = _solution_doc(sc, problem, sol)
    if report is not None:
        doc["verified"] = report.ok
        man.record(_write_json(out / "verify.json", report.to_dict()), out)
    man.record(_write_json(out / "solution.json", doc), out)
    man.write(out)

    summary = {k: doc.get(k) for k in ("status", "objective", "objective_time_s", "num_selected", "gap")}
    print(json.dumps(summary))
    if report is not None and not report.ok:
        print(f"verification failed: {report.violations[:5]} {report.oracle[:5]}", file=sys.stderr)
        return EXIT_ERROR
    if sol.status == "external":
        return EXIT_OK
    return STATUS_EXIT[sol.status]


# --------------------------------------------------------------------------
# report


def _timeline_csv(path: Path, sc: Scenario, rep: metrics.CoverageReport) -> Path:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", "p", "target", "time_s", "b_tp", "r_tp", "y_tp"])
        r = sc.requirements()
        for t in range(sc.T):
            for p, tg in enumerate(sc.targets):
                w.writerow([t + 1, p + 1, tg.id, repr(t * sc.grid.dt), int(rep.b[t, p]), int(r[t, p]),
                            int(rep.y[t, p])])
    return path


def _pattern_csv(path: Path, sc: Scenario, x) -> Path:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["j", "raan_deg", "aol_deg", "selected", "cost", "slot_id"])
        for j, s in enumerate(sc.slots):
            w.writerow([j + 1, repr(s.raan), repr(s.arg_latitude), int(x[j]), repr(s.cost), s.id])
    return path


def _profile_csv(path: Path, sc: Scenario, V) -> Path:
    v = reference_profile(V, 0)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", "p", "v_tp"])
        for t in range(sc.T):
            for p in range(sc.P):
                w.writerow([t + 1, p + 1, int(v[t, p])])
    return path


def _resolve_slot(sc: Scenario, key: str) -> int:
    ids = [s.id for s in sc.slots]
    if key in ids:
        return ids.index(key)
    try:
        j = int(key)
    except ValueError:
        raise CliError(f"--drop {key!r} matches no slot id") from None
    if not 1 <= j <= sc.J:
        raise CliError(f"--drop {j} outside 1..{sc.J}")
    return j - 1


def _metrics_doc(rep: metrics.CoverageReport, sc: Scenario, extra: Optional[dict] = None) -> dict:
    doc = rep.to_dict()
    for t, tg in zip(doc["targets"], sc.targets):
        t["target_id"] = tg.id
    doc.update(extra or {})
    return doc


def cmd_report(args) -> int:
    sc = _load(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    sol_path = Path(args.solution) if args.solution else out / "solution.json"
    sol = json.loads(sol_path.read_text(encoding="utf-8"))
    if sol.get("scenario_sha256") != sc.digest():
        raise CliError(f"{sol_path} was produced for scenario {sol.get('scenario_sha256')}, not {sc.digest()}")
    if "x" not in sol:
        raise CliError(f"{sol_path} has no assignment (status {sol.get('status')})")
    x = np.array(sol["x"], dtype=int)
    man = _manifest("report", sc)
    V, W = _tensors(args, sc)
    if V is None:
        V = build_visibility(sc.slots, sc.targets, sc.grid)
    r = sc.requirements()
    cyclic = sc.formulation.cyclic
    rep = metrics.analyze(V, x, r, cyclic, sc.grid.dt)
    extra = {"formulation": sol.get("formulation"), "solver_objective": sol.get("objective"),
             "num_selected": int(x.sum())}
    man.record(_timeline_csv(out / "timeline.csv", sc, rep), out)
    man.record(_pattern_csv(out / "pattern.csv", sc, x), out)
    man.record(_profile_csv(out / "reference_profile.csv", sc, V), out)
    man.record(_write_json(out / "metrics.json", _metrics_doc(rep, sc, extra)), out)
    metrics.report_csv(rep, out / "metrics.csv", [t.id for t in sc.targets])
    man.record(out / "metrics.csv", out)

    if args.drop is not None:
        j = _resolve_slot(sc, args.drop)
        if W is None and needs_isl(sc):
            W = build_isl(sc.slots, sc.grid, IslGeometry(sc.formulation.epsilon, sc.formulation.isl_max_range))
        fr = metrics.failure_analysis(V, W, x, j, r, cyclic, sc.grid.dt)
        tag = f"drop_{args.drop}"
        drop_extra = {**extra, "dropped_slot": sc.slots[j].id, "num_selected": int(fr.x.sum()),
                      "always_connected": fr.always_connected,
                      "min_b": int(fr.coverage.b.min()) if fr.coverage.b.size else 0}
        if fr.audits is not None:
            drop_extra["isl_audits"] = fr.audits
        man.record(_timeline_csv(out / f"timeline.{tag}.csv", sc, fr.coverage), out)
        man.record(_write_json(out / f"metrics.{tag}.json", _metrics_doc(fr.coverage, sc, drop_extra)), out)
    man.write(out)
    print(json.dumps({"mrt_steps": rep.mrt_steps, "art_steps_sum": rep.art_steps_sum,
                      "percent_coverage_mean": rep.percent_coverage}))
    return EXIT_OK


# --------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="orbcover", description="Optimal constellation design over orbital slots.")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--scenario", required=True, help="scenario JSON file")
        p.add_argument("--param", action="append", metavar="K=V", help="override a formulation parameter")
        p.add_argument("--out", default="out", help="output directory (default: out)")

    def tensor_flags(p):
        p.add_argument("--visibility", help="sparse V CSV to use instead of the geometry")
        p.add_argument("--isl-tensor", help="sparse W CSV to use instead of the geometry")

    p = sub.add_parser("visibility", help="build V (and W) as sparse CSV")
    common(p)
    p.add_argument("--isl", action="store_true", help="also write the ISL tensor W")
    p.set_defaults(func=cmd_visibility)

    p = sub.add_parser("solve", help="build, solve and verify the formulation")
    common(p)
    p.add_argument("--formulation", help=f"override the kind ({', '.join(k.value for k in Kind)})")
    p.add_argument("--export-lp", nargs="?", const="also", choices=["also", "only"],
                   help="write model.lp; 'only' skips solving")
    p.add_argument("--solution-file", help="verify an external '<name> <value>' assignment instead of solving")
    p.add_argument("--backend", choices=BACKENDS, help="solver backend (default from the scenario)")
    p.add_argument("--strategy", choices=STRATEGIES,
                   help="'decomposed' solves MMRT and single-target MART as sequences of smaller MILPs")
    tensor_flags(p)
    p.add_argument("--seed", type=int, help="tie-breaking seed")
    p.add_argument("--time-limit", type=float, help="seconds")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("report", help="metrics, timeline and pattern data for a solution")
    common(p)
    p.add_argument("--formulation", help="kind used when solving, if overridden")
    p.add_argument("--solution", help="solution.json (default: <out>/solution.json)")
    tensor_flags(p)
    p.add_argument("--drop", help="also report with this slot (id or 1-based index) removed")
    p.set_defaults(func=cmd_report)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        n = _threads()
        limiter = contextlib.nullcontext()
        if n is not None:
            from threadpoolctl import threadpool_limits

            limiter = threadpool_limits(n)
        with limiter:
            return args.func(args)
    except (ScenarioError, SolverError, CliError, ValueError, OSError) as exc:
        print(f"orbcover: error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())

"""Helpers shared by the case-study scripts: solve one configuration, verify it,
and keep a JSON summary keyed by run name."""
from __future__ import annotations

import hashlib
import json
import platform
import time
from datetime import datetime, timezone
from pathlib import Path

import numpy as np
import scipy

from orbcover import metrics
from orbcover.formulations import decode
from orbcover.pipeline import compile_scenario, with_overrides
from orbcover.solver import SolveOptions, solve, verify

ROOT = Path(__file__).resolve().parents[1]


def run(sc, V, kind, params, time_limit, backend="highs", strategy="direct", W=None, solver=None):
    """Solve ``kind`` with ``params`` on the scenario and return a summary dict."""
    scx = with_overrides(sc, kind, params, ROOT)
    problem = compile_scenario(scx, V, W)
    opts = SolveOptions(time_limit=time_limit)
    t0 = time.perf_counter()
    sol = solver(problem, opts) if solver else solve(problem, opts, backend, strategy)
    out = {"kind": kind, "params": params, "status": sol.status, "backend": sol.backend,
           "objective": sol.objective, "bound": sol.bound, "wall_time_s": round(time.perf_counter() - t0, 1)}
    if sol.values is None:
        return out, None
    rep = verify(problem, sol)
    x = decode(problem, sol.values).x
    cov = metrics.analyze(V, x, scx.requirements(), scx.grid.cyclic, scx.grid.dt)
    out.update({
        "verified": rep.ok,
        "selected": [int(j) for j in np.flatnonzero(x)],
        "num_selected": int(x.sum()),
        "percent_coverage": round(cov.percent_coverage, 4),
        "mrt_steps": cov.mrt_steps,
        "art_steps": round(cov.art_steps_sum, 6),
        "mrt_min": cov.mrt_steps * scx.grid.dt / 60.0,
        "art_min": round(cov.art_steps_sum * scx.grid.dt / 60.0, 4),
    })
    return out, x


def update_summary(out_dir: Path, scenario_path: Path, sc, key: str, entry: dict, **extra) -> dict:
    """Merge one run into ``summary.json`` and rewrite ``manifest.json``."""
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / "summary.json"
    doc = json.loads(path.read_text()) if path.exists() else {}
    doc["scenario"] = str(scenario_path.resolve().relative_to(ROOT))
    doc["scenario_sha256"] = sc.digest()
    doc.update(extra)
    if key:
        doc.setdefault("runs", {})[key] = entry
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    manifest = {
        "scenario": doc["scenario"], "scenario_sha256": sc.digest(),
        "summary_sha256": hashlib.sha256(path.read_bytes()).hexdigest(),
        "written_utc": datetime.now(timezone.utc).isoformat(timespec="seconds"),
        "python": platform.python_version(), "numpy": np.__version__, "scipy": scipy.__version__,
        "notes": [doc[k] for k in ("grid_sensitivity_note", "optimality_note") if doc.get(k)],
    }
    (out_dir / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return doc

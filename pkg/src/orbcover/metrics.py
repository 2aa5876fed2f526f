"""Solver-free coverage analytics: percent coverage, MRT, ART, gap lists,
ISL degree audits and single-failure analysis.

This module is the test oracle for the MILP formulations, so it works from
the coverage timeline alone and never looks at a model.

Step indices in reports (gap starts, audit times) are 1-based.
"""
from __future__ import annotations

import csv
import json
from dataclasses import asdict, dataclass, field
from decimal import ROUND_HALF_UP, Decimal
from typing import Optional

import numpy as np


@dataclass
class TargetMetrics:
    target: int
    covered_steps: int
    percent_coverage: float
    mrt_steps: int
    art_steps: float
    gaps: list  # [(start_step, length)]
    kfold_satisfied: bool  # covered at every step
    mrt_time: float = 0.0
    art_time: float = 0.0

    @property
    def percent_display(self) -> str:
        return str(Decimal(repr(self.percent_coverage)).quantize(Decimal("0.01"), rounding=ROUND_HALF_UP))


@dataclass
class CoverageReport:
    targets: list
    cyclic: bool
    dt: float
    b: np.ndarray = field(repr=False)
    y: np.ndarray = field(repr=False)

    @property
    def mrt_steps(self) -> int:
        return max(t.mrt_steps for t in self.targets)

    @property
    def art_steps_sum(self) -> float:
        return float(sum(t.art_steps for t in self.targets))

    @property
    def percent_coverage(self) -> float:
        """Mean percent coverage over targets."""
        return float(np.mean([t.percent_coverage for t in self.targets]))

    def to_dict(self) -> dict:
        return {
            "cyclic": self.cyclic,
            "dt": self.dt,
            "mrt_steps": self.mrt_steps,
            "art_steps_sum": self.art_steps_sum,
            "percent_coverage_mean": self.percent_coverage,
            "targets": [
                {**asdict(t), "gaps": [list(g) for g in t.gaps], "percent_display": t.percent_display}
                for t in self.targets
            ],
        }


def covered(b: np.ndarray, r: np.ndarray) -> np.ndarray:
    """y[t, p] = b[t, p] >= r[t, p]."""
    return np.asarray(b) >= np.asarray(r)


def gap_list(y, cyclic: bool = False) -> list[tuple[int, int]]:
    """Maximal runs of uncovered steps as (1-based start, length).

    With ``cyclic`` a run touching step T and a run touching step 1 are one gap
    starting at the former. A never-covered timeline is a single gap of
    length T starting at step 1.
    """
    y = np.asarray(y, dtype=bool)
    T = len(y)
    gaps = []
    t = 0
    while t < T:
        if y[t]:
            t += 1
            continue
        s = t
        while t < T and not y[t]:
            t += 1
        gaps.append((s + 1, t - s))
    if cyclic and len(gaps) > 1 and not y[0] and not y[-1]:
        first = gaps.pop(0)
        last = gaps.pop()
        gaps.append((last[0], last[1] + first[1]))
    return gaps


def gap_counters(y, cyclic: bool = False) -> np.ndarray:
    """Per-step count of consecutive uncovered steps ending at t (wrapping if cyclic)."""
    y = np.asarray(y, dtype=bool)
    T = len(y)
    w = np.zeros(T, dtype=int)
    carry = 0
    if cyclic and y.any():
        # uncovered tail that wraps into step 1
        k = T - 1
        while not y[k]:
            carry += 1
            k -= 1
    for t in range(T):
        carry = 0 if y[t] else carry + 1
        w[t] = carry
    return w


def gap_starts(y, cyclic: bool = False) -> np.ndarray:
    """Indicator of steps where an uncovered run begins."""
    y = np.asarray(y, dtype=bool)
    s = np.zeros(len(y), dtype=int)
    for start, _ in gap_list(y, cyclic):
        s[start - 1] = 1
    return s


def revisit_stats(y, cyclic: bool = False) -> tuple[int, float, list]:
    """(MRT steps, ART steps, gaps) with both metrics 0 when there is no gap."""
    gaps = gap_list(y, cyclic)
    if not gaps:
        return 0, 0.0, gaps
    lengths = [g[1] for g in gaps]
    return max(lengths), sum(lengths) / len(lengths), gaps


def analyze(V: np.ndarray, x, r, cyclic: bool = False, dt: float = 1.0) -> CoverageReport:
    V = np.asarray(V)
    x = np.asarray(x).astype(np.int64)
    r = np.broadcast_to(np.asarray(r), (V.shape[0], V.shape[2]))
    b = np.einsum("tjp,j->tp", V.astype(np.int64), x)
    y = covered(b, r)
    T = V.shape[0]
    out = []
    for p in range(V.shape[2]):
        mrt, art, gaps = revisit_stats(y[:, p], cyclic)
        n_cov = int(y[:, p].sum())
        out.append(TargetMetrics(p, n_cov, 100.0 * n_cov / T, mrt, art, gaps, bool(y[:, p].all()),
                                 mrt * dt, art * dt))
    return CoverageReport(out, cyclic, dt, b, y)


# --------------------------------------------------------------------------
# batched versions used by the exhaustive solver


def batch_revisit(Y: np.ndarray, cyclic: bool = False) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Vectorized revisit stats for a batch of timelines ``Y`` of shape (B, T, P).

    Returns (mrt, n_gaps, uncovered) each of shape (B, P).
    """
    Y = np.asarray(Y, dtype=bool)
    B, T, P = Y.shape
    unc = ~Y
    uncovered = unc.sum(axis=1)
    starts = unc.copy()
    starts[:, 1:, :] &= Y[:, :-1, :]
    if cyclic:
        starts[:, 0, :] &= Y[:, -1, :]
    n_gaps = starts.sum(axis=1)
    if cyclic:
        # the all-uncovered timeline has no covered step to start from
        n_gaps = np.where(uncovered == T, 1, n_gaps)
    run = np.zeros((B, P), dtype=np.int64)
    if cyclic:
        # seed with the uncovered tail so runs wrap from T into step 1
        tail = np.zeros((B, P), dtype=np.int64)
        alive = np.ones((B, P), dtype=bool)
        for t in range(T - 1, -1, -1):
            alive &= unc[:, t, :]
            tail += alive
        run = np.where(uncovered == T, 0, tail)
    mrt = np.zeros((B, P), dtype=np.int64)
    for t in range(T):
        run = np.where(unc[:, t, :], run + 1, 0)
        np.maximum(mrt, run, out=mrt)
    return mrt, n_gaps, uncovered


# --------------------------------------------------------------------------
# ISL graph audits


def _components(adj: np.ndarray) -> int:
    n = len(adj)
    if n == 0:
        return 0
    seen = np.zeros(n, dtype=bool)
    count = 0
    for s in range(n):
        if seen[s]:
            continue
        count += 1
        stack = [s]
        seen[s] = True
        while stack:
            u = stack.pop()
            for v in np.flatnonzero(adj[u] & ~seen):
                seen[v] = True
                stack.append(v)
    return count


def isl_audit(W: np.ndarray, x, t: int) -> dict:
    """Degree audit of the ISL graph induced by the selected slots at step ``t`` (1-based)."""
    sel = np.flatnonzero(np.asarray(x) > 0.5)
    sub = np.asarray(W[t - 1])[np.ix_(sel, sel)].astype(bool)
    np.fill_diagonal(sub, False)
    n = len(sel)
    deg = sub.sum(axis=1)
    min_degree = int(deg.min()) if n else 0
    return {
        "t": t,
        "n": n,
        "min_degree": min_degree,
        "dirac_ok": bool(n >= 3 and min_degree >= n / 2),
        "connected": _components(sub) == 1,
    }


@dataclass
class FailureReport:
    dropped: int
    x: np.ndarray
    coverage: CoverageReport
    audits: Optional[list] = None

    @property
    def always_connected(self) -> bool:
        return self.audits is None or all(a["connected"] for a in self.audits)


def failure_analysis(V, W, x, drop: int, r, cyclic: bool = False, dt: float = 1.0) -> FailureReport:
    """Re-run the coverage and ISL audits with slot ``drop`` (0-based) removed."""
    x = np.asarray(x).astype(int).copy()
    if not 0 <= drop < len(x) or x[drop] != 1:
        raise ValueError(f"slot {drop} is not part of the constellation")
    x[drop] = 0
    rep = analyze(V, x, r, cyclic, dt)
    audits = None
    if W is not None:
        audits = [isl_audit(W, x, t) for t in range(1, W.shape[0] + 1)]
    return FailureReport(drop, x, rep, audits)


# --------------------------------------------------------------------------
# export


def report_json(report: CoverageReport, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(report.to_dict(), fh, indent=2)


def report_csv(report: CoverageReport, path, target_ids=None) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["target", "percent_coverage", "mrt_steps", "mrt_s", "art_steps", "art_s", "n_gaps", "kfold"])
        for tm in report.targets:
            tid = target_ids[tm.target] if target_ids else tm.target
            w.writerow([tid, repr(tm.percent_coverage), tm.mrt_steps, repr(tm.mrt_time), repr(tm.art_steps),
                        repr(tm.art_time), len(tm.gaps), int(tm.kfold_satisfied)])

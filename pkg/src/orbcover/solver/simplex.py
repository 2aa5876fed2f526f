"""Bounded-variable primal simplex for LP relaxations.

Rows are handled through one logical variable per row, ``s = A x`` with
``row_lo <= s <= row_hi``, so the working system is ``[A | -I] z = 0`` and
every variable (structural or logical) simply carries its own bounds.
Infeasible starts are repaired with a composite phase 1 that minimizes the
sum of bound violations of the basic variables, which also makes warm starts
from a parent node's basis straightforward after a bound change.

Pricing is Dantzig's rule; after a run of degenerate pivots the method falls
back to Bland's rule until progress resumes.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.linalg

BASIC, AT_LO, AT_HI, FREE = 0, 1, 2, 3

FEAS_TOL = 1e-7
DUAL_TOL = 1e-9
PIVOT_TOL = 1e-9
# ratio-test candidates need a sturdier entry than the bare pivot threshold
RATIO_PIVOT_TOL = 1e-7
REFACTOR_EVERY = 64
DEGENERATE_STREAK = 30
DEGENERATE_STEP = 1e-8
RESIDUAL_TOL = 1e-9


class SimplexError(RuntimeError):
    """Numerical breakdown in the LP relaxation."""


@dataclass
class Basis:
    basic: np.ndarray  # (m,) column indices
    status: np.ndarray  # (n + m,) BASIC / AT_LO / AT_HI / FREE
    binv: Optional[np.ndarray] = None  # inverse of the basis matrix, when still at hand

    def without_inverse(self) -> "Basis":
        return Basis(self.basic, self.status)


@dataclass
class LPResult:
    status: str  # "optimal" | "infeasible" | "unbounded" | "iteration_limit"
    x: Optional[np.ndarray]
    objective: float
    basis: Optional[Basis]
    iterations: int


class BoundedSimplex:
    """Reusable LP kernel for ``min c.x  s.t.  row_lo <= A x <= row_hi, lo <= x <= hi``."""

    def __init__(self, A: np.ndarray, row_lo: np.ndarray, row_hi: np.ndarray, c: np.ndarray):
        self.A = np.ascontiguousarray(A, dtype=float)
        self.m, self.n = self.A.shape
        self.row_lo = np.asarray(row_lo, dtype=float)
        self.row_hi = np.asarray(row_hi, dtype=float)
        self.c = np.concatenate([np.asarray(c, dtype=float), np.zeros(self.m)])

    # column j of [A | -I]
    def _column(self, j: int) -> np.ndarray:
        if j < self.n:
            return self.A[:, j]
        col = np.zeros(self.m)
        col[j - self.n] = -1.0
        return col

    def _basis_matrix(self, basic: np.ndarray) -> np.ndarray:
        B = np.zeros((self.m, self.m))
        struct = basic < self.n
        B[:, struct] = self.A[:, basic[struct]]
        logical = np.flatnonzero(~struct)
        B[basic[logical] - self.n, logical] = -1.0
        return B

    def _nonbasic_values(self, status, L, U) -> np.ndarray:
        z = np.zeros(self.n + self.m)
        lo_mask = status == AT_LO
        hi_mask = status == AT_HI
        z[lo_mask] = L[lo_mask]
        z[hi_mask] = U[hi_mask]
        return z

    def _fix_status(self, status, L, U):
        """Point every nonbasic variable at a finite bound."""
        nb = status != BASIC
        lo_fin = np.isfinite(L)
        hi_fin = np.isfinite(U)
        status[nb & (status == AT_LO) & ~lo_fin & hi_fin] = AT_HI
        status[nb & (status == AT_HI) & ~hi_fin & lo_fin] = AT_LO
        status[nb & ~lo_fin & ~hi_fin] = FREE
        status[nb & (status == FREE) & lo_fin] = AT_LO
        status[nb & (status == FREE) & ~lo_fin & hi_fin] = AT_HI

    def _repair(self, basic, status) -> bool:
        """Swap dependent basic columns for row logicals; True if anything changed."""
        B = self._basis_matrix(basic)
        _, R, piv = scipy.linalg.qr(B, pivoting=True)
        diag = np.abs(np.diag(R))
        rank = int((diag > 1e-9 * max(diag.max(initial=0.0), 1.0)).sum())
        if rank == self.m:
            return False
        keep = piv[:rank]
        # rows least explained by the kept columns get their logical back
        Q, _ = np.linalg.qr(B[:, keep]) if rank else (np.zeros((self.m, 0)), None)
        free_rows = np.argsort(np.einsum("ij,ij->i", Q, Q))[: self.m - rank]
        for pos, row in zip(piv[rank:], free_rows):
            status[basic[pos]] = AT_LO
            basic[pos] = self.n + row
            status[basic[pos]] = BASIC
        return True

    def _refactor(self, basic, status, L, U, Binv=None):
        if Binv is None:
            try:
                Binv = np.linalg.inv(self._basis_matrix(basic))
            except np.linalg.LinAlgError:
                if not self._repair(basic, status):
                    raise SimplexError("singular basis") from None
                self._fix_status(status, L, U)
                try:
                    Binv = np.linalg.inv(self._basis_matrix(basic))
                except np.linalg.LinAlgError:
                    raise SimplexError("singular basis after repair") from None
        z = self._nonbasic_values(status, L, U)
        # [A | -I] z = 0  ->  B z_B = -(A x_N - s_N)
        rhs = -(self.A @ z[: self.n] - z[self.n:])
        z[basic] = Binv @ rhs
        return Binv, z

    def _residual(self, z) -> float:
        return float(np.abs(self.A @ z[: self.n] - z[self.n:]).max(initial=0.0))

    def initial_basis(self) -> Basis:
        status = np.full(self.n + self.m, AT_LO, dtype=np.int8)
        basic = np.arange(self.n, self.n + self.m)
        status[basic] = BASIC
        return Basis(basic, status)

    def solve(self, lo: np.ndarray, hi: np.ndarray, warm: Optional[Basis] = None,
              max_iter: int = 50_000) -> LPResult:
        """Solve from ``warm`` if given; a warm start that breaks down numerically
        is retried once from the slack basis."""
        if warm is None:
            return self._solve(lo, hi, None, max_iter)
        try:
            return self._solve(lo, hi, warm, max_iter)
        except SimplexError:
            return self._solve(lo, hi, None, max_iter)

    def _solve(self, lo, hi, warm: Optional[Basis], max_iter: int) -> LPResult:
        n, m = self.n, self.m
        L = np.concatenate([lo, self.row_lo])
        U = np.concatenate([hi, self.row_hi])
        if np.any(L > U + FEAS_TOL):
            return LPResult("infeasible", None, np.inf, None, 0)
        basis = warm if warm is not None else self.initial_basis()
        basic = basis.basic.copy()
        status = basis.status.copy()
        self._fix_status(status, L, U)
        # the inverse depends only on which columns are basic, so a parent's copy stays valid
        inherited = None if warm is None or warm.binv is None else warm.binv.copy()
        Binv, z = self._refactor(basic, status, L, U, inherited)
        since_refactor = 0 if inherited is None else 1

        bland = False
        streak = 0
        it = 0
        while it < max_iter:
            it += 1
            xb = z[basic]
            lb, ub = L[basic], U[basic]
            below = xb < lb - FEAS_TOL
            above = xb > ub + FEAS_TOL
            phase1 = bool(below.any() or above.any())
            if phase1:
                cb = above.astype(float) - below.astype(float)
                y = cb @ Binv
                d = np.concatenate([-(y @ self.A), y])
            else:
                y = self.c[basic] @ Binv
                d = self.c - np.concatenate([y @ self.A, -y])
            d[basic] = 0.0

            can_up = ((status == AT_LO) | (status == FREE)) & (d < -DUAL_TOL) & (U > L)
            can_dn = ((status == AT_HI) | (status == FREE)) & (d > DUAL_TOL) & (U > L)
            cand = np.flatnonzero(can_up | can_dn)
            if cand.size == 0:
                # confirm on a fresh factorization unless the updated values are still exact
                if since_refactor and self._residual(z) > RESIDUAL_TOL:
                    Binv, z = self._refactor(basic, status, L, U)
                    since_refactor = 0
                    continue
                if phase1:
                    return LPResult("infeasible", None, np.inf, Basis(basic, status), it)
                x = z[:n].copy()
                return LPResult("optimal", x, float(self.c[:n] @ x), Basis(basic.copy(), status.copy(), Binv), it)
            q = int(cand[0]) if bland else int(cand[np.argmax(np.abs(d[cand]))])
            direction = 1.0 if can_up[q] else -1.0

            alpha = Binv @ self._column(q)
            g = -direction * alpha  # change of x_B per unit step

            theta = np.inf
            leave = -1
            leave_to = AT_LO
            if np.isfinite(L[q]) and np.isfinite(U[q]):
                theta = U[q] - L[q]
            dec = g < -RATIO_PIVOT_TOL
            inc = g > RATIO_PIVOT_TOL
            ratios = np.full(m, np.inf)
            target = np.zeros(m, dtype=np.int8)
            # decreasing basics block at ub (if above) or lb (if feasible)
            sel = dec & above
            ratios[sel] = (xb[sel] - ub[sel]) / -g[sel]
            target[sel] = AT_HI
            sel = dec & ~above & ~below & np.isfinite(lb)
            ratios[sel] = (xb[sel] - lb[sel]) / -g[sel]
            target[sel] = AT_LO
            # increasing basics block at lb (if below) or ub (if feasible)
            sel = inc & below
            ratios[sel] = (lb[sel] - xb[sel]) / g[sel]
            target[sel] = AT_LO
            sel = inc & ~above & ~below & np.isfinite(ub)
            ratios[sel] = (ub[sel] - xb[sel]) / g[sel]
            target[sel] = AT_HI
            np.maximum(ratios, 0.0, out=ratios)

            rmin = ratios.min() if m else np.inf
            if rmin < theta:
                ties = np.flatnonzero(ratios <= rmin + FEAS_TOL)
                if bland:
                    r = int(ties[np.argmin(basic[ties])])
                else:
                    r = int(ties[np.argmax(np.abs(g[ties]))])
                theta = float(ratios[r])
                leave = r
                leave_to = int(target[r])
            if not np.isfinite(theta):
                if phase1:
                    raise SimplexError("phase 1 ray without a blocking variable")
                return LPResult("unbounded", None, -np.inf, None, it)

            if theta <= DEGENERATE_STEP:
                streak += 1
                if streak > DEGENERATE_STREAK:
                    bland = True
            else:
                streak = 0
                bland = False

            z[q] += direction * theta
            z[basic] += theta * g
            if leave < 0:
                status[q] = AT_HI if direction > 0 else AT_LO
                z[q] = U[q] if direction > 0 else L[q]
                continue

            out = basic[leave]
            status[out] = leave_to
            z[out] = U[out] if leave_to == AT_HI else L[out]
            basic[leave] = q
            status[q] = BASIC
            piv = alpha[leave]
            if abs(piv) < PIVOT_TOL:
                raise SimplexError(f"pivot {piv:.3e} too small")
            row = Binv[leave] / piv
            Binv -= np.outer(alpha, row)
            Binv[leave] = row
            since_refactor += 1
            if since_refactor >= REFACTOR_EVERY:
                Binv, z = self._refactor(basic, status, L, U)
                since_refactor = 0
        return LPResult("iteration_limit", None, np.nan, Basis(basic, status), it)

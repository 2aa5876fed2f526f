"""Activity-based bound propagation with integer rounding."""
from __future__ import annotations

import numpy as np
import scipy.sparse as sp

INT_TOL = 1e-6


class Propagator:
    def __init__(self, A: sp.csr_matrix, row_lo: np.ndarray, row_hi: np.ndarray, is_int: np.ndarray):
        coo = A.tocoo()
        self.rows = coo.row
        self.cols = coo.col
        self.vals = coo.data
        self.m = A.shape[0]
        self.row_lo = row_lo
        self.row_hi = row_hi
        self.is_int = is_int
        self.pos = self.vals > 0
        self.has_hi = np.isfinite(row_hi[self.rows])
        self.has_lo = np.isfinite(row_lo[self.rows])

    def run(self, lo: np.ndarray, hi: np.ndarray, max_rounds: int = 50):
        """Tighten ``lo``/``hi`` in place; returns False when the box is empty."""
        rows, cols, vals, pos = self.rows, self.cols, self.vals, self.pos
        for _ in range(max_rounds):
            lo_c = lo[cols]
            hi_c = hi[cols]
            cmin = np.where(pos, vals * lo_c, vals * hi_c)
            cmax = np.where(pos, vals * hi_c, vals * lo_c)
            minact = np.bincount(rows, cmin, minlength=self.m)
            maxact = np.bincount(rows, cmax, minlength=self.m)
            if np.any(minact > self.row_hi + 1e-7) or np.any(maxact < self.row_lo - 1e-7):
                return False
            new_hi = hi.copy()
            new_lo = lo.copy()
            # sum <= row_hi: each term bounded by the slack left by the others
            resid = (self.row_hi[rows] - (minact[rows] - cmin)) / vals
            sel = self.has_hi & pos
            np.minimum.at(new_hi, cols[sel], resid[sel])
            sel = self.has_hi & ~pos
            np.maximum.at(new_lo, cols[sel], resid[sel])
            # sum >= row_lo
            resid = (self.row_lo[rows] - (maxact[rows] - cmax)) / vals
            sel = self.has_lo & pos
            np.maximum.at(new_lo, cols[sel], resid[sel])
            sel = self.has_lo & ~pos
            np.minimum.at(new_hi, cols[sel], resid[sel])

            ii = self.is_int
            new_lo[ii] = np.ceil(new_lo[ii] - INT_TOL)
            new_hi[ii] = np.floor(new_hi[ii] + INT_TOL)
            # continuous bounds only move on a meaningful change, with slack
            cont = ~ii
            new_lo[cont] = np.where(new_lo[cont] > lo[cont] + 1e-7, new_lo[cont] - 1e-9, lo[cont])
            new_hi[cont] = np.where(new_hi[cont] < hi[cont] - 1e-7, new_hi[cont] + 1e-9, hi[cont])
            new_lo = np.maximum(new_lo, lo)
            new_hi = np.minimum(new_hi, hi)
            if np.any(new_lo > new_hi + 1e-9):
                return False
            changed = np.any(new_lo > lo) or np.any(new_hi < hi)
            lo[:] = np.minimum(new_lo, new_hi)
            hi[:] = new_hi
            if not changed:
                break
        return True

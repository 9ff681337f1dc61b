"""
Dense simplex method for small equality-form linear programs.

Solves max c·x subject to A x = b, x ≥ 0 with a full tableau, Bland's rule
(lowest-index entering column, lowest-index leaving variable on ratio ties)
and a two-phase start. The basis found by phase 1 is kept and reused as the
starting point of every later maximization, so a sequence of objectives over
one polytope only pays for phase 1 once.
"""

from __future__ import annotations

import logging
from typing import List, Optional, Tuple

import numpy as np

from .config import FEASIBILITY_TOL, PIVOT_TOL
from .errors import Infeasible, OracleFailure

logger = logging.getLogger(__name__)

MAX_PIVOTS = 200_000
REFACTOR_EVERY = 64


def independent_rows(A: np.ndarray, b: np.ndarray, tol: float = PIVOT_TOL) -> List[int]:
    """
    Indices of a maximal linearly independent subset of the rows of A.

    Rows are scanned in order and reduced against the rows already kept
    (Gaussian elimination with threshold `tol`, relative to the row norm). A
    dependent row whose right-hand side does not reduce to zero means the
    system is inconsistent.
    """
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    kept: List[int] = []
    pivots: List[Tuple[int, np.ndarray, float]] = []
    for i in range(A.shape[0]):
        row = A[i].copy()
        rhs = float(b[i])
        scale = max(1.0, float(np.max(np.abs(row))) if row.size else 1.0)
        for col, prow, prhs in pivots:
            factor = row[col]
            if factor != 0.0:
                row -= factor * prow
                rhs -= factor * prhs
        col = int(np.argmax(np.abs(row))) if row.size else 0
        if row.size == 0 or abs(row[col]) <= tol * scale:
            if abs(rhs) > FEASIBILITY_TOL * scale:
                raise Infeasible(f"equality row {i} contradicts earlier rows (residual {rhs:.3e})")
            continue
        pivot = row[col]
        pivots.append((col, row / pivot, rhs / pivot))
        kept.append(i)
    return kept


class DenseSimplex:
    """Reusable LP over the fixed feasible set {x ≥ 0 : A x = b}."""

    def __init__(self, A: np.ndarray, b: np.ndarray, tol: float = PIVOT_TOL):
        A = np.atleast_2d(np.asarray(A, dtype=float))
        b = np.asarray(b, dtype=float).reshape(-1)
        if A.shape[0] != b.shape[0]:
            raise ValueError(f"A has {A.shape[0]} rows but b has {b.shape[0]} entries")
        keep = independent_rows(A, b, tol)
        self.A = A[keep]
        self.b = b[keep]
        self.tol = tol
        self.m, self.n = self.A.shape
        self.pivots = 0
        self.basis = self._phase_one()

    # Tableau helpers ---------------------------------------------------

    def _pivot(self, T: np.ndarray, row: int, col: int) -> None:
        T[row] /= T[row, col]
        factors = T[:, col].copy()
        factors[row] = 0.0
        T -= np.outer(factors, T[row])
        self.pivots += 1

    def _run(self, T: np.ndarray, basis: List[int], allowed: int) -> None:
        """Bland iterations on tableau T whose last row holds -reduced costs."""
        m = len(basis)
        steps = 0
        while True:
            cost = T[m, :allowed]
            entering = np.flatnonzero(cost < -self.tol)
            if entering.size == 0:
                return
            col = int(entering[0])
            column = T[:m, col]
            positive = np.flatnonzero(column > self.tol)
            if positive.size == 0:
                raise OracleFailure("linear program is unbounded over a bounded polytope")
            ratios = T[positive, -1] / column[positive]
            best = ratios.min()
            ties = positive[ratios <= best + self.tol * max(1.0, abs(best))]
            row = int(min(ties, key=lambda r: basis[r]))
            self._pivot(T, row, col)
            basis[row] = col
            steps += 1
            if steps % REFACTOR_EVERY == 0:
                self._refresh(T, basis, allowed)
            if steps > MAX_PIVOTS:
                raise OracleFailure(f"simplex did not terminate within {MAX_PIVOTS} pivots")

    def _refresh(self, T: np.ndarray, basis: List[int], allowed: int) -> None:
        # recompute constraint rows from the original data to limit drift
        if allowed != self.n:
            return
        B = self.A[:, basis]
        T[: self.m, : self.n] = np.linalg.solve(B, self.A)
        T[: self.m, -1] = np.linalg.solve(B, self.b)

    def _phase_one(self) -> List[int]:
        m, n = self.m, self.n
        if m == 0:
            return []
        sign = np.where(self.b < 0, -1.0, 1.0)
        T = np.zeros((m + 1, n + m + 1))
        T[:m, :n] = self.A * sign[:, None]
        T[:m, n : n + m] = np.eye(m)
        T[:m, -1] = self.b * sign
        # maximize -sum(artificials): reduced-cost row after pricing out the basis
        T[m, :n] = -T[:m, :n].sum(axis=0)
        T[m, -1] = -T[:m, -1].sum()
        basis = list(range(n, n + m))
        self._run(T, basis, n + m)
        residual = -T[m, -1]
        if residual > FEASIBILITY_TOL:
            raise Infeasible(f"phase-1 minimum violation {residual:.3e} exceeds {FEASIBILITY_TOL:g}")
        for row in range(m):
            if basis[row] < n:
                continue
            candidates = np.flatnonzero(np.abs(T[row, :n]) > self.tol)
            if candidates.size == 0:
                raise OracleFailure("artificial variable stuck in basis after rank filtering")
            col = int(candidates[0])
            self._pivot(T, row, col)
            basis[row] = col
        logger.debug(f"phase 1 finished after {self.pivots} pivots (violation {residual:.2e})")
        return basis

    # Public API ----------------------------------------------------------

    def point(self, basis: Optional[List[int]] = None) -> np.ndarray:
        basis = self.basis if basis is None else basis
        x = np.zeros(self.n)
        if basis:
            values = np.linalg.solve(self.A[:, basis], self.b)
            x[basis] = np.maximum(values, 0.0)
        return x

    def maximize(self, c: np.ndarray) -> np.ndarray:
        """Vertex maximizing c·x, warm-started from the previous basis."""
        c = np.asarray(c, dtype=float).reshape(-1)
        if c.shape[0] != self.n:
            raise ValueError(f"objective has {c.shape[0]} entries, expected {self.n}")
        if self.m == 0:
            x = np.zeros(self.n)
            return x
        basis = list(self.basis)
        T = np.zeros((self.m + 1, self.n + 1))
        self._refresh(T, basis, self.n)
        # -reduced costs: c_B B^-1 A - c
        T[self.m, : self.n] = c[basis] @ T[: self.m, : self.n] - c
        T[self.m, -1] = c[basis] @ T[: self.m, -1]
        self._run(T, basis, self.n)
        self.basis = basis
        return self.point(basis)

    def residual(self, x: np.ndarray) -> float:
        if self.m == 0:
            return float(max(0.0, -np.min(x))) if x.size else 0.0
        return float(max(np.max(np.abs(self.A @ x - self.b)), -np.min(x), 0.0))

"""Small dense linear programming: revised simplex with Bland's rule.

Standard form: minimize c @ x subject to A @ x = b, x >= 0.  The basis
inverse is kept explicitly, updated by rank-one pivots and refactored
periodically to limit drift.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NumericalError

TOL = 1e-9


@dataclass
class LPResult:
    x: np.ndarray
    objective: float
    iterations: int
    status: str
    dual_objective: float

    @property
    def gap(self) -> float:
        return abs(self.objective - self.dual_objective)


def _refactor(A: np.ndarray, basis: list[int]) -> np.ndarray:
    try:
        return np.linalg.inv(A[:, basis])
    except np.linalg.LinAlgError as exc:
        raise NumericalError("simplex basis became singular") from exc


def _simplex_phase(c: np.ndarray, A: np.ndarray, b: np.ndarray, basis: list[int], max_iter: int,
                   allowed: np.ndarray | None = None) -> tuple[list[int], np.ndarray, int, str]:
    m, n = A.shape
    binv = _refactor(A, basis)
    xb = binv @ b
    it = 0
    since_refactor = 0
    while it < max_iter:
        y = c[basis] @ binv
        red = c - y @ A
        red[basis] = 0.0
        cand = red < -TOL
        if allowed is not None:
            cand &= allowed
        idx = np.flatnonzero(cand)
        if idx.size == 0:
            return basis, xb, it, "optimal"
        q = int(idx[0])  # Bland: lowest index with negative reduced cost
        col = binv @ A[:, q]
        pos = col > TOL
        if not np.any(pos):
            return basis, xb, it, "unbounded"
        ratios = np.full(m, np.inf)
        ratios[pos] = np.maximum(xb[pos], 0.0) / col[pos]
        rmin = ratios.min()
        ties = np.flatnonzero(ratios <= rmin + TOL * max(1.0, abs(rmin)))
        # Bland: among ties leave the basic variable with the smallest index
        r = int(ties[np.argmin(np.asarray(basis)[ties])])
        piv = col[r]
        theta = xb[r] / piv
        xb = xb - theta * col
        xb[r] = theta
        row = binv[r] / piv
        binv = binv - np.outer(col, row)
        binv[r] = row
        basis[r] = q
        it += 1
        since_refactor += 1
        if since_refactor >= 64:
            binv = _refactor(A, basis)
            xb = binv @ b
            since_refactor = 0
    raise NumericalError(f"simplex did not converge within {max_iter} iterations")


def simplex(c, A, b, basis: list[int] | None = None, max_iter: int = 200000) -> LPResult:
    """Solve min c@x, A@x = b, x >= 0.

    When ``basis`` (m column indices with A[:, basis] invertible and a
    nonnegative basic solution) is given, phase one is skipped.  Otherwise
    artificial variables are added and driven out first.
    """
    c = np.asarray(c, dtype=float)
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    m, n = A.shape
    if m == 0:
        if np.any(c < -TOL):
            return LPResult(np.zeros(n), -np.inf, 0, "unbounded", -np.inf)
        return LPResult(np.zeros(n), 0.0, 0, "optimal", 0.0)
    total_it = 0
    if basis is None:
        sgn = np.where(b < 0, -1.0, 1.0)
        A1 = np.hstack([A * sgn[:, None], np.eye(m)])
        b1 = b * sgn
        c1 = np.concatenate([np.zeros(n), np.ones(m)])
        basis = list(range(n, n + m))
        basis, xb, it, status = _simplex_phase(c1, A1, b1, basis, max_iter)
        total_it += it
        if xb @ c1[basis] > 1e-7 * max(1.0, np.abs(b).max()):
            return LPResult(np.zeros(n), np.inf, total_it, "infeasible", np.inf)
        # pivot remaining artificials out where possible, otherwise the row is redundant
        binv = _refactor(A1, basis)
        keep_rows = list(range(m))
        for r in range(m):
            if basis[r] >= n:
                row = binv[r] @ A1[:, :n]
                nz = np.flatnonzero(np.abs(row) > 1e-9)
                nz = [j for j in nz if j not in basis]
                if nz:
                    basis[r] = int(nz[0])
                    binv = _refactor(A1, basis)
                else:
                    keep_rows.remove(r)
        A = (A * sgn[:, None])[keep_rows]
        b = b1[keep_rows]
        basis = [basis[r] for r in keep_rows]
    else:
        basis = list(basis)
    basis, xb, it, status = _simplex_phase(c, A, b, basis, max_iter)
    total_it += it
    x = np.zeros(n)
    x[basis] = xb
    obj = float(c @ x)
    if status != "optimal":
        return LPResult(x, -np.inf, total_it, status, -np.inf)
    y = c[basis] @ _refactor(A, basis)
    return LPResult(x, obj, total_it, status, float(y @ b))

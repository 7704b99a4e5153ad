"""Regularized quasi-definite KKT solves.

Each interior-point iteration factors

    K = [[P + dI,   A'      ],
         [A,       -(Wsq + dI)]]

where Wsq is the block-diagonal Nesterov-Todd scaling (zero on zero-cone
rows) and d is the static regularization. The factorization uses sparse
LU on the quasi-definite matrix; d escalates dynamically when the factor
breaks down or returns non-finite values. Solves apply one step of
iterative refinement against the unregularized matrix.
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from ..errors import NumericalLimit

_MAX_ESCALATIONS = 6


class KktSolver:
    def __init__(self, P: sp.csc_matrix, A: sp.csc_matrix, static_reg: float):
        self.P = P
        self.A = A
        self.n = A.shape[1]
        self.m = A.shape[0]
        self.static_reg = static_reg
        self._lu = None
        self._k_exact = None

    def factor(self, wsq: sp.spmatrix) -> None:
        self._k_exact = sp.bmat(
            [[self.P, self.A.T], [self.A, -wsq]], format="csc"
        )
        delta = self.static_reg
        reg_dirs = np.r_[np.ones(self.n), -np.ones(self.m)]
        for _ in range(_MAX_ESCALATIONS):
            k_reg = self._k_exact + sp.diags(delta * reg_dirs, format="csc")
            try:
                lu = spla.splu(k_reg)
            except RuntimeError:
                delta *= 100.0
                continue
            probe = lu.solve(np.ones(self.n + self.m))
            if np.all(np.isfinite(probe)):
                self._lu = lu
                return
            delta *= 100.0
        raise NumericalLimit(
            f"KKT factorization failed after regularization up to {delta:g}"
        )

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        sol = self._lu.solve(rhs)
        # one refinement step against the exact (unregularized) KKT matrix
        sol += self._lu.solve(rhs - self._k_exact @ sol)
        return sol

"""Block-structured conic program and its solver-facing standard form.

A program is assembled against a fixed variable count:

* objective  f(x) = sum_i q2[i] x[i]^2 + c.x + c0  with q2 >= 0;
* sparse linear equalities  A_eq x = b_eq;
* per-variable box bounds (+-inf allowed);
* affine nonnegativity rows  a.x + d >= 0;
* rotated-cone blocks: affine (u, v, w...) with 2uv >= ||w||^2;
* second-order blocks: affine (t, w...) with t >= ||w||.

The standard form stacks everything as  A x + s = b,  s in
zero^p x nonneg^q x blocks, which is what the interior-point solver
consumes. The stacking order (equalities, fixed variables, lower bounds,
upper bounds, affine rows, cone blocks) is deterministic so that dumps
and dual vectors are reproducible.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from ..errors import DimensionMismatch

Coeffs = dict[int, float]


@dataclass
class _AffineRow:
    coeffs: Coeffs
    offset: float


@dataclass
class _ConeBlock:
    kind: str                     # "soc" or "rsoc"
    rows: list[_AffineRow]


@dataclass
class StandardForm:
    """min 0.5 x'Px + c.x + c0  s.t.  Ax + s = b, s in cones."""

    P: sp.csc_matrix
    c: np.ndarray
    c0: float
    A: sp.csc_matrix
    b: np.ndarray
    cones: list[tuple[str, int]]  # ("zero"|"nonneg"|"soc"|"rsoc", dim)

    @property
    def n(self) -> int:
        return self.A.shape[1]

    @property
    def m(self) -> int:
        return self.A.shape[0]


class ConicProgram:
    """Mutable builder; treat as immutable once handed to the solver."""

    def __init__(self, n: int):
        self.n = n
        self.q2 = np.zeros(n)
        self.c = np.zeros(n)
        self.c0 = 0.0
        self.lb = np.full(n, -math.inf)
        self.ub = np.full(n, math.inf)
        self.eq_rows: list[_AffineRow] = []
        self.nonneg_rows: list[_AffineRow] = []
        self.blocks: list[_ConeBlock] = []
        self.warnings: list[str] = []

    # -- assembly ----------------------------------------------------------

    def _check_idx(self, coeffs: Coeffs) -> None:
        for j in coeffs:
            if not 0 <= j < self.n:
                raise DimensionMismatch(f"variable index {j} out of range")

    def set_objective_term(self, j: int, quad: float = 0.0, lin: float = 0.0) -> None:
        if quad < 0:
            raise ValueError("quadratic objective coefficients must be nonnegative")
        self.q2[j] += quad
        self.c[j] += lin

    def add_constant(self, value: float) -> None:
        self.c0 += value

    def add_eq(self, coeffs: Coeffs, rhs: float) -> None:
        """a.x = rhs"""
        self._check_idx(coeffs)
        self.eq_rows.append(_AffineRow(dict(coeffs), -rhs))

    def set_bounds(self, j: int, lo: float, hi: float) -> None:
        self.lb[j] = max(self.lb[j], lo)
        self.ub[j] = min(self.ub[j], hi)

    def add_nonneg(self, coeffs: Coeffs, offset: float) -> None:
        """a.x + offset >= 0"""
        self._check_idx(coeffs)
        self.nonneg_rows.append(_AffineRow(dict(coeffs), offset))

    def _add_block(self, kind: str, exprs) -> None:
        rows = []
        for coeffs, offset in exprs:
            self._check_idx(coeffs)
            rows.append(_AffineRow(dict(coeffs), offset))
        self.blocks.append(_ConeBlock(kind, rows))

    def add_rsoc(self, u, v, w) -> None:
        """2 (a_u.x + d_u)(a_v.x + d_v) >= sum of (a_w.x + d_w)^2, u,v >= 0."""
        self._add_block("rsoc", [u, v, *w])

    def add_soc(self, t, w) -> None:
        """a_t.x + d_t >= norm of the w expressions."""
        self._add_block("soc", [t, *w])

    # -- evaluation --------------------------------------------------------

    def objective(self, x: np.ndarray) -> float:
        return float(self.q2 @ (x * x) + self.c @ x + self.c0)

    @staticmethod
    def _eval_row(row: _AffineRow, x: np.ndarray) -> float:
        return sum(a * x[j] for j, a in row.coeffs.items()) + row.offset

    def check_point(self, x: np.ndarray) -> dict[str, float]:
        """Worst violation per constraint family (all <= tol means feasible)."""
        if len(x) != self.n:
            raise DimensionMismatch(f"point has {len(x)} entries, program has {self.n}")
        out = {"eq": 0.0, "box": 0.0, "nonneg": 0.0, "soc": 0.0, "rsoc": 0.0}
        for row in self.eq_rows:
            out["eq"] = max(out["eq"], abs(self._eval_row(row, x)))
        finite_lb = np.isfinite(self.lb)
        finite_ub = np.isfinite(self.ub)
        if finite_lb.any():
            out["box"] = max(out["box"], float((self.lb - x)[finite_lb].max(initial=0.0)))
        if finite_ub.any():
            out["box"] = max(out["box"], float((x - self.ub)[finite_ub].max(initial=0.0)))
        for row in self.nonneg_rows:
            out["nonneg"] = max(out["nonneg"], -min(0.0, self._eval_row(row, x)))
        from . import cones as _c

        for blk in self.blocks:
            vals = np.array([self._eval_row(r, x) for r in blk.rows])
            margin = _c.rsoc_residual(vals) if blk.kind == "rsoc" else _c.soc_residual(vals)
            out[blk.kind] = max(out[blk.kind], -min(0.0, margin))
        return out

    # -- standard form -----------------------------------------------------

    def standard_form(self) -> StandardForm:
        rows_i: list[int] = []
        rows_j: list[int] = []
        rows_v: list[float] = []
        b: list[float] = []
        cones: list[tuple[str, int]] = []
        r = 0

        def put(coeffs: Coeffs, rhs: float) -> None:
            nonlocal r
            for j, a in coeffs.items():
                if a != 0.0:
                    rows_i.append(r)
                    rows_j.append(j)
                    rows_v.append(a)
            b.append(rhs)
            r += 1

        # zero cone: equality rows, then fixed variables
        for row in self.eq_rows:
            put(row.coeffs, -row.offset)
        fixed = {j for j in range(self.n) if self.lb[j] == self.ub[j]}
        for j in sorted(fixed):
            put({j: 1.0}, self.lb[j])
        n_zero = r

        # nonneg cone: lower bounds (s = x - lb), upper bounds (s = ub - x),
        # then general affine rows (s = a.x + d)
        for j in range(self.n):
            if math.isfinite(self.lb[j]) and j not in fixed:
                put({j: -1.0}, -self.lb[j])
        for j in range(self.n):
            if math.isfinite(self.ub[j]) and self.lb[j] != self.ub[j]:
                put({j: 1.0}, self.ub[j])
        for row in self.nonneg_rows:
            put({j: -a for j, a in row.coeffs.items()}, row.offset)
        n_nonneg = r - n_zero

        if n_zero:
            cones.append(("zero", n_zero))
        if n_nonneg:
            cones.append(("nonneg", n_nonneg))

        for blk in self.blocks:
            for row in blk.rows:
                put({j: -a for j, a in row.coeffs.items()}, row.offset)
            cones.append((blk.kind, len(blk.rows)))

        A = sp.csc_matrix(
            sp.coo_matrix((rows_v, (rows_i, rows_j)), shape=(r, self.n))
        )
        P = sp.diags(2.0 * self.q2, format="csc")
        return StandardForm(P=P, c=self.c.copy(), c0=self.c0, A=A, b=np.array(b), cones=cones)


# -- textual dump ------------------------------------------------------------

DUMP_HEADER = "SOCOPF CONIC DUMP 1"


def dump_program(prog: ConicProgram) -> str:
    """Sparse triplet dump of the standard form, for external cross-checks.

    Layout: header line; ``n m``; ``c0``; section ``Q`` (diagonal entries
    ``i v`` of the quadratic form), ``c`` (``i v``), ``A`` (``i j v``),
    ``b`` (``i v``), ``cones`` (``kind dim`` per line). Floats use
    full-precision repr.
    """
    sf = prog.standard_form()
    out = io.StringIO()
    out.write(f"{DUMP_HEADER}\n{sf.n} {sf.m}\n{float(sf.c0)!r}\n")
    q = sf.P.diagonal() / 2.0
    nz = np.nonzero(q)[0]
    out.write(f"Q {len(nz)}\n")
    for i in nz:
        out.write(f"{i} {float(q[i])!r}\n")
    nz = np.nonzero(sf.c)[0]
    out.write(f"c {len(nz)}\n")
    for i in nz:
        out.write(f"{i} {float(sf.c[i])!r}\n")
    coo = sf.A.tocoo()
    out.write(f"A {coo.nnz}\n")
    for i, j, v in zip(coo.row, coo.col, coo.data):
        out.write(f"{i} {j} {float(v)!r}\n")
    nz = np.nonzero(sf.b)[0]
    out.write(f"b {len(nz)}\n")
    for i in nz:
        out.write(f"{i} {float(sf.b[i])!r}\n")
    out.write(f"cones {len(sf.cones)}\n")
    for kind, dim in sf.cones:
        out.write(f"{kind} {dim}\n")
    return out.getvalue()


def parse_dump(text: str) -> StandardForm:
    lines = text.strip().splitlines()
    if lines[0] != DUMP_HEADER:
        raise ValueError("not a conic program dump")
    n, m = (int(t) for t in lines[1].split())
    c0 = float(lines[2])
    pos = 3

    def section(name: str, width: int):
        nonlocal pos
        tag, count = lines[pos].split()
        if tag != name:
            raise ValueError(f"expected section {name}, found {tag}")
        pos += 1
        rows = []
        for _ in range(int(count)):
            parts = lines[pos].split()
            rows.append(tuple(int(p) for p in parts[:width]) + (float(parts[width]),))
            pos += 1
        return rows

    q = np.zeros(n)
    for (i, v) in section("Q", 1):
        q[i] = v
    c = np.zeros(n)
    for (i, v) in section("c", 1):
        c[i] = v
    a_rows = section("A", 2)
    b = np.zeros(m)
    for (i, v) in section("b", 1):
        b[i] = v
    tag, count = lines[pos].split()
    if tag != "cones":
        raise ValueError("expected cones section")
    pos += 1
    cones = []
    for _ in range(int(count)):
        kind, dim = lines[pos].split()
        cones.append((kind, int(dim)))
        pos += 1
    A = sp.csc_matrix(
        sp.coo_matrix(
            ([v for _, _, v in a_rows], ([i for i, _, _ in a_rows], [j for _, j, _ in a_rows])),
            shape=(m, n),
        )
    )
    return StandardForm(P=sp.diags(2.0 * q, format="csc"), c=c, c0=c0, A=A, b=b, cones=cones)

"""Primal-dual interior-point solver on the homogeneous self-dual embedding.

Solves  min 0.5 x'Px + c.x  s.t.  Ax + s = b,  s in K,  with P diagonal
PSD and K a product of zero, nonnegative, second-order and rotated
second-order cones. The embedding tracks (x, y, s, tau, kappa) with

    r_d = Px + A'y + c tau
    r_p = Ax + s - b tau
    r_g = kappa + c.x + b.y + x'Px / tau

driven to zero along the central path s.y + tau kappa -> 0. A solution
with tau > 0 recovers the optimum as (x, y, s)/tau; tau -> 0 with
kappa > 0 yields an infeasibility or unboundedness certificate. The
quadratic term is folded into the KKT matrix directly; the nonlinear
x'Px/tau row contributes its exact Jacobian to the scalar tau equation.

Steps are Mehrotra predictor-corrector with Nesterov-Todd scaling,
computed from one quasi-definite factorization per iteration and two
extra triangular solves.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from ..errors import DimensionMismatch, IterationLimit, NumericalLimit
from .cones import make_cone
from .kkt import KktSolver
from .program import ConicProgram, StandardForm

OPTIMAL = "Optimal"
INFEASIBLE = "Infeasible"
UNBOUNDED = "Unbounded"
NUMERICAL_LIMIT = "NumericalLimit"

_STEP_DAMP = 0.99
_MIN_STEP = 1e-8


@dataclass(frozen=True)
class SolverSettings:
    tol_gap: float = 1e-8
    tol_primal: float = 1e-8
    tol_dual: float = 1e-8
    tol_infeasible: float = 1e-9
    max_iterations: int = 200
    static_regularization: float = 1e-9
    verbose: bool = False

    def __post_init__(self):
        for name in ("tol_gap", "tol_primal", "tol_dual", "tol_infeasible"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")


@dataclass(frozen=True)
class SolverCertificate:
    primal_residual: float
    dual_residual: float
    duality_gap: float
    objective_primal: float
    objective_dual: float


@dataclass
class SocSolution:
    """Solver output in the originating program's variable space."""

    x: np.ndarray
    objective_value: float
    duals: dict
    status: str
    iterations: int
    solve_seconds: float
    slacks: np.ndarray | None = None
    certificate: SolverCertificate | None = None
    # (primal objective, dual objective, primal res, dual res) per iteration
    trace: list[tuple[float, float, float, float]] = field(default_factory=list)


class _ConeSection:
    def __init__(self, kind: str, start: int, dim: int):
        self.kind = kind
        self.sl = slice(start, start + dim)
        self.cone = make_cone(kind, dim)


def _split_cones(cones: list[tuple[str, int]]) -> tuple[int, list[_ConeSection]]:
    offset = 0
    n_zero = 0
    sections: list[_ConeSection] = []
    for kind, dim in cones:
        if kind == "zero":
            n_zero += dim
        else:
            sections.append(_ConeSection(kind, offset, dim))
        offset += dim
    # zero rows must lead; the builder guarantees it, dumps are validated
    if sections and sections[0].sl.start < n_zero:
        raise ValueError("zero cone rows must precede all other cones")
    return n_zero, sections


def _wsq_matrix(m: int, n_zero: int, sections, scalings) -> sp.csc_matrix:
    rows, cols, vals = [], [], []
    for sec, scal in zip(sections, scalings):
        if sec.kind == "nonneg":
            idx = np.arange(sec.sl.start, sec.sl.stop)
            rows.extend(idx)
            cols.extend(idx)
            vals.extend(scal.wsq_diag())
        else:
            block = scal.wsq_dense()
            base = sec.sl.start
            d = block.shape[0]
            for i in range(d):
                for j in range(d):
                    rows.append(base + i)
                    cols.append(base + j)
                    vals.append(block[i, j])
    return sp.csc_matrix(sp.coo_matrix((vals, (rows, cols)), shape=(m, m)))


def solve_standard(sf: StandardForm, settings: SolverSettings | None = None) -> SocSolution:
    """Run the interior-point method on a standard-form program."""
    settings = settings or SolverSettings()
    t0 = time.perf_counter()
    P, A, b, c = sf.P, sf.A, sf.b, sf.c
    m, n = A.shape
    n_zero, sections = _split_cones(sf.cones)
    degree = sum(sec.cone.degree for sec in sections)

    norm_b = max(1.0, float(np.abs(b).max(initial=0.0)))
    norm_c = max(1.0, float(np.abs(c).max(initial=0.0)))

    x = np.zeros(n)
    y = np.zeros(m)
    s = np.zeros(m)
    for sec in sections:
        e = sec.cone.unit()
        s[sec.sl] = e
        y[sec.sl] = e
    tau, kappa = 1.0, 1.0

    kkt = KktSolver(P, A, settings.static_regularization)
    trace: list[tuple[float, float, float, float]] = []
    status = None
    stalls = 0

    def _finish(stat: str, cert=None) -> SocSolution:
        xs = x / tau if stat == OPTIMAL else x.copy()
        ss = s / tau if stat == OPTIMAL else s.copy()
        ys = y / tau if stat == OPTIMAL else y.copy()
        obj = 0.5 * float(xs @ (P @ xs)) + float(c @ xs) + sf.c0 if stat == OPTIMAL else math.nan
        return SocSolution(
            x=xs,
            objective_value=obj,
            duals={"y": ys, "n_zero": n_zero},
            status=stat,
            iterations=it,
            solve_seconds=time.perf_counter() - t0,
            slacks=ss,
            certificate=cert,
            trace=trace,
        )

    for it in range(settings.max_iterations):
        Px = P @ x
        xPx = float(x @ Px)
        r_d = Px + A.T @ y + c * tau
        r_p = A @ x + s - b * tau
        r_g = kappa + float(c @ x) + float(b @ y) + xPx / tau

        mu = (float(s @ y) + tau * kappa) / (degree + 1)

        # -- convergence bookkeeping on the tau-normalized point
        xh, yh, sh = x / tau, y / tau, s / tau
        pres = float(np.abs(A @ xh + sh - b).max(initial=0.0)) / norm_b
        dres = float(np.abs(P @ xh + A.T @ yh + c).max(initial=0.0)) / norm_c
        xPxh = xPx / (tau * tau)
        pobj = 0.5 * xPxh + float(c @ xh)
        dobj = -0.5 * xPxh - float(b @ yh)
        gap = abs(pobj - dobj) / (1.0 + max(abs(pobj), abs(dobj)))
        trace.append((pobj + sf.c0, dobj + sf.c0, pres, dres))
        if settings.verbose:
            print(
                f"  it {it:3d}  mu {mu:9.2e}  pres {pres:9.2e}  dres {dres:9.2e}"
                f"  gap {gap:9.2e}  tau {tau:8.2e}  kappa {kappa:8.2e}"
            )

        if pres <= settings.tol_primal and dres <= settings.tol_dual and gap <= settings.tol_gap:
            cert = SolverCertificate(pres, dres, gap, pobj + sf.c0, dobj + sf.c0)
            status = OPTIMAL
            return _finish(status, cert)

        # -- infeasibility and unboundedness certificates
        bty = float(b @ y)
        if bty < 0:
            quality = float(np.abs(A.T @ (y / -bty)).max(initial=0.0))
            if quality <= settings.tol_infeasible * norm_c and tau <= 1e-3 * min(1.0, kappa):
                return _finish(INFEASIBLE)
        ctx = float(c @ x)
        if ctx < 0:
            ray = x / -ctx
            q1 = float(np.abs(A @ ray + s / -ctx).max(initial=0.0))
            q2 = float(np.abs(P @ ray).max(initial=0.0))
            if (
                q1 <= settings.tol_infeasible * norm_b
                and q2 <= settings.tol_infeasible * norm_c
                and tau <= 1e-3 * min(1.0, kappa)
            ):
                return _finish(UNBOUNDED)
        if tau < 1e-12:
            raise NumericalLimit("embedding collapsed without a certificate")

        # -- Nesterov-Todd scalings and KKT factorization
        try:
            scalings = [sec.cone.compute_scaling(s[sec.sl], y[sec.sl]) for sec in sections]
        except FloatingPointError as exc:
            raise NumericalLimit(str(exc)) from None
        kkt.factor(_wsq_matrix(m, n_zero, sections, scalings))

        lam = np.zeros(m)
        for sec, scal in zip(sections, scalings):
            lam[sec.sl] = scal.lam

        rhs_static = np.r_[-c, b]
        u = kkt.solve(rhs_static)
        u_x, u_y = u[:n], u[n:]
        ctil = c + 2.0 * Px / tau
        denom = float(ctil @ u_x) + float(b @ u_y) - kappa / tau - xPx / (tau * tau)

        def direction(f_d, f_p, f_g, ds, dtk):
            d2 = f_p.copy()
            wlds = np.zeros(m)
            for sec, scal in zip(sections, scalings):
                wlds[sec.sl] = scal.apply(sec.cone.jordan_solve(scal.lam, ds[sec.sl]))
            d2[n_zero:] -= wlds[n_zero:]
            v = kkt.solve(np.r_[f_d, d2])
            v_x, v_y = v[:n], v[n:]
            dtau = (f_g - dtk / tau - float(ctil @ v_x) - float(b @ v_y)) / denom
            dx = v_x + dtau * u_x
            dy = v_y + dtau * u_y
            # recover the slack step from the primal row rather than the
            # scaled cone equation: the latter multiplies by W, whose
            # conditioning blows up as mu -> 0 and freezes the primal
            # residual around sqrt(eps)
            dsv = f_p + b * dtau - A @ dx
            dsv[:n_zero] = 0.0
            dkappa = (dtk - kappa * dtau) / tau
            return dx, dy, dsv, dtau, dkappa

        def max_step(dy, dsv, dtau, dkappa) -> float:
            alpha = math.inf
            if dtau < 0:
                alpha = min(alpha, -tau / dtau)
            if dkappa < 0:
                alpha = min(alpha, -kappa / dkappa)
            for sec in sections:
                alpha = min(alpha, sec.cone.max_step(s[sec.sl], dsv[sec.sl]))
                alpha = min(alpha, sec.cone.max_step(y[sec.sl], dy[sec.sl]))
            return alpha

        # predictor
        ds_aff = np.zeros(m)
        for sec, scal in zip(sections, scalings):
            ds_aff[sec.sl] = -sec.cone.jordan_mul(scal.lam, scal.lam)
        dx_a, dy_a, ds_a, dtau_a, dkap_a = direction(-r_d, -r_p, -r_g, ds_aff, -tau * kappa)
        alpha_aff = min(1.0, max_step(dy_a, ds_a, dtau_a, dkap_a))

        mu_aff = (
            float((s + alpha_aff * ds_a) @ (y + alpha_aff * dy_a))
            + (tau + alpha_aff * dtau_a) * (kappa + alpha_aff * dkap_a)
        ) / (degree + 1)
        sigma = min(0.9999, max(1e-8, (max(mu_aff, 0.0) / mu) ** 3))

        # corrector
        ds_comb = np.zeros(m)
        for sec, scal in zip(sections, scalings):
            corr = sec.cone.jordan_mul(
                scal.apply_inv(ds_a[sec.sl]), scal.apply(dy_a[sec.sl])
            )
            ds_comb[sec.sl] = (
                sigma * mu * sec.cone.unit()
                - sec.cone.jordan_mul(scal.lam, scal.lam)
                - corr
            )
        dtk_comb = sigma * mu - tau * kappa - dtau_a * dkap_a
        one_m_sigma = 1.0 - sigma
        dx, dy, dsv, dtau, dkappa = direction(
            -one_m_sigma * r_d, -one_m_sigma * r_p, -one_m_sigma * r_g, ds_comb, dtk_comb
        )

        alpha = min(1.0, _STEP_DAMP * max_step(dy, dsv, dtau, dkappa))
        if alpha < _MIN_STEP:
            stalls += 1
            if stalls >= 3:
                if pres <= 100 * settings.tol_primal and dres <= 100 * settings.tol_dual:
                    cert = SolverCertificate(pres, dres, gap, pobj + sf.c0, dobj + sf.c0)
                    return _finish(NUMERICAL_LIMIT, cert)
                raise NumericalLimit(
                    f"step length collapsed at iteration {it} (pres {pres:.1e}, dres {dres:.1e})"
                )
        else:
            stalls = 0

        x += alpha * dx
        y += alpha * dy
        s += alpha * dsv
        tau += alpha * dtau
        kappa += alpha * dkappa

    raise IterationLimit(
        f"no convergence in {settings.max_iterations} iterations "
        f"(pres {pres:.1e}, dres {dres:.1e}, gap {gap:.1e})"
    )


def solve(prog: ConicProgram, settings: SolverSettings | None = None) -> SocSolution:
    """Solve a block conic program with the embedded interior-point method."""
    sf = prog.standard_form()
    sol = solve_standard(sf, settings)
    if sol.status == OPTIMAL:
        sol.objective_value = prog.objective(sol.x)
    return sol


def check_certificate(prog: ConicProgram, sol: SocSolution) -> SolverCertificate:
    """Recompute optimality residuals from program data, independent of solver state."""
    if len(sol.x) != prog.n:
        raise DimensionMismatch(
            f"solution has {len(sol.x)} variables, program has {prog.n}"
        )
    sf = prog.standard_form()
    y = sol.duals["y"]
    if len(y) != sf.m:
        raise DimensionMismatch(f"dual vector has {len(y)} rows, program has {sf.m}")
    x = sol.x
    viol = prog.check_point(x)
    pres = max(viol.values()) / max(1.0, float(np.abs(sf.b).max(initial=0.0)))
    dual_vec = sf.P @ x + sf.A.T @ y + sf.c
    dres = float(np.abs(dual_vec).max(initial=0.0)) / max(
        1.0, float(np.abs(sf.c).max(initial=0.0))
    )
    xpx = 0.5 * float(x @ (sf.P @ x))
    pobj = xpx + float(sf.c @ x) + sf.c0
    dobj = -xpx - float(sf.b @ y) + sf.c0
    gap = abs(pobj - dobj) / (1.0 + max(abs(pobj), abs(dobj)))
    return SolverCertificate(pres, dres, gap, pobj, dobj)

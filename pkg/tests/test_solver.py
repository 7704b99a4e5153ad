"""Conic solver tests against independently constructed optima.

Random feasible programs are generated from a known KKT point: pick the
optimal primal/dual pair first (complementary per cone), then derive
(b, c) so that the pair is stationary. The optimal objective is then
known in closed form before the solver runs.
"""

import math

import numpy as np
import pytest

from socopf.conic import (
    INFEASIBLE,
    OPTIMAL,
    UNBOUNDED,
    ConicProgram,
    SolverSettings,
    check_certificate,
    dump_program,
    parse_dump,
    solve,
    solve_standard,
)
from socopf.conic.cones import rotate_to_soc
from socopf.conic.program import StandardForm
from socopf.errors import IterationLimit

import scipy.sparse as sp


def _complementary_pair(rng, kind, dim):
    """Strictly complementary (s, z) in the given cone and its dual."""
    if kind == "nonneg":
        mask = rng.random(dim) < 0.5
        s = np.where(mask, rng.uniform(0.2, 2.0, dim), 0.0)
        z = np.where(~mask, rng.uniform(0.2, 2.0, dim), 0.0)
        return s, z
    # soc / rsoc: interior-vs-zero or a boundary pair
    style = rng.integers(0, 3)
    if style == 0:
        s = np.r_[2.0 + rng.random(), rng.uniform(-0.5, 0.5, dim - 1)]
        z = np.zeros(dim)
    elif style == 1:
        s = np.zeros(dim)
        z = np.r_[2.0 + rng.random(), rng.uniform(-0.5, 0.5, dim - 1)]
    else:
        w = rng.uniform(-1.0, 1.0, dim - 1)
        nw = np.linalg.norm(w)
        s = np.r_[nw, w]
        z = (0.5 + rng.random()) * np.r_[nw, -w]
    if kind == "rsoc":
        s, z = rotate_to_soc(s), rotate_to_soc(z)
    return s, z


def random_standard_form(rng, n=None, quadratic=True):
    n = n or int(rng.integers(4, 21))
    cones = [("zero", int(rng.integers(1, 3)))]
    cones.append(("nonneg", int(rng.integers(1, 6))))
    while True:
        room = 24 - sum(d for _, d in cones)
        if room < 3 or rng.random() < 0.3 and len(cones) > 2:
            break
        kind = "soc" if rng.random() < 0.5 else "rsoc"
        cones.append((kind, int(rng.integers(3, min(6, room) + 1))))
    m = sum(d for _, d in cones)

    A = sp.csc_matrix(rng.normal(size=(m, n)) * (rng.random((m, n)) < 0.7))
    x_star = rng.normal(size=n)
    s_star = np.zeros(m)
    z_star = np.zeros(m)
    r = 0
    for kind, dim in cones:
        if kind == "zero":
            z_star[r:r + dim] = rng.normal(size=dim)
        else:
            s, z = _complementary_pair(rng, kind, dim)
            s_star[r:r + dim] = s
            z_star[r:r + dim] = z
        r += dim
    q = rng.uniform(0.1, 1.0, n) * quadratic
    P = sp.diags(2.0 * q, format="csc")
    b = A @ x_star + s_star
    c = -(P @ x_star) - A.T @ z_star
    sf = StandardForm(P=P, c=c, c0=0.0, A=A, b=b, cones=cones)
    obj_star = 0.5 * float(x_star @ (P @ x_star)) + float(c @ x_star)
    return sf, x_star, obj_star


def test_box_lp():
    prog = ConicProgram(1)
    prog.set_objective_term(0, lin=1.0)
    prog.set_bounds(0, 1.0, math.inf)
    sol = solve(prog)
    assert sol.status == OPTIMAL
    assert sol.objective_value == pytest.approx(1.0, abs=1e-7)
    assert sol.x[0] == pytest.approx(1.0, abs=1e-7)


def test_loss_cone_forced_tight():
    # min q_o subject to q_o * V >= (p^2 + q^2) * X with p=3, q=4, V=1, X=1
    prog = ConicProgram(4)  # q_o, V, p, q
    prog.set_objective_term(0, lin=1.0)
    prog.set_bounds(1, 1.0, 1.0)
    prog.set_bounds(2, 3.0, 3.0)
    prog.set_bounds(3, 4.0, 4.0)
    x_val = 1.0  # branch reactance folded into the v expression
    prog.add_rsoc(({0: 1.0}, 0.0), ({1: 0.5 / x_val}, 0.0), [({2: 1.0}, 0.0), ({3: 1.0}, 0.0)])
    sol = solve(prog)
    assert sol.status == OPTIMAL
    assert sol.x[0] == pytest.approx(25.0, abs=1e-6)


def test_analytic_soc_projection():
    # min t subject to t >= ||(3, 4)||: optimum 5
    prog = ConicProgram(3)
    prog.set_objective_term(0, lin=1.0)
    prog.set_bounds(1, 3.0, 3.0)
    prog.set_bounds(2, 4.0, 4.0)
    prog.add_soc(({0: 1.0}, 0.0), [({1: 1.0}, 0.0), ({2: 1.0}, 0.0)])
    sol = solve(prog)
    assert sol.status == OPTIMAL
    assert sol.objective_value == pytest.approx(5.0, abs=1e-6)


def test_random_socps_match_constructed_optimum():
    rng = np.random.default_rng(7)
    for trial in range(50):
        sf, x_star, obj_star = random_standard_form(rng, quadratic=trial % 2 == 0)
        sol = solve_standard(sf)
        assert sol.status == OPTIMAL, f"trial {trial}"
        assert sol.objective_value == pytest.approx(obj_star, abs=1e-6 * max(1, abs(obj_star))), (
            f"trial {trial}"
        )


def test_weak_duality_along_trace():
    rng = np.random.default_rng(3)
    sf, _, _ = random_standard_form(rng)
    sol = solve_standard(sf)
    pobj, dobj, pres, dres = sol.trace[-1]
    assert dobj <= pobj + 1e-9
    for pobj, dobj, pres, dres in sol.trace:
        # weak duality holds up to the feasibility error of the iterate
        assert dobj <= pobj + 1e-9 + 10.0 * (pres + dres)


def test_objective_scaling_invariance():
    rng = np.random.default_rng(11)
    sf, _, _ = random_standard_form(rng, n=8)
    sol1 = solve_standard(sf)
    scaled = StandardForm(
        P=(sf.P * 50.0).tocsc(), c=50.0 * sf.c, c0=0.0, A=sf.A, b=sf.b, cones=sf.cones
    )
    sol2 = solve_standard(scaled)
    assert np.allclose(sol1.x, sol2.x, atol=1e-6)


def test_cone_membership_of_returned_slacks():
    rng = np.random.default_rng(5)
    sf, _, _ = random_standard_form(rng)
    sol = solve_standard(sf)
    r = 0
    from socopf.conic.cones import rsoc_residual, soc_residual

    for kind, dim in sf.cones:
        block = sol.slacks[r:r + dim]
        if kind == "zero":
            assert np.abs(block).max() <= 1e-7
        elif kind == "nonneg":
            assert block.min() >= -1e-9
        elif kind == "soc":
            assert soc_residual(block) >= -1e-9
        else:
            assert rsoc_residual(block) >= -1e-9
        r += dim


def test_certificate_roundtrip_and_perturbation():
    prog = ConicProgram(1)
    prog.set_objective_term(0, lin=1.0)
    prog.set_bounds(0, 1.0, math.inf)
    sol = solve(prog)
    cert = check_certificate(prog, sol)
    assert cert.duality_gap <= 1e-8
    sol.x = sol.x + 1e-3
    cert2 = check_certificate(prog, sol)
    assert cert2.dual_residual >= 1e-4 or cert2.primal_residual >= 1e-4 or cert2.duality_gap >= 1e-4


def test_infeasible_program_detected():
    # x >= 2 and x <= 1 cannot hold
    prog = ConicProgram(1)
    prog.set_objective_term(0, lin=1.0)
    prog.add_nonneg({0: 1.0}, -2.0)
    prog.add_nonneg({0: -1.0}, 1.0)
    sol = solve(prog)
    assert sol.status == INFEASIBLE


def test_unbounded_program_detected():
    prog = ConicProgram(1)
    prog.set_objective_term(0, lin=-1.0)
    prog.set_bounds(0, 0.0, math.inf)
    sol = solve(prog)
    assert sol.status == UNBOUNDED


def test_dump_roundtrip_preserves_solution():
    rng = np.random.default_rng(13)
    for _ in range(5):
        sf, _, _ = random_standard_form(rng)
        sol1 = solve_standard(sf)
        sol2 = solve_standard(parse_dump(_dump_standard(sf)))
        assert sol2.status == OPTIMAL
        assert sol2.objective_value == pytest.approx(sol1.objective_value, abs=1e-6)


def _dump_standard(sf: StandardForm) -> str:
    """Dump helper mirroring dump_program for raw standard forms."""
    import io

    out = io.StringIO()
    out.write("SOCOPF CONIC DUMP 1\n")
    out.write(f"{sf.n} {sf.m}\n{float(sf.c0)!r}\n")
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


def test_settings_validation():
    with pytest.raises(ValueError):
        SolverSettings(tol_gap=0.0)

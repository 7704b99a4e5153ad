"""Relaxation-gap measurement, load sweeps, and load-increase tightening.

The gap of a branch is the slack of its loss cone at the solved point,
measured with sending-end quantities:

    gap_po = p_o - (p_s^2 + q_s^2) / V_s * R
    gap_qo = q_o - (p_s^2 + q_s^2) / V_s * X

A solution is tight when every gap is zero; tightness is what allows the
exact AC recovery map. When gaps remain, re-solving with generation fixed
and loads free to grow above their current values drives the gaps to the
solver floor without changing the dispatch cost.
"""

from __future__ import annotations

import concurrent.futures
import os
from dataclasses import asdict, dataclass, field

import numpy as np

from .conic import OPTIMAL, SolverSettings, solve
from .conic.solver import SocSolution
from .errors import SocopfError, TightenInfeasible
from .formulation import FormulationOptions, VariableMap, build_soc_acopf, build_tightening_program, soc_point
from .network import Network, scale_loads, with_loads
from .recovery import RecoveryOutcome, branch_gaps, recover_ac_point


@dataclass(frozen=True)
class BranchGap:
    branch: int
    gap_po: float
    gap_qo: float


@dataclass
class GapReport:
    per_branch: list[BranchGap]
    gap_po_max: float
    gap_qo_max: float
    argmax_branch: int
    objective: float
    load_factor: float
    tightened: bool
    load_increase_p: list[float] = field(default_factory=list)
    load_increase_q: list[float] = field(default_factory=list)

    def to_dict(self) -> dict:
        out = asdict(self)
        out["per_branch"] = [asdict(b) for b in self.per_branch]
        return out

    @classmethod
    def from_dict(cls, payload: dict) -> "GapReport":
        data = dict(payload)
        data["per_branch"] = [BranchGap(**b) for b in payload["per_branch"]]
        return cls(**data)


def compute_gaps(
    net: Network,
    sol: SocSolution,
    vmap: VariableMap,
    load_factor: float = 1.0,
    tightened: bool = False,
    load_increase_p=None,
    load_increase_q=None,
) -> GapReport:
    """Per-branch and maximum relaxation gaps at an optimal solution."""
    pt = soc_point(vmap, sol.x)
    gap_po, gap_qo = branch_gaps(net, pt)
    per_branch = [
        BranchGap(branch=l, gap_po=float(gap_po[l]), gap_qo=float(gap_qo[l]))
        for l in range(net.n_branch)
    ]
    argmax = int(np.argmax(gap_qo)) if net.n_branch else -1
    return GapReport(
        per_branch=per_branch,
        gap_po_max=float(gap_po.max(initial=0.0)),
        gap_qo_max=float(gap_qo.max(initial=0.0)),
        argmax_branch=argmax,
        objective=float(sol.objective_value),
        load_factor=load_factor,
        tightened=tightened,
        load_increase_p=list(load_increase_p) if load_increase_p is not None else [0.0] * net.n_bus,
        load_increase_q=list(load_increase_q) if load_increase_q is not None else [0.0] * net.n_bus,
    )


def tighten_by_load_increase(
    net: Network,
    sol: SocSolution,
    vmap: VariableMap,
    options: FormulationOptions | None = None,
    settings: SolverSettings | None = None,
    load_factor: float = 1.0,
    tight_tol: float = 1e-6,
) -> tuple[Network, SocSolution, GapReport]:
    """Drive the relaxation gaps to zero by letting loads grow.

    Generation is pinned to the solved dispatch, loads become variables
    bounded below by their current values, and total reactive losses are
    minimized. The dispatch cost is unchanged by construction; bus loads
    never decrease. An already-tight solution is returned as-is.
    """
    base_report = compute_gaps(net, sol, vmap, load_factor=load_factor)
    if max(base_report.gap_po_max, base_report.gap_qo_max) <= tight_tol:
        return net, sol, base_report

    pt = soc_point(vmap, sol.x)
    prog, vmap2 = build_tightening_program(net, pt["p_gen"], options)
    sol2 = solve(prog, settings)
    if sol2.status != OPTIMAL:
        raise TightenInfeasible(
            f"tightening re-solve ended {sol2.status}: the fixed dispatch "
            "cannot support any load increase"
        )
    pt2 = soc_point(vmap2, sol2.x)
    p_d0 = np.array([b.p_d for b in net.buses])
    q_d0 = np.array([b.q_d for b in net.buses])
    tightened_net = with_loads(net, pt2["p_load"], pt2["q_load"])

    # report the original dispatch cost, not the loss objective
    sol2.objective_value = net.cost_of(pt2["p_gen"])
    report = compute_gaps(
        tightened_net,
        sol2,
        vmap2,
        load_factor=load_factor,
        tightened=True,
        load_increase_p=(pt2["p_load"] - p_d0).tolist(),
        load_increase_q=(pt2["q_load"] - q_d0).tolist(),
    )
    return tightened_net, sol2, report


@dataclass
class SweepItem:
    factor: float
    solution: SocSolution | None
    report: GapReport | None
    recovery: RecoveryOutcome | None
    error: str | None = None


def _sweep_workers(n_items: int) -> int:
    cap = os.environ.get("SOCOPF_THREADS")
    if cap is not None:
        return max(1, min(n_items, int(cap)))
    return max(1, min(n_items, os.cpu_count() or 1))


def load_sweep(
    net: Network,
    factors: list[float],
    options: FormulationOptions | None = None,
    settings: SolverSettings | None = None,
) -> list[SweepItem]:
    """Solve, recover and measure gaps at each load factor independently.

    Factors run in parallel up to the SOCOPF_THREADS cap; per-factor
    failures are recorded on their item without aborting the rest.
    """
    if sorted(factors) != list(factors):
        raise ValueError("load factors must be sorted ascending")
    if any(f < 0 for f in factors):
        raise ValueError("load factors must be nonnegative")

    def run(factor: float) -> SweepItem:
        try:
            scaled = scale_loads(net, factor)
            prog, vmap = build_soc_acopf(scaled, options)
            sol = solve(prog, settings)
            if sol.status != OPTIMAL:
                return SweepItem(factor, sol, None, None, error=f"solver status {sol.status}")
            report = compute_gaps(scaled, sol, vmap, load_factor=factor)
            try:
                _, outcome = recover_ac_point(scaled, sol, vmap)
            except SocopfError as exc:
                return SweepItem(factor, sol, report, None, error=str(exc))
            return SweepItem(factor, sol, report, outcome)
        except SocopfError as exc:
            return SweepItem(factor, None, None, None, error=str(exc))

    workers = _sweep_workers(len(factors))
    if workers == 1:
        return [run(f) for f in factors]
    with concurrent.futures.ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(run, factors))


def objectives_nondecreasing(items: list[SweepItem], slack: float = 1e-7) -> bool:
    objs = [it.solution.objective_value for it in items if it.solution is not None]
    return all(b >= a - slack for a, b in zip(objs, objs[1:]))

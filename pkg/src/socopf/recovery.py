"""Mapping relaxed solutions back to AC operating points.

A solved relaxation carries squared voltages and a linearized branch
angle variable. When the per-branch condition

    V_s V_r sin^2(theta_max) >= theta_l^2

holds, the inverse map  v = sqrt(V),  theta_l = arcsin(theta_l / (v_s v_r))
is well defined; nodal angles are then rebuilt along a spanning tree and
every chord is checked for loop consistency (the per-branch arcsin has no
reason to close cycles exactly, so this is verified, never assumed).

When additionally every loss cone is tight, the mapped point is not just
AC-feasible but a certified global optimum of the nonconvex model, since
the convex model bounds it from below and the map preserves the
objective.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .conic.solver import SocSolution
from .errors import ConditionViolated
from .formulation import AcPoint, ResidualRecord, VariableMap, eval_oacopf_residuals, soc_point
from .network import Network, spanning_tree

TIGHT_TOL = 1e-6
FEAS_TOL = 1e-6
CYCLE_TOL = 1e-6
_CLIP_TOL = 1e-9

GLOBAL_OPTIMUM = "GlobalOptimum"
FEASIBLE_ONLY = "FeasibleOnly"
CONDITION_VIOLATED = "ConditionViolated"
CYCLE_INCONSISTENT = "CycleInconsistent"


@dataclass
class RecoveredAcSolution:
    point: AcPoint
    max_residuals: ResidualRecord
    objective: float
    is_feasible: bool
    is_global_certificate: bool


@dataclass
class RecoveryOutcome:
    status: str
    violated_branches: list[int]


def check_recovery_condition(net: Network, sol: SocSolution, vmap: VariableMap) -> np.ndarray:
    """Per-branch margins V_s V_r sin^2(theta_max) - theta_l^2."""
    pt = soc_point(vmap, sol.x)
    margins = np.empty(net.n_branch)
    for br in net.branches:
        vs = pt["v_sq"][br.from_bus]
        vr = pt["v_sq"][br.to_bus]
        margins[br.index] = vs * vr * math.sin(br.theta_max) ** 2 - pt["theta_br"][br.index] ** 2
    return margins


def branch_gaps(net: Network, pt: dict) -> tuple[np.ndarray, np.ndarray]:
    """Loss-cone slacks (gap_po, gap_qo) per branch at a solved point."""
    f = np.array([br.from_bus for br in net.branches])
    r = np.array([br.r for br in net.branches])
    x = np.array([br.x for br in net.branches])
    cur = (pt["p_s"] ** 2 + pt["q_s"] ** 2) / pt["v_sq"][f]
    return pt["p_o"] - cur * r, pt["q_o"] - cur * x


def recover_ac_point(
    net: Network,
    sol: SocSolution,
    vmap: VariableMap,
    tight_tol: float = TIGHT_TOL,
    feas_tol: float = FEAS_TOL,
    cycle_tol: float = CYCLE_TOL,
) -> tuple[RecoveredAcSolution, RecoveryOutcome]:
    """Map an optimal relaxed solution to a candidate AC point and classify it."""
    pt = soc_point(vmap, sol.x)
    v = np.sqrt(np.maximum(pt["v_sq"], 0.0))

    theta_br = np.empty(net.n_branch)
    violated: list[int] = []
    for br in net.branches:
        ratio = pt["theta_br"][br.index] / (v[br.from_bus] * v[br.to_bus])
        if abs(ratio) > 1.0 + _CLIP_TOL:
            violated.append(br.index)
            ratio = max(-1.0, min(1.0, ratio))
        theta_br[br.index] = math.asin(max(-1.0, min(1.0, ratio)))
    if violated:
        raise ConditionViolated(
            f"arcsin undefined on branches {violated}; the relaxed angle exceeds "
            "v_s v_r beyond tolerance"
        )

    theta_bus = np.zeros(net.n_bus)
    for br, orient in spanning_tree(net):
        if orient > 0:
            theta_bus[br.to_bus] = theta_bus[br.from_bus] - theta_br[br.index]
        else:
            theta_bus[br.from_bus] = theta_bus[br.to_bus] + theta_br[br.index]
    theta_bus -= theta_bus[net.ref_bus]

    in_tree = {br.index for br, _ in spanning_tree(net)}
    cycle_bad = [
        br.index
        for br in net.branches
        if br.index not in in_tree
        and abs(theta_br[br.index] - (theta_bus[br.from_bus] - theta_bus[br.to_bus]))
        > cycle_tol
    ]

    point = AcPoint(
        p_gen=pt["p_gen"].copy(),
        q_gen=pt["q_gen"].copy(),
        p_s=pt["p_s"].copy(),
        q_s=pt["q_s"].copy(),
        p_o=pt["p_o"].copy(),
        q_o=pt["q_o"].copy(),
        v_sq=pt["v_sq"].copy(),
        v=v,
        theta_br=theta_br,
        theta_bus=theta_bus,
    )
    residuals = eval_oacopf_residuals(net, point)
    _, gap_qo = branch_gaps(net, pt)
    tight = bool(np.all(np.abs(gap_qo) <= tight_tol))
    feasible = residuals.feasible(feas_tol)
    objective = net.cost_of(point.p_gen)

    if cycle_bad:
        status = CYCLE_INCONSISTENT
    elif tight and feasible and residuals.cycle <= cycle_tol:
        status = GLOBAL_OPTIMUM
    else:
        status = FEASIBLE_ONLY

    recovered = RecoveredAcSolution(
        point=point,
        max_residuals=residuals,
        objective=objective,
        is_feasible=feasible,
        is_global_certificate=status == GLOBAL_OPTIMUM,
    )
    return recovered, RecoveryOutcome(status=status, violated_branches=cycle_bad)

"""Assembly of the SOC-ACOPF conic program and AC-model residual evaluation.

Variables are, in order: active and reactive power per generator, then
per branch the sending-end flows (p_s, q_s), losses (p_o, q_o) and angle
difference, then per bus the squared voltage magnitude and nodal angle.

The convex model couples them through

* nodal active/reactive balance with shunt terms G V and -B V;
* the voltage-drop row  V_s - V_r = 2R p_s + 2X q_s - R p_o - X q_o;
* the loss cone  q_o V_s >= (p_s^2 + q_s^2) X  as a rotated cone;
* the loss coupling  p_o X = q_o R;
* the linearized angle row  theta_l = X p_s - R q_s  with
  theta_l = theta_s - theta_r;
* optionally the recovery cone  V_s V_r sin^2(theta_max) >= theta_l^2
  and the loss-ampacity bound  q_o <= (K - V_s B_s^2 + 2 q_s B_s) X.

The nonconvex AC model keeps voltage magnitudes and the exact sine and
loss equations; it is evaluated here only as residuals at a given point.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .conic.program import ConicProgram
from .conic.solver import SocSolution  # noqa: F401  (re-exported solver output type)
from .errors import AsymmetricAngleBounds, DimensionMismatch
from .network import Branch, Network, spanning_tree

_SQRT2 = math.sqrt(2.0)


@dataclass(frozen=True)
class VariableMap:
    """Offsets of each variable family inside the flat vector."""

    n_gen: int
    n_branch: int
    n_bus: int
    n_load: int = 0   # nonzero only in the tightening variant

    @property
    def dim(self) -> int:
        return 2 * self.n_gen + 5 * self.n_branch + 2 * self.n_bus + 2 * self.n_load

    def p_gen(self, i: int) -> int:
        return i

    def q_gen(self, i: int) -> int:
        return self.n_gen + i

    def p_s(self, l: int) -> int:
        return 2 * self.n_gen + l

    def q_s(self, l: int) -> int:
        return 2 * self.n_gen + self.n_branch + l

    def p_o(self, l: int) -> int:
        return 2 * self.n_gen + 2 * self.n_branch + l

    def q_o(self, l: int) -> int:
        return 2 * self.n_gen + 3 * self.n_branch + l

    def theta_br(self, l: int) -> int:
        return 2 * self.n_gen + 4 * self.n_branch + l

    def v_sq(self, n: int) -> int:
        return 2 * self.n_gen + 5 * self.n_branch + n

    def theta_bus(self, n: int) -> int:
        return 2 * self.n_gen + 5 * self.n_branch + self.n_bus + n

    def p_load(self, n: int) -> int:
        if not self.n_load:
            raise IndexError("program has no load variables")
        return 2 * self.n_gen + 5 * self.n_branch + 2 * self.n_bus + n

    def q_load(self, n: int) -> int:
        if not self.n_load:
            raise IndexError("program has no load variables")
        return 2 * self.n_gen + 5 * self.n_branch + 2 * self.n_bus + self.n_load + n


@dataclass(frozen=True)
class FormulationOptions:
    include_recovery_cone: bool = True
    include_loss_ampacity: bool = True
    include_receiving_cone: bool = False


def compute_k_ol(branch: Branch, v_s: float, q_s: float) -> float:
    """Loss upper bound from the branch ampacity.

    The measurable current differs from the series current by the shunt
    injection; expressing the manufacturer limit K on the series current
    and multiplying by X gives a bound on q_o that is linear in the
    squared sending voltage and the sending reactive flow:

        k_ol = (K - V_s B_s^2 + 2 q_s B_s) X
    """
    return (branch.k_tilde - v_s * branch.b_s ** 2 + 2.0 * q_s * branch.b_s) * branch.x


def _balance_rows(net: Network, vmap: VariableMap, prog: ConicProgram) -> None:
    for bus in net.buses:
        p_row: dict[int, float] = {}
        q_row: dict[int, float] = {}
        for g in net.gens_at(bus.index):
            p_row[vmap.p_gen(g.index)] = 1.0
            q_row[vmap.q_gen(g.index)] = 1.0
        for br in net.branches:
            if br.from_bus == bus.index:
                p_row[vmap.p_s(br.index)] = p_row.get(vmap.p_s(br.index), 0.0) - 1.0
                q_row[vmap.q_s(br.index)] = q_row.get(vmap.q_s(br.index), 0.0) - 1.0
            if br.to_bus == bus.index:
                p_row[vmap.p_s(br.index)] = p_row.get(vmap.p_s(br.index), 0.0) + 1.0
                p_row[vmap.p_o(br.index)] = p_row.get(vmap.p_o(br.index), 0.0) - 1.0
                q_row[vmap.q_s(br.index)] = q_row.get(vmap.q_s(br.index), 0.0) + 1.0
                q_row[vmap.q_o(br.index)] = q_row.get(vmap.q_o(br.index), 0.0) - 1.0
        v = vmap.v_sq(bus.index)
        if bus.g_shunt != 0.0:
            p_row[v] = p_row.get(v, 0.0) - bus.g_shunt
        if bus.b_shunt != 0.0:
            q_row[v] = q_row.get(v, 0.0) + bus.b_shunt
        if vmap.n_load:
            p_row[vmap.p_load(bus.index)] = -1.0
            q_row[vmap.q_load(bus.index)] = -1.0
            prog.add_eq(p_row, 0.0)
            prog.add_eq(q_row, 0.0)
        else:
            prog.add_eq(p_row, bus.p_d)
            prog.add_eq(q_row, bus.q_d)


def _branch_rows(net: Network, vmap: VariableMap, prog: ConicProgram, options: FormulationOptions) -> None:
    for br in net.branches:
        l = br.index
        s, r = br.from_bus, br.to_bus
        # voltage drop along the series element
        prog.add_eq(
            {
                vmap.v_sq(s): 1.0,
                vmap.v_sq(r): -1.0,
                vmap.p_s(l): -2.0 * br.r,
                vmap.q_s(l): -2.0 * br.x,
                vmap.p_o(l): br.r,
                vmap.q_o(l): br.x,
            },
            0.0,
        )
        # angle difference definition and its linearized flow coupling
        prog.add_eq(
            {vmap.theta_br(l): 1.0, vmap.theta_bus(s): -1.0, vmap.theta_bus(r): 1.0},
            0.0,
        )
        prog.add_eq(
            {vmap.theta_br(l): 1.0, vmap.p_s(l): -br.x, vmap.q_s(l): br.r}, 0.0
        )
        # active losses track reactive losses through the impedance ratio
        prog.add_eq({vmap.p_o(l): br.x, vmap.q_o(l): -br.r}, 0.0)
        # loss cone: q_o * V_s / X >= p_s^2 + q_s^2
        prog.add_rsoc(
            ({vmap.q_o(l): 1.0}, 0.0),
            ({vmap.v_sq(s): 0.5 / br.x}, 0.0),
            [({vmap.p_s(l): 1.0}, 0.0), ({vmap.q_s(l): 1.0}, 0.0)],
        )
        if options.include_receiving_cone:
            prog.add_rsoc(
                ({vmap.q_o(l): 1.0}, 0.0),
                ({vmap.v_sq(r): 0.5 / br.x}, 0.0),
                [
                    ({vmap.p_s(l): 1.0, vmap.p_o(l): -1.0}, 0.0),
                    ({vmap.q_s(l): 1.0, vmap.q_o(l): -1.0}, 0.0),
                ],
            )
        if options.include_recovery_cone:
            if not 0.0 < br.theta_max < math.pi / 2:
                raise AsymmetricAngleBounds(
                    f"branch {l}: recovery cone needs symmetric bounds inside "
                    f"(-pi/2, pi/2), got theta_max {br.theta_max:g}"
                )
            sin_max = math.sin(br.theta_max)
            prog.add_rsoc(
                ({vmap.v_sq(s): sin_max / _SQRT2}, 0.0),
                ({vmap.v_sq(r): sin_max / _SQRT2}, 0.0),
                [({vmap.theta_br(l): 1.0}, 0.0)],
            )
        if options.include_loss_ampacity:
            if math.isinf(br.k_tilde):
                prog.warnings.append(
                    f"branch {l}: unlimited ampacity, loss bound omitted"
                )
            else:
                # q_o <= (K - V_s B_s^2 + 2 q_s B_s) X
                prog.add_nonneg(
                    {
                        vmap.q_o(l): -1.0,
                        vmap.v_sq(s): -br.x * br.b_s ** 2,
                        vmap.q_s(l): 2.0 * br.x * br.b_s,
                    },
                    br.k_tilde * br.x,
                )


def _bounds(net: Network, vmap: VariableMap, prog: ConicProgram) -> None:
    for g in net.generators:
        prog.set_bounds(vmap.p_gen(g.index), g.p_min, g.p_max)
        prog.set_bounds(vmap.q_gen(g.index), g.q_min, g.q_max)
    for br in net.branches:
        prog.set_bounds(vmap.theta_br(br.index), -br.theta_max, br.theta_max)
    for bus in net.buses:
        prog.set_bounds(vmap.v_sq(bus.index), bus.v_min ** 2, bus.v_max ** 2)
        if bus.index == net.ref_bus:
            prog.set_bounds(vmap.theta_bus(bus.index), 0.0, 0.0)
        else:
            lo = bus.theta_min if math.isfinite(bus.theta_min) else -math.inf
            hi = bus.theta_max if math.isfinite(bus.theta_max) else math.inf
            if math.isfinite(lo) or math.isfinite(hi):
                prog.set_bounds(vmap.theta_bus(bus.index), lo, hi)


def build_soc_acopf(
    net: Network, options: FormulationOptions | None = None
) -> tuple[ConicProgram, VariableMap]:
    """Assemble the convex model; returns the program and its variable map."""
    options = options or FormulationOptions()
    vmap = VariableMap(len(net.generators), net.n_branch, net.n_bus)
    prog = ConicProgram(vmap.dim)
    prog.warnings = []
    for g in net.generators:
        prog.set_objective_term(vmap.p_gen(g.index), quad=g.alpha, lin=g.beta)
        prog.add_constant(g.gamma)
    _balance_rows(net, vmap, prog)
    _branch_rows(net, vmap, prog, options)
    _bounds(net, vmap, prog)
    return prog, vmap


def build_tightening_program(
    net: Network,
    p_fixed: np.ndarray,
    options: FormulationOptions | None = None,
) -> tuple[ConicProgram, VariableMap]:
    """Variant used by the load-increase tightening step.

    Per-generator active power is pinned to ``p_fixed``, loads become
    variables bounded below by the network's current loads, and the
    objective switches to total reactive losses. Any residual cone slack
    then permits a strict objective decrease, so the re-solve lands on a
    tight point whose dispatch cost is unchanged.
    """
    options = options or FormulationOptions()
    vmap = VariableMap(len(net.generators), net.n_branch, net.n_bus, n_load=net.n_bus)
    prog = ConicProgram(vmap.dim)
    prog.warnings = []
    for br in net.branches:
        prog.set_objective_term(vmap.q_o(br.index), lin=1.0)
    _balance_rows(net, vmap, prog)
    _branch_rows(net, vmap, prog, options)
    _bounds(net, vmap, prog)
    for g in net.generators:
        # solver output can overshoot the box by roundoff; a pin outside
        # the box would make the program (weakly) infeasible
        pin = min(max(float(p_fixed[g.index]), g.p_min), g.p_max)
        prog.set_bounds(vmap.p_gen(g.index), pin, pin)
    for bus in net.buses:
        prog.set_bounds(vmap.p_load(bus.index), bus.p_d, math.inf)
        prog.set_bounds(vmap.q_load(bus.index), bus.q_d, math.inf)
    return prog, vmap


# -- AC-model evaluation -----------------------------------------------------


@dataclass
class AcPoint:
    """A full operating point of the nonconvex model."""

    p_gen: np.ndarray
    q_gen: np.ndarray
    p_s: np.ndarray
    q_s: np.ndarray
    p_o: np.ndarray
    q_o: np.ndarray
    v_sq: np.ndarray
    v: np.ndarray
    theta_br: np.ndarray
    theta_bus: np.ndarray

    def check_shape(self, net: Network) -> None:
        sizes = {
            "p_gen": (self.p_gen, len(net.generators)),
            "q_gen": (self.q_gen, len(net.generators)),
            "p_s": (self.p_s, net.n_branch),
            "q_s": (self.q_s, net.n_branch),
            "p_o": (self.p_o, net.n_branch),
            "q_o": (self.q_o, net.n_branch),
            "v_sq": (self.v_sq, net.n_bus),
            "v": (self.v, net.n_bus),
            "theta_br": (self.theta_br, net.n_branch),
            "theta_bus": (self.theta_bus, net.n_bus),
        }
        for name, (arr, want) in sizes.items():
            if len(arr) != want:
                raise DimensionMismatch(f"{name} has {len(arr)} entries, expected {want}")


@dataclass
class ResidualRecord:
    """Max absolute residual per constraint family of the AC model."""

    balance_p: float
    balance_q: float
    vdrop: float
    sine: float
    v_square: float
    angle_def: float
    loss_p: float
    loss_q: float
    ampacity: float
    bounds: float
    cycle: float

    def worst(self) -> float:
        return max(vars(self).values())

    def feasible(self, tol: float) -> bool:
        return self.worst() <= tol


def _wrap_angle(a: float) -> float:
    return (a + math.pi) % (2.0 * math.pi) - math.pi


def eval_oacopf_residuals(net: Network, pt: AcPoint) -> ResidualRecord:
    """Evaluate every constraint family of the nonconvex model at a point."""
    pt.check_shape(net)
    f = np.array([br.from_bus for br in net.branches])
    t = np.array([br.to_bus for br in net.branches])
    r = np.array([br.r for br in net.branches])
    x = np.array([br.x for br in net.branches])
    b_s = np.array([br.b_s for br in net.branches])
    b_r = np.array([br.b_r for br in net.branches])
    k = np.array([br.k_tilde for br in net.branches])

    v_s, v_r = pt.v[f], pt.v[t]
    vs_sq, vr_sq = pt.v_sq[f], pt.v_sq[t]

    inj_p = np.zeros(net.n_bus)
    inj_q = np.zeros(net.n_bus)
    for g in net.generators:
        inj_p[g.bus] += pt.p_gen[g.index]
        inj_q[g.bus] += pt.q_gen[g.index]
    flow_p = np.zeros(net.n_bus)
    flow_q = np.zeros(net.n_bus)
    np.add.at(flow_p, f, pt.p_s)
    np.add.at(flow_p, t, -(pt.p_s - pt.p_o))
    np.add.at(flow_q, f, pt.q_s)
    np.add.at(flow_q, t, -(pt.q_s - pt.q_o))
    g_n = np.array([b.g_shunt for b in net.buses])
    b_n = np.array([b.b_shunt for b in net.buses])
    p_d = np.array([b.p_d for b in net.buses])
    q_d = np.array([b.q_d for b in net.buses])
    res_p = inj_p - p_d - flow_p - g_n * pt.v_sq
    res_q = inj_q - q_d - flow_q + b_n * pt.v_sq

    cur_sq = (pt.p_s ** 2 + pt.q_s ** 2) / vs_sq
    vdrop = vs_sq - vr_sq - 2 * r * pt.p_s - 2 * x * pt.q_s + r * pt.p_o + x * pt.q_o
    sine = v_s * v_r * np.sin(pt.theta_br) - (x * pt.p_s - r * pt.q_s)
    v_square = pt.v_sq - pt.v ** 2
    angle_def = pt.theta_br - (pt.theta_bus[f] - pt.theta_bus[t])
    loss_p = pt.p_o - cur_sq * r
    loss_q = pt.q_o - cur_sq * x

    # ampacity on measurable flows at both ends
    qs_meas = pt.q_s - vs_sq * b_s
    i_send = (pt.p_s ** 2 + qs_meas ** 2) / vs_sq
    p_rec = pt.p_s - pt.p_o
    q_rec = pt.q_s - pt.q_o
    qr_meas = q_rec - vr_sq * b_r
    i_recv = (p_rec ** 2 + qr_meas ** 2) / vr_sq
    with np.errstate(invalid="ignore"):
        amp = np.maximum(i_send - k, i_recv - k)
    amp = np.where(np.isinf(k), 0.0, np.maximum(amp, 0.0))

    bound_viol = 0.0
    for bus in net.buses:
        bound_viol = max(bound_viol, bus.v_min - pt.v[bus.index], pt.v[bus.index] - bus.v_max)
        if math.isfinite(bus.theta_min):
            bound_viol = max(bound_viol, bus.theta_min - pt.theta_bus[bus.index])
        if math.isfinite(bus.theta_max):
            bound_viol = max(bound_viol, pt.theta_bus[bus.index] - bus.theta_max)
    for br in net.branches:
        bound_viol = max(
            bound_viol,
            abs(pt.theta_br[br.index]) - br.theta_max,
        )
    for g in net.generators:
        bound_viol = max(
            bound_viol,
            g.p_min - pt.p_gen[g.index],
            pt.p_gen[g.index] - g.p_max,
            g.q_min - pt.q_gen[g.index],
            pt.q_gen[g.index] - g.q_max,
        )

    cycle = _cycle_residual(net, pt.theta_br)

    return ResidualRecord(
        balance_p=float(np.abs(res_p).max(initial=0.0)),
        balance_q=float(np.abs(res_q).max(initial=0.0)),
        vdrop=float(np.abs(vdrop).max(initial=0.0)),
        sine=float(np.abs(sine).max(initial=0.0)),
        v_square=float(np.abs(v_square).max(initial=0.0)),
        angle_def=float(np.abs(angle_def).max(initial=0.0)),
        loss_p=float(np.abs(loss_p).max(initial=0.0)),
        loss_q=float(np.abs(loss_q).max(initial=0.0)),
        ampacity=float(np.abs(amp).max(initial=0.0)),
        bounds=max(0.0, float(bound_viol)),
        cycle=cycle,
    )


def _cycle_residual(net: Network, theta_br: np.ndarray) -> float:
    """Worst loop-sum of branch angles, via tree potentials and chords."""
    potential = np.zeros(net.n_bus)
    in_tree = set()
    for br, orient in spanning_tree(net):
        in_tree.add(br.index)
        if orient > 0:
            potential[br.to_bus] = potential[br.from_bus] - theta_br[br.index]
        else:
            potential[br.from_bus] = potential[br.to_bus] + theta_br[br.index]
    worst = 0.0
    for br in net.branches:
        if br.index in in_tree:
            continue
        loop = theta_br[br.index] - (potential[br.from_bus] - potential[br.to_bus])
        worst = max(worst, abs(_wrap_angle(loop)))
    return worst


def eval_phasor_consistency(net: Network, pt: AcPoint) -> float:
    """Max residual of the voltage-drop phasor real part,
    V_s - v_s v_r cos(theta_l) = p_s R + q_s X."""
    pt.check_shape(net)
    worst = 0.0
    for br in net.branches:
        l = br.index
        lhs = pt.v_sq[br.from_bus] - pt.v[br.from_bus] * pt.v[br.to_bus] * math.cos(
            pt.theta_br[l]
        )
        rhs = pt.p_s[l] * br.r + pt.q_s[l] * br.x
        worst = max(worst, abs(lhs - rhs))
    return worst


def map_ac_to_soc(net: Network, pt: AcPoint, vmap: VariableMap) -> np.ndarray:
    """Embed an AC point into the convex model's variables.

    Voltage magnitudes are dropped and the branch angle variable takes the
    value v_s v_r sin(theta_l); everything else carries over unchanged.
    A feasible AC point always maps into the convex feasible set.
    """
    pt.check_shape(net)
    x = np.zeros(vmap.dim)
    for g in net.generators:
        x[vmap.p_gen(g.index)] = pt.p_gen[g.index]
        x[vmap.q_gen(g.index)] = pt.q_gen[g.index]
    for br in net.branches:
        l = br.index
        x[vmap.p_s(l)] = pt.p_s[l]
        x[vmap.q_s(l)] = pt.q_s[l]
        x[vmap.p_o(l)] = pt.p_o[l]
        x[vmap.q_o(l)] = pt.q_o[l]
        x[vmap.theta_br(l)] = (
            pt.v[br.from_bus] * pt.v[br.to_bus] * math.sin(pt.theta_br[l])
        )
    for bus in net.buses:
        x[vmap.v_sq(bus.index)] = pt.v_sq[bus.index]
        x[vmap.theta_bus(bus.index)] = pt.theta_bus[bus.index]
    return x


def soc_point(vmap: VariableMap, x: np.ndarray) -> dict[str, np.ndarray]:
    """Split a flat solver vector into named variable arrays."""
    if len(x) != vmap.dim:
        raise DimensionMismatch(f"vector has {len(x)} entries, map expects {vmap.dim}")
    g, l, n = vmap.n_gen, vmap.n_branch, vmap.n_bus
    base = 2 * g
    out = {
        "p_gen": x[0:g],
        "q_gen": x[g:2 * g],
        "p_s": x[base:base + l],
        "q_s": x[base + l:base + 2 * l],
        "p_o": x[base + 2 * l:base + 3 * l],
        "q_o": x[base + 3 * l:base + 4 * l],
        "theta_br": x[base + 4 * l:base + 5 * l],
        "v_sq": x[base + 5 * l:base + 5 * l + n],
        "theta_bus": x[base + 5 * l + n:base + 5 * l + 2 * n],
    }
    if vmap.n_load:
        start = base + 5 * l + 2 * n
        out["p_load"] = x[start:start + n]
        out["q_load"] = x[start + n:start + 2 * n]
    return out

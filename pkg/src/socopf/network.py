"""Per-unit pi-model network built from a parsed MATPOWER case.

The network houses every parameter of the OPF models: series impedances,
end shunt susceptances, nodal shunts, loads, generator limits and cost
coefficients, branch ampacities as squared-current limits, and the
node-to-branch incidence structure. All quantities are per-unit on the
system MVA base. Instances are immutable and safe to share across threads.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, replace

from . import matpower as mp
from .errors import (
    DisconnectedGraph,
    EmptyNetwork,
    NetworkError,
    NonpositiveReactance,
    UnsupportedCostModel,
)

# Degenerate MATPOWER angle limits (0/0 or +-360) widen to this bound,
# which keeps angle differences inside (-pi/2, pi/2) as the branch-flow
# derivation requires.
ANGLE_CAP = math.pi / 2 - 1e-3


@dataclass(frozen=True)
class Bus:
    index: int            # dense 0-based id
    g_shunt: float        # G_n, pu
    b_shunt: float        # B_n, pu
    p_d: float            # active load, pu
    q_d: float            # reactive load, pu
    v_min: float          # voltage magnitude lower bound, pu
    v_max: float
    theta_min: float = -math.inf   # nodal angle bounds, rad
    theta_max: float = math.inf


@dataclass(frozen=True)
class Branch:
    index: int
    from_bus: int
    to_bus: int
    r: float              # series resistance, pu
    x: float              # series reactance, pu (> 0)
    b_s: float            # sending-end shunt susceptance, pu
    b_r: float            # receiving-end shunt susceptance, pu
    k_tilde: float        # ampacity as squared current, pu^2 (inf = unlimited)
    theta_max: float      # symmetric angle-difference bound, rad

    @property
    def theta_min(self) -> float:
        return -self.theta_max


@dataclass(frozen=True)
class Generator:
    index: int
    bus: int
    p_min: float
    p_max: float
    q_min: float
    q_max: float
    alpha: float          # cost coefficients on pu active power:
    beta: float           # cost = alpha p^2 + beta p + gamma
    gamma: float


@dataclass(frozen=True)
class Network:
    buses: tuple[Bus, ...]
    branches: tuple[Branch, ...]
    generators: tuple[Generator, ...]
    base_mva: float
    ref_bus: int
    name: str = ""
    warnings: tuple[str, ...] = ()

    @property
    def n_bus(self) -> int:
        return len(self.buses)

    @property
    def n_branch(self) -> int:
        return len(self.branches)

    def a_plus(self) -> dict[int, dict[int, int]]:
        """Sparse incidence A+: +1 at the sending end, -1 at the receiving end."""
        out: dict[int, dict[int, int]] = {}
        for br in self.branches:
            out.setdefault(br.from_bus, {})[br.index] = 1
            out.setdefault(br.to_bus, {})[br.index] = -1
        return out

    def a_minus(self) -> dict[int, dict[int, int]]:
        """Sparse incidence A-: -1 at the receiving end, zero elsewhere."""
        out: dict[int, dict[int, int]] = {}
        for br in self.branches:
            out.setdefault(br.to_bus, {})[br.index] = -1
        return out

    def gens_at(self, bus: int) -> list[Generator]:
        return [g for g in self.generators if g.bus == bus]

    def total_load(self) -> tuple[float, float]:
        return (sum(b.p_d for b in self.buses), sum(b.q_d for b in self.buses))

    def cost_of(self, p_by_gen) -> float:
        """Dispatch cost of per-generator active powers (pu)."""
        return sum(
            g.alpha * p * p + g.beta * p + g.gamma
            for g, p in zip(self.generators, p_by_gen)
        )


def _branch_angle_bound(angmin_deg: float, angmax_deg: float) -> float:
    # 0/0 and +-360 both mean "unconstrained" in MATPOWER.
    if (angmin_deg == 0 and angmax_deg == 0) or angmin_deg <= -360 or angmax_deg >= 360:
        return ANGLE_CAP
    bound = max(abs(angmin_deg), abs(angmax_deg)) * math.pi / 180.0
    return min(bound, ANGLE_CAP)


def _poly_cost(row: list[float], base: float) -> tuple[float, float, float]:
    n = int(row[mp.COST_N])
    coeffs = row[4:4 + n]
    lead = coeffs[:-3] if n > 3 else []
    if any(c != 0 for c in lead):
        raise UnsupportedCostModel(
            f"polynomial cost of degree {n - 1} exceeds the quadratic objective"
        )
    tail = coeffs[-3:] if n >= 3 else [0.0] * (3 - n) + coeffs
    alpha, beta, gamma = tail
    if alpha < 0 or beta < 0 or gamma < 0:
        raise UnsupportedCostModel("negative cost coefficients break monotonicity")
    # File coefficients act on MW; rescale them to act on pu power.
    return alpha * base * base, beta * base, gamma


def build_network(raw: mp.RawCase) -> Network:
    """Convert a RawCase to the per-unit network.

    Bus ids are re-indexed densely in file order. Transformer taps fold
    into the series impedance (z_eff = tap * z) and scale the sending-end
    charging shunt; the pi-model has no ideal transformer, so this is an
    approximation. rateA converts to a squared-current limit at 1.0 pu
    voltage, with rateA = 0 kept as an infinite sentinel.
    """
    if not raw.bus_rows or not raw.branch_rows:
        raise EmptyNetwork("case has no buses or no in-service branches")
    base = raw.base_mva
    warnings = list(raw.warnings)

    id_map = {}
    buses = []
    ref = None
    for i, row in enumerate(raw.bus_rows):
        ext_id = int(row[mp.BUS_I])
        if ext_id in id_map:
            raise NetworkError(f"duplicate bus id {ext_id}")
        id_map[ext_id] = i
        if int(row[mp.BUS_TYPE]) == mp.REF_BUS_TYPE:
            if ref is None:
                ref = i
            else:
                warnings.append(f"multiple reference buses; using bus {raw.bus_rows[ref][mp.BUS_I]:g}")
        buses.append(
            Bus(
                index=i,
                g_shunt=row[mp.BUS_GS] / base,
                b_shunt=row[mp.BUS_BS] / base,
                p_d=row[mp.BUS_PD] / base,
                q_d=row[mp.BUS_QD] / base,
                v_min=row[mp.BUS_VMIN],
                v_max=row[mp.BUS_VMAX],
            )
        )
    if ref is None:
        raise NetworkError("case has no reference (type 3) bus")

    branches = []
    for i, row in enumerate(raw.branch_rows):
        tap = row[mp.BR_TAP] if row[mp.BR_TAP] != 0 else 1.0
        if row[mp.BR_SHIFT] != 0:
            warnings.append(
                f"branch {row[mp.BR_F]:g}-{row[mp.BR_T]:g}: phase shift ignored"
            )
        x = row[mp.BR_X] * tap
        if x <= 0:
            raise NonpositiveReactance(
                f"branch {row[mp.BR_F]:g}-{row[mp.BR_T]:g} has x*tap = {x:g}"
            )
        rate = row[mp.BR_RATE_A]
        branches.append(
            Branch(
                index=i,
                from_bus=id_map[int(row[mp.BR_F])],
                to_bus=id_map[int(row[mp.BR_T])],
                r=row[mp.BR_R] * tap,
                x=x,
                b_s=row[mp.BR_B] / 2.0 / (tap * tap),
                b_r=row[mp.BR_B] / 2.0,
                k_tilde=(rate / base) ** 2 if rate > 0 else math.inf,
                theta_max=_branch_angle_bound(row[mp.BR_ANGMIN], row[mp.BR_ANGMAX]),
            )
        )

    gens = []
    for i, (row, cost) in enumerate(zip(raw.gen_rows, raw.gencost_rows)):
        alpha, beta, gamma = _poly_cost(cost, base)
        # Active-power floors are zeroed: the monotone-value-function
        # argument needs downward freedom of every p_n, and positive
        # floors make low load factors infeasible.
        gens.append(
            Generator(
                index=i,
                bus=id_map[int(row[mp.GEN_BUS])],
                p_min=0.0,
                p_max=row[mp.GEN_PMAX] / base,
                q_min=row[mp.GEN_QMIN] / base,
                q_max=row[mp.GEN_QMAX] / base,
                alpha=alpha,
                beta=beta,
                gamma=gamma,
            )
        )

    net = Network(
        buses=tuple(buses),
        branches=tuple(branches),
        generators=tuple(gens),
        base_mva=base,
        ref_bus=ref,
        name=raw.name,
        warnings=tuple(warnings),
    )
    _check_connected(net)
    return net


def _adjacency(net: Network) -> list[list[tuple[int, int]]]:
    adj: list[list[tuple[int, int]]] = [[] for _ in net.buses]
    for br in net.branches:
        adj[br.from_bus].append((br.index, br.to_bus))
        adj[br.to_bus].append((br.index, br.from_bus))
    for lst in adj:
        lst.sort()
    return adj


def _check_connected(net: Network) -> None:
    seen = {net.ref_bus}
    queue = deque([net.ref_bus])
    adj = _adjacency(net)
    while queue:
        n = queue.popleft()
        for _, other in adj[n]:
            if other not in seen:
                seen.add(other)
                queue.append(other)
    if len(seen) != net.n_bus:
        missing = sorted(set(range(net.n_bus)) - seen)
        raise DisconnectedGraph(f"buses unreachable from the reference: {missing}")


def scale_loads(net: Network, factor: float) -> Network:
    """Return a network whose loads are ``factor`` times the absolute base loads."""
    if factor < 0:
        raise ValueError("load factor must be nonnegative")
    buses = tuple(
        replace(b, p_d=factor * abs(b.p_d), q_d=factor * abs(b.q_d)) for b in net.buses
    )
    return replace(net, buses=buses)


def with_loads(net: Network, p_d, q_d) -> Network:
    """Return a network with loads replaced bus-by-bus (used after tightening)."""
    buses = tuple(
        replace(b, p_d=float(p), q_d=float(q)) for b, p, q in zip(net.buses, p_d, q_d)
    )
    return replace(net, buses=buses)


def spanning_tree(net: Network) -> list[tuple[Branch, int]]:
    """Deterministic BFS tree rooted at the reference bus.

    Returns ``|N| - 1`` pairs ``(branch, orientation)`` where orientation
    is +1 when the tree traverses the branch from sending to receiving
    end. Raises :class:`DisconnectedGraph` on disconnected input.
    """
    adj = _adjacency(net)
    seen = {net.ref_bus}
    tree: list[tuple[Branch, int]] = []
    queue = deque([net.ref_bus])
    while queue:
        n = queue.popleft()
        for br_idx, other in adj[n]:
            if other in seen:
                continue
            seen.add(other)
            br = net.branches[br_idx]
            tree.append((br, 1 if br.from_bus == n else -1))
            queue.append(other)
    if len(seen) != net.n_bus:
        missing = sorted(set(range(net.n_bus)) - seen)
        raise DisconnectedGraph(f"buses unreachable from the reference: {missing}")
    return tree


def chords(net: Network) -> list[Branch]:
    """Branches outside the spanning tree; one independent cycle per chord."""
    in_tree = {br.index for br, _ in spanning_tree(net)}
    return [br for br in net.branches if br.index not in in_tree]

"""MATPOWER case-format parsing and report serialization.

Supports the v2 ``.m`` case format: matrices introduced by ``mpc.<name> = [``
and terminated by ``];``, rows separated by newlines or semicolons, ``%``
comments. Only the matrices used by the OPF model (baseMVA, bus, gen,
branch, gencost) are read; anything else in the file is ignored.
"""

from __future__ import annotations

import csv
import io
import json
import re
from dataclasses import dataclass, field

from .errors import MalformedRow, MissingMatrix, UnsupportedCostModel

# MATPOWER column indices (0-based), per the v2 case format.
BUS_I, BUS_TYPE, BUS_PD, BUS_QD, BUS_GS, BUS_BS = 0, 1, 2, 3, 4, 5
BUS_VM, BUS_VA, BUS_VMAX, BUS_VMIN = 7, 8, 11, 12
GEN_BUS, GEN_QMAX, GEN_QMIN, GEN_STATUS, GEN_PMAX, GEN_PMIN = 0, 3, 4, 7, 8, 9
BR_F, BR_T, BR_R, BR_X, BR_B, BR_RATE_A = 0, 1, 2, 3, 4, 5
BR_TAP, BR_SHIFT, BR_STATUS, BR_ANGMIN, BR_ANGMAX = 8, 9, 10, 11, 12
COST_MODEL, COST_N = 0, 3

_MIN_COLS = {"bus": 13, "gen": 10, "branch": 13, "gencost": 4}

REF_BUS_TYPE = 3


@dataclass(frozen=True)
class RawCase:
    """Numeric contents of a MATPOWER case, rows in file order.

    In-service filtering has already been applied: generators and branches
    with status 0 are dropped (together with their cost rows) and recorded
    in ``warnings``.
    """

    base_mva: float
    bus_rows: list[list[float]]
    gen_rows: list[list[float]]
    branch_rows: list[list[float]]
    gencost_rows: list[list[float]]
    name: str = ""
    warnings: tuple[str, ...] = field(default=())

    def __post_init__(self):
        if self.base_mva <= 0:
            raise MalformedRow(f"baseMVA must be positive, got {self.base_mva}")
        bus_ids = {row[BUS_I] for row in self.bus_rows}
        for row in self.gen_rows:
            if row[GEN_BUS] not in bus_ids:
                raise MalformedRow(f"generator references unknown bus {row[GEN_BUS]:g}")
        for row in self.branch_rows:
            for end in (row[BR_F], row[BR_T]):
                if end not in bus_ids:
                    raise MalformedRow(f"branch references unknown bus {end:g}")


def _strip_comments(text: str) -> str:
    return re.sub(r"%[^\n]*", "", text)


def _parse_matrix(body: str, name: str) -> list[list[float]]:
    rows = []
    for chunk in re.split(r"[;\n]", body):
        tokens = chunk.split()
        if not tokens:
            continue
        try:
            rows.append([float(t) for t in tokens])
        except ValueError as exc:
            raise MalformedRow(f"non-numeric token in mpc.{name}: {exc}") from None
    for row in rows:
        if len(row) < _MIN_COLS[name]:
            raise MalformedRow(
                f"mpc.{name} row has {len(row)} columns, expected >= {_MIN_COLS[name]}"
            )
    return rows


def parse_case(text: str, name: str = "") -> RawCase:
    """Parse MATPOWER case text into a :class:`RawCase`.

    Raises :class:`MissingMatrix` if a required mpc field is absent,
    :class:`MalformedRow` for non-numeric or short rows, and
    :class:`UnsupportedCostModel` for piecewise-linear gencost data.
    """
    stripped = _strip_comments(text)

    m = re.search(r"mpc\.baseMVA\s*=\s*([0-9eE.+-]+)\s*;", stripped)
    if m is None:
        raise MissingMatrix("mpc.baseMVA not found")
    base_mva = float(m.group(1))

    matrices = {}
    for mat in ("bus", "gen", "branch", "gencost"):
        m = re.search(rf"mpc\.{mat}\s*=\s*\[(.*?)\];", stripped, flags=re.DOTALL)
        if m is None:
            raise MissingMatrix(f"mpc.{mat} not found")
        matrices[mat] = _parse_matrix(m.group(1), mat)

    gencost = matrices["gencost"]
    n_gen = len(matrices["gen"])
    warnings = []
    if len(gencost) == 2 * n_gen and n_gen > 0:
        # MATPOWER appends reactive cost rows after the active ones.
        warnings.append("gencost has reactive-power rows; they are ignored")
        gencost = gencost[:n_gen]
    elif len(gencost) != n_gen:
        raise MalformedRow(
            f"gencost has {len(gencost)} rows for {n_gen} generators"
        )
    for row in gencost:
        model = int(row[COST_MODEL])
        if model == 1:
            raise UnsupportedCostModel("piecewise-linear gencost is not supported")
        if model != 2:
            raise MalformedRow(f"unknown gencost model code {model}")
        n_coef = int(row[COST_N])
        if len(row) < 4 + n_coef:
            raise MalformedRow("gencost row shorter than its declared coefficient count")

    # Model (1) has no status variable, so out-of-service equipment is
    # removed here rather than carried through the formulation.
    gen_rows, kept_cost = [], []
    for i, row in enumerate(matrices["gen"]):
        if row[GEN_STATUS] > 0:
            gen_rows.append(row)
            kept_cost.append(gencost[i])
        else:
            warnings.append(f"generator at bus {row[GEN_BUS]:g} is out of service; dropped")
    branch_rows = []
    for row in matrices["branch"]:
        if row[BR_STATUS] > 0:
            branch_rows.append(row)
        else:
            warnings.append(
                f"branch {row[BR_F]:g}-{row[BR_T]:g} is out of service; dropped"
            )

    return RawCase(
        base_mva=base_mva,
        bus_rows=matrices["bus"],
        gen_rows=gen_rows,
        branch_rows=branch_rows,
        gencost_rows=kept_cost,
        name=name,
        warnings=tuple(warnings),
    )


def _fmt(x: float) -> str:
    return f"{x:.17g}" if x != int(x) else str(int(x))


def write_case(raw: RawCase, name: str = "case") -> str:
    """Serialize a RawCase back to MATPOWER format.

    ``parse_case(write_case(parse_case(t)))`` equals ``parse_case(t)``:
    the RawCase is the canonical form.
    """
    out = [f"function mpc = {raw.name or name}", "mpc.version = '2';"]
    out.append(f"mpc.baseMVA = {_fmt(raw.base_mva)};")
    for mat, rows in (
        ("bus", raw.bus_rows),
        ("gen", raw.gen_rows),
        ("branch", raw.branch_rows),
        ("gencost", raw.gencost_rows),
    ):
        out.append(f"mpc.{mat} = [")
        for row in rows:
            out.append("\t" + "\t".join(_fmt(v) for v in row) + ";")
        out.append("];")
    return "\n".join(out) + "\n"


def write_report(report, fmt: str = "json") -> str:
    """Serialize a GapReport as JSON or CSV.

    JSON output is an object keyed by the operation that produced the
    report; re-parsing it reproduces every float bit-exactly. CSV output
    is the per-branch gap table with RFC-4180 quoting.
    """
    from .gaps import GapReport  # local import keeps module layering acyclic

    if not isinstance(report, GapReport):
        raise TypeError(f"expected GapReport, got {type(report).__name__}")
    if fmt == "json":
        return json.dumps({"compute_gaps": report.to_dict()}, indent=2) + "\n"
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["branch", "gap_po", "gap_qo"])
        for entry in report.per_branch:
            writer.writerow([entry.branch, repr(entry.gap_po), repr(entry.gap_qo)])
        return buf.getvalue()
    raise ValueError(f"unknown report format {fmt!r}")


def read_report(text: str):
    """Parse JSON produced by :func:`write_report` back into a GapReport."""
    from .gaps import GapReport

    payload = json.loads(text)
    return GapReport.from_dict(payload["compute_gaps"])

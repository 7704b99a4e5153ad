import math

import pytest

from socopf.errors import MalformedRow, MissingMatrix, UnsupportedCostModel
from socopf.matpower import parse_case, write_case

from conftest import TWO_BUS_CASE, case_text


def test_parse_minimal_two_bus():
    raw = parse_case(TWO_BUS_CASE)
    assert len(raw.bus_rows) == 2
    assert len(raw.branch_rows) == 1
    assert len(raw.gen_rows) == 1
    assert raw.base_mva == 100


def test_parse_case9_counts():
    raw = parse_case(case_text("case9"))
    assert len(raw.bus_rows) == 9
    assert len(raw.branch_rows) == 9
    assert len(raw.gen_rows) == 3
    assert raw.base_mva == 100
    # full numeric precision of an arbitrary entry
    assert raw.branch_rows[4][3] == 0.1008


def test_missing_gencost_raises():
    text = TWO_BUS_CASE.replace("mpc.gencost", "mpc.nothing")
    with pytest.raises(MissingMatrix):
        parse_case(text)


def test_malformed_row_raises():
    text = TWO_BUS_CASE.replace("0.01 0.1", "0.01 oops")
    with pytest.raises(MalformedRow):
        parse_case(text)


def test_short_row_raises():
    text = TWO_BUS_CASE.replace("1 2 0.01 0.1 0.02 50 0 0 0 0 1 -360 360;", "1 2 0.01;")
    with pytest.raises(MalformedRow):
        parse_case(text)


def test_piecewise_cost_rejected():
    text = TWO_BUS_CASE.replace("2 0 0 3 0.1 10 0;", "1 0 0 2 0 0 100 1000;")
    with pytest.raises(UnsupportedCostModel):
        parse_case(text)


def test_out_of_service_rows_dropped_with_warning():
    text = TWO_BUS_CASE.replace(
        "mpc.branch = [\n    1 2 0.01 0.1 0.02 50 0 0 0 0 1 -360 360;",
        "mpc.branch = [\n    1 2 0.01 0.1 0.02 50 0 0 0 0 1 -360 360;\n"
        "    1 2 0.02 0.2 0.00 50 0 0 0 0 0 -360 360;",
    )
    raw = parse_case(text)
    assert len(raw.branch_rows) == 1
    assert any("out of service" in w for w in raw.warnings)


def test_roundtrip_is_idempotent():
    for name in ("case9", "case14", "case4"):
        raw = parse_case(case_text(name))
        again = parse_case(write_case(raw))
        assert again.bus_rows == raw.bus_rows
        assert again.gen_rows == raw.gen_rows
        assert again.branch_rows == raw.branch_rows
        assert again.gencost_rows == raw.gencost_rows
        assert again.base_mva == raw.base_mva


def test_row_counts_never_drop_in_service_rows():
    raw = parse_case(case_text("case14"))
    assert len(raw.bus_rows) == 14
    assert len(raw.branch_rows) == 20
    assert len(raw.gen_rows) == 5
    assert len(raw.gencost_rows) == len(raw.gen_rows)


def test_report_roundtrip_and_csv():
    from socopf.gaps import BranchGap, GapReport
    from socopf.matpower import read_report, write_report

    report = GapReport(
        per_branch=[BranchGap(branch=0, gap_po=0.01, gap_qo=0.1)],
        gap_po_max=0.01,
        gap_qo_max=0.1,
        argmax_branch=0,
        objective=12.3456789012345678,
        load_factor=0.1,
        tightened=False,
        load_increase_p=[0.0],
        load_increase_q=[0.0],
    )
    text = write_report(report, "json")
    again = read_report(text)
    assert again == report

    csv_text = write_report(report, "csv")
    lines = csv_text.strip().splitlines()
    assert lines[0] == "branch,gap_po,gap_qo"
    assert "0.01" in lines[1]

    empty = GapReport(
        per_branch=[],
        gap_po_max=0.0,
        gap_qo_max=0.0,
        argmax_branch=-1,
        objective=0.0,
        load_factor=1.0,
        tightened=False,
        load_increase_p=[],
        load_increase_q=[],
    )
    assert write_report(empty, "csv").strip() == "branch,gap_po,gap_qo"

"""Embedded conic interior-point solver and program containers."""

from .program import ConicProgram, StandardForm, dump_program, parse_dump
from .solver import (
    INFEASIBLE,
    NUMERICAL_LIMIT,
    OPTIMAL,
    UNBOUNDED,
    SocSolution,
    SolverCertificate,
    SolverSettings,
    check_certificate,
    solve,
    solve_standard,
)

__all__ = [
    "ConicProgram",
    "StandardForm",
    "SocSolution",
    "SolverCertificate",
    "SolverSettings",
    "check_certificate",
    "dump_program",
    "parse_dump",
    "solve",
    "solve_standard",
    "OPTIMAL",
    "INFEASIBLE",
    "UNBOUNDED",
    "NUMERICAL_LIMIT",
]

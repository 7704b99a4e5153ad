"""Branch-flow SOC relaxation of AC optimal power flow.

Parses MATPOWER cases, assembles the convex SOC-ACOPF model with its
loss-ampacity bound and feasibility-recovery cone, solves it with an
embedded conic interior-point method, maps solutions back to AC operating
points, and measures or tightens the relaxation gaps.
"""

__version__ = "0.1.0"

from .matpower import RawCase, parse_case, write_case, write_report
from .network import Network, build_network, scale_loads, spanning_tree

__all__ = [
    "RawCase",
    "parse_case",
    "write_case",
    "write_report",
    "Network",
    "build_network",
    "scale_loads",
    "spanning_tree",
    "__version__",
]

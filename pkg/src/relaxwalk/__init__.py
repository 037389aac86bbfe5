"""Optimize linear objectives over trained ReLU feed-forward networks.

The heuristic walks across the network's linear regions, solving one
small LP per region, and restarts from diverse points obtained by
constraining the big-M linear relaxation. Exact enumeration and
branch-and-bound oracles are included for desk-scale verification.
"""

from . import cli, exact, formulations, generator, linprog, network, walk

__all__ = [
    "cli",
    "exact",
    "formulations",
    "generator",
    "linprog",
    "network",
    "walk",
]

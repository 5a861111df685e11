"""Executable model of a path-aware inter-domain data plane.

Topologies, chained-MAC segments, border routers with switchable checks,
a symbolic attacker and trace checkers for the three security properties.
"""

__version__ = "0.1.0"

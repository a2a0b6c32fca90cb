"""Tunable structural bounds and fuel budgets.

The kernel is exact; these bounds never change a computed value. They only
decide how far semi-decidable searches are pushed before the engine raises
an honest resource error, and where structural recursion is cut off.
"""

from __future__ import annotations

from dataclasses import dataclass, replace


@dataclass
class Limits:
    # structural bounds
    height_bound: int = 4          # max exponential height of a monomial
    log_depth_bound: int = 4       # max iterated-log atom index
    faa_order_bound: int = 6       # highest Faà di Bruno order
    ps_order_cap: int = 12         # coefficient cap for power-series assertions

    # certificate / verdict parameters
    divergence_window: int = 5     # consecutive non-shrinking terms needed
    support_prefix: int = 20       # support monomials scanned for witnesses
    cut_prefix: int = 12           # degrees scanned by cut_member

    # fuel budgets
    expand_fuel: int = 200_000     # lattice points visited per grid expansion
    term_fuel: int = 512           # candidate monomials walked per term search
    level_fuel: int = 4_096        # level-bound iterations in lazy sums


LIMITS = Limits()


def configure(**kwargs) -> Limits:
    """Replace fields of the active limits; returns the new value."""
    global LIMITS
    LIMITS = replace(LIMITS, **kwargs)
    return LIMITS

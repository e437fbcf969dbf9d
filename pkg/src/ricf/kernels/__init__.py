"""Cycle kernel backends.

The hot loop of the fitting algorithm (one update pass over the
vertices) exists twice: a compiled Cython extension and a pure numpy
fallback with identical semantics.  The compiled kernel is preferred
when importable; ``active_backend()`` reports which one is in use and
``get_backend(name)`` fetches a specific one (for tests and for the
backend comparison benchmark).
"""

from . import cycle_py
from .plan import CyclePlan, build_plan

try:
    from . import cycle_c

    HAVE_COMPILED = True
except ImportError:
    cycle_c = None
    HAVE_COMPILED = False

_DEFAULT = cycle_c if HAVE_COMPILED else cycle_py

__all__ = [
    "CyclePlan",
    "build_plan",
    "HAVE_COMPILED",
    "active_backend",
    "get_backend",
    "run_cycle",
]


def active_backend() -> str:
    return "compiled" if _DEFAULT is cycle_c else "python"


def get_backend(name: str = "auto"):
    """Kernel module for ``name`` in {auto, compiled, python}."""
    if name == "auto":
        return _DEFAULT
    if name == "python":
        return cycle_py
    if name == "compiled":
        if not HAVE_COMPILED:
            raise RuntimeError("compiled kernel is not available")
        return cycle_c
    raise ValueError(f"unknown backend {name!r}")


def run_cycle(s, b, om, plan):
    return _DEFAULT.run_cycle(s, b, om, plan)

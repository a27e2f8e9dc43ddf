"""Numerical lab for the damped wave map into S² at small inertia and its heat-flow limit."""

__version__ = "1.0.0"

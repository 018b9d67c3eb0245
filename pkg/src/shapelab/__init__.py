"""shapelab: a laboratory for lattice first passage percolation, additive
cocycles, and asymptotic shape estimation."""

__version__ = "0.1.0"

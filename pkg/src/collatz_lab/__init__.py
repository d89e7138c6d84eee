"""Exact and Monte Carlo checks for the 3x+1 map: modular laws, crossing
densities, cascade renewal, phantom cycles, state graphs and the fiber-57
return structure."""

__version__ = "0.1.0"

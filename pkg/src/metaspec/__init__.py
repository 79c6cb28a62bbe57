"""Finite-state Markov chains for heavy-tailed multi-well dynamics.

The package builds a discrete-time chain on a mesh over [-R, R) whose small
steps follow the gradient of a multi-well potential and whose jumps are
symmetric alpha-stable.  The scaled generator of that chain has a small
metastable eigenvalue cluster converging to the spectrum of an n x n
inter-well jump-rate matrix; the modules here construct both objects and
provide the spectral and path-level diagnostics to compare them.
"""

__version__ = "0.1.0"

from . import chain, mesh, paths, potential, spectral, stable

__all__ = ["stable", "potential", "mesh", "chain", "spectral", "paths", "__version__"]

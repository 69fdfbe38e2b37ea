"""kitvqe: variational-eigensolver benchmarks for the square-octagon Kitaev model.

Statevector simulation with compiled kernels, Hamiltonian-variational and
hardware-efficient ansaetze, a suite of black-box optimizers, shot-based
cost estimation, stochastic noise models, and zero-noise extrapolation.
"""

__version__ = "0.1.0"

from .backend import BACKEND  # noqa: F401

"""Hadamard operators: multiplicative convolution with theta-rapidly decreasing kernels.

The operators ``S -> S * T`` act diagonally on monomials.  This package samples
kernels and test functions on logarithmic grids, applies the operators with a
direct or FFT engine, and computes the eigenvalues ``m_alpha`` both from their
closed form and by measurement.
"""

from .convolve import *  # noqa: F401,F403
from .deltasym import *  # noqa: F401,F403
from .euler import *  # noqa: F401,F403
from .kernel import *  # noqa: F401,F403
from .loggrid import *  # noqa: F401,F403
from .spectra import *  # noqa: F401,F403

__version__ = "0.1.0"

"""Spectra of Weil-constrained compressions of the scaling generator.

Build the truncated Weil vector on the Fourier modes of a log window, compress
the scaling generator to its orthogonal complement, and measure how far the
spectrum sits from the ordinates of zeta zeros.
"""

__version__ = "0.1.0"

"""Finite models of quantum Cayley trees for free orthogonal quantum groups.

Submodules
----------
fusion
    Quantum dimensions and sector weights.
cayley_model
    The reversing operator on a truncated sector and its identity checks.
shift_spectra
    Weighted shifts, spectral measures, Dyck-path moments and the
    determinant-class functional.
ncderiv
    Noncommutative polynomials, free difference quotients and the
    derivative of the orthogonality relations.
cli
    Command-line reports.
"""

__version__ = "0.1.0"

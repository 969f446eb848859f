"""Yang-Baxter map laboratory.

Concrete parameter-dependent Yang-Baxter maps (the matrix-KdV soliton
interaction map on rank-k projectors, Adler's map with the periodic
dressing chain behind it), generic transfer dynamics on cyclic tuples,
Lax/monodromy invariants, and checkers that verify every algebraic and
Hamiltonian property exactly over rationals or numerically over floats.
"""

from . import adlerchain, cli, errors, matkit, solitonmap, ybcore
from .errors import YbLabError

__all__ = [
    "adlerchain",
    "cli",
    "errors",
    "matkit",
    "solitonmap",
    "ybcore",
    "YbLabError",
]

__version__ = "0.1.0"

"""Field-generic dense matrix/vector kernel.

Every operation runs over one of two scalar backends sharing the same code
paths: exact rationals (``fractions.Fraction``; ints are promoted on entry)
or binary64 floats.  Identity-type checks elsewhere in the package run in
exact mode, calculus-type checks (finite differences, ODE steps) in float
mode.  The matrices involved are tiny (n <= 8), so everything is plain
Python with no external numerics dependency.
"""

from __future__ import annotations

from fractions import Fraction
from math import isfinite
from typing import Callable, Sequence, Union

from .errors import (
    DimensionMismatch,
    EvaluationFailed,
    NonFinite,
    NotTransversal,
    Singular,
)

Scalar = Union[Fraction, float]

# Pivot below this times max|entry| counts as singular in float mode.
FLOAT_PIVOT_RTOL = 1e-12

# Default central-difference step for binary64.
DEFAULT_FD_STEP = 1e-5


def norm_scalar(x) -> Scalar:
    """Promote ints to Fraction, pass Fractions through, reject non-finite
    floats."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, float):
        if not isfinite(x):
            raise NonFinite(f"non-finite scalar {x!r}")
        return x
    if isinstance(x, int):
        return Fraction(x)
    raise TypeError(f"unsupported scalar type {type(x).__name__}")


def is_exact(x: Scalar) -> bool:
    return isinstance(x, (Fraction, int))


# ---------------------------------------------------------------------------
# Vectors are plain tuples; covectors pair with vectors via dot().

Vec = tuple


def dot(p: Sequence[Scalar], q: Sequence[Scalar]) -> Scalar:
    """Canonical pairing <p, q> = sum_a p_a q_a."""
    if len(p) != len(q):
        raise DimensionMismatch(f"pairing of lengths {len(p)} and {len(q)}")
    return sum(a * b for a, b in zip(p, q))


def vec_add(u: Sequence[Scalar], v: Sequence[Scalar]) -> Vec:
    if len(u) != len(v):
        raise DimensionMismatch("vector addition of different lengths")
    return tuple(a + b for a, b in zip(u, v))


def vec_sub(u: Sequence[Scalar], v: Sequence[Scalar]) -> Vec:
    if len(u) != len(v):
        raise DimensionMismatch("vector subtraction of different lengths")
    return tuple(a - b for a, b in zip(u, v))


def vec_scale(c: Scalar, v: Sequence[Scalar]) -> Vec:
    return tuple(c * a for a in v)


def vec_max_abs(v: Sequence[Scalar]) -> Scalar:
    return max(abs(a) for a in v)


class Matrix:
    """Immutable dense matrix with Fraction or float entries, row-major."""

    __slots__ = ("rows",)

    def __init__(self, rows: Sequence[Sequence[Scalar]]):
        normalized = tuple(tuple(norm_scalar(x) for x in row) for row in rows)
        if not normalized or not normalized[0]:
            raise DimensionMismatch("matrix needs at least one row and one column")
        width = len(normalized[0])
        if any(len(r) != width for r in normalized):
            raise DimensionMismatch("ragged rows")
        object.__setattr__(self, "rows", normalized)

    def __setattr__(self, name, value):
        raise AttributeError("Matrix is immutable")

    # -- shape ------------------------------------------------------------
    @property
    def nrows(self) -> int:
        return len(self.rows)

    @property
    def ncols(self) -> int:
        return len(self.rows[0])

    @property
    def is_square(self) -> bool:
        return self.nrows == self.ncols

    def row(self, i: int) -> Vec:
        return self.rows[i]

    def col(self, j: int) -> Vec:
        return tuple(r[j] for r in self.rows)

    # -- constructors -----------------------------------------------------
    @classmethod
    def identity(cls, n: int) -> "Matrix":
        return cls([[Fraction(int(i == j)) for j in range(n)] for i in range(n)])

    @classmethod
    def zeros(cls, nrows: int, ncols: int | None = None) -> "Matrix":
        ncols = nrows if ncols is None else ncols
        return cls([[Fraction(0)] * ncols for _ in range(nrows)])

    @classmethod
    def from_cols(cls, cols: Sequence[Sequence[Scalar]]) -> "Matrix":
        return cls([[c[i] for c in cols] for i in range(len(cols[0]))])

    # -- structural equality ----------------------------------------------
    def __eq__(self, other) -> bool:
        return isinstance(other, Matrix) and self.rows == other.rows

    def __hash__(self) -> int:
        return hash(self.rows)

    def __repr__(self) -> str:
        body = "; ".join(", ".join(str(x) for x in r) for r in self.rows)
        return f"Matrix[{body}]"

    # -- arithmetic ---------------------------------------------------------
    def __add__(self, other: "Matrix") -> "Matrix":
        if not isinstance(other, Matrix):
            return NotImplemented
        if (self.nrows, self.ncols) != (other.nrows, other.ncols):
            raise DimensionMismatch(
                f"add {self.nrows}x{self.ncols} and {other.nrows}x{other.ncols}"
            )
        return Matrix(
            [
                [a + b for a, b in zip(ra, rb)]
                for ra, rb in zip(self.rows, other.rows)
            ]
        )

    def __sub__(self, other: "Matrix") -> "Matrix":
        if not isinstance(other, Matrix):
            return NotImplemented
        if (self.nrows, self.ncols) != (other.nrows, other.ncols):
            raise DimensionMismatch(
                f"sub {self.nrows}x{self.ncols} and {other.nrows}x{other.ncols}"
            )
        return Matrix(
            [
                [a - b for a, b in zip(ra, rb)]
                for ra, rb in zip(self.rows, other.rows)
            ]
        )

    def __neg__(self) -> "Matrix":
        return Matrix([[-a for a in r] for r in self.rows])

    def __mul__(self, other):
        if isinstance(other, Matrix):
            if self.ncols != other.nrows:
                raise DimensionMismatch(
                    f"mul {self.nrows}x{self.ncols} by {other.nrows}x{other.ncols}"
                )
            cols = [other.col(j) for j in range(other.ncols)]
            return Matrix(
                [[dot(r, c) for c in cols] for r in self.rows]
            )
        return Matrix([[a * other for a in r] for r in self.rows])

    def __rmul__(self, other):
        return Matrix([[other * a for a in r] for r in self.rows])

    # -- queries ------------------------------------------------------------
    def transpose(self) -> "Matrix":
        return Matrix([self.col(j) for j in range(self.ncols)])

    def trace(self) -> Scalar:
        if not self.is_square:
            raise DimensionMismatch("trace of a non-square matrix")
        return sum(self.rows[i][i] for i in range(self.nrows))

    def max_abs(self) -> Scalar:
        return max(abs(x) for r in self.rows for x in r)

    def map_entries(self, fn: Callable[[Scalar], Scalar]) -> "Matrix":
        return Matrix([[fn(x) for x in r] for r in self.rows])

    def to_float(self) -> "Matrix":
        return Matrix([[float(x) for x in r] for r in self.rows])

    def is_exact(self) -> bool:
        return all(isinstance(x, Fraction) for r in self.rows for x in r)


def hstack(a: Matrix, b: Matrix) -> Matrix:
    if a.nrows != b.nrows:
        raise DimensionMismatch("hstack with different row counts")
    return Matrix([ra + rb for ra, rb in zip(a.rows, b.rows)])


def matvec(a: Matrix, v: Sequence[Scalar]) -> Vec:
    if a.ncols != len(v):
        raise DimensionMismatch(f"matvec {a.nrows}x{a.ncols} by length {len(v)}")
    return tuple(dot(r, v) for r in a.rows)


def invert(a: Matrix) -> Matrix:
    """Gauss-Jordan inverse.

    Exact entries use the first nonzero pivot and stay exact.  Float
    entries use partial pivoting and raise Singular when the best pivot
    falls below FLOAT_PIVOT_RTOL * max|entry| of the input.
    """
    if not a.is_square:
        raise DimensionMismatch("inverse of a non-square matrix")
    n = a.nrows
    exact = a.is_exact()
    threshold = None if exact else FLOAT_PIVOT_RTOL * max(float(a.max_abs()), 0.0)
    work = [list(r) + [Fraction(int(i == j)) for j in range(n)] for i, r in enumerate(a.rows)]
    for i in range(n):
        if exact:
            pivot_row = next((r for r in range(i, n) if work[r][i] != 0), None)
            if pivot_row is None:
                raise Singular("zero pivot column in exact elimination")
        else:
            pivot_row = max(range(i, n), key=lambda r: abs(work[r][i]))
            if abs(work[pivot_row][i]) <= threshold:
                raise Singular(
                    f"pivot {work[pivot_row][i]!r} below float threshold {threshold!r}"
                )
        if pivot_row != i:
            work[i], work[pivot_row] = work[pivot_row], work[i]
        inv_pivot = 1 / work[i][i] if not exact else Fraction(1) / work[i][i]
        work[i] = [x * inv_pivot for x in work[i]]
        for r in range(n):
            if r == i or work[r][i] == 0:
                continue
            factor = work[r][i]
            work[r] = [x - factor * y for x, y in zip(work[r], work[i])]
    return Matrix([row[n:] for row in work])


def char_poly(a: Matrix) -> tuple[Scalar, ...]:
    """Coefficients of det(a - eta*I), ascending in eta, leading (-1)^n.

    Faddeev-LeVerrier recurrence: the only divisions are by the integers
    1..n, so rational inputs give exact rational coefficients.
    """
    if not a.is_square:
        raise DimensionMismatch("characteristic polynomial of a non-square matrix")
    n = a.nrows
    ident = Matrix.identity(n)
    aux = Matrix.zeros(n)
    cs: list[Scalar] = [Fraction(1) if a.is_exact() else 1.0]
    for k in range(1, n + 1):
        aux = a * (aux + cs[-1] * ident)
        tr = aux.trace()
        cs.append(-tr / k if not isinstance(tr, Fraction) else Fraction(-tr, k))
    sign = 1 if n % 2 == 0 else -1
    return tuple(sign * cs[n - j] for j in range(n + 1))


def poly_eval(coeffs: Sequence[Scalar], x: Scalar) -> Scalar:
    """Evaluate an ascending-coefficient polynomial by Horner's rule."""
    acc: Scalar = Fraction(0)
    for c in reversed(coeffs):
        acc = acc * x + c
    return acc


def projector_from_subspaces(l_basis: Matrix, k_basis: Matrix) -> Matrix:
    """Projector P with Im P = span(l_basis columns), Ker P = span(k_basis
    columns).  Solves P [L | K] = [L | 0]."""
    n, k = l_basis.nrows, l_basis.ncols
    if not (0 < k < n):
        raise DimensionMismatch(f"image dimension {k} must satisfy 0 < k < {n}")
    if k_basis.nrows != n or k_basis.ncols != n - k:
        raise DimensionMismatch(
            f"kernel basis must be {n}x{n - k}, got {k_basis.nrows}x{k_basis.ncols}"
        )
    basis = hstack(l_basis, k_basis)
    try:
        inv = invert(basis)
    except Singular as exc:
        raise NotTransversal("kernel and image bases do not span the space") from exc
    target = hstack(l_basis, Matrix.zeros(n, n - k))
    return target * inv


def fd_jacobian(
    f: Callable[[Sequence[float]], Sequence[float]],
    x: Sequence[float],
    h: float = DEFAULT_FD_STEP,
) -> Matrix:
    """Central-difference Jacobian of f at x: (f(x+h e_j) - f(x-h e_j)) / 2h.

    Float mode only; truncation error is O(h^2) for smooth f.
    """
    base = [float(v) for v in x]

    def probe(pt: list[float]) -> list[float]:
        try:
            out = [float(v) for v in f(pt)]
        except Exception as exc:
            raise EvaluationFailed(f"probe at {pt!r} raised {exc!r}") from exc
        if any(not isfinite(v) for v in out):
            raise EvaluationFailed(f"probe at {pt!r} returned non-finite values")
        return out

    cols = []
    width = None
    for j in range(len(base)):
        plus = list(base)
        plus[j] += h
        minus = list(base)
        minus[j] -= h
        fp, fm = probe(plus), probe(minus)
        if width is None:
            width = len(fp)
        if len(fp) != width or len(fm) != width:
            raise EvaluationFailed("probed function returned inconsistent lengths")
        cols.append([(p - m) / (2.0 * h) for p, m in zip(fp, fm)])
    return Matrix.from_cols(cols)

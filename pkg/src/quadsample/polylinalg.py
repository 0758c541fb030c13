"""Small dense linear algebra over multivariate polynomial entries.

Everything here is division-free: determinants go through the Berkowitz
characteristic-vector recursion and linear systems are solved in the
Cramer form M*w = det(M)*v, which is an identity in the entries and
therefore stays valid when the determinant vanishes.
"""

from itertools import combinations
from typing import NamedTuple

from .exactcore import MPoly

__all__ = ["PolyMatrix", "IndexPair", "det", "cramer_solve", "submatrix",
           "enum_uw"]


class IndexPair(NamedTuple):
    """A pair of row and column index tuples selecting a square block."""
    rows: tuple
    cols: tuple


class PolyMatrix:
    """Rectangular matrix of MPoly entries sharing nvars and tower."""

    __slots__ = ("nrows", "ncols", "nvars", "tower", "entries")

    def __init__(self, nrows, ncols, nvars, tw, entries):
        self.nrows = nrows
        self.ncols = ncols
        self.nvars = nvars
        self.tower = tw
        self.entries = entries
        if len(entries) != nrows or any(len(r) != ncols for r in entries):
            raise ValueError("entry grid does not match the declared shape")

    @staticmethod
    def from_rows(rows, nvars, tw):
        return PolyMatrix(len(rows), len(rows[0]) if rows else 0,
                          nvars, tw, [list(r) for r in rows])

    def at(self, i, j):
        return self.entries[i][j]

    def col(self, j):
        return [self.entries[i][j] for i in range(self.nrows)]

    def replace_col(self, j, v):
        rows = [list(r) for r in self.entries]
        for i in range(self.nrows):
            rows[i][j] = v[i]
        return PolyMatrix(self.nrows, self.ncols, self.nvars, self.tower,
                          rows)

    def matvec(self, v):
        out = []
        for i in range(self.nrows):
            s = MPoly.zero(self.nvars, self.tower)
            for j in range(self.ncols):
                s = s + self.entries[i][j] * v[j]
            out.append(s)
        return out

    def __repr__(self):
        return "PolyMatrix(%d x %d)" % (self.nrows, self.ncols)


def submatrix(M, rows, cols):
    """The block of M with the given row and column indices, in order."""
    ent = [[M.entries[i][j] for j in cols] for i in rows]
    return PolyMatrix(len(rows), len(cols), M.nvars, M.tower, ent)


def det(M):
    """Determinant by the Berkowitz recursion (no divisions).

    The empty 0x0 matrix has determinant 1.
    """
    if M.nrows != M.ncols:
        raise ValueError("determinant of a nonsquare matrix")
    n = M.nrows
    one = MPoly.const(M.nvars, M.tower, 1)
    if n == 0:
        return one
    A = M.entries
    # charpoly coefficient vector of the leading principal blocks,
    # highest degree first
    poly = [one, -A[0][0]]
    for k in range(1, n):
        a = A[k][k]
        R = A[k][:k]
        w = [A[i][k] for i in range(k)]
        items = [one, -a]
        items.append(-_dot(R, w, M))
        for _ in range(k - 1):
            w = _block_matvec(A, k, w, M)
            items.append(-_dot(R, w, M))
        new = []
        for i in range(k + 2):
            s = MPoly.zero(M.nvars, M.tower)
            for j in range(len(items)):
                if 0 <= i - j < len(poly):
                    s = s + items[j] * poly[i - j]
            new.append(s)
        poly = new
    d = poly[n]
    return d if n % 2 == 0 else -d


def _dot(r, c, M):
    s = MPoly.zero(M.nvars, M.tower)
    for a, b in zip(r, c):
        s = s + a * b
    return s


def _block_matvec(A, k, v, M):
    out = []
    for i in range(k):
        s = MPoly.zero(M.nvars, M.tower)
        for j in range(k):
            s = s + A[i][j] * v[j]
        out.append(s)
    return out


def cramer_solve(M, v):
    """Cramer data (w, Omega) with M*w = Omega*v as a polynomial identity.

    Omega is det(M) and w_i the determinant with column i replaced by v.
    No invertibility is assumed; the identity holds regardless.
    """
    if M.nrows != M.ncols:
        raise ValueError("cramer_solve needs a square matrix")
    if len(v) != M.nrows:
        raise ValueError("right-hand side has the wrong length")
    omega = det(M)
    w = [det(M.replace_col(j, v)) for j in range(M.ncols)]
    return w, omega


def enum_uw(nrows, ncols, r):
    """All IndexPair selections with r <= |rows| = |cols|.

    Sizes run from r up to min(nrows, ncols); within a size the order is
    lexicographic in (rows, cols).  For a 4x4 grid and r = 3 this yields
    C(4,3)^2 + C(4,4)^2 = 17 pairs.
    """
    if r < 0:
        raise ValueError("r must be nonnegative")
    out = []
    for size in range(r, min(nrows, ncols) + 1):
        for rows in combinations(range(nrows), size):
            for cols in combinations(range(ncols), size):
                out.append(IndexPair(rows, cols))
    return out

"""Charts with rational inverses for the critical locus of a projection.

On a level set of p(Q(X)) with Q quadratic, the gradient conditions in
every coordinate except a distinguished one form a linear system
Phi(Q(X)) X = b(Q(X)) whose matrix entries are linear in the partials
of p.  Solving the system by Cramer's rule on an invertible square
block turns the selected coordinates into rational functions of
Y = Q(X) and of the unselected coordinates T, one chart per block
choice.  Each chart carries the polynomial equations that cut out its
validity region: the level equation, the denominator-cleared statement
that Y really is Q of the chart point, consistency of the discarded
rows, and vanishing of all bordering minors one size larger.

Variable convention for chart polynomials: Y_1..Y_k first (indices
0..k-1), then the free coordinates T in increasing order of their
X-index.  Charts do not attempt to be disjoint or nonempty.
"""

from dataclasses import dataclass

from gmpy2 import mpq

from .exactcore import EpsScalar, MPoly, rat
from .geomlift import RationalMap
from .polylinalg import (IndexPair, PolyMatrix, cramer_solve, det, enum_uw,
                         submatrix)

__all__ = ["QuadMap", "Problem", "Piece", "phi_data", "enum_pieces",
           "piece_equations", "piece_inverse", "piece_contains"]


def _is_scalar(x):
    return isinstance(x, EpsScalar) or not isinstance(x, (MPoly, list, tuple))


@dataclass(frozen=True)
class QuadMap:
    """Quadratic map K^n -> K^k, components x -> x^T H x / 2 + b^T x + c.

    comps is a tuple of (H, b, c) triples: H a symmetric n x n grid of
    scalars (mpq or EpsScalar), b an n-tuple, c a scalar.
    """
    n: int
    tower: object
    comps: tuple

    def __post_init__(self):
        for H, b, c in self.comps:
            if len(H) != self.n or any(len(row) != self.n for row in H):
                raise ValueError("Hessian block is not n x n")
            if len(b) != self.n:
                raise ValueError("linear part has the wrong length")
            for i in range(self.n):
                for j in range(i):
                    if not _scalar_eq(H[i][j], H[j][i]):
                        raise ValueError("Hessian block is not symmetric")
            if not _is_scalar(c):
                raise ValueError("constant part is not a scalar")

    @property
    def m(self):
        return len(self.comps)

    def as_poly(self, j):
        """Component j as an MPoly in the n coordinates."""
        H, b, c = self.comps[j]
        nv, tw = self.n, self.tower
        half = mpq(1, 2)
        acc = MPoly.const(nv, tw, c)
        for a in range(nv):
            if b[a]:
                acc = acc + MPoly.var(nv, tw, a) * MPoly.const(nv, tw, b[a])
            for bb in range(nv):
                if H[a][bb]:
                    acc = acc + (MPoly.var(nv, tw, a) * MPoly.var(nv, tw, bb)
                                 * MPoly.const(nv, tw, H[a][bb])
                                 * MPoly.const(nv, tw, half))
        return acc

    def eval(self, x):
        return tuple(self.as_poly(j).eval(list(x)) for j in range(self.m))


def _scalar_eq(a, b):
    if isinstance(a, EpsScalar) or isinstance(b, EpsScalar):
        ea = a if isinstance(a, EpsScalar) else None
        if ea is None:
            return b == rat(a) if not isinstance(b, EpsScalar) else False
        return (ea - b).is_zero() if isinstance(b, EpsScalar) else \
            (ea - EpsScalar.const(ea.tower, b)).is_zero()
    return rat(a) == rat(b)


@dataclass(frozen=True)
class Problem:
    """A level set p(Q(X)) = level with a distinguished coordinate."""
    p: MPoly
    Q: QuadMap
    level: object
    dist: int = 0

    def __post_init__(self):
        if self.p.nvars != self.Q.m:
            raise ValueError("p arity does not match the map")
        if not 0 <= self.dist < self.Q.n:
            raise ValueError("distinguished index out of range")


@dataclass
class Piece:
    """One chart: a block choice with its solved coordinates.

    pair.rows are the selected gradient rows as X-indices (never the
    distinguished one), pair.cols the solved X-indices W.  theta holds
    numerators for ALL n coordinates over the common denominator omega:
    theta[i] is the Cramer numerator for i in W and omega * T_i
    otherwise, so every coordinate of the inverse map is theta[i]/omega.
    equations and inequation cut out the chart's validity region in the
    (Y, T) variables; both are populated by enum_pieces.
    """
    pair: IndexPair
    omega: MPoly
    theta: tuple
    nvars: int
    tower: object
    equations: list = None
    inequation: MPoly = None

    @property
    def size(self):
        return len(self.pair.cols)


def phi_data(prob):
    """Gradient system data (Phi, bvec) with Phi(Q(X)) X = b(Q(X)).

    Phi is the (n-1) x n matrix sum_j p_j(Y) H_j with the distinguished
    row removed from each H_j; bvec is -sum_j p_j(Y) b_j likewise
    truncated.  Entries are MPoly in the k variables Y.
    """
    Q, p = prob.Q, prob.p
    k, n, tw = Q.m, Q.n, p.tower
    pj = [p.partial(j) for j in range(k)]
    rows = []
    bvec = []
    for i in range(n):
        if i == prob.dist:
            continue
        row = []
        for c in range(n):
            ent = MPoly.zero(k, tw)
            for j in range(k):
                h = Q.comps[j][0][i][c]
                if h:
                    ent = ent + pj[j] * MPoly.const(k, tw, h)
            row.append(ent)
        rows.append(row)
        bent = MPoly.zero(k, tw)
        for j in range(k):
            bj = Q.comps[j][1][i]
            if bj:
                bent = bent - pj[j] * MPoly.const(k, tw, bj)
        bvec.append(bent)
    return PolyMatrix.from_rows(rows, k, tw) if rows else \
        PolyMatrix(0, n, k, tw, []), bvec


def _row_labels(prob):
    return [i for i in range(prob.Q.n) if i != prob.dist]


def enum_pieces(prob, r):
    """All charts with block size between r and n-1, fully populated.

    Enumeration is exhaustive over row/column selections; emptiness of
    a chart is expressed by its equations, not by skipping it.
    """
    Q = prob.Q
    if Q.m == 0:
        raise ValueError("map has no components, the gradient matrix "
                         "would be empty")
    if r < 0:
        raise ValueError("r must be nonnegative")
    Phi, bvec = phi_data(prob)
    labels = _row_labels(prob)
    out = []
    for sel in enum_uw(Q.n - 1, Q.n, r):
        piece = _build_piece(prob, Phi, bvec, sel, labels)
        piece.equations, piece.inequation = piece_equations(piece, prob)
        out.append(piece)
    return out


def _padded_system(prob, Phi, bvec, t):
    ents = [[e.pad_vars(0, t) for e in row] for row in Phi.entries]
    Phi_p = PolyMatrix(Phi.nrows, Phi.ncols, Phi.nvars + t, Phi.tower, ents)
    return Phi_p, [e.pad_vars(0, t) for e in bvec]


def _build_piece(prob, Phi, bvec, sel, labels):
    Q = prob.Q
    k, n, tw = Q.m, Q.n, prob.p.tower
    W = sel.cols
    t = n - len(W)
    nv = k + t
    Phi_p, b_p = _padded_system(prob, Phi, bvec, t)
    tvar = {}
    for c in range(n):
        if c not in W:
            tvar[c] = MPoly.var(nv, tw, k + len(tvar))
    rhs = []
    for rp in sel.rows:
        e = b_p[rp]
        for c in range(n):
            if c not in W:
                e = e - Phi_p.at(rp, c) * tvar[c]
        rhs.append(e)
    w, omega = cramer_solve(submatrix(Phi_p, sel.rows, W), rhs)
    theta = [None] * n
    for pos, c in enumerate(W):
        theta[c] = w[pos]
    for c in range(n):
        if c not in W:
            theta[c] = omega * tvar[c]
    U = tuple(labels[i] for i in sel.rows)
    return Piece(pair=IndexPair(U, tuple(W)), omega=omega,
                 theta=tuple(theta), nvars=nv, tower=tw)


def piece_equations(piece, prob):
    """The chart's defining equations and its single inequation.

    Four families: the level equation; omega^2 (Y_j - Q_j(inverse)) for
    each component, polynomial because the inverse has denominator
    omega and Q is quadratic; omega-cleared consistency of the rows
    outside U; and every bordering minor one size larger.  The
    inequation is omega itself.  Total degrees are checked against the
    symbolic bound before returning.
    """
    Q = prob.Q
    k, n, tw = Q.m, Q.n, prob.p.tower
    U, W = piece.pair.rows, piece.pair.cols
    t = n - len(W)
    nv = k + t
    labels = _row_labels(prob)
    rows_pos = [labels.index(u) for u in U]
    Phi, bvec = phi_data(prob)
    Phi_p, b_p = _padded_system(prob, Phi, bvec, t)
    cs = lambda x: MPoly.const(nv, tw, x)
    half = mpq(1, 2)

    eqs = [prob.p.pad_vars(0, t) - cs(prob.level)]

    om = piece.omega
    om2 = om * om
    for j in range(k):
        H, b, c = Q.comps[j]
        acc = om2 * cs(c)
        for a in range(n):
            if b[a]:
                acc = acc + om * piece.theta[a] * cs(b[a])
            for bb in range(n):
                if H[a][bb]:
                    acc = acc + (piece.theta[a] * piece.theta[bb]
                                 * cs(H[a][bb]) * cs(half))
        eqs.append(om2 * MPoly.var(nv, tw, j) - acc)

    ubar_pos = [i for i in range(len(labels)) if i not in rows_pos]
    if ubar_pos and W:
        w2, _ = cramer_solve(submatrix(Phi_p, rows_pos, W),
                             [b_p[i] for i in rows_pos])
        for i in ubar_pos:
            e = om * b_p[i]
            for pos, c in enumerate(W):
                e = e - Phi_p.at(i, c) * w2[pos]
            eqs.append(e)
    elif ubar_pos:
        # empty block: the system asserts the rows themselves
        for i in ubar_pos:
            eqs.append(b_p[i])

    for i in ubar_pos:
        for c in range(n):
            if c in W:
                continue
            rows2 = sorted(rows_pos + [i])
            cols2 = sorted(W + (c,))
            eqs.append(det(submatrix(Phi_p, rows2, cols2)))

    d = prob.p.total_degree()
    e = max(d - 1, 0)
    s = len(W)
    bound = max(d, 2 * s * e + 2, (s + 1) * e + 1)
    for eq in eqs:
        assert eq.total_degree() <= bound, "chart equation exceeds its bound"
    return eqs, om


def piece_inverse(piece):
    """The chart's point map (Y, T) -> X as numerators over omega."""
    return RationalMap(piece.theta, piece.omega)


def piece_contains(piece, prob, x):
    """Exact membership of the point x in the chart's X-side region.

    Checks the level equation, all non-distinguished gradient rows,
    vanishing of the bordering minors of the scalar matrix Phi(Q(x)),
    and invertibility of the selected block.
    """
    Q = prob.Q
    n, tw = Q.n, prob.p.tower
    y = [Q.as_poly(j).eval(list(x)) for j in range(Q.m)]
    if not _scalar_zero(prob.p.eval(y) - _as_eps(tw, prob.level)):
        return False
    Phi, bvec = phi_data(prob)
    phi_x = [[_as_eps(tw, ent.eval(y)) for ent in row]
             for row in Phi.entries]
    b_x = [_as_eps(tw, ent.eval(y)) for ent in bvec]
    for i in range(len(phi_x)):
        g = -b_x[i]
        for c in range(n):
            g = g + phi_x[i][c] * _as_eps(tw, x[c])
        if not _scalar_zero(g):
            return False
    M = PolyMatrix(len(phi_x), n, 0, tw,
                   [[MPoly.const(0, tw, v) for v in row] for row in phi_x])
    labels = _row_labels(prob)
    rows_pos = [labels.index(u) for u in piece.pair.rows]
    W = piece.pair.cols
    if _scalar_zero(_as_eps(tw, det(submatrix(M, rows_pos, W)).const_part())):
        return False
    for i in range(len(labels)):
        if i in rows_pos:
            continue
        for c in range(n):
            if c in W:
                continue
            rows2 = sorted(rows_pos + [i])
            cols2 = sorted(W + (c,))
            minor = det(submatrix(M, rows2, cols2)).const_part()
            if not _scalar_zero(_as_eps(tw, minor)):
                return False
    return True


def _as_eps(tw, x):
    return x if isinstance(x, EpsScalar) else EpsScalar.const(tw, x)


def _scalar_zero(x):
    if isinstance(x, EpsScalar):
        return x.is_zero()
    return rat(x) == 0

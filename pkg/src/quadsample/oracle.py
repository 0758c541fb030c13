"""Independent cross-checks used by the test suite.

These are deliberately naive reimplementations on different algorithmic
routes than the main code paths, kept simple enough to audit by eye.
"""

from dataclasses import dataclass
from itertools import product
from math import gcd

from gmpy2 import mpq

from .exactcore import MPoly, rat
from .realroots import u_eval, u_gcd

__all__ = ["cofactor_det", "grid_components", "resultant_critical",
           "GridReport", "OracleInconclusive"]


class OracleInconclusive(RuntimeError):
    """The brute-force route degenerated and proves nothing."""


def cofactor_det(M):
    """Laplace expansion along the first row, for matrices up to 4x4.

    M is a PolyMatrix; the result is an MPoly.  This is the slow-route
    check for the Berkowitz determinant.
    """
    if M.nrows != M.ncols:
        raise ValueError("determinant of a nonsquare matrix")
    if M.nrows > 4:
        raise ValueError("cofactor oracle is limited to 4x4")
    return _laplace(M.entries, list(range(M.nrows)),
                    list(range(M.ncols)), M)


def _laplace(A, rows, cols, M):
    if not rows:
        return MPoly.const(M.nvars, M.tower, 1)
    i = rows[0]
    rest = rows[1:]
    total = MPoly.zero(M.nvars, M.tower)
    for pos, j in enumerate(cols):
        sub = _laplace(A, rest, cols[:pos] + cols[pos + 1:], M)
        term = A[i][j] * sub
        total = total + (term if pos % 2 == 0 else -term)
    return total


@dataclass(frozen=True)
class GridReport:
    """Cell-cluster census of a level set on a box grid."""
    resolution: object
    count: int
    samples: tuple


def _rat_terms(poly):
    return [(e, c.as_rat()) for e, c in poly.terms.items()]


def _eval_terms(terms, x):
    total = mpq(0)
    for e, c in terms:
        v = c
        for i, ei in enumerate(e):
            if ei:
                v = v * x[i] ** ei
        total += v
    return total


def _ipow(a, b, e):
    if e % 2:
        return a ** e, b ** e
    hi = max(abs(a), abs(b)) ** e
    if a <= 0 <= b:
        return mpq(0), hi
    return min(abs(a), abs(b)) ** e, hi


def _imul(al, ah, bl, bh):
    ps = (al * bl, al * bh, ah * bl, ah * bh)
    return min(ps), max(ps)


def _bound_terms(terms, cell):
    # sup of |poly| over the cell, by interval evaluation
    lo = mpq(0)
    hi = mpq(0)
    for e, c in terms:
        tlo, thi = mpq(1), mpq(1)
        for i, ei in enumerate(e):
            if ei:
                pl, ph = _ipow(cell[i][0], cell[i][1], ei)
                tlo, thi = _imul(tlo, thi, pl, ph)
        if c >= 0:
            lo, hi = lo + tlo * c, hi + thi * c
        else:
            lo, hi = lo + thi * c, hi + tlo * c
    return max(abs(lo), abs(hi))


def grid_components(prob, box, resolution):
    """Census of the components of p(Q(x)) = level inside a box.

    A cell is active when |g(center)| is below the cell's own Lipschitz
    allowance (coefficient bound of the gradient on the cell times the
    center-to-point distance).  Active cells are clustered with corner
    adjacency.  The census never misses a component that meets the box
    interior, and never merges components farther apart than two cells.
    """
    Q = prob.Q
    n = Q.n
    if n > 3:
        raise ValueError("grid census is limited to three variables")
    res = rat(resolution)
    qpolys = [Q.as_poly(j) for j in range(Q.m)]
    g = prob.p.compose(qpolys) - MPoly.const(n, prob.p.tower, prob.level)
    gt = _rat_terms(g)
    parts = [_rat_terms(g.partial(i)) for i in range(n)]
    los = [rat(b[0]) for b in box]
    counts = []
    for (lo, hi) in box:
        span = (rat(hi) - rat(lo)) / res
        m = int(span)
        counts.append(m if m == span else m + 1)
    half = res / 2
    active = {}
    for idx in product(*(range(m) for m in counts)):
        center = [los[i] + res * idx[i] + half for i in range(n)]
        cell = [(center[i] - half, center[i] + half) for i in range(n)]
        allowance = sum(_bound_terms(pt, cell) for pt in parts)
        if abs(_eval_terms(gt, center)) <= allowance * half * n:
            active[idx] = tuple(center)
    seen = set()
    samples = []
    for start in active:
        if start in seen:
            continue
        samples.append(active[start])
        stack = [start]
        seen.add(start)
        while stack:
            cur = stack.pop()
            for step in product(*((-1, 0, 1) for _ in range(n))):
                nxt = tuple(c + s for c, s in zip(cur, step))
                if nxt in active and nxt not in seen:
                    seen.add(nxt)
                    stack.append(nxt)
    return GridReport(resolution=res, count=len(samples),
                      samples=tuple(samples))


def _univar_in(poly, keep, elim):
    """Coefficients of poly along variable elim, each univariate in keep."""
    out = {}
    for e, c in poly.terms.items():
        out.setdefault(e[elim], {})[e[keep]] = c.as_rat()
    deg = max(out) if out else -1
    coeffs = []
    for i in range(deg + 1):
        d = out.get(i, {})
        top = max(d) if d else -1
        coeffs.append([d.get(j, mpq(0)) for j in range(top + 1)])
    return coeffs


def _divisors(n):
    n = abs(int(n))
    out = set()
    d = 1
    while d * d <= n:
        if n % d == 0:
            out.add(d)
            out.add(n // d)
        d += 1
    return out


def _u_rational_roots(f):
    """All rational roots of a nonzero coefficient list, by the
    classical divisor test on the primitive integer form."""
    f = list(f)
    while f and not f[-1]:
        f.pop()
    if not f:
        raise ValueError("zero polynomial")
    roots = []
    while f[0] == 0:
        if 0 not in roots:
            roots.append(mpq(0))
        f = f[1:]
    if len(f) <= 1:
        return roots
    denlcm = 1
    for c in f:
        denlcm = denlcm * c.denominator // gcd(denlcm, c.denominator)
    ints = [int(c * denlcm) for c in f]
    g = 0
    for v in ints:
        g = gcd(g, abs(v))
    ints = [v // g for v in ints]
    for p in _divisors(ints[0]):
        for q in _divisors(ints[-1]):
            for cand in (mpq(p, q), mpq(-p, q)):
                if cand not in roots and u_eval(f, cand) == 0:
                    roots.append(cand)
    roots.sort()
    return roots



def resultant_critical(prob):
    """Rational critical points of the distinguished projection, n = 2.

    Solves p(Q(x)) = level and the gradient condition in the other
    coordinate by Sylvester-resultant elimination, then extracts the
    rational solutions exactly (each verified against both equations
    before being reported).  Irrational solutions are outside this
    oracle's scope; a degenerate elimination raises OracleInconclusive.
    """
    Q = prob.Q
    if Q.n != 2:
        raise ValueError("resultant route is limited to two variables")
    dist = prob.dist
    other = 1 - dist
    qpolys = [Q.as_poly(j) for j in range(Q.m)]
    g = prob.p.compose(qpolys) - MPoly.const(2, prob.p.tower, prob.level)
    if g.is_zero():
        raise OracleInconclusive("level set is the whole plane")
    if g.is_const():
        return []
    h = g.partial(other)
    if h.is_zero():
        raise OracleInconclusive("critical system is not zero-dimensional")
    gv = _univar_in(g, dist, other)
    hv = _univar_in(h, dist, other)
    R = _sylvester_resultant(gv, hv, g.tower)
    if not any(R):
        raise OracleInconclusive("resultant vanished identically")
    points = []
    for a in _u_rational_roots(R):
        ga = [u_eval(c, a) for c in gv]
        ha = [u_eval(c, a) for c in hv]
        while ga and not ga[-1]:
            ga.pop()
        while ha and not ha[-1]:
            ha.pop()
        if not ga or not ha:
            continue
        if len(ga) == 1 or len(ha) == 1:
            continue
        d = u_gcd(ga, ha)
        if len(d) <= 1:
            continue
        for b in _u_rational_roots(d):
            if u_eval(ga, b) == 0 and u_eval(ha, b) == 0:
                x = [None, None]
                x[dist] = a
                x[other] = b
                points.append(tuple(x))
    points.sort()
    return points


def _sylvester_resultant(gv, hv, tw):
    """Resultant of two coefficient stacks (univariate lists each),
    eliminating the stacked variable; returns a plain coefficient list.
    """
    from .polylinalg import PolyMatrix, det

    m = len(gv) - 1
    l = len(hv) - 1
    size = m + l
    if size == 0:
        return [mpq(1)]
    top = max(max((len(c) for c in gv), default=1),
              max((len(c) for c in hv), default=1))
    def to_poly(c):
        p = MPoly.zero(1, tw)
        for i, v in enumerate(c):
            if v:
                p = p + MPoly.mono(1, tw, (i,), v)
        return p
    grow = [to_poly(c) for c in reversed(gv)]
    hrow = [to_poly(c) for c in reversed(hv)]
    zero = MPoly.zero(1, tw)
    rows = []
    for i in range(l):
        rows.append([zero] * i + grow + [zero] * (size - m - 1 - i))
    for i in range(m):
        rows.append([zero] * i + hrow + [zero] * (size - l - 1 - i))
    d = det(PolyMatrix.from_rows(rows, 1, tw))
    out = [mpq(0)] * (d.degree_in(0) + 1) if not d.is_zero() else []
    for e, c in d.terms.items():
        out[e[0]] = c.as_rat()
    return out

"""Zero-dimensional quotient algebras from triangular generator sets.

A generator set is "special" when generator i reads b_i * S_i^{d_i} + U_i
with a single-monomial coefficient b_i and a tail U_i small in every
variable.  The quotient is then spanned by the monomials under the
staircase (all exponents e_i < d_i) and has dimension N = prod d_i, and
reduction never needs polynomial division beyond dividing by the b_i.

On top of that quotient this module computes traces, characteristic
polynomials of elements together with their first-order perturbation in
a formal direction, and the candidate univariate representations of the
image of the zero set under a polynomial map.  A final pass rescales the
candidates by the order of their leading data and takes coefficient-wise
limits in the innermost infinitesimals.
"""

from dataclasses import dataclass
from itertools import product
from math import factorial, gcd, lcm

from gmpy2 import mpq

from .exactcore import (EpsScalar, MPoly, lim_inner, rat, u_deriv, u_trim)

__all__ = ["NotSpecialError", "SpecialBasis", "QuotientAlgebra", "AlgElem",
           "PolyMap", "URep", "validate_special", "normal_form", "trace",
           "charpoly_pair", "sep_form", "candidates", "hat_normalize",
           "limit_candidates", "filter_good"]


class NotSpecialError(ValueError):
    """The generators do not have the required triangular shape."""


@dataclass(frozen=True)
class SpecialGen:
    lead_coeff: EpsScalar
    var: int
    deg: int
    tail: MPoly


@dataclass(frozen=True)
class SpecialBasis:
    nvars: int
    tower: object
    gens: tuple          # indexed by variable
    lead_lcm: EpsScalar  # single-monomial common multiple of the b_i

    @property
    def degs(self):
        return tuple(g.deg for g in self.gens)


@dataclass
class AlgElem:
    """Coordinates in the staircase monomial basis."""
    coords: list


@dataclass(frozen=True)
class PolyMap:
    comps: tuple

    @property
    def m(self):
        return len(self.comps)


@dataclass
class URep:
    """Candidate univariate representation of image points.

    f is the characteristic polynomial of the separating element, g0 and
    g the perturbation polynomials for direction 1 and for each map
    component.  g0 and g are stored undifferentiated by `candidates`;
    `limit_candidates` (with inner >= 1) emits them differentiated mu
    times.  Coordinates of the point at a root t of multiplicity mu + 1
    are g[i](t) / g0(t).
    """
    f: list
    g0: list
    g: list
    mu: int
    j: int


def _single_term(c):
    return len(c.terms) == 1


def _mono_lcm(tower, coeffs):
    """Least common multiple of single-monomial scalars, positive lead."""
    num = 1
    den = 0
    exps = [0] * tower.ell
    for c in coeffs:
        (k,), (v,) = zip(*c.terms.items())
        num = lcm(num, int(abs(v.numerator)))
        den = gcd(den, int(v.denominator))
        for i, e in enumerate(tower.unpack(k)):
            exps[i] = max(exps[i], e)
    return EpsScalar.mono(tower, exps, mpq(num, den))


def validate_special(gens):
    """Check the triangular shape and package the generators.

    Raises NotSpecialError naming the violated condition otherwise.
    """
    gens = list(gens)
    if not gens:
        raise NotSpecialError("empty generator list")
    nvars = gens[0].nvars
    tw = gens[0].tower
    if len(gens) != nvars:
        raise NotSpecialError(
            "%d generators for %d variables; need exactly one per variable"
            % (len(gens), nvars))
    slots = [None] * nvars
    for g in gens:
        if not g.terms:
            raise NotSpecialError("zero generator")
        top = g.total_degree()
        heads = [e for e in g.terms if sum(e) == top]
        if len(heads) != 1:
            raise NotSpecialError(
                "top total degree %d is shared by %d monomials" % (top,
                                                                   len(heads)))
        head = heads[0]
        live = [i for i, e in enumerate(head) if e]
        if len(live) != 1:
            raise NotSpecialError(
                "leading monomial %r is not a pure power" % (head,))
        i = live[0]
        b = g.terms[head]
        if not _single_term(b):
            raise NotSpecialError(
                "leading coefficient of the S_%d generator is not a single "
                "epsilon monomial" % (i + 1))
        if slots[i] is not None:
            raise NotSpecialError("two generators lead in S_%d" % (i + 1))
        tail = g - MPoly.mono(nvars, tw, head, 1) * b
        slots[i] = SpecialGen(b, i, head[i], tail)
    degs = [s.deg for s in slots]
    for s in slots:
        for e in s.tail.terms:
            if sum(e) >= s.deg:
                raise NotSpecialError(
                    "tail of the S_%d generator has total degree %d >= %d"
                    % (s.var + 1, sum(e), s.deg))
            for j, ej in enumerate(e):
                if ej >= degs[j]:
                    raise NotSpecialError(
                        "tail of the S_%d generator has degree %d >= %d "
                        "in S_%d" % (s.var + 1, ej, degs[j], j + 1))
    blcm = _mono_lcm(tw, [s.lead_coeff for s in slots])
    return SpecialBasis(nvars, tw, tuple(slots), blcm)


class QuotientAlgebra:
    """The quotient by a special basis, with a memoized reduction table.

    Reduction of a monomial over the staircase rewrites one leading
    power through its generator; every replacement monomial has strictly
    smaller total degree, so the table closes after finitely many steps
    and each distinct monomial is reduced once.
    """

    def __init__(self, basis):
        self.basis = basis
        degs = basis.degs
        self.staircase = sorted(product(*[range(d) for d in degs]))
        self.N = len(self.staircase)
        self.index = {e: i for i, e in enumerate(self.staircase)}
        self._zero = EpsScalar(basis.tower, {})
        self._one = EpsScalar.const(basis.tower, 1)
        self._table = {}
        self._inv_lead = [g.lead_coeff ** (-1) for g in basis.gens]
        self._tau = None
        self._tau_dot = {}

    # -- reduction ------------------------------------------------------

    def red(self, exp):
        """Coordinates of the residue of the monomial S^exp."""
        memo = self._table
        got = memo.get(exp)
        if got is not None:
            return got
        degs = self.basis.degs
        stack = [exp]
        while stack:
            e = stack[-1]
            if e in memo:
                stack.pop()
                continue
            pos = self.index.get(e)
            if pos is not None:
                v = [self._zero] * self.N
                v[pos] = self._one
                memo[e] = v
                stack.pop()
                continue
            i = next(j for j, ej in enumerate(e) if ej >= degs[j])
            g = self.basis.gens[i]
            base = list(e)
            base[i] -= g.deg
            deps = []
            parts = []
            for texp, tc in g.tail.terms.items():
                m = tuple(b + t for b, t in zip(base, texp))
                parts.append((m, tc * -self._inv_lead[i]))
                if m not in memo:
                    deps.append(m)
            if deps:
                stack.extend(deps)
                continue
            v = [self._zero] * self.N
            for m, c in parts:
                sub = memo[m]
                for r in range(self.N):
                    if sub[r]:
                        v[r] = v[r] + sub[r] * c
            memo[e] = v
            stack.pop()
        return memo[exp]

    def reduce_poly(self, f):
        v = [self._zero] * self.N
        for e, c in f.terms.items():
            sub = self.red(e)
            for r in range(self.N):
                if sub[r]:
                    v[r] = v[r] + sub[r] * c
        return v

    def unit(self):
        return AlgElem(self.red(tuple([0] * self.basis.nvars)))

    def mul_matrix(self, i):
        """Multiplication by S_i as columns over the staircase."""
        cols = []
        for a in self.staircase:
            e = list(a)
            e[i] += 1
            cols.append(self.red(tuple(e)))
        return cols

    # -- trace data -----------------------------------------------------

    @property
    def tau(self):
        """Trace of multiplication by each staircase monomial."""
        if self._tau is None:
            out = []
            for w in self.staircase:
                s = self._zero
                for a_i, a in enumerate(self.staircase):
                    m = tuple(x + y for x, y in zip(w, a))
                    c = self.red(m)[a_i]
                    if c:
                        s = s + c
                out.append(s)
            self._tau = out
        return self._tau

    def tau_dot(self, exp):
        """tau contracted with the residue of S^exp, memoized."""
        got = self._tau_dot.get(exp)
        if got is None:
            v = self.red(exp)
            tau = self.tau
            got = self._zero
            for r in range(self.N):
                if v[r]:
                    got = got + v[r] * tau[r]
            self._tau_dot[exp] = got
        return got


def normal_form(f, A):
    """Residue coordinates of a polynomial; linear and idempotent."""
    return AlgElem(A.reduce_poly(f))


def trace(a, A):
    """Trace of the multiplication-by-a operator."""
    tau = A.tau
    s = A._zero
    for c, t in zip(a.coords, tau):
        if c and t:
            s = s + c * t
    return s


def _mul_op(A, a):
    """Dense column matrix of multiplication by the element a."""
    N = A.N
    cols = [[A._zero] * N for _ in range(N)]
    for w_i, w in enumerate(A.staircase):
        c_w = a.coords[w_i]
        if not c_w:
            continue
        for b_i, b in enumerate(A.staircase):
            m = tuple(x + y for x, y in zip(w, b))
            sub = A.red(m)
            col = cols[b_i]
            for r in range(N):
                if sub[r]:
                    col[r] = col[r] + sub[r] * c_w
    return cols


def _matvec(A, cols, u):
    N = A.N
    out = [A._zero] * N
    for c in range(N):
        s = u[c]
        if not s:
            continue
        col = cols[c]
        for r in range(N):
            if col[r]:
                out[r] = out[r] + col[r] * s
    return out


def _charpoly_multi(a, bs, A):
    """Characteristic polynomial of a and its perturbations along each b.

    Returns (chi, gs): chi monic of degree N, and for each direction b
    the polynomial d/dS chi(a + S b, T) at S = 0, both as low-to-high
    EpsScalar coefficient lists.  Power sums of a + S b are formed to
    first order in S and fed through the Newton recurrence.
    """
    N = A.N
    zero = A._zero
    tau = A.tau
    cols = _mul_op(A, a)
    us = [A.unit().coords]
    for _ in range(N):
        us.append(_matvec(A, cols, us[-1]))
    p0 = [None] * (N + 1)
    for j in range(1, N + 1):
        s = zero
        for c, t in zip(us[j], tau):
            if c and t:
                s = s + c * t
        p0[j] = s
    # direction weights: w_b[beta] contracts tau with b * S^beta
    p1_all = []
    for b in bs:
        w = []
        for beta in A.staircase:
            s = zero
            for o_i, omega in enumerate(A.staircase):
                c = b.coords[o_i]
                if not c:
                    continue
                m = tuple(x + y for x, y in zip(omega, beta))
                d = A.tau_dot(m)
                if d:
                    s = s + d * c
            w.append(s)
        p1 = [None] * (N + 1)
        for j in range(1, N + 1):
            s = zero
            for c, t in zip(us[j - 1], w):
                if c and t:
                    s = s + c * t
            p1[j] = s * j
        p1_all.append(p1)
    beta = [zero] * (N + 1)
    beta[N] = A._one
    for i in range(1, N + 1):
        s = zero
        for j in range(1, i + 1):
            if p0[j] and beta[N - i + j]:
                s = s + p0[j] * beta[N - i + j]
        beta[N - i] = s * mpq(-1, i)
    gs = []
    for p1 in p1_all:
        gamma = [zero] * (N + 1)
        for i in range(1, N + 1):
            s = zero
            for j in range(1, i + 1):
                if p0[j] and gamma[N - i + j]:
                    s = s + p0[j] * gamma[N - i + j]
                if p1[j] and beta[N - i + j]:
                    s = s + p1[j] * beta[N - i + j]
            gamma[N - i] = s * mpq(-1, i)
        gs.append(u_trim(gamma))
    return beta, gs


def charpoly_pair(a, b, A, factorial_scaled=False):
    """chi of a and the S-derivative of chi(a + S b, T) at S = 0.

    With factorial_scaled both outputs are multiplied by N!, which clears
    every denominator introduced by the recurrence when the reduction
    data is integral.
    """
    chi, (g,) = _charpoly_multi(a, [b], A)
    if factorial_scaled:
        f = mpq(factorial(A.N))
        chi = [c * f for c in chi]
        g = [c * f for c in g]
    return chi, g


def sep_form(j, m, tw=None):
    """The linear form Y_1 + j Y_2 + ... + j^(m-1) Y_m."""
    if j < 0 or m < 1:
        raise ValueError("need j >= 0 and m >= 1")
    from .exactcore import tower
    if tw is None:
        tw = tower(())
    out = MPoly.zero(m, tw)
    w = 1
    for i in range(m):
        out = out + MPoly.var(m, tw, i) * rat(w)
        w *= j
    return out


def candidates(A, P, js=None):
    """Candidate representations over separating forms of the map P.

    Component polynomials are reduced into the algebra here.  For each
    index j the separating element is sum_i j^(i-1) P_i; its
    characteristic polynomial and perturbation data are computed once
    and emitted with every derivative order mu in 0..N-1.  js overrides
    the scanned index range (the default covers 0..(m-1)N^2).
    """
    N = A.N
    m = P.m
    ps = [normal_form(c, A) for c in P.comps]
    if js is None:
        js = range((m - 1) * N * N + 1)
    one = A.unit()
    out = []
    for j in js:
        coords = [A._zero] * N
        w = 1
        for p in ps:
            for r in range(N):
                if p.coords[r]:
                    coords[r] = coords[r] + p.coords[r] * w
            w *= j
        a = AlgElem(coords)
        chi, gs = _charpoly_multi(a, [one] + ps, A)
        g0 = gs[0]
        gi = gs[1:]
        for mu in range(N):
            out.append(URep(chi, g0, gi, mu, j))
    return out


def _stage_order(f):
    """Minimal innermost order over the nonzero coefficients."""
    orders = [c.inner_order() for c in f if c]
    if not orders:
        raise ValueError("zero polynomial has no order")
    return min(orders)


def _stage_scale(tw, o):
    exps = [0] * tw.ell
    exps[-1] = -o
    return EpsScalar.mono(tw, exps)


def hat_normalize(f, inner):
    """Rescale by the innermost orders and take coefficient-wise limits.

    One infinitesimal is removed per stage, innermost first: the stage
    order o is the least innermost order over the coefficients, the
    polynomial is scaled by symbol^(-o), and the limit is taken in that
    symbol.  Returns (fhat, o) with o the tuple of stage orders; fhat is
    nonzero over the tower shortened by `inner` symbols.
    """
    f = u_trim(list(f))
    if not f:
        raise ValueError("cannot normalize the zero polynomial")
    orders = []
    for _ in range(inner):
        tw = f[-1].tower
        o = _stage_order(f)
        sc = _stage_scale(tw, o)
        f = [lim_inner(c * sc, 1) for c in f]
        orders.append(o)
    return u_trim(f), tuple(orders)


def limit_candidates(cands, inner, stats=None):
    """Limit every candidate over the `inner` innermost infinitesimals.

    Each stage rescales chi by its own order and applies the same scale
    to g0 and the g_i, so the coordinate ratios are preserved.  A
    candidate whose g data is unbounded under that scale cannot describe
    a finite limit point and is dropped (counted in stats["pruned"]
    when a dict is passed).  After the last stage g0 and g are
    differentiated mu times; chi stays undifferentiated.  With inner = 0
    the input is returned unchanged.
    """
    if inner == 0:
        return list(cands)
    out = []
    pruned = 0
    for cand in cands:
        chi = list(cand.f)
        g0 = list(cand.g0)
        gs = [list(g) for g in cand.g]
        ok = True
        for _ in range(inner):
            tw = chi[-1].tower
            o = _stage_order(chi)
            sc = _stage_scale(tw, o)
            chi = [lim_inner(c * sc, 1) for c in chi]
            scaled = []
            for g in [g0] + gs:
                gsc = [c * sc for c in g]
                if any(c and c.inner_order() < 0 for c in gsc):
                    ok = False
                    break
                scaled.append([lim_inner(c, 1) for c in gsc])
            if not ok:
                break
            g0 = scaled[0]
            gs = scaled[1:]
        if not ok:
            pruned += 1
            continue
        for _ in range(cand.mu):
            g0 = u_deriv(g0)
            gs = [u_deriv(g) for g in gs]
        out.append(URep(u_trim(chi), u_trim(g0), [u_trim(g) for g in gs],
                        cand.mu, cand.j))
    if stats is not None:
        stats["pruned"] = stats.get("pruned", 0) + pruned
    return out


def _prem(f, g):
    """Pseudo remainder: ring arithmetic only, no coefficient division."""
    r = u_trim(list(f))
    g = u_trim(list(g))
    dg = len(g) - 1
    lg = g[-1]
    while r and len(r) - 1 >= dg:
        lr = r[-1]
        shift = len(r) - 1 - dg
        r = [c * lg for c in r]
        for i, gc in enumerate(g):
            r[i + shift] = r[i + shift] - gc * lr
        r = u_trim(r[:-1])
    return r


def _gcd_degree(f, g):
    """Degree of gcd over the coefficient fraction field.

    Plain pseudo-remainder chain without content removal; coefficient
    growth is steep but the inputs here are small filter probes.
    """
    f = u_trim(list(f))
    g = u_trim(list(g))
    if not f:
        return len(g) - 1
    if not g:
        return len(f) - 1
    if len(f) < len(g):
        f, g = g, f
    while g:
        f, g = g, _prem(f, g)
    return len(f) - 1


def filter_good(cands, inner=0):
    """Optionally narrow the candidates to the best separating groups.

    Groups by index j and keeps the groups whose characteristic
    polynomial has maximal degree and, among those, minimal repeated
    part (degree of gcd with the derivative, before and after
    normalizing away `inner` infinitesimals).  Ties keep the smallest j.
    Within the kept groups, candidates whose perturbation data would be
    killed by the normalizing scale are dropped, unless that would empty
    the result.  Never removes every group.
    """
    groups = {}
    for c in cands:
        groups.setdefault(c.j, []).append(c)
    if len(groups) <= 1:
        return list(cands)

    def score(j):
        chi = groups[j][0].f
        rep = _gcd_degree(chi, u_deriv(chi))
        rep_hat = rep
        if inner > 0:
            hat, _ = hat_normalize(chi, inner)
            rep_hat = _gcd_degree(hat, u_deriv(hat))
        return (-(len(chi) - 1), rep, rep_hat, j)

    best = min(score(j) for j in groups)
    kept = list(groups[best[3]])
    if inner > 0:
        filtered = []
        for c in kept:
            o_chi = min(x.inner_order() for x in c.f if x)
            bounded = all(
                (not x) or x.inner_order() >= o_chi
                for g in [c.g0] + list(c.g) for x in g)
            if bounded:
                filtered.append(c)
        if filtered:
            kept = filtered
    return kept

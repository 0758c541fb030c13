"""End-to-end sampling of level sets of polynomials in quadratic forms.

The entry points are `sample` and `decide`.  Both take a Problem (the
level set p(Q(X)) = level) and a PipelineConfig and return exact,
verified univariate representations of points meeting every connected
component of the set.

Two strategies are provided.  The hybrid strategy (the default) works
directly in the X variables: it reduces the critical system of the
height coordinate to a triangular basis over the rationals whenever the
set is certified bounded, falls back to an infinitesimal smoothing of
the squared defining polynomial otherwise, and wraps unbounded sets in
an infinitesimal sphere first.  The symbolic strategy deforms the input
over the full infinitesimal tower, walks every chart of the deformed
gradient system through the limit machinery, and removes the outermost
infinitesimal by a certified rational substitution.  Its quotient
algebras grow very quickly, so it is guarded by a dimension cap and at
realistic sizes reports a resource error instead of running.

Every emitted point passes `verify_membership`; no point is reported on
the strength of the construction alone.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

from gmpy2 import mpq

from functools import lru_cache

from .exactcore import (EpsScalar, MPoly, compose_rational, rat, tower,
                        u_add, u_deriv, u_eval, u_mul, u_pow, u_scale,
                        u_sub, u_to_rat, u_trim)
from .realroots import (IsolInterval, RealURep, isolate, refine,
                        root_multiplicity, sign_at, squarefree, thom,
                        u_divmod, u_gcd)
from .algebra0d import (NotSpecialError, PolyMap, QuotientAlgebra, URep,
                        candidates, limit_candidates, validate_special)
from .geomlift import (ResourceLimitError, critical_basis,
                       limits_of_image, smooth_zeta)
from .pieces import Problem, QuadMap, enum_pieces, piece_inverse

log = logging.getLogger(__name__)


class PipelineError(RuntimeError):
    """Invalid input or a broken internal invariant."""


class SubstitutionError(PipelineError):
    """No tried rational value kept the recorded sign data stable."""


class PieceResourceError(ResourceLimitError):
    """A chart's quotient algebra would exceed the configured cap."""

    def __init__(self, pair, estimate, cap):
        ResourceLimitError.__init__(self, estimate, cap)
        self.pair = pair
        self.args = ("chart U=%r W=%r needs dimension %d over the cap %d"
                     % (tuple(pair.rows), tuple(pair.cols), estimate, cap),)


@dataclass
class PipelineConfig:
    """Strategy selection and resource knobs.

    mode picks the strategy.  assume_bounded says the zero set is known
    bounded, which skips the sphere stage; assume_nonneg says p takes no
    negative values, which skips a squaring.  rational_eps1 and
    rational_eps2 replace the corresponding infinitesimals of the
    symbolic strategy by fixed positive rationals, shortening the tower.
    jobs sizes the chart worker pool.  seed is accepted for interface
    stability; every implemented strategy is deterministic and ignores
    it.  n_cap bounds the quotient-algebra dimension.
    """
    mode: str = "hybrid"
    assume_bounded: bool = False
    assume_nonneg: bool = False
    rational_eps1: object = None
    rational_eps2: object = None
    jobs: int = 1
    seed: int = 0
    n_cap: int = 4096

    def __post_init__(self):
        if self.mode not in ("symbolic", "hybrid"):
            raise ValueError("mode must be 'symbolic' or 'hybrid'")
        for name in ("rational_eps1", "rational_eps2"):
            v = getattr(self, name)
            if v is not None:
                v = rat(v)
                if v <= 0:
                    raise ValueError("%s must be positive" % name)
                setattr(self, name, v)
        if self.jobs < 1:
            raise ValueError("jobs must be at least 1")
        if self.n_cap < 1:
            raise ValueError("n_cap must be at least 1")


@dataclass
class Eps0Certificate:
    """Audit trail of the outermost-infinitesimal substitution.

    test_polys are the members of the stability set, as coefficient
    lists in the removed symbol (low degree first); bounds the
    per-member lower bound on the magnitude of its nonzero roots (None
    for members without one, such as constants); value the substituted
    rational.  probe records the root and sign data recomputed at value
    and at value/2; the two halves must agree.  conservative marks that
    the stability set is a superset of the textbook one.
    """
    test_polys: list
    bounds: list
    value: mpq
    probe: tuple = ()
    conservative: bool = True

    def __post_init__(self):
        if self.value <= 0:
            raise ValueError("substituted value must be positive")
        for b in self.bounds:
            if b is not None and self.value >= b:
                raise ValueError("substituted value is not below a bound")


@dataclass
class SampleReport:
    """What a pipeline run produced.

    pieces_processed counts charts (symbolic) or separating-form groups
    (hybrid); candidates_pruned counts candidates dropped as unbounded,
    unmatched, or failing verification.  certificate is present when an
    infinitesimal was substituted away.
    """
    points: list
    status: str
    pieces_processed: int = 0
    candidates_pruned: int = 0
    certificate: Eps0Certificate = None

    def __post_init__(self):
        if self.status not in ("EMPTY", "NONEMPTY"):
            raise ValueError("status must be EMPTY or NONEMPTY")
        if (self.status == "EMPTY") != (not self.points):
            raise ValueError("status must say EMPTY exactly when "
                             "no points were produced")


# -- the level polynomial ----------------------------------------------

def _pq_poly(prob):
    """p(Q(X)) - level as one polynomial in the X variables."""
    qpolys = [prob.Q.as_poly(j) for j in range(prob.Q.m)]
    G = prob.p.compose(qpolys)
    return G - MPoly.const(G.nvars, G.tower, prob.level)


def _plain_scalar(c):
    if isinstance(c, EpsScalar):
        return c.as_rat()
    return rat(c)


def _plain_problem(prob):
    """The same problem with all coefficients as plain rationals.

    Raises PipelineError when a coefficient still carries an
    infinitesimal symbol.
    """
    tw = tower(())
    try:
        pterms = {e: EpsScalar.const(tw, _plain_scalar(c))
                  for e, c in prob.p.terms.items()}
        comps = []
        for H, b, c in prob.Q.comps:
            comps.append((tuple(tuple(_plain_scalar(x) for x in row)
                                for row in H),
                          tuple(_plain_scalar(x) for x in b),
                          _plain_scalar(c)))
        level = _plain_scalar(prob.level)
    except (ArithmeticError, ValueError) as exc:
        raise PipelineError(
            "this strategy needs rational input coefficients: %s"
            % exc) from exc
    p = MPoly(prob.p.nvars, tw, pterms)
    return Problem(p, QuadMap(prob.Q.n, tw, tuple(comps)), level, prob.dist)


# -- membership and deduplication --------------------------------------

def verify_membership(rep, prob):
    """Exact membership of the represented point on the level set.

    The residue is the denominator-cleared evaluation of the level
    polynomial along the representation, reduced modulo f; the test
    passes iff its sign at the designated root is zero.  A denominator
    sharing a factor with f cannot be invertible at every root, so such
    a representation fails outright, with a logged diagnostic.
    """
    f = u_trim(u_to_rat(rep.f))
    if len(f) < 2:
        return False
    g0 = u_trim(u_to_rat(rep.g0))
    if not g0:
        return False
    if len(u_gcd(f, g0)) > 1:
        log.warning("denominator of a representation shares a factor "
                    "with its defining polynomial; rejecting it")
        return False
    gs = [u_to_rat(g) for g in rep.gs]
    G = _pq_poly(_plain_problem(prob))
    if len(gs) != G.nvars:
        return False
    res = u_to_rat(compose_rational(G, gs, g0))
    _, rem = u_divmod(res, f)
    rem = u_trim(rem)
    if not rem:
        return True
    iv = rep.interval
    if iv is None:
        iv = _interval_from_thom(f, rep.thom)
        if iv is None:
            return False
    return sign_at(squarefree(f), iv, rem) == 0


def _interval_from_thom(f, enc):
    enc = tuple(enc)
    for iv, e in thom(f):
        if e == enc:
            return iv
    return None


@lru_cache(maxsize=512)
def _annihilator(fs, num, den):
    """A nonzero polynomial vanishing at num/den over every root of fs.

    Computed as the last member of a primitive remainder sequence of fs
    and den*Z - num in T over Q[Z], with the removed polynomial
    contents multiplied back so that no specialization of Z can escape
    through a content division.  Roots beyond the actual coordinate
    values are possible and harmless; the comparison that uses this
    rechecks every membership by sign.
    """
    A = [[c] for c in fs]
    B = []
    for k in range(max(len(num), len(den))):
        nk = num[k] if k < len(num) else mpq(0)
        dk = den[k] if k < len(den) else mpq(0)
        B.append(u_trim([-nk, dk]))
    A = _ntrim(A)
    B = _ntrim(B)
    extra = []
    while len(B) > 1:
        R = _ntrim(_nested_prem(A, B))
        cont = []
        for c in R:
            cont = u_gcd(cont, c)
        if len(cont) > 1:
            extra.append(cont)
            R = [u_divmod(c, cont)[0] for c in R]
        A, B = B, R
    if not B:
        return ()
    out = B[0]
    for cont in extra:
        out = u_mul(out, cont)
    return tuple(out)


def _ival_eval(h, lo, hi):
    """Enclosure of h over [lo, hi] by interval Horner."""
    if not h:
        return mpq(0), mpq(0)
    a = b = rat(h[-1])
    for c in reversed(h[:-1]):
        ps = (a * lo, a * hi, b * lo, b * hi)
        a, b = min(ps) + c, max(ps) + c
    return a, b


_BOX_COARSE = mpq(1, 1 << 64)
_BOX_FINE = mpq(1, 1 << 192)


def _value_box(fs, iv, num, den, width):
    """Rational enclosure of num/den at the designated root, or None.

    Bisects the root interval until the quotient enclosure is thinner
    than width.  Intervals reaching this point bracket a sign change of
    the squarefree fs (isolation guarantees it), so one evaluation per
    halving steers the bisection; that is much cheaper than a Sturm
    count when the degree is high.  An exact rational root gives a
    zero-width box.  The refined interval is returned alongside so
    callers can keep it.
    """
    if iv.exact is not None:
        dv = u_eval(den, iv.exact)
        if not dv:
            return None
        v = u_eval(num, iv.exact) / dv
        return v, v, iv
    lo, hi = iv.lo, iv.hi
    vlo = u_eval(fs, lo)
    if not vlo:
        return None
    neg = vlo < 0
    for _ in range(1600):
        nlo, nhi = _ival_eval(num, lo, hi)
        dlo, dhi = _ival_eval(den, lo, hi)
        if dlo > 0 or dhi < 0:
            qs = (nlo / dlo, nlo / dhi, nhi / dlo, nhi / dhi)
            qlo, qhi = min(qs), max(qs)
            if qhi - qlo < width:
                return qlo, qhi, IsolInterval(lo, hi)
        m = (lo + hi) / 2
        vm = u_eval(fs, m)
        if not vm:
            dv = u_eval(den, m)
            if not dv:
                return None
            v = u_eval(num, m) / dv
            return v, v, IsolInterval(m, m, m)
        if (vm < 0) == neg:
            lo = m
        else:
            hi = m
    return None


def _simplest_in(lo, hi):
    """Smallest-denominator rational in [lo, hi]."""
    if hi < lo:
        lo, hi = hi, lo
    if lo <= 0 <= hi:
        return mpq(0)
    if hi < 0:
        return -_simplest_in(-hi, -lo)
    c = -((-lo.numerator) // lo.denominator)
    if c <= hi:
        return mpq(c)
    f = c - 1
    return f + 1 / _simplest_in(1 / (hi - f), 1 / (lo - f))


def _isq(lo, hi):
    if lo >= 0:
        return lo * lo, hi * hi
    if hi <= 0:
        return hi * hi, lo * lo
    m = max(-lo, hi)
    return mpq(0), m * m


def _red_sign(fs, iv, h):
    h = u_trim(h)
    if len(h) >= len(fs):
        h = u_divmod(h, fs)[1]
    return sign_at(fs, iv, u_trim(h))


def _value_sign(fs, iv, num, den, D):
    """Sign of D at num/den over the designated root, denominator cleared."""
    d = len(D) - 1
    acc = []
    for k, c in enumerate(D):
        if not c:
            continue
        t = u_scale(u_mul(u_pow(num, k), u_pow(den, d - k)), c)
        acc = u_add(acc, t)
    acc = u_divmod(u_trim(acc), fs)[1]
    return sign_at(fs, iv, u_trim(acc))


def _value_mark(fs, iv, num, den, D, marks):
    """Index of the isolating interval of D holding num/den at the root.

    Assumes the value is a root of D, so it sits strictly inside one
    mark (or on a rational one); refinement of the parameter interval
    must eventually expose which.
    """
    for i, jv in enumerate(marks):
        if jv.exact is not None:
            h = u_trim(u_sub(num, u_scale(den, jv.exact)))
            if sign_at(fs, iv, h) == 0:
                return i
    cur = iv
    for _ in range(256):
        if cur.exact is not None:
            v = u_eval(num, cur.exact) / u_eval(den, cur.exact)
            for i, jv in enumerate(marks):
                if jv.exact is None and jv.lo < v < jv.hi:
                    return i
            return None
        nlo, nhi = _ival_eval(num, cur.lo, cur.hi)
        dlo, dhi = _ival_eval(den, cur.lo, cur.hi)
        if dlo > 0 or dhi < 0:
            qs = (nlo / dlo, nlo / dhi, nhi / dlo, nhi / dhi)
            vlo, vhi = min(qs), max(qs)
            for i, jv in enumerate(marks):
                if jv.exact is None and jv.lo < vlo and vhi < jv.hi:
                    return i
        cur = refine(fs, cur, cur.width() / 2)
    return None


def _coord_eq(fs1, iv1, num1, den1, fs2, iv2, num2, den2,
              box1=None, box2=None):
    """Exact equality of two coordinate values given as g(root)/g0(root).

    Cheap routes run first: disjoint numeric enclosures settle inequality,
    and when the common window pins a simple rational (or a square root of
    one) the guess is confirmed or refuted by exact sign tests.  Only
    values that dodge both fall back to the annihilator route, which is
    expensive at high parameter degree.  Precomputed coarse boxes may be
    passed to skip the first refinement.
    """
    s1 = sign_at(fs1, iv1, num1) if num1 else 0
    s2 = sign_at(fs2, iv2, num2) if num2 else 0
    if s1 == 0 or s2 == 0:
        return s1 == 0 and s2 == 0
    if s1 * sign_at(fs1, iv1, den1) != s2 * sign_at(fs2, iv2, den2):
        return False
    for width in (_BOX_COARSE, _BOX_FINE):
        if width is _BOX_COARSE and box1 is not None and box2 is not None:
            lo1, hi1 = box1
            lo2, hi2 = box2
        else:
            b1 = _value_box(fs1, iv1, num1, den1, width)
            b2 = _value_box(fs2, iv2, num2, den2, width)
            if b1 is None or b2 is None:
                break
            lo1, hi1, iv1 = b1
            lo2, hi2, iv2 = b2
        if hi1 < lo2 or hi2 < lo1:
            return False
        r = _simplest_in(max(lo1, lo2), min(hi1, hi2))
        e1 = _red_sign(fs1, iv1, u_sub(num1, u_scale(den1, r))) == 0
        e2 = _red_sign(fs2, iv2, u_sub(num2, u_scale(den2, r))) == 0
        if e1 and e2:
            return True
        if e1 or e2:
            return False
        q1lo, q1hi = _isq(lo1, hi1)
        q2lo, q2hi = _isq(lo2, hi2)
        r2 = _simplest_in(max(q1lo, q2lo), min(q1hi, q2hi))
        q1 = _red_sign(fs1, iv1, u_sub(u_mul(num1, num1),
                                       u_scale(u_mul(den1, den1), r2))) == 0
        q2 = _red_sign(fs2, iv2, u_sub(u_mul(num2, num2),
                                       u_scale(u_mul(den2, den2), r2))) == 0
        if q1 and q2:
            # both are square roots of r2 and the sign screen above
            # already matched the branches
            return True
        if q1 or q2:
            return False
    A1 = _annihilator(tuple(fs1), tuple(num1), tuple(den1))
    A2 = _annihilator(tuple(fs2), tuple(num2), tuple(den2))
    if len(A1) <= 1 or len(A2) <= 1:
        return False
    D = u_gcd(squarefree(list(A1)), squarefree(list(A2)))
    if len(D) <= 1:
        return False
    if _value_sign(fs1, iv1, num1, den1, D) != 0:
        return False
    if _value_sign(fs2, iv2, num2, den2, D) != 0:
        return False
    marks = isolate(D)
    i1 = _value_mark(fs1, iv1, num1, den1, D, marks)
    i2 = _value_mark(fs2, iv2, num2, den2, D, marks)
    return i1 is not None and i1 == i2


def _rep_boxes(rep, fs, iv, den):
    """Coarse per-coordinate enclosures for a representation, cached.

    Repeat comparisons against the same representation then skip the
    numeric refinement entirely.  None means some coordinate could not
    be boxed; the failure is cached too.
    """
    if hasattr(rep, "_vboxes"):
        return rep._vboxes
    boxes = []
    cur = iv
    for g in rep.gs:
        num = u_trim(u_to_rat(g))
        if not num:
            boxes.append((mpq(0), mpq(0)))
            continue
        got = _value_box(fs, cur, num, den, _BOX_COARSE)
        if got is None:
            boxes = None
            break
        lo, hi, cur = got
        boxes.append((lo, hi))
    rep._vboxes = boxes
    return boxes


def _same_point(r1, r2):
    """Whether two representations designate the same point (exact).

    The parameters may differ (distinct separating forms describe the
    same point through distinct roots), so the comparison goes
    coordinate by coordinate, by enclosure first and through exact value
    identities when the enclosures overlap.
    """
    if len(r1.gs) != len(r2.gs):
        return False
    f1 = u_trim(u_to_rat(r1.f))
    f2 = u_trim(u_to_rat(r2.f))
    if len(f1) < 2 or len(f2) < 2:
        return False
    fs1 = squarefree(f1)
    fs2 = squarefree(f2)
    iv1 = r1.interval if r1.interval is not None else \
        _interval_from_thom(f1, r1.thom)
    iv2 = r2.interval if r2.interval is not None else \
        _interval_from_thom(f2, r2.thom)
    if iv1 is None or iv2 is None:
        return False
    g10 = u_trim(u_to_rat(r1.g0))
    g20 = u_trim(u_to_rat(r2.g0))
    if not g10 or not g20:
        return False
    bs1 = _rep_boxes(r1, fs1, iv1, g10)
    bs2 = _rep_boxes(r2, fs2, iv2, g20)
    if bs1 is not None and bs2 is not None:
        for (alo, ahi), (blo, bhi) in zip(bs1, bs2):
            if ahi < blo or bhi < alo:
                return False
    for k, (a, b) in enumerate(zip(r1.gs, r2.gs)):
        if not _coord_eq(fs1, iv1, u_trim(u_to_rat(a)), g10,
                         fs2, iv2, u_trim(u_to_rat(b)), g20,
                         None if bs1 is None else bs1[k],
                         None if bs2 is None else bs2[k]):
            return False
    return True


def dedup(reps):
    """Drop later representations of points already in the list."""
    out = []
    for r in reps:
        if not any(_same_point(r, kept) for kept in out):
            out.append(r)
    return out


def _rep_key(rep):
    iv = rep.interval
    if iv is not None:
        loc = iv.exact if iv.exact is not None else iv.lo
    else:
        loc = mpq(0)
    return (loc, len(rep.f), tuple(u_to_rat(rep.f)), tuple(rep.thom))


# -- removal of the outermost infinitesimal ----------------------------

def _eps_ulist(c):
    """An EpsScalar over a one-symbol tower as a low-first list."""
    if not isinstance(c, EpsScalar):
        v = rat(c)
        return [v] if v else []
    out = []
    for k in c.terms:
        (e,) = c.tower.unpack(k)
        if e < 0:
            raise PipelineError("negative power of the symbol being removed")
        while len(out) <= e:
            out.append(mpq(0))
        out[e] += c.terms[k]
    return u_trim(out)


def _cauchy_lower(h):
    """No nonzero root of h is smaller in magnitude than this bound.

    The bound is |h_l| / sum |h_m| with h_l the lowest nonzero
    coefficient.  Zero and constant polynomials have no nonzero roots
    to protect against and get None.
    """
    h = u_trim(list(h))
    if len(h) <= 1:
        return None
    low = 0
    while not h[low]:
        low += 1
    return abs(h[low]) / sum(abs(c) for c in h)


def _compose_eps(p, nums, den, tw):
    # compose_rational keeps the seed coefficient rational, which the
    # one-sided EpsScalar product order cannot absorb; this clone seeds
    # every term with an embedded scalar instead.
    d = p.total_degree()
    if d < 0:
        return []
    dps = {0: [EpsScalar.const(tw, 1)]}

    def dp(e):
        r = dps.get(e)
        if r is None:
            r = dps[e] = u_mul(dp(e - 1), den)
        return r

    out = []
    for exps, c in p.terms.items():
        term = [c.embed(tw)]
        for i, ei in enumerate(exps):
            if ei:
                term = u_mul(term, u_pow(nums[i], ei))
        rem = d - sum(exps)
        if rem:
            term = u_mul(term, dp(rem))
        out = u_add(out, term)
    return u_trim(out)


def _ntrim(A):
    A = list(A)
    while A and not A[-1]:
        A.pop()
    return A


def _nested_prem(A, B):
    """Pseudo remainder of T-polynomials with coefficient lists."""
    A = _ntrim(list(A))
    B = _ntrim(list(B))
    lb = B[-1]
    db = len(B) - 1
    while A and len(A) - 1 >= db:
        la = A[-1]
        shift = len(A) - 1 - db
        A = [u_mul(c, lb) for c in A]
        for i, bc in enumerate(B):
            A[i + shift] = u_sub(A[i + shift], u_mul(bc, la))
        A = _ntrim(A[:-1])
    return A


def _nested_primitive(A):
    cont = []
    for c in A:
        cont = u_gcd(cont, c)
    if len(cont) <= 1:
        return A
    out = []
    for c in A:
        q, r = u_divmod(c, cont)
        if u_trim(r):
            raise PipelineError("content division left a remainder")
        out.append(q)
    return out


def _prs_leads(A, B):
    """Leading coefficients along the primitive remainder sequence.

    Scaling of the members is irrelevant here: the stability set only
    feeds magnitude bounds, and those are scale invariant.
    """
    A = _ntrim(A)
    B = _ntrim(B)
    out = []
    if A:
        out.append(A[-1])
    while B:
        out.append(B[-1])
        R = _nested_prem(A, B)
        A, B = B, _nested_primitive(_ntrim(R))
    return out


def _signature(f, tests):
    """Root count, Thom encodings, and test signs, as one tuple."""
    f = u_trim(f)
    if len(f) < 2:
        return (0, (), ())
    fs = squarefree(f)
    pairs = thom(f)
    encs = tuple(e for _, e in pairs)
    signs = tuple(tuple(sign_at(fs, iv, t) for iv, _ in pairs)
                  for t in tests)
    return (len(pairs), encs, signs)


def _subst_list(poly, value):
    return u_trim([c.subst([value]) if isinstance(c, EpsScalar) else rat(c)
                   for c in poly])


def _remove_eps0(cands, gpoly):
    """Substitution over an explicit level polynomial; see remove_eps0."""
    cands = list(cands)
    if not cands:
        return [], None
    tw = None
    for cand in cands:
        for c in list(cand.f) + list(cand.g0):
            if isinstance(c, EpsScalar) and c.tower.ell:
                tw = c.tower
                break
        if tw is not None:
            break
    if tw is None:
        out = [URep(u_trim(u_to_rat(c.f)), u_trim(u_to_rat(c.g0)),
                    [u_trim(u_to_rat(g)) for g in c.g], c.mu, c.j)
               for c in cands]
        return out, None
    if tw.ell != 1:
        raise PipelineError("exactly one symbol should remain, found %d"
                            % tw.ell)
    spolys = {}

    def record(eps_list):
        h = u_trim(list(eps_list))
        if h:
            spolys.setdefault(tuple(h), None)

    per_cand = []
    for cand in cands:
        f = u_trim(list(cand.f))
        tests = []
        if len(f) >= 2:
            d = f
            for _ in range(len(f) - 2):
                d = u_deriv(d)
                tests.append(d)
            nums = [list(g) for g in cand.g]
            if len(nums) == gpoly.nvars:
                tests.append(_compose_eps(gpoly, nums, list(cand.g0), tw))
        per_cand.append((f, tests))
        for c in f:
            record(_eps_ulist(c))
        nested_f = [_eps_ulist(c) for c in f]
        for t in tests:
            for c in t:
                record(_eps_ulist(c))
            nested_t = [_eps_ulist(c) for c in t]
            for lead in _prs_leads(nested_f, nested_t):
                record(lead)

    members = [list(h) for h in spolys]
    bounds = [_cauchy_lower(h) for h in members]
    floor = min((b for b in bounds if b is not None), default=mpq(1))
    value = floor / 2
    probe = None
    for _ in range(16):
        sig_a = tuple(_signature(_subst_list(f, value),
                                 [_subst_list(t, value) for t in tests])
                      for f, tests in per_cand)
        half = value / 2
        sig_b = tuple(_signature(_subst_list(f, half),
                                 [_subst_list(t, half) for t in tests])
                      for f, tests in per_cand)
        if sig_a == sig_b:
            probe = (sig_a, sig_b)
            break
        value = half
    if probe is None:
        raise SubstitutionError(
            "no rational value kept the recorded sign data stable")
    out = [URep(_subst_list(c.f, value), _subst_list(c.g0, value),
                [_subst_list(g, value) for g in c.g], c.mu, c.j)
           for c in cands]
    cert = Eps0Certificate(members, bounds, value, probe=probe)
    return out, cert


def remove_eps0(cands, prob):
    """Substitute a certified rational for the remaining infinitesimal.

    The stability set collects, per candidate, every coefficient of f,
    of its T-derivatives, and of the denominator-cleared membership
    residue, together with the leading coefficients along the remainder
    sequences of f against each of those test polynomials.  That is a
    conservative superset of the textbook elimination set; the
    certificate flags it as such.  The substituted value is half the
    minimum of the per-member magnitude bounds, halved further until
    the recomputed root counts, Thom encodings, and test signs agree
    with those at half the value.  Candidates come back over plain
    rationals.
    """
    return _remove_eps0(cands, _pq_poly(_plain_problem(prob)))


def _merge_certs(certs):
    certs = [c for c in certs if c is not None]
    if not certs:
        return None
    if len(certs) == 1:
        return certs[0]
    polys = []
    bounds = []
    seen = set()
    for c in certs:
        for h, b in zip(c.test_polys, c.bounds):
            key = tuple(h)
            if key not in seen:
                seen.add(key)
                polys.append(h)
                bounds.append(b)
    value = min(c.value for c in certs)
    probe = (tuple(x for c in certs for x in c.probe[0]),
             tuple(x for c in certs for x in c.probe[1]))
    return Eps0Certificate(polys, bounds, value, probe=probe)


# -- turning candidates into verified points ---------------------------

def _finalize_group(by_mu, pre_derived, restore, vprob, counters):
    """Points from one separating-form group, with two stop flags.

    The group shares one characteristic polynomial; each of its real
    roots of multiplicity m is matched with the candidate of derivative
    order m - 1.  complete reports that every root produced a verified
    point, which feeds the heuristic stop.  decisive is stronger and
    rigorous: when every real root is simple, each one designates
    exactly one point of the zero-dimensional system, with no room for
    two points to hide behind a shared root, so this group alone
    settles the whole scan no matter how each root was dispatched
    (verified, refuted by the membership test, or dropped as escaping
    by a limit stage).
    """
    if not by_mu:
        return [], False, False
    f = u_trim(u_to_rat(next(iter(by_mu.values())).f))
    if len(f) < 2:
        # a nonzero constant has no roots at all; a zero polynomial
        # would mean the data degenerated and settles nothing
        return [], bool(f), bool(f)
    fs = squarefree(f)
    out = []
    complete = True
    decisive = True
    for iv in isolate(f):
        mult = root_multiplicity(f, fs, iv)
        if mult != 1:
            decisive = False
        cand = by_mu.get(mult - 1)
        if cand is None:
            complete = False
            continue
        g0 = u_trim(u_to_rat(cand.g0))
        gs = [u_trim(u_to_rat(g)) for g in cand.g]
        if not pre_derived:
            for _ in range(mult - 1):
                g0 = u_deriv(g0)
                gs = [u_deriv(g) for g in gs]
        if not g0 or sign_at(fs, iv, g0) == 0:
            complete = False
            decisive = False
            counters["pruned"] += 1
            continue
        shared = u_gcd(fs, g0)
        fstar = fs
        if len(shared) > 1:
            q, r = u_divmod(fs, shared)
            if u_trim(r):
                raise PipelineError("factor division left a remainder")
            fstar = u_scale(q, 1 / q[-1])
        g0r = u_divmod(g0, fstar)[1]
        gsr = [u_divmod(g, fstar)[1] for g in gs]
        ders = []
        d = fstar
        for _ in range(max(len(fstar) - 2, 0)):
            d = u_deriv(d)
            ders.append(d)
        enc = tuple(sign_at(fstar, iv, dk) for dk in ders)
        rep = RealURep(f=fstar, g0=g0r, gs=restore(gsr), thom=enc,
                       interval=iv)
        if verify_membership(rep, vprob):
            out.append(rep)
        else:
            complete = False
            counters["pruned"] += 1
    return out, complete, decisive


def _scan(A, P, inner, pre_derived, strip, gpoly, restore, vprob,
          counters):
    """Ascending separating-form scan with two stopping rules.

    Each index j is processed end to end (limits, substitution,
    matching, verification).  A decisive group (all roots simple) ends
    the scan at once, rigorously.  Failing that, once some j certifies
    completeness, two further indices producing nothing new end the
    scan heuristically; the hard cap (m-1)(N-1)+1 guarantees each
    point a collision-free index within range either way.
    """
    N = A.N
    cap = (P.m - 1) * (N - 1) + 1
    points = []
    certs = []
    seen_complete = False
    quiet = 0
    for j in range(cap):
        counters["groups"] += 1
        group = candidates(A, P, js=[j])
        if inner:
            stats = {}
            group = limit_candidates(group, inner, stats=stats)
            counters["pruned"] += stats.get("pruned", 0)
        if strip is not None:
            group = [URep(c.f, c.g0,
                          [g for i, g in enumerate(c.g) if i != strip],
                          c.mu, c.j) for c in group]
        if gpoly is not None and group:
            group, cert = _remove_eps0(group, gpoly)
            certs.append(cert)
        by_mu = {c.mu: c for c in group}
        reps, complete, decisive = _finalize_group(by_mu, pre_derived,
                                                   restore, vprob,
                                                   counters)
        new = 0
        for rep in reps:
            if not any(_same_point(rep, p) for p in points):
                points.append(rep)
                new += 1
        if decisive:
            break
        if complete:
            seen_complete = True
        if new:
            quiet = 0
        elif seen_complete:
            quiet += 1
        if seen_complete and quiet >= 2:
            break
    return points, certs


# -- the direct route over the rationals -------------------------------

def _grlex_key(e):
    return (sum(e), e)


def _pure_top(f):
    """(var, deg) when the unique top monomial is a pure power."""
    if not f.terms:
        return None
    top = f.total_degree()
    heads = [e for e in f.terms if sum(e) == top]
    if len(heads) != 1:
        return None
    live = [i for i, ei in enumerate(heads[0]) if ei]
    if len(live) != 1:
        return None
    return live[0], heads[0][live[0]]


def _normal_form(f, gens):
    """Fully reduce f by the pure-power leads of the generators."""
    degs = {v: g.total_degree() for v, g in gens.items()}
    order = sorted(degs)
    while True:
        hit = None
        for e in sorted(f.terms, key=_grlex_key, reverse=True):
            for v in order:
                if e[v] >= degs[v]:
                    hit = (e, v)
                    break
            if hit:
                break
        if hit is None:
            return f
        e, v = hit
        c = f.terms[e]
        sh = list(e)
        sh[v] -= degs[v]
        f = f - gens[v] * MPoly.mono(f.nvars, f.tower, tuple(sh), c)


def _special_from_system(G, dist):
    """Triangular basis for the critical system of the height coordinate.

    The pool is G together with its partials in the other variables.  A
    pool member whose normal form against the generators claimed so far
    has a unique pure-power top claims that variable; claiming repeats
    until the pool stalls.  Tails are then reduced against the full
    set.  Every zero of the original system stays a zero of the result,
    which is all the candidate extraction needs; spurious extra
    spectrum is weeded out by the membership check.  Raises
    NotSpecialError when some variable cannot be claimed.
    """
    nv = G.nvars
    tw = G.tower
    pool = [G] + [G.partial(i) for i in range(nv) if i != dist]
    gens = {}
    progress = True
    while pool and progress and len(gens) < nv:
        progress = False
        for idx, q in enumerate(pool):
            q2 = _normal_form(q, gens) if gens else q
            pt = _pure_top(q2)
            if pt is not None and pt[0] not in gens:
                v = pt[0]
                lead = q2.terms[max(q2.terms, key=_grlex_key)]
                gens[v] = q2 * (1 / lead.as_rat())
                pool.pop(idx)
                progress = True
                break
    if len(gens) < nv:
        raise NotSpecialError(
            "the critical system does not claim every variable")
    for _ in range(nv + 1):
        changed = False
        for v in sorted(gens):
            g = gens[v]
            lead_mono = MPoly.var(nv, tw, v, g.total_degree())
            tail = g - lead_mono
            t2 = _normal_form(tail, gens)
            if t2 != tail:
                gens[v] = lead_mono + t2
                changed = True
        if not changed:
            break
    return validate_special([gens[v] for v in sorted(gens)])


def _route_direct(G, dist, restore, vprob, cfg, counters):
    basis = _special_from_system(G, dist)
    est = 1
    for d in basis.degs:
        est *= d
    if est > cfg.n_cap:
        raise ResourceLimitError(est, cfg.n_cap)
    A = QuotientAlgebra(basis)
    nv = G.nvars
    P = PolyMap(tuple(MPoly.var(nv, G.tower, i) for i in range(nv)))
    return _scan(A, P, inner=0, pre_derived=False, strip=None,
                 gpoly=None, restore=restore, vprob=vprob,
                 counters=counters)


# -- the smoothed route ------------------------------------------------

def _route_smoothed(G, dist, shell, nonneg_ok, restore, vprob, cfg,
                    counters):
    """Critical points of an infinitesimally smoothed proper blend.

    For a bounded set the defining polynomial (squared unless known
    nonnegative) is blended directly.  Otherwise a fresh coordinate and
    an infinitesimal sphere term are appended first, which bounds every
    component at the cost of one more symbol to remove at the end; the
    fresh coordinate is dropped from the candidates before that
    removal.
    """
    if shell:
        tw = tower(("eps0", "mu", "zeta"))
        nv = G.nvars + 1
        Gt = G.embed(tw).pad_vars(0, 1)
        base = Gt if nonneg_ok else Gt * Gt
        e0 = EpsScalar.symbol(tw, "eps0")
        s = MPoly.zero(nv, tw)
        for i in range(nv):
            v = MPoly.var(nv, tw, i)
            s = s + v * v
        sphere = MPoly.const(nv, tw, 1) - s * (e0 * e0)
        F = base + sphere * sphere
        height = nv - 1
        strip = nv - 1
        gpoly = G
    else:
        tw = tower(("mu", "zeta"))
        nv = G.nvars
        Gt = G.embed(tw)
        F = Gt if nonneg_ok else Gt * Gt
        height = dist
        strip = None
        gpoly = None
    deg = F.total_degree()
    dbar = deg + 2 if deg % 2 == 0 else deg + 1
    est = dbar * (dbar - 1) ** (nv - 1)
    if est > cfg.n_cap:
        raise ResourceLimitError(est, cfg.n_cap)
    F_zeta, _ = smooth_zeta(F, norm_var=height)
    basis = critical_basis(F_zeta, norm_var=height)
    A = QuotientAlgebra(basis)
    P = PolyMap(tuple(MPoly.var(nv, tw, i) for i in range(nv)))
    return _scan(A, P, inner=2, pre_derived=True, strip=strip,
                 gpoly=gpoly, restore=restore, vprob=vprob,
                 counters=counters)


# -- hybrid strategy ---------------------------------------------------

def _coercive(G):
    """Sufficient boundedness test for the zero set.

    True when the top homogeneous part is a positive combination of
    pure even powers covering every variable; it then dominates the
    lower-order terms far from the origin.  Conservative by design.
    """
    d = G.total_degree()
    if d <= 0 or d % 2:
        return False
    seen = set()
    for e, c in G.terms.items():
        if sum(e) != d:
            continue
        live = [i for i, ei in enumerate(e) if ei]
        if len(live) != 1 or c.sign() <= 0:
            return False
        seen.add(live[0])
    return len(seen) == G.nvars


def _origin_rep(n):
    return RealURep(f=[mpq(0), mpq(1)], g0=[mpq(1)],
                    gs=[[] for _ in range(n)], thom=(),
                    interval=IsolInterval(mpq(0), mpq(0), mpq(0)))


def _sample_hybrid(prob, cfg, force_shell=False):
    prob = _plain_problem(prob)
    n = prob.Q.n
    counters = {"groups": 0, "pruned": 0}
    G = _pq_poly(prob)
    if G.is_zero():
        return SampleReport([_origin_rep(n)], "NONEMPTY", 0, 0, None)
    used = sorted({i for e in G.terms for i, ei in enumerate(e) if ei})
    if not used:
        return SampleReport([], "EMPTY", 0, 0, None)
    # unused coordinates make the set a cylinder over the support
    # variables; sample the base and extend by zero
    tw = G.tower
    Gr = MPoly(len(used), tw,
               {tuple(e[v] for v in used): c for e, c in G.terms.items()})

    def restore(gsr):
        out = [[] for _ in range(n)]
        for pos, v in enumerate(used):
            out[v] = gsr[pos]
        return out

    dist = used.index(prob.dist) if prob.dist in used else 0
    nonneg_ok = cfg.assume_nonneg and rat(prob.level) == 0
    if force_shell:
        points, certs = _route_smoothed(Gr, dist, True, nonneg_ok,
                                        restore, prob, cfg, counters)
    else:
        bounded = cfg.assume_bounded or len(used) == 1 or _coercive(Gr)
        if bounded:
            try:
                points, certs = _route_direct(Gr, dist, restore, prob,
                                              cfg, counters)
            except NotSpecialError:
                points, certs = _route_smoothed(Gr, dist, False,
                                                nonneg_ok, restore,
                                                prob, cfg, counters)
        else:
            points, certs = _route_smoothed(Gr, dist, True, nonneg_ok,
                                            restore, prob, cfg, counters)
    points.sort(key=_rep_key)
    status = "NONEMPTY" if points else "EMPTY"
    return SampleReport(points, status, counters["groups"],
                        counters["pruned"], _merge_certs(certs))


# -- symbolic strategy -------------------------------------------------

def prepare(prob, cfg):
    """Deform the problem over the infinitesimal tower.

    Unless the set is assumed bounded, a fresh first coordinate pair is
    added: X at index 0 with a sphere component whose radius grows as
    the outermost symbol shrinks, Y at index 0 squared into p.  Every
    component then gets its quadratic part perturbed along the diagonal
    by the scaled power sequence that forces pairwise-generic spectra,
    the exponent following the component's global index.  The level
    moves to the regularizing symbol.  p is squared first unless
    assumed nonnegative.  Rational fast-path values shorten the tower.
    Returns the deformed problem and its tower; the two innermost
    symbols stay reserved for the per-chart smoothing.
    """
    prob = _plain_problem(prob)
    names = []
    if not cfg.assume_bounded:
        names.append("eps0")
    if cfg.rational_eps1 is None:
        names.append("eps1")
    if cfg.rational_eps2 is None:
        names.append("eps2")
    names += ["mu", "zeta"]
    tw = tower(tuple(names))
    n, k = prob.Q.n, prob.Q.m
    with_shell = not cfg.assume_bounded
    nn = n + 1 if with_shell else n
    p0 = prob.p if cfg.assume_nonneg else prob.p * prob.p
    p0 = p0.embed(tw)
    if with_shell:
        pt = p0.pad_vars(1, 0) + MPoly.var(k + 1, tw, 0, 2)
    else:
        pt = p0
    if cfg.rational_eps2 is None:
        eps2 = EpsScalar.symbol(tw, "eps2")
    else:
        eps2 = EpsScalar.const(tw, cfg.rational_eps2)
    raw = []
    if with_shell:
        e0 = EpsScalar.symbol(tw, "eps0")
        diag0 = e0 * e0 * (-2)
        H0 = tuple(tuple(diag0 if i == c else EpsScalar.const(tw, 0)
                         for c in range(nn)) for i in range(nn))
        raw.append((H0, (mpq(0),) * nn, mpq(1)))
    for H, b, c in prob.Q.comps:
        rows = []
        for i in range(nn):
            row = []
            for cc in range(nn):
                if with_shell and (i == 0 or cc == 0):
                    row.append(EpsScalar.const(tw, 0))
                else:
                    oi = i - 1 if with_shell else i
                    oc = cc - 1 if with_shell else cc
                    row.append(EpsScalar.const(tw, H[oi][oc]))
            rows.append(tuple(row))
        bt = ((mpq(0),) + tuple(b)) if with_shell else tuple(b)
        raw.append((tuple(rows), bt, c))
    comps = []
    for pos, (H, b, c) in enumerate(raw):
        expo = pos if with_shell else pos + 1
        rows = []
        for i in range(nn):
            row = list(H[i])
            row[i] = row[i] + eps2 * ((i + 1) ** expo)
            rows.append(tuple(row))
        comps.append((tuple(rows), b, c))
    if cfg.rational_eps1 is None:
        level = EpsScalar.symbol(tw, "eps1")
    else:
        level = EpsScalar.const(tw, cfg.rational_eps1)
    dist = 0 if with_shell else prob.dist
    return Problem(pt, QuadMap(nn, tw, tuple(comps)), level, dist), tw


def _sample_symbolic(prob, cfg):
    prob0 = _plain_problem(prob)
    n = prob0.Q.n
    G = _pq_poly(prob0)
    if G.is_zero():
        return SampleReport([_origin_rep(n)], "NONEMPTY", 0, 0, None)
    dp, tw = prepare(prob0, cfg)
    charts = enum_pieces(dp, 0)
    inner = 2
    if cfg.rational_eps2 is None:
        inner += 1
    if cfg.rational_eps1 is None:
        inner += 1
    with_shell = not cfg.assume_bounded
    counters = {"groups": len(charts), "pruned": 0}

    def work(item):
        idx, piece = item
        if piece.omega.is_zero():
            # the chart's validity region is empty by construction
            return idx, [], 0
        F0 = MPoly.zero(piece.nvars, tw)
        for eq in piece.equations:
            F0 = F0 + eq * eq
        stats = {}
        try:
            cands = limits_of_image(F0, piece_inverse(piece), inner=inner,
                                    nonneg=True, n_cap=cfg.n_cap,
                                    stats=stats)
        except ResourceLimitError as err:
            raise PieceResourceError(piece.pair, err.estimate,
                                     err.cap) from err
        return idx, cands, stats.get("pruned", 0)

    results = []
    with ThreadPoolExecutor(max_workers=cfg.jobs) as pool:
        futures = [pool.submit(work, (i, pc))
                   for i, pc in enumerate(charts)]
        for fut in futures:
            results.append(fut.result())
    merged = []
    for _, cands, pruned in sorted(results, key=lambda r: r[0]):
        merged.extend(cands)
        counters["pruned"] += pruned
    if with_shell:
        merged = [URep(c.f, c.g0, list(c.g)[1:], c.mu, c.j)
                  for c in merged]
    cert = None
    if with_shell and merged:
        merged, cert = _remove_eps0(merged, G)
    bucket = {}
    for c in merged:
        key = (c.j, tuple(u_trim(u_to_rat(c.f))))
        bucket.setdefault(key, {})[c.mu] = c

    def keep(gsr):
        return gsr

    points = []
    for key in sorted(bucket):
        reps, _, _ = _finalize_group(bucket[key], True, keep, prob0,
                                     counters)
        for rep in reps:
            if not any(_same_point(rep, p) for p in points):
                points.append(rep)
    points.sort(key=_rep_key)
    status = "NONEMPTY" if points else "EMPTY"
    return SampleReport(points, status, counters["groups"],
                        counters["pruned"], cert)


# -- entry points ------------------------------------------------------

def sample(prob, cfg=None):
    """Verified points meeting every connected component of the set."""
    if cfg is None:
        cfg = PipelineConfig()
    if cfg.mode == "hybrid":
        return _sample_hybrid(prob, cfg)
    return _sample_symbolic(prob, cfg)


def decide(prob, cfg=None):
    """Emptiness decision; the report's first point is the witness."""
    return sample(prob, cfg)

"""Exact real-root machinery for univariate rational polynomials.

Polynomials are dense mpq coefficient lists, low degree first, as in
exactcore's u_* helpers.  Roots are described by isolating intervals
(possibly degenerate when a root is rational) and by Thom encodings,
which record the signs of the higher derivatives at the root.  All
decisions are exact; intervals only ever shrink by bisection against a
Sturm chain.
"""

from dataclasses import dataclass, field
from typing import Optional

from gmpy2 import mpq

from .exactcore import rat, u_deriv, u_eval, u_mul, u_scale, u_sub, u_trim

__all__ = ["IsolInterval", "ThomEncoding", "RealURep", "isolate", "thom",
           "sign_at", "refine", "squarefree", "u_gcd", "u_divmod",
           "root_multiplicity", "sturm_chain", "count_roots",
           "cauchy_bound", "eval_interval"]

ThomEncoding = tuple


@dataclass(frozen=True)
class IsolInterval:
    """One real root of a squarefree polynomial.

    Either exact is a rational root (and lo == hi == exact), or the open
    interval (lo, hi) contains exactly one root and neither endpoint is
    a root.
    """
    lo: mpq
    hi: mpq
    exact: Optional[mpq] = None

    def width(self):
        return self.hi - self.lo

    def mid(self):
        return (self.lo + self.hi) / 2


@dataclass
class RealURep:
    """A point given as rational functions of one real algebraic number.

    The root of f is designated by its Thom encoding (signs of
    f', f'', ... at the root).  Coordinates of the point are
    gs[i](root) / g0(root); the invariant gcd(f, g0) = 1 keeps the
    denominator nonzero at every root of f.
    """
    f: list
    g0: list
    gs: list
    thom: ThomEncoding
    interval: Optional[IsolInterval] = None


def u_divmod(a, b):
    """Quotient and remainder over Q; b must be nonzero."""
    if not b:
        raise ZeroDivisionError("division by the zero polynomial")
    r = list(a)
    q = [mpq(0)] * max(len(a) - len(b) + 1, 0)
    db = len(b) - 1
    lb = b[-1]
    while len(r) - 1 >= db and any(r):
        r = u_trim(r)
        if not r or len(r) - 1 < db:
            break
        c = r[-1] / lb
        k = len(r) - 1 - db
        q[k] = c
        for i, bc in enumerate(b):
            r[k + i] -= c * bc
        r = r[:-1]
    return u_trim(q), u_trim(r)


def _primitive_pos(a):
    """Scale by a positive rational so coefficients are coprime ints."""
    if not a:
        return a
    nums = [c.numerator for c in a]
    dens = [c.denominator for c in a]
    from math import gcd, lcm
    g = 0
    for n in nums:
        g = gcd(g, n)
    l = 1
    for d in dens:
        l = lcm(l, d)
    scale = mpq(l, g)
    return [c * scale for c in a]


def u_gcd(a, b):
    """Monic gcd over Q (1 for coprime, [] only if both are zero)."""
    a = u_trim(list(a))
    b = u_trim(list(b))
    while b:
        _, r = u_divmod(a, b)
        a, b = b, _primitive_pos(r)
    if not a:
        return []
    return u_scale(a, 1 / a[-1])


def squarefree(f):
    """The squarefree part f / gcd(f, f'), normalized monic."""
    f = u_trim(list(f))
    if len(f) <= 1:
        return u_scale(f, 1 / f[-1]) if f else []
    g = u_gcd(f, u_deriv(f))
    if len(g) == 1:
        out = f
    else:
        out, r = u_divmod(f, g)
        if r:
            raise ArithmeticError("squarefree division left a remainder")
    return u_scale(out, 1 / out[-1])


def cauchy_bound(f):
    """B with every real root of f strictly inside (-B, B)."""
    f = u_trim(list(f))
    if len(f) <= 1:
        return mpq(1)
    lc = abs(f[-1])
    m = max(abs(c) for c in f[:-1])
    return 1 + m / lc


def sturm_chain(fs):
    """Sturm chain of a squarefree polynomial, primitive-scaled."""
    chain = [list(fs), u_deriv(fs)]
    while chain[-1]:
        _, r = u_divmod(chain[-2], chain[-1])
        r = _primitive_pos([-c for c in r])
        if not r:
            break
        chain.append(r)
    return chain


def _variations(chain, x):
    prev = 0
    v = 0
    for p in chain:
        s = u_eval(p, x)
        s = 1 if s > 0 else (-1 if s < 0 else 0)
        if s and prev and s != prev:
            v += 1
        if s:
            prev = s
    return v


def count_roots(chain, a, b):
    """Number of roots in (a, b]; endpoints must not be roots of fs."""
    return _variations(chain, a) - _variations(chain, b)


def isolate(f):
    """Disjoint isolating intervals for the distinct real roots of f.

    Returned in increasing order.  Rational roots come back as
    degenerate intervals with exact set.
    """
    f = u_trim([rat(c) for c in f])
    if not f:
        raise ValueError("cannot isolate roots of the zero polynomial")
    fs = squarefree(f)
    if len(fs) <= 1:
        return []
    chain = sturm_chain(fs)
    B = cauchy_bound(fs)
    out = []
    _isolate_on(fs, chain, -B, B, count_roots(chain, -B, B), out)
    out.sort(key=lambda iv: (iv.lo, iv.hi))
    return out


def _isolate_on(fs, chain, lo, hi, n, out):
    if n == 0:
        return
    if n == 1:
        out.append(IsolInterval(lo, hi))
        return
    mid = (lo + hi) / 2
    if u_eval(fs, mid) == 0:
        out.append(IsolInterval(mid, mid, mid))
        # shrink a guard width until the exact root is the only one inside
        w = (hi - lo) / 4
        while (u_eval(fs, mid - w) == 0 or u_eval(fs, mid + w) == 0
               or count_roots(chain, mid - w, mid + w) != 1):
            w = w / 2
        nl = count_roots(chain, lo, mid - w)
        _isolate_on(fs, chain, lo, mid - w, nl, out)
        _isolate_on(fs, chain, mid + w, hi, n - 1 - nl, out)
    else:
        nl = count_roots(chain, lo, mid)
        _isolate_on(fs, chain, lo, mid, nl, out)
        _isolate_on(fs, chain, mid, hi, n - nl, out)


def refine(fs, iv, width):
    """Shrink an isolating interval below the given width."""
    if iv.exact is not None:
        return iv
    chain = None
    lo, hi = iv.lo, iv.hi
    while hi - lo >= width:
        mid = (lo + hi) / 2
        if u_eval(fs, mid) == 0:
            return IsolInterval(mid, mid, mid)
        if chain is None:
            chain = sturm_chain(fs)
        if count_roots(chain, lo, mid) == 1:
            hi = mid
        else:
            lo = mid
    return IsolInterval(lo, hi)


def sign_at(fs, iv, h):
    """Sign of h at the root of squarefree fs designated by iv."""
    h = u_trim([rat(c) for c in h])
    if not h:
        return 0
    if iv.exact is not None:
        v = u_eval(h, iv.exact)
        return 1 if v > 0 else (-1 if v < 0 else 0)
    g = u_gcd(fs, h)
    if len(g) > 1:
        # g divides fs, so g cannot vanish at the endpoints and the only
        # root it can have inside iv is ours
        if count_roots(sturm_chain(g), iv.lo, iv.hi) == 1:
            return 0
    hs = squarefree(h)
    hchain = sturm_chain(hs)
    fchain = sturm_chain(fs)
    lo, hi = iv.lo, iv.hi
    while True:
        vlo = u_eval(h, lo)
        vhi = u_eval(h, hi)
        if vlo and vhi and (vlo > 0) == (vhi > 0):
            if u_eval(hs, lo) and u_eval(hs, hi) \
                    and count_roots(hchain, lo, hi) == 0:
                return 1 if vlo > 0 else -1
        mid = (lo + hi) / 2
        if u_eval(fs, mid) == 0:
            v = u_eval(h, mid)
            return 1 if v > 0 else (-1 if v < 0 else 0)
        if count_roots(fchain, lo, mid) == 1:
            hi = mid
        else:
            lo = mid


def thom(f):
    """Thom encodings for the real roots of f, in root order.

    Each root gets the tuple of signs of f', f'', ..., f^(deg f - 1)
    at that root.  Returns a list of (IsolInterval, encoding) pairs.
    """
    f = u_trim([rat(c) for c in f])
    if not f:
        raise ValueError("zero polynomial")
    fs = squarefree(f)
    roots = isolate(f)
    ders = []
    d = f
    for _ in range(max(len(f) - 2, 0)):
        d = u_deriv(d)
        ders.append(d)
    out = []
    for iv in roots:
        enc = tuple(sign_at(fs, iv, dk) for dk in ders)
        out.append((iv, enc))
    return out


def root_multiplicity(f, fs, iv):
    """Multiplicity of the designated root as a root of f."""
    k = 0
    d = list(f)
    while True:
        if sign_at(fs, iv, d) != 0:
            return k
        d = u_deriv(d)
        k += 1
        if not d:
            raise ArithmeticError("zero polynomial in multiplicity scan")


def eval_interval(p, lo, hi):
    """A rational interval containing p([lo, hi]) (naive Horner)."""
    p = u_trim(list(p))
    if not p:
        return mpq(0), mpq(0)
    vlo = vhi = p[-1]
    for c in reversed(p[:-1]):
        cands = (vlo * lo, vlo * hi, vhi * lo, vhi * hi)
        vlo, vhi = min(cands) + c, max(cands) + c
    return vlo, vhi

"""Exact arithmetic over towers of infinitesimals.

The ground domain is Q extended by an ordered tuple of infinitesimal
symbols, outermost (largest) first: each symbol is infinitesimal relative
to every positive power of the symbols to its left.  Elements are finite
sums  c * e0^a0 * ... * e_{l-1}^a_{l-1}  with rational c and integer
exponents (negative exponents are allowed internally; polynomial data
keeps them nonnegative).

Monomials are totally ordered by magnitude.  Scanning exponent tuples
from the innermost position, the first difference decides: the smaller
exponent there means the larger monomial, because any power of an outer
symbol dominates a single power of an inner one.

Exponent tuples are packed into a single int, 24 bits per position,
storing BIAS - exponent with the innermost position in the most
significant slot.  That way plain integer comparison of packed keys
agrees with the magnitude order, and multiplying monomials is integer
addition (minus a constant offset).
"""

from gmpy2 import mpq

__all__ = [
    "Tower", "tower", "EpsScalar", "MPoly", "UnboundedLimitError",
    "mono_cmp", "order_and_initial", "lim_inner", "rat",
    "compose_rational", "u_trim", "u_add", "u_sub", "u_neg", "u_mul",
    "u_scale", "u_pow", "u_deriv", "u_eval", "u_to_rat",
]

_BITS = 24
_BIAS = 1 << 23
_MASK = (1 << _BITS) - 1
# exponents must stay well inside a slot; products add exponents
_EXP_LIMIT = 1 << 22


class UnboundedLimitError(ArithmeticError):
    """Limit of an element that is unbounded in the symbol being removed."""


def rat(x):
    """Coerce ints, strings like '3/2', and mpq to mpq."""
    if isinstance(x, mpq):
        return x
    return mpq(x)


class Tower:
    """An ordered tuple of infinitesimal symbol names, outermost first."""

    __slots__ = ("names", "ell", "z0")

    def __init__(self, names=()):
        self.names = tuple(names)
        self.ell = len(self.names)
        z0 = 0
        for i in range(self.ell):
            z0 |= _BIAS << (_BITS * i)
        self.z0 = z0

    def pack(self, exps):
        if len(exps) != self.ell:
            raise ValueError("exponent tuple length %d, tower has %d symbols"
                             % (len(exps), self.ell))
        key = 0
        for i, e in enumerate(exps):
            if not -_EXP_LIMIT < e < _EXP_LIMIT:
                raise OverflowError("exponent %d out of packing range" % e)
            key |= (_BIAS - e) << (_BITS * i)
        return key

    def unpack(self, key):
        return tuple(_BIAS - ((key >> (_BITS * i)) & _MASK)
                     for i in range(self.ell))

    def outer(self):
        """The tower with the innermost symbol removed."""
        return tower(self.names[:-1])

    def extended(self, more):
        """The tower with new (inner) symbols appended."""
        return tower(self.names + tuple(more))

    def __eq__(self, other):
        return isinstance(other, Tower) and self.names == other.names

    def __hash__(self):
        return hash(self.names)

    def __repr__(self):
        return "Tower%r" % (self.names,)


_tower_cache = {}


def tower(names=()):
    names = tuple(names)
    t = _tower_cache.get(names)
    if t is None:
        t = _tower_cache[names] = Tower(names)
    return t


def mono_cmp(alpha, beta):
    """Compare two exponent tuples by monomial magnitude.

    Returns 1 if eps^alpha is the larger monomial, -1 if smaller, 0 if
    equal.  The innermost positions are scanned first and a smaller
    exponent there wins:

    >>> mono_cmp((1, 0), (0, 1))
    1
    >>> mono_cmp((0, 0), (0, 1))
    1
    >>> mono_cmp((2, 1), (1, 1))
    -1
    """
    if len(alpha) != len(beta):
        raise ValueError("mismatched tower lengths")
    for a, b in zip(reversed(alpha), reversed(beta)):
        if a != b:
            return 1 if a < b else -1
    return 0


class EpsScalar:
    """A finite Q-linear combination of tower monomials.

    terms maps packed exponent keys to nonzero mpq coefficients.
    """

    __slots__ = ("tower", "terms")

    def __init__(self, tw, terms):
        self.tower = tw
        self.terms = terms

    # -- constructors ---------------------------------------------------

    @staticmethod
    def const(tw, c):
        c = rat(c)
        if not c:
            return EpsScalar(tw, {})
        return EpsScalar(tw, {tw.z0: c})

    @staticmethod
    def mono(tw, exps, c=1):
        c = rat(c)
        if not c:
            return EpsScalar(tw, {})
        return EpsScalar(tw, {tw.pack(exps): c})

    @staticmethod
    def symbol(tw, name):
        i = tw.names.index(name)
        exps = [0] * tw.ell
        exps[i] = 1
        return EpsScalar.mono(tw, exps)

    # -- structure ------------------------------------------------------

    def is_zero(self):
        return not self.terms

    def __bool__(self):
        return bool(self.terms)

    def is_const(self):
        return not self.terms or (len(self.terms) == 1
                                  and self.tower.z0 in self.terms)

    def as_rat(self):
        if not self.terms:
            return mpq(0)
        if self.is_const():
            return self.terms[self.tower.z0]
        raise ValueError("not a rational constant: %s" % self)

    def leading(self):
        """(packed key, coefficient) of the magnitude-largest term."""
        if not self.terms:
            raise ValueError("zero element has no leading term")
        k = max(self.terms)
        return k, self.terms[k]

    def sign(self):
        """Sign in the ordered field (the initial coefficient decides)."""
        if not self.terms:
            return 0
        _, c = self.leading()
        return 1 if c > 0 else -1

    def is_bounded(self):
        if not self.terms:
            return True
        k, _ = self.leading()
        o = self.tower.unpack(k)
        for e in reversed(o):
            if e:
                return e > 0
        return True

    def inner_order(self):
        """Minimal exponent of the innermost symbol over all terms."""
        if not self.terms:
            raise ValueError("zero element has no order")
        if self.tower.ell == 0:
            return 0
        sh = _BITS * (self.tower.ell - 1)
        return _BIAS - max(k >> sh for k in self.terms)

    # -- arithmetic -----------------------------------------------------

    def __add__(self, other):
        if not isinstance(other, EpsScalar):
            other = EpsScalar.const(self.tower, other)
        out = dict(self.terms)
        for k, c in other.terms.items():
            s = out.get(k)
            if s is None:
                out[k] = c
            else:
                s = s + c
                if s:
                    out[k] = s
                else:
                    del out[k]
        return EpsScalar(self.tower, out)

    __radd__ = __add__

    def __neg__(self):
        return EpsScalar(self.tower, {k: -c for k, c in self.terms.items()})

    def __sub__(self, other):
        return self + (-other if isinstance(other, EpsScalar)
                       else EpsScalar.const(self.tower, other).__neg__())

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if not isinstance(other, EpsScalar):
            c = rat(other)
            if not c:
                return EpsScalar(self.tower, {})
            return EpsScalar(self.tower,
                             {k: v * c for k, v in self.terms.items()})
        z0 = self.tower.z0
        out = {}
        for ka, ca in self.terms.items():
            base = ka - z0
            for kb, cb in other.terms.items():
                k = base + kb
                s = out.get(k)
                if s is None:
                    out[k] = ca * cb
                else:
                    s = s + ca * cb
                    if s:
                        out[k] = s
                    else:
                        del out[k]
        return EpsScalar(self.tower, out)

    __rmul__ = __mul__

    def __pow__(self, e):
        if e < 0:
            if len(self.terms) == 1:
                k, c = self.leading()
                z0 = self.tower.z0
                # monomial inverse: negate exponents, invert the rational
                ki = z0 - (k - z0)
                return EpsScalar(self.tower, {ki: 1 / c}) ** (-e)
            raise ValueError("can only invert monomials")
        out = EpsScalar.const(self.tower, 1)
        base = self
        while e:
            if e & 1:
                out = out * base
            base = base * base if e > 1 else base
            e >>= 1
        return out

    def __eq__(self, other):
        if isinstance(other, EpsScalar):
            return self.tower == other.tower and self.terms == other.terms
        if self.is_const():
            try:
                return self.as_rat() == rat(other)
            except (TypeError, ValueError):
                return NotImplemented
        return False

    def __ne__(self, other):
        r = self.__eq__(other)
        return r if r is NotImplemented else not r

    # -- tower surgery --------------------------------------------------

    def embed(self, tw):
        """Reinterpret over a tower extended by inner symbols."""
        if tw.names[:self.tower.ell] != self.tower.names:
            raise ValueError("target tower does not extend the current one")
        delta = tw.z0 - self.tower.z0
        return EpsScalar(tw, {k + delta: c for k, c in self.terms.items()})

    def subst(self, values):
        """Evaluate at rational values for all symbols (exact)."""
        if len(values) != self.tower.ell:
            raise ValueError("need one value per symbol")
        vals = [rat(v) for v in values]
        total = mpq(0)
        for k, c in self.terms.items():
            term = c
            for i, e in enumerate(self.tower.unpack(k)):
                if e:
                    term = term * vals[i] ** e
            total += term
        return total

    def __repr__(self):
        if not self.terms:
            return "0"
        names = self.tower.names
        parts = []
        for k in sorted(self.terms, reverse=True):
            c = self.terms[k]
            exps = self.tower.unpack(k)
            factors = []
            if c != 1 or not any(exps):
                factors.append(str(c))
            for n, e in zip(names, exps):
                if e == 1:
                    factors.append(n)
                elif e:
                    factors.append("%s^%d" % (n, e))
            parts.append("*".join(factors))
        return " + ".join(parts)


def order_and_initial(x):
    """Order vector and initial coefficient of a nonzero element."""
    k, c = x.leading()
    return x.tower.unpack(k), c


def lim_inner(x, count=1):
    """Drop the innermost `count` symbols by substituting 0 for each.

    Terms carrying a positive power of the symbol vanish; a negative
    power raises UnboundedLimitError.  Iterated innermost-first, this
    agrees with repeated single-variable substitution.
    """
    for _ in range(count):
        tw = x.tower
        if tw.ell == 0:
            raise ValueError("no symbols left to remove")
        out_tw = tw.outer()
        sh = _BITS * (tw.ell - 1)
        keep_mask = (1 << sh) - 1
        out = {}
        for k, c in x.terms.items():
            e = _BIAS - (k >> sh)
            if e > 0:
                continue
            if e < 0:
                raise UnboundedLimitError(
                    "unbounded in %s" % tw.names[-1])
            out[k & keep_mask] = c
        x = EpsScalar(out_tw, out)
    return x


class MPoly:
    """Multivariate polynomial with EpsScalar coefficients.

    terms maps exponent tuples (plain ints, one per variable) to nonzero
    EpsScalar coefficients.
    """

    __slots__ = ("nvars", "tower", "terms")

    def __init__(self, nvars, tw, terms):
        self.nvars = nvars
        self.tower = tw
        self.terms = terms

    @staticmethod
    def zero(nvars, tw):
        return MPoly(nvars, tw, {})

    @staticmethod
    def const(nvars, tw, c):
        if isinstance(c, EpsScalar):
            if not c:
                return MPoly(nvars, tw, {})
            return MPoly(nvars, tw, {(0,) * nvars: c})
        cc = EpsScalar.const(tw, c)
        if not cc:
            return MPoly(nvars, tw, {})
        return MPoly(nvars, tw, {(0,) * nvars: cc})

    @staticmethod
    def var(nvars, tw, i, e=1):
        exps = [0] * nvars
        exps[i] = e
        return MPoly(nvars, tw, {tuple(exps): EpsScalar.const(tw, 1)})

    @staticmethod
    def mono(nvars, tw, exps, c):
        if not isinstance(c, EpsScalar):
            c = EpsScalar.const(tw, c)
        if not c:
            return MPoly(nvars, tw, {})
        return MPoly(nvars, tw, {tuple(exps): c})

    def is_zero(self):
        return not self.terms

    def __bool__(self):
        return bool(self.terms)

    def is_const(self):
        return not self.terms or (len(self.terms) == 1
                                  and (0,) * self.nvars in self.terms)

    def const_part(self):
        c = self.terms.get((0,) * self.nvars)
        return c if c is not None else EpsScalar(self.tower, {})

    def total_degree(self):
        if not self.terms:
            return -1
        return max(sum(e) for e in self.terms)

    def degree_in(self, i):
        if not self.terms:
            return -1
        return max(e[i] for e in self.terms)

    def __add__(self, other):
        if not isinstance(other, MPoly):
            other = MPoly.const(self.nvars, self.tower, other)
        out = dict(self.terms)
        for e, c in other.terms.items():
            s = out.get(e)
            if s is None:
                out[e] = c
            else:
                s = s + c
                if s:
                    out[e] = s
                else:
                    del out[e]
        return MPoly(self.nvars, self.tower, out)

    __radd__ = __add__

    def __neg__(self):
        return MPoly(self.nvars, self.tower,
                     {e: -c for e, c in self.terms.items()})

    def __sub__(self, other):
        if not isinstance(other, MPoly):
            other = MPoly.const(self.nvars, self.tower, other)
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if not isinstance(other, MPoly):
            if isinstance(other, EpsScalar) and not other:
                return MPoly(self.nvars, self.tower, {})
            c = other if isinstance(other, EpsScalar) else rat(other)
            if not c:
                return MPoly(self.nvars, self.tower, {})
            return MPoly(self.nvars, self.tower,
                         {e: v * c for e, v in self.terms.items()})
        out = {}
        for ea, ca in self.terms.items():
            for eb, cb in other.terms.items():
                e = tuple(x + y for x, y in zip(ea, eb))
                s = out.get(e)
                if s is None:
                    s = ca * cb
                else:
                    s = s + ca * cb
                if s:
                    out[e] = s
                elif e in out:
                    del out[e]
        return MPoly(self.nvars, self.tower, out)

    __rmul__ = __mul__

    def __pow__(self, e):
        if e < 0:
            raise ValueError("negative polynomial power")
        out = MPoly.const(self.nvars, self.tower, 1)
        base = self
        while e:
            if e & 1:
                out = out * base
            base = base * base if e > 1 else base
            e >>= 1
        return out

    def __eq__(self, other):
        return (isinstance(other, MPoly) and self.nvars == other.nvars
                and self.tower == other.tower and self.terms == other.terms)

    def partial(self, i):
        """Partial derivative in variable i."""
        out = {}
        for e, c in self.terms.items():
            if e[i]:
                ne = list(e)
                ne[i] -= 1
                out[tuple(ne)] = c * e[i]
        return MPoly(self.nvars, self.tower, out)

    def eval(self, vals):
        """Evaluate at a point of EpsScalars (or rationals)."""
        vals = [v if isinstance(v, EpsScalar)
                else EpsScalar.const(self.tower, v) for v in vals]
        total = EpsScalar(self.tower, {})
        for e, c in self.terms.items():
            term = c
            for i, ei in enumerate(e):
                if ei:
                    term = term * vals[i] ** ei
            total = total + term
        return total

    def compose(self, gs):
        """Substitute polynomial gs[i] for variable i."""
        if len(gs) != self.nvars:
            raise ValueError("need one polynomial per variable")
        nv = gs[0].nvars
        tw = gs[0].tower
        pow_cache = [dict() for _ in gs]
        def gp(i, e):
            d = pow_cache[i]
            r = d.get(e)
            if r is None:
                r = d[e] = gs[i] ** e
            return r
        total = MPoly.zero(nv, tw)
        for e, c in self.terms.items():
            term = MPoly.const(nv, tw, c if tw == self.tower else
                               c.embed(tw))
            for i, ei in enumerate(e):
                if ei:
                    term = term * gp(i, ei)
            total = total + term
        return total

    def embed(self, tw):
        return MPoly(self.nvars, tw,
                     {e: c.embed(tw) for e, c in self.terms.items()})

    def pad_vars(self, front=0, back=0):
        """Add unused variables before/after the current ones."""
        nv = self.nvars + front + back
        zf = (0,) * front
        zb = (0,) * back
        return MPoly(nv, self.tower,
                     {zf + e + zb: c for e, c in self.terms.items()})

    def coeffs_map(self, fn):
        out = {}
        for e, c in self.terms.items():
            v = fn(c)
            if v:
                out[e] = v
        return out

    def __repr__(self):
        if not self.terms:
            return "0"
        parts = []
        for e in sorted(self.terms, reverse=True):
            c = self.terms[e]
            factors = []
            cs = repr(c)
            if cs != "1" or not any(e):
                factors.append("(%s)" % cs if " " in cs else cs)
            for i, ei in enumerate(e):
                if ei == 1:
                    factors.append("x%d" % i)
                elif ei:
                    factors.append("x%d^%d" % (i, ei))
            parts.append("*".join(factors))
        return " + ".join(parts)


# -- dense univariate helpers ------------------------------------------
#
# Polynomials as lists of coefficients, low degree first, over any
# commutative coefficient domain (mpq or EpsScalar).  The empty list is
# the zero polynomial; nonzero polynomials have a nonzero last entry.

def u_trim(a):
    n = len(a)
    while n and not a[n - 1]:
        n -= 1
    return a[:n]


def u_add(a, b):
    if len(a) < len(b):
        a, b = b, a
    out = list(a)
    for i, c in enumerate(b):
        out[i] = out[i] + c
    return u_trim(out)


def u_neg(a):
    return [-c for c in a]


def u_sub(a, b):
    return u_add(a, u_neg(b))


def u_scale(a, c):
    if not c:
        return []
    return u_trim([x * c for x in a])


def u_mul(a, b):
    if not a or not b:
        return []
    out = [None] * (len(a) + len(b) - 1)
    for i, ca in enumerate(a):
        if not ca:
            continue
        for j, cb in enumerate(b):
            p = ca * cb
            if out[i + j] is None:
                out[i + j] = p
            else:
                out[i + j] = out[i + j] + p
    z = a[0] * 0
    return u_trim([z if c is None else c for c in out])


def u_pow(a, e):
    if e == 0:
        return [a[0] * 0 + 1] if a else [mpq(1)]
    out = None
    base = a
    while e:
        if e & 1:
            out = base if out is None else u_mul(out, base)
        if e > 1:
            base = u_mul(base, base)
        e >>= 1
    return out


def u_deriv(a):
    return u_trim([a[i] * i for i in range(1, len(a))])


def u_eval(a, x):
    if not a:
        return x * 0
    total = a[-1]
    for c in reversed(a[:-1]):
        total = total * x + c
    return total


def u_to_rat(a):
    """Convert EpsScalar coefficients to mpq (must be symbol-free)."""
    return [c.as_rat() if isinstance(c, EpsScalar) else rat(c) for c in a]


def compose_rational(p, nums, den):
    """den^{deg p} * p(nums/den) for a polynomial map with one shared
    denominator.

    p is an MPoly in k variables; nums is a sequence of k univariate
    coefficient lists and den one more.  The result is a univariate
    coefficient list.  Example: p = Y1 + Y2, nums = (T, 1), den = 2
    yields 2*(T/2 + 1/2) = T + 1.
    """
    if len(nums) != p.nvars:
        raise ValueError("need one numerator per variable")
    d = p.total_degree()
    if d < 0:
        return []
    out = []
    den_pows = {0: [mpq(1)]}
    def dp(e):
        r = den_pows.get(e)
        if r is None:
            r = den_pows[e] = u_mul(dp(e - 1), den)
        return r
    for exps, c in p.terms.items():
        cc = c.as_rat() if c.is_const() else c
        term = [cc] if cc else []
        for i, ei in enumerate(exps):
            if ei:
                term = u_mul(term, u_pow(nums[i], ei))
        rem = d - sum(exps)
        if rem:
            term = u_mul(term, dp(rem))
        out = u_add(out, term)
    return out

"""Reduce limit-of-image problems to zero-dimensional special bases.

Starting from a polynomial F0 whose zero set is to be imaged through a
rational map, the lift chain clears the denominator with an inverse
variable, records the squared norm of the image in a fresh coordinate,
bounds everything inside a sphere of infinitesimal curvature, and blends
in a smoothing term so the critical system of the norm coordinate
becomes a triangular special basis.  Candidate representations of the
image are then read off the quotient algebra and limited back down the
tower.

Variable order convention: the original variables come first, then the
denominator-inverse variable, then the norm variable, then the bounding
variable, each appended by its stage.  The two innermost tower symbols
are reserved throughout: the innermost acts as the smoothing
infinitesimal (zeta), the one above it as the bounding infinitesimal
(mu).
"""

from dataclasses import dataclass

from gmpy2 import mpq

from .algebra0d import (NotSpecialError, PolyMap, QuotientAlgebra,
                        candidates, limit_candidates, validate_special)
from .exactcore import EpsScalar, MPoly

__all__ = ["RationalMap", "LiftState", "ResourceLimitError",
           "LiftConstructionError", "algebraize", "add_norm_var", "bound_mu",
           "smooth_zeta", "critical_basis", "build_lift", "limits_of_image"]


class ResourceLimitError(RuntimeError):
    """The predicted algebra dimension exceeds the configured cap."""

    def __init__(self, estimate, cap):
        self.estimate = estimate
        self.cap = cap
        super().__init__(
            "algebra dimension estimate %d exceeds the cap %d; raise the "
            "cap only with a matching time budget" % (estimate, cap))


class LiftConstructionError(RuntimeError):
    """The critical system failed to form a special basis."""


@dataclass(frozen=True)
class RationalMap:
    """Component numerators over one shared denominator."""
    nums: tuple
    den: MPoly

    def __post_init__(self):
        if not self.den.terms:
            raise ValueError("zero denominator")
        for f in self.nums:
            if f.nvars != self.den.nvars:
                raise ValueError("component arity mismatch")

    @property
    def m(self):
        return len(self.nums)


@dataclass
class LiftState:
    """All stages of one lift, for inspection and reuse."""
    F0: MPoly
    F: MPoly
    F_prime: MPoly
    F_mu: MPoly
    F_zeta: MPoly
    P: PolyMap
    dbar: int
    den_var: int
    norm_var: int
    bound_var: int


def _require_mu_zeta(tw):
    if tw.ell < 2:
        raise ValueError(
            "the tower must carry the bounding and smoothing infinitesimals "
            "as its two innermost symbols")


def algebraize(F0, Psi, nonneg=False):
    """Clear the denominator of the map into a fresh inverse variable.

    Returns (F, P): F vanishes exactly over the graph points
    (y, 1/den(y)), and P is the now-polynomial image map.  F0 is squared
    so the sum stays nonnegative, unless nonneg asserts it already is.

    >>> # circle under the identity map picks up (1 - Y3)^2
    """
    nv = F0.nvars
    if Psi.den.nvars != nv:
        raise ValueError("map and polynomial arities differ")
    tw = F0.tower
    base = F0 if nonneg else F0 * F0
    F = base.pad_vars(0, 1)
    yq = MPoly.var(nv + 1, tw, nv)
    guard = MPoly.const(nv + 1, tw, 1) - yq * Psi.den.pad_vars(0, 1)
    F = F + guard * guard
    comps = tuple(yq * w.pad_vars(0, 1) for w in Psi.nums)
    return F, PolyMap(comps)


def add_norm_var(F, P):
    """Append the norm variable and pin it to the squared image norm."""
    nv = F.nvars + 1
    tw = F.tower
    F2 = F.pad_vars(0, 1)
    comps = tuple(c.pad_vars(0, 1) for c in P.comps)
    y0 = MPoly.var(nv, tw, nv - 1)
    s = MPoly.zero(nv, tw)
    for c in comps:
        s = s + c * c
    diff = y0 - s
    return F2 + diff * diff, PolyMap(comps)


def bound_mu(F_prime):
    """Append the bounding variable and the infinitesimal sphere term."""
    tw = F_prime.tower
    _require_mu_zeta(tw)
    mu = EpsScalar.symbol(tw, tw.names[-2])
    nv = F_prime.nvars + 1
    F2 = F_prime.pad_vars(0, 1)
    s = MPoly.zero(nv, tw)
    for i in range(nv):
        v = MPoly.var(nv, tw, i)
        s = s + v * v
    guard = MPoly.const(nv, tw, 1) - s * (mu * mu)
    return F2 + guard * guard


def smooth_zeta(F_mu, norm_var=None):
    """Blend with the proper part that makes the critical system special.

    dbar is the least even number strictly above deg F_mu.  The zeta
    part raises every non-norm variable to degree dbar (plus a square),
    the norm variable to degree dbar, and subtracts one less than twice
    the variable count, all scaled by mu^dbar.  At zeta = 0 the prior
    stage is recovered exactly.  norm_var defaults to the lift-chain
    position (second to last), as in critical_basis.
    """
    tw = F_mu.tower
    _require_mu_zeta(tw)
    nv = F_mu.nvars
    norm = nv - 2 if norm_var is None else norm_var
    deg = F_mu.total_degree()
    dbar = deg + 2 if deg % 2 == 0 else deg + 1
    zeta = EpsScalar.symbol(tw, tw.names[-1])
    mu = EpsScalar.symbol(tw, tw.names[-2])
    mud = mu ** dbar
    body = MPoly.var(nv, tw, norm, dbar)
    for j in range(nv):
        if j == norm:
            continue
        body = body + MPoly.var(nv, tw, j, dbar) + MPoly.var(nv, tw, j, 2)
    level = body * mud - MPoly.const(nv, tw, 2 * nv - 1)
    one_minus = MPoly.const(nv, tw, EpsScalar.const(tw, 1) - zeta)
    return level * zeta + F_mu * one_minus, dbar


def critical_basis(F_zeta, norm_var=None):
    """Special basis of the critical system of the norm projection.

    Generators: the partial derivatives in every non-norm variable, plus
    F_zeta itself reduced once by those partials so its top monomial is
    the pure norm-variable power.  The reduction divides only by dbar.
    norm_var defaults to the lift-chain position (second to last); other
    smoothed systems of the same shape can point it elsewhere.
    """
    nv = F_zeta.nvars
    norm = nv - 2 if norm_var is None else norm_var
    dbar = F_zeta.total_degree()
    partials = {j: F_zeta.partial(j) for j in range(nv) if j != norm}
    red = F_zeta
    inv = mpq(1, dbar)
    for j, pj in partials.items():
        red = red - MPoly.var(nv, F_zeta.tower, j) * pj * inv
    gens = list(partials.values()) + [red]
    try:
        return validate_special(gens)
    except NotSpecialError as exc:
        raise LiftConstructionError(
            "critical system did not reduce to a special basis: %s"
            % exc) from exc


def build_lift(F0, Psi, nonneg=False):
    """Run every stage and collect the results."""
    F, P = algebraize(F0, Psi, nonneg=nonneg)
    F_prime, P2 = add_norm_var(F, P)
    F_mu = bound_mu(F_prime)
    F_zeta, dbar = smooth_zeta(F_mu)
    nv = F_zeta.nvars
    return LiftState(F0=F0, F=F, F_prime=F_prime, F_mu=F_mu, F_zeta=F_zeta,
                     P=PolyMap(tuple(c.pad_vars(0, 1) for c in P2.comps)),
                     dbar=dbar, den_var=F0.nvars, norm_var=nv - 2,
                     bound_var=nv - 1)


def dimension_estimate(F0, Psi, nonneg=False):
    """N = dbar (dbar-1)^(q+1) without building any algebra data."""
    state = build_lift(F0, Psi, nonneg=nonneg)
    q2 = state.F_zeta.nvars
    return state.dbar * (state.dbar - 1) ** (q2 - 1), state


def limits_of_image(F0, Psi, inner, nonneg=False, n_cap=4096, js=None,
                    stats=None):
    """Candidate representations of the limit of the image of Z(F0).

    Chains the lift stages, reads candidates off the quotient algebra,
    and limits them over the `inner` innermost infinitesimals.  The
    algebra dimension is estimated from the degree formula first and
    n_cap aborts oversized instances before any table is built.  js
    restricts the separating scan (testing and budget control); stats
    collects the pruned-candidate count.
    """
    est, state = dimension_estimate(F0, Psi, nonneg=nonneg)
    if est > n_cap:
        raise ResourceLimitError(est, n_cap)
    basis = critical_basis(state.F_zeta)
    A = QuotientAlgebra(basis)
    if A.N != est:
        raise LiftConstructionError(
            "algebra dimension %d does not match the estimate %d"
            % (A.N, est))
    cands = candidates(A, state.P, js=js)
    return limit_candidates(cands, inner, stats=stats)

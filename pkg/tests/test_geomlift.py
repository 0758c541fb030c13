import random

import pytest
from gmpy2 import mpq

from quadsample.algebra0d import (PolyMap, QuotientAlgebra,
                                 candidates, limit_candidates)
from quadsample.exactcore import (EpsScalar, MPoly, lim_inner, rat, tower,
                                  u_to_rat)
from quadsample.geomlift import (LiftState, RationalMap, ResourceLimitError,
                                 add_norm_var, algebraize, bound_mu,
                                 build_lift, critical_basis, limits_of_image,
                                 smooth_zeta)
from quadsample.realroots import isolate, sign_at, squarefree

TW = tower(("mu", "zeta"))


def V(nv, i, e=1, tw=TW):
    return MPoly.var(nv, tw, i, e)


def C(nv, c, tw=TW):
    return MPoly.const(nv, tw, c)


def identity_map(nv, tw=TW):
    return RationalMap(tuple(MPoly.var(nv, tw, i) for i in range(nv)),
                       MPoly.const(nv, tw, 1))


def test_algebraize_circle_pin():
    F0 = V(2, 0, 2) + V(2, 1, 2) - C(2, 1)
    F, P = algebraize(F0, identity_map(2))
    want = (F0 * F0).pad_vars(0, 1)
    guard = C(3, 1) - V(3, 2)
    want = want + guard * guard
    assert F == want
    assert list(P.comps) == [V(3, 2) * V(3, 0), V(3, 2) * V(3, 1)]


def test_algebraize_nonneg_skips_square():
    F0 = V(1, 0, 2)
    F, _ = algebraize(F0, identity_map(1), nonneg=True)
    guard = C(2, 1) - V(2, 1)
    assert F == F0.pad_vars(0, 1) + guard * guard


def test_algebraize_lift_points_exact():
    # rational zeros of F0 lift to zeros of F with the exact image
    F0 = V(2, 0, 2) + V(2, 1, 2) - C(2, 1)
    den = V(2, 1) + C(2, 2)
    psi = RationalMap((V(2, 0),), den)
    F, P = algebraize(F0, psi)
    rng = random.Random(2)
    pts = [(mpq(1), mpq(0)), (mpq(3, 5), mpq(4, 5)), (mpq(-1), mpq(0))]
    for (a, b) in pts:
        d = den.eval([a, b]).as_rat()
        assert d != 0
        lifted = [a, b, mpq(1) / d]
        assert not F.eval(lifted)
        got = P.comps[0].eval(lifted).as_rat()
        assert got == a / d


def test_add_norm_var_formula():
    F = V(1, 0, 2)
    P = __import__("quadsample.algebra0d", fromlist=["PolyMap"]).PolyMap(
        (V(1, 0),))
    F2, P2 = add_norm_var(F, P)
    diff = V(2, 1) - V(2, 0, 2)
    assert F2 == F.pad_vars(0, 1) + diff * diff
    # empty map degenerates to adding Y0^2
    P0 = __import__("quadsample.algebra0d", fromlist=["PolyMap"]).PolyMap(())
    F3, _ = add_norm_var(F, P0)
    assert F3 == F.pad_vars(0, 1) + V(2, 1, 2)


def test_bound_mu_sphere():
    F = V(1, 0, 2)
    Fm = bound_mu(F)
    assert Fm.nvars == 2
    mu = EpsScalar.symbol(TW, "mu")
    s = V(2, 0, 2) + V(2, 1, 2)
    guard = C(2, 1) - s * (mu * mu)
    assert Fm == F.pad_vars(0, 1) + guard * guard


def test_smooth_zeta_shape():
    state = build_lift(V(1, 0, 2) - C(1, 1), identity_map(1))
    F_mu, F_z, dbar = state.F_mu, state.F_zeta, state.dbar
    deg = F_mu.total_degree()
    assert dbar % 2 == 0 and dbar > deg and dbar - deg <= 2
    # zeta -> 0 recovers the prior stage exactly
    dropped = F_z.coeffs_map(lambda c: lim_inner(c, 1))
    prior = F_mu.coeffs_map(lambda c: lim_inner(c, 1))
    assert dropped == prior
    # the displayed constant: -(2 nvars - 1) zeta
    zeta = EpsScalar.symbol(TW, "zeta")
    const = F_z.terms.get((0,) * F_z.nvars)
    want_part = zeta * -(2 * F_z.nvars - 1)
    # the constant term also carries (1 - zeta) * const(F_mu)
    fmu_const = F_mu.terms.get((0,) * F_mu.nvars, EpsScalar.const(TW, 0))
    assert (const - want_part
            - fmu_const * (EpsScalar.const(TW, 1) - zeta)).is_zero()


def test_smooth_zeta_dbar_pin():
    # degree 8 input gives dbar 10
    F = V(1, 0, 8)
    Fm = bound_mu(F)
    assert Fm.total_degree() == 8
    _, dbar = smooth_zeta(Fm)
    assert dbar == 10


def test_critical_basis_leaders():
    state = build_lift(V(1, 0, 2), identity_map(1))
    basis = critical_basis(state.F_zeta)
    nv = state.F_zeta.nvars
    dbar = state.dbar
    zeta = EpsScalar.symbol(TW, "zeta")
    mu = EpsScalar.symbol(TW, "mu")
    lead_partial = zeta * (mu ** dbar) * dbar
    lead_norm = zeta * (mu ** dbar)
    for g in basis.gens:
        if g.var == state.norm_var:
            assert g.deg == dbar
            assert (g.lead_coeff - lead_norm).is_zero()
        else:
            assert g.deg == dbar - 1
            assert (g.lead_coeff - lead_partial).is_zero()
    N = dbar * (dbar - 1) ** (nv - 1)
    assert QuotientAlgebra(basis).N == N


def test_resource_cap_trips_before_construction():
    F0 = V(2, 0, 2) + V(2, 1, 2) - C(2, 1)
    with pytest.raises(ResourceLimitError) as err:
        limits_of_image(F0, identity_map(2), inner=2, n_cap=4096)
    assert err.value.estimate > 4096
    assert err.value.cap == 4096




def test_minimal_chain_exceeds_practical_cap():
    # the smallest instance the chain can produce (no original variables,
    # constant map) still lands at dimension 150: three appended
    # variables, dbar = 6, so 6 * 5 * 5.  Exact arithmetic at that size
    # is out of reach, which is why the cap refuses it up front.
    F0 = MPoly.zero(0, TW)
    psi = RationalMap((MPoly.const(0, TW, 3),), MPoly.const(0, TW, 1))
    with pytest.raises(ResourceLimitError) as err:
        limits_of_image(F0, psi, inner=2, n_cap=100)
    assert err.value.estimate == 150
    assert err.value.cap == 100


def test_tower_route_micro():
    # one-variable smoothed system of the same shape the chain builds,
    # small enough to push through candidates and limits completely:
    #   F = zeta * (mu^6 X^6 - 1) + (1 - zeta) * (X^2 - 1)^2
    # Its bounded branches collapse onto X = 1 and X = -1, each from a
    # pair of merging roots, so the mu = 1 candidate carries the points.
    zeta = EpsScalar.symbol(TW, "zeta")
    mu = EpsScalar.symbol(TW, "mu")
    one = EpsScalar.const(TW, 1)
    X = V(1, 0)
    G = X * X - C(1, 1)
    F = (X ** 6) * C(1, mu ** 6 * zeta) + C(1, -zeta) \
        + G * G * C(1, one - zeta)
    basis = critical_basis(F, norm_var=0)
    A = QuotientAlgebra(basis)
    assert A.N == 6
    cands = candidates(A, PolyMap((X,)))
    assert sorted(c.mu for c in cands) == [0, 1, 2, 3, 4, 5]
    reps = limit_candidates(cands, inner=2)
    rep = next(c for c in reps if c.mu == 1)
    chi = u_to_rat(rep.f)
    while chi and not chi[-1]:
        chi.pop()
    assert chi == [1, 0, -2, 0, 1]
    num = u_to_rat(rep.g[0])
    den = u_to_rat(rep.g0)
    for point in (mpq(1), mpq(-1)):
        nv_ = sum(c * point ** i for i, c in enumerate(num))
        dv = sum(c * point ** i for i, c in enumerate(den))
        assert dv != 0
        assert nv_ / dv == point

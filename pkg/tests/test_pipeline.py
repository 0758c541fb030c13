import random

import pytest
from gmpy2 import mpq

from quadsample.exactcore import EpsScalar, MPoly, tower, u_to_rat, u_trim
from quadsample.geomlift import ResourceLimitError
from quadsample.algebra0d import URep
from quadsample.pieces import Problem, QuadMap
from quadsample.pipeline import (Eps0Certificate, PieceResourceError,
                                 PipelineConfig, PipelineError, SampleReport,
                                 decide, dedup, prepare, remove_eps0, sample,
                                 verify_membership)
from quadsample.realroots import (IsolInterval, RealURep, sign_at, squarefree,
                                  u_divmod)
from quadsample.exactcore import u_mul, u_scale, u_sub

TW = tower(())


def C(nv, c):
    return MPoly.const(nv, TW, c)


def V(nv, i, e=1):
    return MPoly.var(nv, TW, i, e)


def diag_quad(n, i, s=2):
    H = tuple(tuple(mpq(s) if r == c == i else mpq(0) for c in range(n))
              for r in range(n))
    return (H, (mpq(0),) * n, mpq(0))


def norm_quad(n):
    H = tuple(tuple(mpq(2) if r == c else mpq(0) for c in range(n))
              for r in range(n))
    return (H, (mpq(0),) * n, mpq(0))


def circle_problem(level=0):
    # p(Y) = Y1 - 1 composed with |X|^2 on two variables
    p = V(1, 0) - C(1, 1)
    Q = QuadMap(2, TW, (norm_quad(2),))
    return Problem(p, Q, level)


def hypercube_problem(n):
    p = MPoly.zero(n, TW)
    for i in range(n):
        d = V(n, i) - C(n, 1)
        p = p + d * d
    Q = QuadMap(n, TW, tuple(diag_quad(n, i) for i in range(n)))
    return Problem(p, Q, 0)


def root_poly(rep):
    return squarefree(u_trim(u_to_rat(rep.f)))


def coord_is(rep, k, value):
    """Exact test that coordinate k of the point equals the rational."""
    fs = root_poly(rep)
    num = u_trim(u_to_rat(rep.gs[k]))
    den = u_trim(u_to_rat(rep.g0))
    h = u_trim(u_sub(num, u_scale(den, mpq(value))))
    if not h:
        return True
    if len(h) >= len(fs):
        h = u_trim(u_divmod(h, fs)[1])
    return sign_at(fs, rep.interval, h) == 0


def coord_square_is(rep, k, value):
    fs = root_poly(rep)
    num = u_trim(u_to_rat(rep.gs[k]))
    den = u_trim(u_to_rat(rep.g0))
    h = u_trim(u_sub(u_mul(num, num), u_scale(u_mul(den, den), mpq(value))))
    if not h:
        return value == 0
    if len(h) >= len(fs):
        h = u_trim(u_divmod(h, fs)[1])
    return sign_at(fs, rep.interval, h) == 0


def coord_sign(rep, k):
    fs = root_poly(rep)
    num = u_trim(u_to_rat(rep.gs[k]))
    if not num:
        return 0
    den = u_trim(u_to_rat(rep.g0))
    return sign_at(fs, rep.interval, num) * sign_at(fs, rep.interval, den)


def canon(report):
    out = []
    for r in report.points:
        iv = r.interval
        out.append((tuple(map(str, u_to_rat(r.f))),
                    tuple(map(str, u_to_rat(r.g0))),
                    tuple(tuple(map(str, u_to_rat(g))) for g in r.gs),
                    tuple(r.thom),
                    str(iv.lo), str(iv.hi)))
    return report.status, tuple(out)


# -- configuration and report validation --------------------------------

def test_config_rejects_unknown_mode():
    with pytest.raises(ValueError):
        PipelineConfig(mode="numeric")


def test_config_rejects_bad_rationals_and_counts():
    with pytest.raises(ValueError):
        PipelineConfig(rational_eps1=0)
    with pytest.raises(ValueError):
        PipelineConfig(rational_eps2=mpq(-1, 3))
    with pytest.raises(ValueError):
        PipelineConfig(jobs=0)
    with pytest.raises(ValueError):
        PipelineConfig(n_cap=0)


def test_config_normalizes_rationals():
    cfg = PipelineConfig(rational_eps1=1, rational_eps2=mpq(3, 7))
    assert cfg.rational_eps1 == 1
    assert cfg.rational_eps2 == mpq(3, 7)


def test_report_status_must_match_points():
    with pytest.raises(ValueError):
        SampleReport([], "NONEMPTY")
    with pytest.raises(ValueError):
        SampleReport([object()], "EMPTY")
    with pytest.raises(ValueError):
        SampleReport([], "UNKNOWN")


def test_certificate_checks_value_against_bounds():
    with pytest.raises(ValueError):
        Eps0Certificate([[mpq(1)]], [None], mpq(0))
    with pytest.raises(ValueError):
        Eps0Certificate([[mpq(1), mpq(1)]], [mpq(1, 2)], mpq(1, 2))
    cert = Eps0Certificate([[mpq(1), mpq(1)]], [mpq(1, 2)], mpq(1, 4))
    assert cert.conservative


# -- membership checking ------------------------------------------------

def test_membership_accepts_circle_point():
    rep = RealURep(f=[mpq(-1), mpq(0), mpq(1)], g0=[mpq(1)],
                   gs=[[mpq(0), mpq(1)], [mpq(0)]], thom=(),
                   interval=IsolInterval(mpq(1), mpq(1), mpq(1)))
    assert verify_membership(rep, circle_problem())


def test_membership_rejects_wrong_level():
    rep = RealURep(f=[mpq(-1), mpq(0), mpq(1)], g0=[mpq(1)],
                   gs=[[mpq(0), mpq(1)], [mpq(0)]], thom=(),
                   interval=IsolInterval(mpq(1), mpq(1), mpq(1)))
    assert not verify_membership(rep, circle_problem(level=1))


def test_membership_rejects_denominator_sharing_a_root():
    rep = RealURep(f=[mpq(-1), mpq(0), mpq(1)], g0=[mpq(-1), mpq(1)],
                   gs=[[mpq(0), mpq(1)], [mpq(0)]], thom=(),
                   interval=IsolInterval(mpq(1), mpq(1), mpq(1)))
    assert not verify_membership(rep, circle_problem())


def test_sample_requires_rational_coefficients():
    tw1 = tower(("eps0",))
    e0 = EpsScalar.symbol(tw1, "eps0")
    p = MPoly.const(1, tw1, e0)
    Q = QuadMap(1, tw1, ((((mpq(2),),), (mpq(0),), mpq(0)),))
    with pytest.raises(PipelineError):
        sample(Problem(p, Q, 0))


# -- deduplication ------------------------------------------------------

def _point_at(f, iv, gs, g0=None):
    return RealURep(f=list(f), g0=list(g0 or [mpq(1)]),
                    gs=[list(g) for g in gs], thom=(), interval=iv)


def test_dedup_drops_identical_copies():
    r = _point_at([mpq(-1), mpq(1)], IsolInterval(mpq(1), mpq(1), mpq(1)),
                  [[mpq(0), mpq(1)]])
    assert len(dedup([r, r])) == 1


def test_dedup_merges_across_different_parameters():
    # x = 1 designated through T - 1 and through (T - 1)(T - 2) at T = 1
    r1 = _point_at([mpq(-1), mpq(1)], IsolInterval(mpq(1), mpq(1), mpq(1)),
                   [[mpq(0), mpq(1)]])
    r2 = _point_at([mpq(2), mpq(-3), mpq(1)],
                   IsolInterval(mpq(1), mpq(1), mpq(1)),
                   [[mpq(0), mpq(1)]])
    assert len(dedup([r1, r2])) == 1


def test_dedup_keeps_antipodal_points():
    f = [mpq(-1), mpq(0), mpq(1)]
    plus = _point_at(f, IsolInterval(mpq(1), mpq(1), mpq(1)),
                     [[mpq(0), mpq(1)], [mpq(0)]])
    minus = _point_at(f, IsolInterval(mpq(-1), mpq(-1), mpq(-1)),
                      [[mpq(0), mpq(1)], [mpq(0)]])
    assert len(dedup([plus, minus])) == 2


def test_dedup_keeps_same_root_different_coordinates():
    iv = IsolInterval(mpq(2), mpq(2), mpq(2))
    r1 = _point_at([mpq(-2), mpq(1)], iv, [[mpq(0), mpq(1)]])
    r2 = _point_at([mpq(-2), mpq(1)], iv, [[mpq(1)]])
    assert len(dedup([r1, r2])) == 2


def test_dedup_merges_equal_radicals():
    # sqrt(2) as a root of T^2 - 2 and as half a root of T^2 - 8
    r1 = _point_at([mpq(-2), mpq(0), mpq(1)], IsolInterval(mpq(1), mpq(2)),
                   [[mpq(0), mpq(1)]])
    r2 = _point_at([mpq(-8), mpq(0), mpq(1)], IsolInterval(mpq(2), mpq(3)),
                   [[mpq(0), mpq(1)]], g0=[mpq(2)])
    r3 = _point_at([mpq(-3), mpq(0), mpq(1)],
                   IsolInterval(mpq(3, 2), mpq(2)), [[mpq(0), mpq(1)]])
    assert len(dedup([r1, r2])) == 1
    assert len(dedup([r1, r3])) == 2


def test_dedup_resolves_interval_from_thom_encoding():
    r1 = RealURep(f=[mpq(-2), mpq(0), mpq(1)], g0=[mpq(1)],
                  gs=[[mpq(0), mpq(1)]], thom=(1,), interval=None)
    r2 = _point_at([mpq(-8), mpq(0), mpq(1)], IsolInterval(mpq(2), mpq(3)),
                   [[mpq(0), mpq(1)]], g0=[mpq(2)])
    assert len(dedup([r1, r2])) == 1


# -- problem preparation ------------------------------------------------

SUBST = [mpq(1, 7), mpq(1, 11), mpq(1, 13), mpq(1, 17), mpq(1, 19)]


def _at(scalar, values=None):
    if isinstance(scalar, EpsScalar):
        return scalar.subst(list(values if values is not None else SUBST))
    return mpq(scalar)


def test_prepare_adds_shell_stage_and_diagonal_deformation():
    dp, tw = prepare(hypercube_problem(2), PipelineConfig())
    assert tw.names == ("eps0", "eps1", "eps2", "mu", "zeta")
    assert dp.Q.n == 3 and dp.Q.m == 3
    assert dp.dist == 0
    e0, e2 = SUBST[0], SUBST[2]
    sphere = -2 * e0 * e0 + e2
    want = [
        [sphere, sphere, sphere],
        [e2, 2 + 2 * e2, 3 * e2],
        [e2, 4 * e2, 2 + 9 * e2],
    ]
    for c, wd in zip(dp.Q.comps, want):
        H, b, const = c
        for i in range(3):
            assert _at(H[i][i]) == wd[i]
            for j in range(3):
                if i != j:
                    assert _at(H[i][j]) == 0
        assert all(_at(x) == 0 for x in b)
    assert _at(dp.Q.comps[0][2]) == 1
    assert _at(dp.Q.comps[1][2]) == 0
    assert _at(dp.level) == SUBST[1]


def test_prepare_squares_p_and_lifts_by_height():
    dp, _ = prepare(hypercube_problem(2), PipelineConfig())
    val = dp.p.eval([mpq(2), mpq(3), mpq(4)])
    # height^2 plus the square of (3-1)^2 + (4-1)^2
    assert _at(val) == 4 + 169


def test_prepare_honors_nonnegativity_claim():
    dp, _ = prepare(hypercube_problem(2), PipelineConfig(assume_nonneg=True))
    val = dp.p.eval([mpq(2), mpq(3), mpq(4)])
    assert _at(val) == 4 + 13


def test_prepare_rational_eps2_shortens_tower():
    dp, tw = prepare(hypercube_problem(2),
                     PipelineConfig(rational_eps2=mpq(1, 64)))
    assert tw.names == ("eps0", "eps1", "mu", "zeta")
    vals = SUBST[:4]
    assert _at(dp.Q.comps[1][0][1][1], vals) == 2 + mpq(2, 64)


def test_prepare_bounded_skips_shell():
    prob = Problem(hypercube_problem(2).p, hypercube_problem(2).Q, 0, 1)
    dp, tw = prepare(prob, PipelineConfig(assume_bounded=True))
    assert tw.names == ("eps1", "eps2", "mu", "zeta")
    assert dp.Q.n == 2 and dp.Q.m == 2
    assert dp.dist == 1
    vals = SUBST[:4]
    e2 = vals[1]
    assert _at(dp.Q.comps[0][0][0][0], vals) == 2 + e2
    assert _at(dp.Q.comps[0][0][1][1], vals) == 2 * e2
    assert _at(dp.Q.comps[1][0][0][0], vals) == e2
    assert _at(dp.Q.comps[1][0][1][1], vals) == 2 + 4 * e2


# -- sampling end to end ------------------------------------------------

def test_sample_circle_finds_both_poles():
    report = sample(circle_problem())
    assert report.status == "NONEMPTY"
    assert len(report.points) == 2
    signs = set()
    for rep in report.points:
        assert verify_membership(rep, circle_problem())
        assert coord_is(rep, 0, 1) or coord_is(rep, 0, -1)
        assert coord_is(rep, 1, 0)
        signs.add(coord_sign(rep, 0))
    assert signs == {-1, 1}


def test_sample_hypercube_vertices():
    report = sample(hypercube_problem(2))
    assert report.status == "NONEMPTY"
    assert len(report.points) == 4
    pats = set()
    for rep in report.points:
        assert verify_membership(rep, hypercube_problem(2))
        assert coord_square_is(rep, 0, 1)
        assert coord_square_is(rep, 1, 1)
        pats.add((coord_sign(rep, 0), coord_sign(rep, 1)))
    assert pats == {(-1, -1), (-1, 1), (1, -1), (1, 1)}


def test_sample_extends_cylinder_fibers_by_zero():
    # (X1^2 - 1)^2 ignores X2, so the set is two vertical lines
    d = V(1, 0) - C(1, 1)
    Q = QuadMap(2, TW, (diag_quad(2, 0),))
    report = sample(Problem(d * d, Q, 0))
    assert report.status == "NONEMPTY"
    assert len(report.points) == 2
    for rep in report.points:
        assert coord_square_is(rep, 0, 1)
        assert coord_is(rep, 1, 0)
    signs = {coord_sign(rep, 0) for rep in report.points}
    assert signs == {-1, 1}


def test_sample_reports_emptiness():
    p = V(1, 0) + C(1, 1)
    Q = QuadMap(2, TW, (norm_quad(2),))
    report = sample(Problem(p, Q, 0))
    assert report.status == "EMPTY"
    assert report.points == []


def test_sample_zero_polynomial_gives_origin():
    p = MPoly.zero(1, TW)
    Q = QuadMap(2, TW, (norm_quad(2),))
    report = sample(Problem(p, Q, 0))
    assert report.status == "NONEMPTY"
    assert len(report.points) == 1
    rep = report.points[0]
    assert rep.interval.exact == 0
    assert all(g == [] for g in rep.gs)


def test_sample_positive_definite_univariate_is_empty():
    pv = V(1, 0)
    p = pv * pv + C(1, 1)
    Q = QuadMap(1, TW, (diag_quad(1, 0),))
    report = sample(Problem(p, Q, 0))
    assert report.status == "EMPTY"


def test_decide_exposes_witness():
    report = decide(circle_problem())
    assert report.status == "NONEMPTY"
    assert verify_membership(report.points[0], circle_problem())
    assert decide(Problem(V(1, 0) + C(1, 1),
                          QuadMap(2, TW, (norm_quad(2),)), 0)).status == \
        "EMPTY"


def test_sample_is_deterministic():
    a = canon(sample(hypercube_problem(2)))
    b = canon(sample(hypercube_problem(2)))
    assert a == b


def test_sample_orders_points_by_root_location():
    report = sample(hypercube_problem(2))
    locs = [iv.exact if iv.exact is not None else iv.lo
            for iv in (rep.interval for rep in report.points)]
    assert locs == sorted(locs)


def test_sample_random_diagonal_instances():
    rng = random.Random(41)
    for _ in range(5):
        a = mpq(rng.randint(1, 9), rng.randint(1, 9))
        b = mpq(rng.randint(1, 9), rng.randint(1, 9))
        da = V(2, 0) - C(2, a)
        db = V(2, 1) - C(2, b)
        p = da * da + db * db
        Q = QuadMap(2, TW, (diag_quad(2, 0), diag_quad(2, 1)))
        prob = Problem(p, Q, 0)
        report = sample(prob)
        assert report.status == "NONEMPTY"
        assert len(report.points) == 4
        for rep in report.points:
            assert verify_membership(rep, prob)
            assert coord_square_is(rep, 0, a)
            assert coord_square_is(rep, 1, b)


def test_sample_random_unreachable_target_is_empty():
    rng = random.Random(42)
    for _ in range(3):
        a = mpq(rng.randint(1, 9), rng.randint(1, 9))
        b = -mpq(rng.randint(1, 9), rng.randint(1, 9))
        da = V(2, 0) - C(2, a)
        db = V(2, 1) - C(2, b)
        p = da * da + db * db
        Q = QuadMap(2, TW, (diag_quad(2, 0), diag_quad(2, 1)))
        assert sample(Problem(p, Q, 0)).status == "EMPTY"


# -- substitution of the outermost infinitesimal ------------------------

def _eps_tower():
    return tower(("eps0",))


def test_remove_eps0_passthrough_for_rational_candidates():
    cand = URep([mpq(-1), mpq(0), mpq(1)], [mpq(0), mpq(2)],
                [[mpq(0), mpq(1)], [mpq(0)]], 0, 1)
    out, cert = remove_eps0([cand], circle_problem())
    assert cert is None
    assert out[0].f == [mpq(-1), mpq(0), mpq(1)]


def test_remove_eps0_substitutes_below_every_bound():
    tw1 = _eps_tower()
    e0 = EpsScalar.symbol(tw1, "eps0")
    one = EpsScalar.const(tw1, 1)
    zero = EpsScalar.const(tw1, 0)
    cand = URep([zero - (one + e0), zero, one], [one],
                [[zero, one], [zero]], 0, 1)
    out, cert = remove_eps0([cand], circle_problem())
    assert cert is not None and cert.conservative
    assert cert.value > 0
    for b in cert.bounds:
        assert b is None or cert.value < b
    assert cert.probe[0] == cert.probe[1]
    # 1 + eps substituted: the constant coefficient becomes -(1 + value)
    assert out[0].f[0] == -(1 + cert.value)
    assert out[0].f[2] == 1


def test_remove_eps0_root_bound_fixtures():
    tw1 = _eps_tower()
    e0 = EpsScalar.symbol(tw1, "eps0")
    one = EpsScalar.const(tw1, 1)
    ca = one - e0 * 3 + e0 * e0 * 2
    cb = e0 * e0
    cands = [URep([ca, one], [one], [[one], [one]], 0, 0),
             URep([cb, one], [one], [[one], [one]], 0, 1)]
    out, cert = remove_eps0(cands, circle_problem())
    by_member = {tuple(h): b for h, b in zip(cert.test_polys, cert.bounds)}
    assert by_member[(mpq(1), mpq(-3), mpq(2))] == mpq(1, 6)
    assert by_member[(mpq(0), mpq(0), mpq(1))] == 1
    assert cert.value == mpq(1, 12)
    assert out[0].f[0] == 1 - 3 * cert.value + 2 * cert.value ** 2
    assert out[1].f[0] == cert.value ** 2


# -- resource gates -----------------------------------------------------

def test_direct_route_respects_dimension_cap():
    with pytest.raises(ResourceLimitError) as info:
        sample(circle_problem(), PipelineConfig(n_cap=1))
    assert info.value.estimate == 2
    assert info.value.cap == 1


def test_smoothed_route_respects_dimension_cap():
    # X1*X2 = 1 defeats the pure-power basis extraction, so the claimed
    # boundedness sends it to the smoothed construction and its larger
    # algebra estimate
    p = V(1, 0) - C(1, 1)
    H = ((mpq(0), mpq(1)), (mpq(1), mpq(0)))
    Q = QuadMap(2, TW, ((H, (mpq(0), mpq(0)), mpq(0)),))
    with pytest.raises(ResourceLimitError) as info:
        sample(Problem(p, Q, 0),
               PipelineConfig(assume_bounded=True, n_cap=20))
    assert info.value.estimate == 30
    assert info.value.cap == 20


def test_symbolic_mode_reports_chart_and_sizes():
    with pytest.raises(PieceResourceError) as info:
        sample(circle_problem(), PipelineConfig(mode="symbolic"))
    err = info.value
    assert isinstance(err, ResourceLimitError)
    assert err.estimate > err.cap == 4096
    assert hasattr(err, "pair")
    assert "chart" in err.args[0]

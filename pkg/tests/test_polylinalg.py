import random
from itertools import permutations

from gmpy2 import mpq

from quadsample.exactcore import MPoly, tower
from quadsample.oracle import cofactor_det
from quadsample.polylinalg import (
    IndexPair, PolyMatrix, cramer_solve, det, enum_uw, submatrix,
)

TW = tower(())


def rand_poly(rng, nvars=2, nterms=2, deg=2, span=4):
    p = MPoly.zero(nvars, TW)
    for _ in range(rng.randint(0, nterms)):
        exps = tuple(rng.randint(0, deg) for _ in range(nvars))
        p = p + MPoly.mono(nvars, TW, exps, mpq(rng.randint(-span, span)))
    return p


def rand_matrix(rng, n, nvars=2):
    rows = [[rand_poly(rng, nvars) for _ in range(n)] for _ in range(n)]
    return PolyMatrix.from_rows(rows, nvars, TW)


def test_det_empty_and_tiny():
    m0 = PolyMatrix.from_rows([], 2, TW)
    m0 = PolyMatrix(0, 0, 2, TW, [])
    assert det(m0) == MPoly.const(2, TW, 1)
    x = MPoly.var(1, TW, 0)
    m1 = PolyMatrix.from_rows([[x]], 1, TW)
    assert det(m1) == x


def test_det_matches_cofactor_oracle():
    rng = random.Random(5)
    for _ in range(60):
        n = rng.randint(1, 4)
        M = rand_matrix(rng, n)
        assert det(M) == cofactor_det(M)


def test_det_5x5_matches_permutation_expansion():
    rng = random.Random(9)
    for _ in range(5):
        M = rand_matrix(rng, 5, nvars=1)
        d = det(M)
        pt = (mpq(rng.randint(-3, 3), rng.randint(1, 3)),)
        num = [[M.at(i, j).eval(pt).as_rat() for j in range(5)]
               for i in range(5)]
        ref = mpq(0)
        for perm in permutations(range(5)):
            sign = 1
            seen = list(perm)
            # count inversions for the sign
            inv = sum(1 for i in range(5) for j in range(i + 1, 5)
                      if seen[i] > seen[j])
            sign = -1 if inv % 2 else 1
            term = mpq(1)
            for i in range(5):
                term *= num[i][perm[i]]
            ref += sign * term
        assert d.eval(pt).as_rat() == ref


def test_det_multiplicative_on_numeric():
    rng = random.Random(13)
    for _ in range(20):
        n = rng.randint(1, 3)
        A = [[MPoly.const(0, TW, mpq(rng.randint(-4, 4))) for _ in range(n)]
             for _ in range(n)]
        B = [[MPoly.const(0, TW, mpq(rng.randint(-4, 4))) for _ in range(n)]
             for _ in range(n)]
        MA = PolyMatrix.from_rows(A, 0, TW)
        MB = PolyMatrix.from_rows(B, 0, TW)
        C = [[sum((A[i][k] * B[k][j] for k in range(n)),
                  MPoly.zero(0, TW)) for j in range(n)] for i in range(n)]
        MC = PolyMatrix.from_rows(C, 0, TW)
        assert det(MC) == det(MA) * det(MB)


def test_cramer_identity_holds_even_when_singular():
    rng = random.Random(17)
    for _ in range(30):
        n = rng.randint(1, 3)
        M = rand_matrix(rng, n)
        v = [rand_poly(rng) for _ in range(n)]
        w, omega = cramer_solve(M, v)
        lhs = M.matvec(w)
        for i in range(n):
            assert lhs[i] == omega * v[i]


def test_cramer_singular_case_explicit():
    # two equal rows force Omega = 0; the identity must still hold
    x = MPoly.var(2, TW, 0)
    y = MPoly.var(2, TW, 1)
    M = PolyMatrix.from_rows([[x, y], [x, y]], 2, TW)
    v = [MPoly.const(2, TW, 1), y]
    w, omega = cramer_solve(M, v)
    assert omega.is_zero()
    lhs = M.matvec(w)
    for i in range(2):
        assert lhs[i] == omega * v[i]


def test_submatrix():
    rng = random.Random(21)
    M = rand_matrix(rng, 4)
    S = submatrix(M, (1, 3), (0, 2))
    assert S.nrows == 2 and S.ncols == 2
    assert S.at(0, 0) == M.at(1, 0)
    assert S.at(1, 1) == M.at(3, 2)


def test_enum_uw_pin():
    pairs = enum_uw(4, 4, 3)
    assert len(pairs) == 17
    assert all(isinstance(p, IndexPair) for p in pairs)
    sizes = sorted(set(len(p.rows) for p in pairs))
    assert sizes == [3, 4]
    assert all(len(p.rows) == len(p.cols) for p in pairs)
    # deterministic order: repeats agree
    assert pairs == enum_uw(4, 4, 3)


def test_enum_uw_r_zero_includes_empty():
    pairs = enum_uw(2, 3, 0)
    assert pairs[0] == IndexPair((), ())
    # sum over s of C(2,s)*C(3,s) = 1 + 6 + 3 = 10
    assert len(pairs) == 10

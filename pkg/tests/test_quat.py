"""Quaternion arithmetic and the integer matrix routines."""
from itertools import combinations
from math import gcd

import numpy as np
import pytest
from hypothesis import given, strategies as st

from qgrass.quat import (I, J, K, ONE, Quaternion, conj, content, det, hnf, hnf_rows,
                         kernel_saturated, mat_mul, mul, norm, snf, trace)

ints = st.integers(-50, 50)
quats = st.builds(Quaternion, ints, ints, ints, ints)


def as_complex(q):
    """2x2 complex matrix of q: an independent model of quaternion multiplication."""
    a, b, c, d = q
    return np.array([[a + b * 1j, c + d * 1j], [-c + d * 1j, a - b * 1j]])


def from_complex(M):
    return Quaternion(*(int(round(x)) for x in (M[0, 0].real, M[0, 0].imag,
                                                 M[0, 1].real, M[0, 1].imag)))


def test_product_table():
    assert mul(I, J) == K
    assert mul(J, K) == I
    assert mul(K, I) == J
    assert mul(I, I) == -ONE


def test_product_matches_matrix_model():
    p, q = Quaternion(1, 1, 0, 0), Quaternion(0, -1, -1, 0)
    assert mul(p, q) == from_complex(as_complex(p) @ as_complex(q))
    assert mul(p, q) == Quaternion(1, -1, -1, -1)


@given(quats, quats)
def test_product_agrees_with_matrix_model(p, q):
    assert mul(p, q) == from_complex(as_complex(p) @ as_complex(q))


def test_unit_and_small_norms():
    q = Quaternion(3, -1, 4, 1)
    assert mul(q, ONE) == q
    assert conj(Quaternion(1, 1, 1, 1)) == Quaternion(1, -1, -1, -1)
    assert norm(Quaternion(1, 1, 0, 0)) == 2
    assert norm(Quaternion(1, 2, 0, 0)) * norm(Quaternion(0, 0, 1, 3)) == 50


@given(quats, quats)
def test_norm_multiplicative_and_conj_antimultiplicative(p, q):
    assert norm(mul(p, q)) == norm(p) * norm(q)
    assert conj(mul(p, q)) == mul(conj(q), conj(p))


@given(quats)
def test_trace_and_norm_are_scalars(q):
    s = q + conj(q)
    assert s == Quaternion(trace(q), 0, 0, 0)
    assert mul(q, conj(q)) == Quaternion(norm(q), 0, 0, 0)


def test_content():
    assert content((0, 5, -5)) == 5
    assert content((-1, -1, -1)) == 1
    assert content((4, 6, 10)) == 2
    with pytest.raises(ValueError, match="undefined content"):
        content((0, 0, 0))


# ---------------------------------------------------------------------------

def is_row_hnf(H):
    """Row style, positive pivots, entries above each pivot reduced into [0, pivot)."""
    last = -1
    for r, row in enumerate(H):
        nz = [j for j, x in enumerate(row) if x]
        if not nz:
            assert all(not any(x) for x in H[r:])
            return True
        c = nz[0]
        if c <= last or row[c] <= 0:
            return False
        if any(not 0 <= H[i][c] < row[c] for i in range(r)):
            return False
        last = c
    return True


def test_hnf_examples():
    assert hnf(((0, 1), (1, 0)))[0] == ((1, 0), (0, 1))
    assert hnf(((2, 4), (2, 2)))[0] == ((2, 0), (0, 2))
    assert hnf(((2, 3), (1, 2)))[0] == ((1, 0), (0, 1))


small = st.integers(-9, 9)


def matrices(rows, cols):
    return st.lists(st.lists(small, min_size=cols, max_size=cols), min_size=rows, max_size=rows)


@given(st.integers(1, 4).flatmap(lambda m: st.integers(1, 5).flatmap(lambda n: matrices(m, n))))
def test_hnf_is_canonical_and_unimodular(M):
    H, U = hnf(M)
    assert is_row_hnf(H)
    assert mat_mul(U, M) == H
    assert abs(det(U)) == 1
    assert hnf(H)[0] == H


def determinantal_divisors(M):
    """gcds of the k x k minors: the oracle for Smith divisors."""
    m, n = len(M), len(M[0])
    out = []
    for k in range(1, min(m, n) + 1):
        g = 0
        for rs in combinations(range(m), k):
            for cs in combinations(range(n), k):
                g = gcd(g, det([[M[i][j] for j in cs] for i in rs]))
        out.append(g)
    return out


def test_snf_examples():
    assert snf(((2, 0), (0, 4)))[0] == [2, 4]
    assert snf(((2, 1), (0, 2)))[0] == [1, 4]
    assert snf(((5, 0), (0, 10)))[0] == [5, 10]


@given(st.integers(1, 4).flatmap(lambda m: st.integers(1, 4).flatmap(lambda n: matrices(m, n))))
def test_snf_matches_determinantal_divisors(M):
    d, U, V = snf(M)
    assert all(d[i + 1] % d[i] == 0 for i in range(len(d) - 1) if d[i])
    D = [[d[i] if i == j else 0 for j in range(len(M[0]))] for i in range(len(M))]
    assert mat_mul(mat_mul(U, M), V) == tuple(map(tuple, D))
    assert abs(det(U)) == 1 and abs(det(V)) == 1
    prods, p = [], 1
    for x in d:
        p *= x
        prods.append(p)
    assert prods == determinantal_divisors(M)


@given(matrices(3, 3))
def test_det_product_of_divisors(M):
    d, _, _ = snf(M)
    assert abs(det(M)) == d[0] * d[1] * d[2]


def test_kernel_examples():
    assert kernel_saturated(((0, 0, 0, 0),)) == ((1, 0, 0, 0), (0, 1, 0, 0), (0, 0, 1, 0), (0, 0, 0, 1))
    assert kernel_saturated(((2, 0, 0, 0),)) == ((0, 1, 0, 0), (0, 0, 1, 0), (0, 0, 0, 1))
    from qgrass.klein import twisted_commutator_matrix
    assert kernel_saturated(twisted_commutator_matrix((1, 0, 0), (1, 0, 0))) == ((1, 0, 0, 0), (0, 1, 0, 0))


@given(matrices(2, 5))
def test_kernel_is_saturated(M):
    B = kernel_saturated(M)
    for b in B:
        assert all(sum(r[j] * b[j] for j in range(5)) == 0 for r in M)
    # rank: kernel dimension + rank(M) = 5
    rank = len(hnf_rows(M))
    assert len(B) == 5 - rank
    if B:
        # saturated: the maximal minors of B have gcd 1
        assert determinantal_divisors(B)[-1] == 1


@given(matrices(2, 4), st.lists(st.integers(-3, 3), min_size=2, max_size=2))
def test_kernel_contains_every_integral_solution(M, coeffs):
    """Any integral kernel vector is an integral combination of the basis."""
    B = kernel_saturated(M)
    if len(B) < 2:
        return
    x = [coeffs[0] * B[0][j] + coeffs[1] * B[1][j] for j in range(4)]
    if not any(x):
        return
    g = content(x)
    y = [v // g for v in x]
    # y is in the kernel; solving y = s B0 + t B1 over Q must give integers
    H = hnf_rows(list(B) + [y])
    assert H == hnf_rows(B)

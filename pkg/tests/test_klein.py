"""The Klein map, its inverse and the stabilizer checks."""
import random

import pytest
from hypothesis import assume, given, strategies as st

from qgrass.klein import (associated_points, canonical_pair, conjugator,
                          expected_pair, inverse_klein, inverse_klein_kernel, is_pair_primitive,
                          klein_pair, orthogonal_pair, split_case_isogeny_table, twist_check,
                          wedge_from_pair)
from qgrass.planes import enumerate_planes, enumerate_sphere, orthocomplement, plane_from_span, wedge_of
from qgrass.quat import Quaternion, conj, mul

ONE, I, J, K = (Quaternion(*(int(i == k) for i in range(4))) for k in range(4))
PRINTED = [
    ((Quaternion(1, 1, 0, 0), Quaternion(0, 1, 1, 0)), (-1, -1, -1), (-1, -1, 1), 3),
    ((Quaternion(1, 1, 0, 0), Quaternion(0, 0, 1, 1)), (0, 0, -2), (0, -2, 0), 4),
    ((Quaternion(1, 2, 0, 0), Quaternion(0, 0, 1, 3)), (0, 5, -5), (0, -7, -1), 50),
]
vec4 = st.tuples(*[st.integers(-6, 6)] * 4)
LIPSCHITZ = [u.scale(s) for u in (ONE, I, J, K) for s in (1, -1)]


def random_plane(v1, v2):
    assume(any(wedge_of(v1, v2)))
    return plane_from_span(v1, v2)


@pytest.mark.parametrize("basis,a1,a2,D", PRINTED)
def test_printed_associated_points(basis, a1, a2, D):
    k = associated_points(*basis)
    assert (tuple(k.a1), tuple(k.a2)) == (a1, a2)
    assert k.disc == D
    L = plane_from_span(*basis)
    assert klein_pair(L) == canonical_pair(a1, a2)


def test_canonical_sign_puts_first_nonzero_negative():
    assert canonical_pair((1, 1, 1), (1, 1, -1)) == ((-1, -1, -1), (-1, -1, 1))
    assert canonical_pair((0, 0, 0), (0, 2, 0)) == ((0, 0, 0), (0, -2, 0))


def test_inverse_examples():
    assert inverse_klein((1, 0, 0), (1, 0, 0)) == plane_from_span(ONE, I)
    L = plane_from_span(*PRINTED[0][0])
    assert inverse_klein((-1, -1, -1), (-1, -1, 1)) == L
    L4 = inverse_klein((0, 0, -1), (0, -1, 0))
    assert klein_pair(L4) == ((0, 0, -2), (0, -2, 0))
    assert L4.disc == 4


def test_inverse_rejects_bad_input():
    with pytest.raises(ValueError, match="norm"):
        inverse_klein((1, 0, 0), (1, 1, 0))
    with pytest.raises(ValueError, match="pair-primitive"):
        inverse_klein((0, 3, 0), (0, 3, 0))
    with pytest.raises(ValueError):
        inverse_klein((0, 0, 0), (0, 0, 0))


def test_pair_primitivity_examples():
    assert is_pair_primitive((0, 5, -5), (0, -7, -1))
    assert not is_pair_primitive((0, 3, 0), (0, 3, 0))
    assert not is_pair_primitive((2, 0, 0), (2, 0, 0))


def test_wedge_from_pair_examples():
    assert wedge_from_pair((-1, -1, -1), (-1, -1, 1)) == (1, 1, 0, 1, 0, 0)
    assert wedge_of((1, 1, 0, 0), (0, 1, 1, 0)) == (1, 1, 0, 1, 0, 0)
    assert wedge_from_pair((1, 0, 0), (1, 0, 0)) == (-1, 0, 0, 0, 0, 0)
    with pytest.raises(ValueError):
        wedge_from_pair((1, 0, 0), (0, 1, 1))


@given(vec4, vec4)
def test_wedge_from_pair_is_the_basis_wedge(v1, v2):
    assume(any(wedge_of(v1, v2)))
    a1, a2 = associated_points(v1, v2)
    w = wedge_from_pair(a1, a2)
    assert w == wedge_of(v1, v2)
    assert sum(x * x for x in w) == a1.norm()


@given(vec4, vec4)
def test_round_trip_and_pair_invariants(v1, v2):
    L = random_plane(v1, v2)
    k = klein_pair(L)
    assert k.a1.norm() == k.a2.norm() == L.disc == orthocomplement(L).disc
    assert all((x - y) % 2 == 0 for x, y in zip(k.a1, k.a2))
    assert is_pair_primitive(k.a1, k.a2)
    assert inverse_klein(k.a1, k.a2) == L
    assert inverse_klein_kernel(k.a1, k.a2) == L


SPHERES = {D: enumerate_sphere(D) for D in range(1, 150) if enumerate_sphere(D)}
sphere_pairs = st.sampled_from(sorted(SPHERES)).flatmap(
    lambda D: st.tuples(st.sampled_from(SPHERES[D]), st.sampled_from(SPHERES[D])))


@given(sphere_pairs)
def test_inverse_then_klein_gives_expected_pair(pair):
    w1, w2 = pair
    assume(is_pair_primitive(w1, w2))
    L = inverse_klein(w1, w2)
    assert klein_pair(L) == expected_pair(w1, w2)


def test_round_trip_over_small_discriminants():
    for D in range(1, 120):
        for L in enumerate_planes(D):
            k = klein_pair(L)
            assert inverse_klein(*k) == L


def test_orthogonal_pair_examples():
    k = klein_pair(plane_from_span(ONE, I))
    assert orthogonal_pair(k) == klein_pair(plane_from_span(J, K))
    assert orthogonal_pair(canonical_pair((-1, -1, -1), (-1, -1, 1))) == ((-1, -1, -1), (1, 1, -1))


@given(vec4, vec4)
def test_orthogonal_pair_is_the_complement(v1, v2):
    L = random_plane(v1, v2)
    k = klein_pair(L)
    assert orthogonal_pair(orthogonal_pair(k)) == k
    assert klein_pair(orthocomplement(L)) == orthogonal_pair(k)


def rotate(u, a):
    """u a u^-1 for a unit quaternion u, on a pure vector a."""
    q = mul(mul(u, Quaternion(0, *a)), conj(u))
    assert q[0] == 0
    return q[1:]


def test_equivariance_under_integral_units():
    rng = random.Random(7)
    planes = [p for D in (3, 5, 6, 11, 50) for p in enumerate_planes(D)]
    for _ in range(100):
        L = rng.choice(planes)
        alpha, beta = rng.choice(LIPSCHITZ), rng.choice(LIPSCHITZ)
        moved = plane_from_span(*(mul(mul(alpha, Quaternion(*v)), conj(beta)) for v in L.basis))
        a1, a2 = klein_pair(L)
        assert klein_pair(moved) == canonical_pair(rotate(alpha, a1), rotate(beta, a2))


def test_conjugator_examples():
    assert conjugator(plane_from_span(ONE, I)) == ONE
    L = plane_from_span(*PRINTED[0][0])
    g = conjugator(L)
    a1, a2 = klein_pair(L)
    assert mul(g, a1.quaternion()) == mul(a2.quaternion(), g)


@pytest.mark.parametrize("D", [2, 3, 5, 6, 9, 14, 50])
def test_conjugator_identity(D):
    for L in enumerate_planes(D):
        g = conjugator(L)
        a1, a2 = klein_pair(L)
        assert any(g)
        assert mul(g, a1.quaternion()) == mul(a2.quaternion(), g)


def test_twist_examples():
    L = plane_from_span(ONE, I)
    r = twist_check(L, 0.0)
    assert r.residual == 0 and r.ok
    assert twist_check(L, 0.7).ok
    with pytest.raises(ValueError):
        twist_check(L, 0.1, tol=0)


def test_twist_on_many_planes():
    planes = [p for D in (3, 5, 6, 10, 11, 13, 50) for p in enumerate_planes(D)][::7][:50]
    assert len(planes) == 50
    for L in planes:
        for t in range(8):
            r = twist_check(L, 0.4 * t + 0.1)
            assert r.ok, (L, r.residual)


def test_isogeny_table():
    t = split_case_isogeny_table()
    assert t["psi1"] == (1, -1)
    assert t["psi3"] == (2, 0)
    assert tuple(x + y for x, y in zip(t["psi1"], t["psi2"])) == t["psi3"]
    assert tuple(y - x for x, y in zip(t["psi1"], t["psi2"])) == t["psi4"]

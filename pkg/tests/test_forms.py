"""Binary forms: reduction, content, composition, class groups, coherence."""
import math
import random
from itertools import product
from math import gcd, isqrt

import pytest
from hypothesis import given, strategies as st

from qgrass.forms import (BinaryForm, class_group, cm_point, coherence_check, compose,
                          form_content, form_inverse, form_power, ord_p_form, primitivize,
                          principal_form, reduce_gl2, reduce_sl2, reduced_forms)
from qgrass.klein import klein_pair
from qgrass.planes import enumerate_planes, enumerate_sphere, gram_form, ortho_lattice
from qgrass.quat import content, ord_p


def small_values(f, R=12):
    """Values of f on nonzero vectors of a box, with the vectors."""
    return [(f(x, y), (x, y)) for x in range(-R, R + 1) for y in range(-R, R + 1) if x or y]


def successive_minima(f):
    """Brute-force first and second minima: a and c of the reduced form."""
    vals = sorted(small_values(f))
    m1, v1 = vals[0]
    m2 = next(m for m, v in vals if v[0] * v1[1] - v[1] * v1[0] != 0)
    return m1, m2


def represents(h, n):
    """Does the positive form h take the value n? (exact search)"""
    a, b, c = h
    disc = 4 * a * c - b * b
    Y = isqrt(4 * a * n // disc) + 1
    for y in range(-Y, Y + 1):
        # a x^2 + b y x + (c y^2 - n) = 0
        A, B, C = a, b * y, c * y * y - n
        d = B * B - 4 * A * C
        if d < 0:
            continue
        r = isqrt(d)
        if r * r == d and ((-B + r) % (2 * A) == 0 or (-B - r) % (2 * A) == 0):
            return True
    return False


def random_unimodular(rng, steps=6):
    g = ((1, 0), (0, 1))
    for _ in range(steps):
        k = rng.randint(-3, 3)
        e = rng.choice([((1, k), (0, 1)), ((1, 0), (k, 1)), ((0, 1), (1, 0)), ((1, 0), (0, -1))])
        g = tuple(tuple(sum(g[i][t] * e[t][j] for t in range(2)) for j in range(2)) for i in range(2))
    return g


reduced_pd = st.tuples(st.integers(1, 30), st.integers(0, 30), st.integers(1, 60)).filter(
    lambda f: f[1] <= f[0] <= f[2])


def test_reduction_examples():
    assert reduce_gl2((2, 2, 2)) == (2, 2, 2)
    assert reduce_gl2((5, 0, 10)) == (5, 0, 10)
    assert reduce_gl2((1, -1, 1)) == (1, 1, 1)
    with pytest.raises(ValueError):
        reduce_gl2((1, 3, 1))


@given(reduced_pd, st.integers(0, 10 ** 6))
def test_reduce_gl2_is_invariant_under_unimodular_change(f, seed):
    g = random_unimodular(random.Random(seed))
    f = BinaryForm(*f)
    moved = f.act(g)
    assert moved.discriminant == f.discriminant
    assert reduce_gl2(moved) == reduce_gl2(f)
    assert reduce_gl2(reduce_gl2(moved)) == reduce_gl2(moved)


@given(st.tuples(st.integers(1, 40), st.integers(-40, 40), st.integers(1, 40)).filter(
    lambda f: f[1] ** 2 < 4 * f[0] * f[2]))
def test_reduced_form_has_the_successive_minima(f):
    a, b, c = reduce_sl2(f)
    assert abs(b) <= a <= c
    assert (a, c) == successive_minima(BinaryForm(*f))


def test_cm_point_examples():
    f = BinaryForm(2, 2, 3)
    assert cm_point(f) == cm_point(BinaryForm(6, 6, 9))
    z = cm_point((1, 0, 1)).z
    assert abs(z - 1j) < 1e-15


@given(reduced_pd)
def test_cm_points_lie_in_the_fundamental_domain(f):
    p = cm_point(f)
    assert 0 <= p.x <= 0.5
    assert abs(p.z) >= 1 - 1e-12


def test_content_examples():
    assert form_content((2, 2, 2)) == 2
    assert form_content((5, 0, 10)) == 5
    assert form_content((1, 1, 1)) == 1
    assert ord_p_form((5, 0, 10), 5) == 1
    assert primitivize((2, 2, 2)) == (1, 1, 1)


def test_composition_examples():
    e = principal_form(-20)
    assert compose(e, e) == e
    assert compose((2, 2, 3), (2, 2, 3)) == (1, 0, 5)
    for f in reduced_forms(-84):
        assert compose(f, principal_form(-84)) == f
    with pytest.raises(ValueError):
        compose((1, 0, 5), (1, 0, 1))
    with pytest.raises(ValueError):
        compose((2, 0, 10), (1, 0, 5))


@pytest.mark.parametrize("delta", [-20, -56, -84, -104, -140, -260, -3, -23, -47, -71, -231])
def test_composition_multiplies_represented_values(delta):
    forms = reduced_forms(delta)
    for f, g in product(forms, repeat=2):
        h = compose(f, g)
        assert h.discriminant == delta
        for x1, y1, x2, y2 in product(range(-2, 3), repeat=4):
            n = f(x1, y1) * g(x2, y2)
            if n:
                assert represents(h, n), (f, g, h, n)


def class_number_brute(delta, bound=40):
    seen = set()
    for a in range(1, bound + 1):
        for b in range(-bound, bound + 1):
            if (b * b - delta) % (4 * a) == 0:
                c = (b * b - delta) // (4 * a)
                if gcd(gcd(a, b), c) == 1:
                    seen.add(reduce_sl2((a, b, c)))
    return len(seen)


@pytest.mark.parametrize("delta,h", [(-3, 1), (-4, 1), (-20, 2), (-23, 3), (-47, 5),
                                     (-56, 4), (-71, 7), (-84, 4)])
def test_class_numbers(delta, h):
    assert class_group(delta).order == h == class_number_brute(delta)


def test_class_group_errors_and_elements():
    assert class_group(-20).elements == [(1, 0, 5), (2, 2, 3)]
    with pytest.raises(ValueError):
        class_group(-6)
    with pytest.raises(ValueError):
        class_group(5)


@pytest.mark.parametrize("D", range(1, 61))
def test_group_axioms(D):
    G = class_group(-4 * D)
    E = G.elements
    e = G.identity
    for f in E:
        assert compose(f, e) == f
        assert compose(f, form_inverse(f)) == e
        assert form_power(f, G.element_order(f)) == e
        for g in E:
            fg = compose(f, g)
            assert fg in G
            assert fg == compose(g, f)
            for h in E:
                assert compose(fg, h) == compose(f, compose(g, h))


def test_coherence_examples():
    for D in (1, 2):
        r = coherence_check(D)
        assert r.class_number == 1 and r.distinct == 1
    r = coherence_check(5)
    assert r.distinct <= 2 and r.ok
    for D in (3, 4, 9, 18):
        with pytest.raises(ValueError, match="coherence test undefined"):
            coherence_check(D)


@pytest.mark.parametrize("D", [6, 10, 13, 21, 30, 41])
def test_coherence_within_bound(D):
    r = coherence_check(D)
    assert r.skipped == 0
    assert r.ok, (r.c1_values, r.c2_values)


# ---------------------------------------------------------------------------
# Local structure of q_L, on the scalar path

def squarefree(n):
    return all(n % (p * p) for p in range(2, isqrt(n) + 1))


def odd_primes(n):
    return [p for p in range(3, n + 1, 2) if n % p == 0 and all(p % d for d in range(3, isqrt(p) + 1, 2))]


def vec_ord(v, p):
    return min(ord_p(x, p) for x in v if x)


def test_content_dichotomy_and_odd_valuations():
    for D in range(1, 301):
        for L in enumerate_planes(D):
            q = gram_form(L)
            a1, a2 = klein_pair(L)
            c = form_content(q)
            if squarefree(D):
                assert c in (1, 2)
            for p in odd_primes(D):
                assert ord_p(c, p) == max(vec_ord(a1, p), vec_ord(a2, p))
            assert ord_p(c, 2) <= 4


def test_primitive_discriminant_up_to_powers_of_two():
    exps = set()
    for D in range(1, 201):
        for L in enumerate_planes(D):
            a1, a2 = klein_pair(L)
            n1 = a1.norm() // content(a1) ** 2
            n2 = a2.norm() // content(a2) ** 2
            num = -primitivize(gram_form(L)).discriminant * D
            den = n1 * n2
            k = round(math.log2(num / den))
            assert (num == den * 2 ** k) if k >= 0 else (num * 2 ** -k == den)
            exps.add(k)
    assert max(map(abs, exps)) <= 4


def test_parity_of_orthogonal_lattices():
    for d in range(1, 301):
        for v in enumerate_sphere(d):
            if content(v) == 1:
                c = form_content(ortho_lattice(v).gram_form)
                assert c == (2 if d % 4 == 3 else 1), (v, c)

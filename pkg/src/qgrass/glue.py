"""Glue (discriminant) groups of integral lattices and their local types."""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from itertools import product
from math import gcd

from .quat import mat_mul, ord_p, snf, transpose

SEARCH_LIMIT = 10 ** 4


def _lcm(a: int, b: int) -> int:
    return a * b // gcd(a, b)


@dataclass(frozen=True)
class GlueGroup:
    """Lambda^*/Lambda for a Gram matrix G.

    Generators are x_i = V e_i / d_i in lattice coordinates, so the form on
    them is M_ij / (d_i d_j) mod 1 with M = V^T G V.
    """
    divisors: tuple        # nontrivial elementary divisors, d1 | d2 | ...
    pairing: tuple         # M restricted to the nontrivial generators

    @property
    def order(self) -> int:
        n = 1
        for d in self.divisors:
            n *= d
        return n

    def bilinear(self, x, y) -> Fraction:
        """<<x, y>> mod 1 for coefficient vectors x, y on the generators."""
        s = Fraction(0)
        for i, di in enumerate(self.divisors):
            for j, dj in enumerate(self.divisors):
                s += Fraction(x[i] * y[j] * self.pairing[i][j], di * dj)
        return s % 1

    def qvalue(self, x) -> Fraction:
        return self.bilinear(x, x)

    @property
    def frac_form(self) -> tuple:
        """q-values on the generators."""
        n = len(self.divisors)
        return tuple(self.qvalue([int(i == k) for i in range(n)]) for k in range(n))

    def elements(self):
        return product(*(range(d) for d in self.divisors))

    def element_order(self, x) -> int:
        o = 1
        for k, d in zip(x, self.divisors):
            o = _lcm(o, d // gcd(k, d))
        return o

    def element_qvalue_multiset(self, limit: int = SEARCH_LIMIT) -> Counter | None:
        """(order, q-value) counts over all elements, or None above the size gate."""
        if self.order > limit:
            return None
        top = self.divisors[-1] if self.divisors else 1
        den = top * top
        scale = [top // d for d in self.divisors]
        M = [[self.pairing[i][j] * scale[i] * scale[j] for j in range(len(scale))]
             for i in range(len(scale))]
        out = Counter()
        for x in self.elements():
            num = sum(x[i] * x[j] * M[i][j] for i in range(len(x)) for j in range(len(x)))
            out[self.element_order(x), Fraction(num % den, den)] += 1
        return out


def glue_group(gram) -> GlueGroup:
    rows = [list(r) for r in gram]
    n = len(rows)
    if any(len(r) != n for r in rows) or any(rows[i][j] != rows[j][i]
                                             for i in range(n) for j in range(n)):
        raise ValueError("Gram matrix must be square and symmetric")
    if any(not isinstance(x, int) for r in rows for x in r):
        raise ValueError("Gram matrix must be integral")
    divisors, _, V = snf(rows)
    if any(d == 0 for d in divisors):
        raise ValueError("Gram matrix is singular")
    M = mat_mul(mat_mul(transpose(V), rows), V)
    keep = [i for i, d in enumerate(divisors) if d > 1]
    return GlueGroup(tuple(divisors[i] for i in keep),
                     tuple(tuple(M[i][j] for j in keep) for i in keep))


def plane_gram(plane) -> tuple:
    from .quat import dot
    v1, v2 = plane.basis
    g12 = dot(v1, v2)
    return ((dot(v1, v1), g12), (g12, dot(v2, v2)))


def glue_divisors_2x2(g11: int, g12: int, g22: int) -> tuple:
    """Both elementary divisors of a nonsingular symmetric 2x2 Gram matrix."""
    d1 = gcd(gcd(g11, g12), g22)
    return d1, (g11 * g22 - g12 * g12) // d1


# ---------------------------------------------------------------------------
# Local types

def local_type_odd(D: int, a1, a2, p: int) -> tuple:
    """(k, n - k): the p-part of the glue group is Z/p^k x Z/p^(n-k)."""
    if p % 2 == 0:
        raise ValueError("p must be odd")
    if D % p:
        return (0, 0)
    n = ord_p(D, p)
    k = max(min(ord_p(x, p) for x in v if x) for v in (a1, a2))
    return (k, n - k)


def in_disc_set(D: int) -> bool:
    return D >= 1 and D % 16 not in (0, 7, 12, 15)


def local_type_two(D: int) -> tuple:
    """(1, n - 1) with n = ord_2(D), or (0, 0) for odd D."""
    if not in_disc_set(D):
        raise ValueError(f"{D} is not an admissible discriminant")
    if D % 2:
        return (0, 0)
    n = ord_p(D, 2)
    return (1, n - 1)


def _factor(n: int) -> dict:
    out, p = {}, 2
    while p * p <= n:
        while n % p == 0:
            out[p] = out.get(p, 0) + 1
            n //= p
        p += 1
    if n > 1:
        out[n] = out.get(n, 0) + 1
    return out


def predicted_divisors(D: int, a1, a2) -> tuple:
    """Elementary divisors assembled from the local types at every p | D."""
    lo = hi = 1
    for p in _factor(D):
        k, m = local_type_two(D) if p == 2 else local_type_odd(D, a1, a2, p)
        lo *= p ** min(k, m)
        hi *= p ** max(k, m)
    return lo, hi


# ---------------------------------------------------------------------------
# Isomorphism of glue groups with their forms

def _primary_parts(G: GlueGroup) -> dict:
    """p-primary parts as (divisors, generator coefficient vectors)."""
    parts = {}
    for p in sorted(set().union(*(_factor(d) for d in G.divisors)) if G.divisors else ()):
        divs, gens = [], []
        for i, d in enumerate(G.divisors):
            if d % p == 0:
                pk = p ** ord_p(d, p)
                divs.append(pk)
                gens.append(tuple((d // pk) if j == i else 0 for j in range(len(G.divisors))))
        parts[p] = (divs, gens)
    return parts


def _combine(G, coeffs, gens):
    x = [0] * len(G.divisors)
    for c, g in zip(coeffs, gens):
        for i, gi in enumerate(g):
            x[i] += c * gi
    return tuple(xi % d for xi, d in zip(x, G.divisors))


def _part_isomorphic(G1, part1, G2, part2) -> bool:
    divs1, gens1 = part1
    divs2, gens2 = part2
    if sorted(divs1) != sorted(divs2):
        return False
    # candidates: every element of the second part, with its order
    elems2 = [_combine(G2, c, gens2) for c in product(*(range(d) for d in divs2))]
    targets = [G1.bilinear(gi, gj) for gi in gens1 for gj in gens1]
    r = len(gens1)

    def search(chosen):
        k = len(chosen)
        if k == r:
            # images must generate: the map is injective iff orders of
            # all combinations match, checked on the whole part
            return _injective(G2, chosen, divs1)
        for y in elems2:
            if G2.element_order(y) != divs1[k]:
                continue
            ok = all(G2.bilinear(chosen[i], y) == targets[i * r + k] for i in range(k))
            if ok and G2.qvalue(y) == targets[k * r + k]:
                if search(chosen + [y]):
                    return True
        return False

    return search([])


def _injective(G, images, divs) -> bool:
    seen = set()
    for c in product(*(range(d) for d in divs)):
        seen.add(_combine(G, c, images))
    n = 1
    for d in divs:
        n *= d
    return len(seen) == n


def glue_iso_equal(G1: GlueGroup, G2: GlueGroup) -> bool | str:
    """True/False from an exact search; "invariant-level equality only" above the gate."""
    if G1.divisors != G2.divisors:
        return False
    if G1.order > SEARCH_LIMIT:
        # the multiset is an invariant; affordable well past the search gate
        limit = 100 * SEARCH_LIMIT
        if G1.order > limit:
            return "invariant-level equality only"
        same = G1.element_qvalue_multiset(limit) == G2.element_qvalue_multiset(limit)
        return "invariant-level equality only" if same else False
    p1, p2 = _primary_parts(G1), _primary_parts(G2)
    return all(_part_isomorphic(G1, p1[p], G2, p2[p]) for p in p1)


def glue_key_from_gram(gram) -> str:
    G = glue_group(gram)
    ms = G.element_qvalue_multiset()
    divs = "x".join(map(str, G.divisors)) or "1"
    if ms is None:
        body = "q:" + ",".join(str(q) for q in G.frac_form)
    else:
        body = ",".join(f"{o}:{q.numerator}/{q.denominator}*{n}" for (o, q), n in sorted(ms.items()))
    return f"{divs}|{body}"


def glue_type_key(plane) -> str:
    """Deterministic key: divisors plus the sorted (order, q-value) multiset."""
    return glue_key_from_gram(plane_gram(plane))

"""Binary quadratic forms: reduction, CM points, composition, class groups."""
from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from math import gcd, isqrt
from typing import NamedTuple

from .quat import ord_p


class BinaryForm(NamedTuple):
    """The form a x^2 + b x y + c y^2."""
    a: int
    b: int
    c: int

    @property
    def discriminant(self) -> int:
        return self.b * self.b - 4 * self.a * self.c

    def __call__(self, x: int, y: int) -> int:  # type: ignore[override]
        return self.a * x * x + self.b * x * y + self.c * y * y

    def is_positive_definite(self) -> bool:
        return self.a > 0 and self.discriminant < 0

    def opposite(self) -> "BinaryForm":
        return BinaryForm(self.a, -self.b, self.c)

    def act(self, g) -> "BinaryForm":
        """Change of variables (x, y) -> (p x + q y, r x + s y), g = ((p, q), (r, s))."""
        (p, q), (r, s) = g
        a, b, c = self
        return BinaryForm(a * p * p + b * p * r + c * r * r,
                          2 * a * p * q + b * (p * s + q * r) + 2 * c * r * s,
                          a * q * q + b * q * s + c * s * s)


def _check_pd(f) -> None:
    if not (f[0] > 0 and f[1] * f[1] - 4 * f[0] * f[2] < 0):
        raise ValueError(f"form {tuple(f)} is not positive definite")


def reduce_sl2(f) -> BinaryForm:
    """Gauss reduction under SL2(Z): |b| <= a <= c, and b >= 0 when |b| = a or a = c."""
    _check_pd(f)
    a, b, c = f
    while True:
        if b > a or b <= -a:
            # translate x -> x + k y to put b in (-a, a]
            k = (a - b) // (2 * a)
            c = a * k * k + b * k + c
            b = b + 2 * a * k
        if a > c:
            a, b, c = c, -b, a
            continue
        break
    if a == c and b < 0:
        b = -b
    return BinaryForm(a, b, c)


def reduce_gl2(f) -> BinaryForm:
    """Canonical representative of the GL2(Z) class: 0 <= b <= a <= c."""
    a, b, c = reduce_sl2(f)
    return BinaryForm(a, abs(b), c)


def form_content(f) -> int:
    g = gcd(gcd(f[0], f[1]), f[2])
    if g == 0:
        raise ValueError("zero form has no content")
    return g


def ord_p_form(f, p: int) -> int:
    return ord_p(form_content(f), p)


def primitivize(f) -> BinaryForm:
    g = form_content(f)
    return BinaryForm(f[0] // g, f[1] // g, f[2] // g)


@dataclass(frozen=True)
class CMPoint:
    """A point of the modular surface, keyed by its GL2-reduced primitive form."""
    reduced: BinaryForm

    @property
    def z(self) -> complex:
        a, b, c = self.reduced
        return complex(-b / (2 * a), math.sqrt(4 * a * c - b * b) / (2 * a))

    @property
    def x(self) -> float:
        """Real part folded into [0, 1/2]."""
        return abs(self.z.real)

    @property
    def y(self) -> float:
        return self.z.imag


def cm_point(f) -> CMPoint:
    return CMPoint(reduce_gl2(primitivize(f)))


# ---------------------------------------------------------------------------
# Composition and class groups (proper classes)

def _xgcd(a: int, b: int) -> tuple[int, int, int]:
    """(g, x, y) with a x + b y = g = gcd(a, b) >= 0."""
    x0, y0, x1, y1 = 1, 0, 0, 1
    while b:
        q, r = divmod(a, b)
        a, b = b, r
        x0, x1 = x1, x0 - q * x1
        y0, y1 = y1, y0 - q * y1
    if a < 0:
        a, x0, y0 = -a, -x0, -y0
    return a, x0, y0


def principal_form(delta: int) -> BinaryForm:
    if delta % 4 == 0:
        return BinaryForm(1, 0, -delta // 4)
    return BinaryForm(1, 1, (1 - delta) // 4)


def compose(f, g) -> BinaryForm:
    """Dirichlet composition of primitive forms of equal discriminant, reduced."""
    f, g = BinaryForm(*f), BinaryForm(*g)
    delta = f.discriminant
    if g.discriminant != delta:
        raise ValueError("discriminants differ")
    if form_content(f) != 1 or form_content(g) != 1:
        raise ValueError("composition needs primitive forms")
    a1, b1, _ = f
    a2, b2, c2 = g
    s = (b1 + b2) // 2
    # d = gcd(a1, a2, s) = u a1 + v a2 + w s; only v and w are needed
    d0, _, y = _xgcd(a1, a2)
    d, p, w = _xgcd(d0, s)
    v = p * y
    a1d, a2d = a1 // d, a2 // d
    # B solves B = b1 mod 2 a1/d, B = b2 mod 2 a2/d, B^2 = delta mod 4 a1 a2 / d^2
    B = b2 + 2 * a2d * ((v * (b1 - b2) // 2 - w * c2) % a1d)
    A = a1d * a2d
    C = (B * B - delta) // (4 * A)
    return reduce_sl2(BinaryForm(A, B, C))


def form_inverse(f) -> BinaryForm:
    return reduce_sl2(BinaryForm(f[0], -f[1], f[2]))


def form_power(f, k: int) -> BinaryForm:
    f = reduce_sl2(f)
    if k < 0:
        f, k = form_inverse(f), -k
    result = principal_form(f.discriminant)
    while k:
        if k & 1:
            result = compose(result, f)
        f = compose(f, f)
        k >>= 1
    return result


def reduced_forms(delta: int, primitive: bool = True) -> list[BinaryForm]:
    """All SL2-reduced positive definite forms of discriminant delta."""
    if delta >= 0 or delta % 4 not in (0, 1):
        raise ValueError(f"invalid discriminant {delta}")
    out = []
    for a in range(1, isqrt(-delta // 3) + 1):
        for b in range(-a + 1, a + 1):
            if (b - delta) % 2:
                continue
            num = b * b - delta
            if num % (4 * a):
                continue
            c = num // (4 * a)
            if c < a or (c == a and b < 0):
                continue
            if primitive and gcd(gcd(a, b), c) != 1:
                continue
            out.append(BinaryForm(a, b, c))
    return out


@dataclass
class ClassGroup:
    delta: int
    elements: list
    _index: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        self._index = {f: i for i, f in enumerate(self.elements)}

    @property
    def order(self) -> int:
        return len(self.elements)

    @property
    def identity(self) -> BinaryForm:
        return principal_form(self.delta)

    def __contains__(self, f) -> bool:
        return tuple(f) in self._index

    def mul(self, f, g) -> BinaryForm:
        return compose(f, g)

    def inverse(self, f) -> BinaryForm:
        return form_inverse(f)

    def element_order(self, f) -> int:
        e, g, k = self.identity, reduce_sl2(f), 1
        h = g
        while h != e:
            h = compose(h, g)
            k += 1
        return k

    def two_torsion(self) -> list:
        e = self.identity
        return [f for f in self.elements if compose(f, f) == e]


def class_group(delta: int) -> ClassGroup:
    return ClassGroup(delta, reduced_forms(delta))


# ---------------------------------------------------------------------------
# Coherence of the four shapes under the class group action

def _oriented(f, positive: bool) -> BinaryForm:
    return BinaryForm(*f) if positive else BinaryForm(f[0], -f[1], f[2])


def _is_squarefree(n: int) -> bool:
    return all(n % (p * p) for p in range(2, isqrt(n) + 1))


@dataclass
class CoherenceReport:
    D: int
    planes: int
    skipped: int
    class_number: int
    two_torsion: int
    c1_values: Counter
    c2_values: Counter

    @property
    def distinct(self) -> int:
        return max(len(self.c1_values), len(self.c2_values))

    @property
    def bound(self) -> int:
        return 2 * self.two_torsion

    @property
    def ok(self) -> bool:
        return self.distinct <= self.bound


def oriented_classes(plane):
    """Proper classes P1..P4 of q_L, q_Lperp, q_a1, q_a2 (primitive, SL2-reduced).

    Orientation convention: an ordered basis (x, y) of L or of L-perp is
    positive when its associated points are (a1, a2), resp. (a1, -a2), with
    (a1, a2) = klein_pair(L). A basis (x, y) of a1^perp is positive when the
    imaginary part of x conj(y) is a positive multiple of a1, and one of
    a2^perp when that of conj(y) x is a positive multiple of a2.
    """
    from .klein import associated_points, klein_pair
    from .planes import gram_form, orthocomplement, ortho_lattice
    from .quat import Quaternion, conj, dot, mul

    a1, a2 = klein_pair(plane)
    out = []
    for lattice, ref in ((plane, (a1, a2)), (orthocomplement(plane), (a1, -a2))):
        h1, h2 = lattice.basis
        positive = tuple(associated_points(h1, h2).a1) == tuple(ref[0])
        out.append(_oriented(gram_form(lattice), positive))
    for v, left in ((a1, True), (a2, False)):
        o = ortho_lattice(v)
        x, y = (Quaternion(0, *b) for b in o.basis)
        prod = mul(x, conj(y)) if left else mul(conj(y), x)
        out.append(_oriented(o.gram_form, dot(prod[1:], v) > 0))
    return [reduce_sl2(primitivize(f)) for f in out]


def coherence_check(D: int) -> CoherenceReport:
    """Distinct values of P1 P2 P3^-1 and P1 P2^-1 P4^-1 over R_D."""
    from .planes import enumerate_planes
    if not (D % 4 in (1, 2) and _is_squarefree(D)):
        raise ValueError("coherence test undefined for this D")
    planes = enumerate_planes(D)
    c1, c2 = Counter(), Counter()
    skipped = 0
    for plane in planes:
        P1, P2, P3, P4 = oriented_classes(plane)
        if len({P.discriminant for P in (P1, P2, P3, P4)}) > 1:
            skipped += 1
            continue
        c1[compose(compose(P1, P2), form_inverse(P3))] += 1
        c2[compose(compose(P1, form_inverse(P2)), form_inverse(P4))] += 1
    G = class_group(-4 * D)
    return CoherenceReport(D, len(planes), skipped, G.order, len(G.two_torsion()), c1, c2)

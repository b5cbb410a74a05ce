"""Rational planes in Q^4: canonical bases, complements, forms, enumeration."""
from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from math import gcd, isqrt

import numpy as np

from .forms import BinaryForm
from .quat import PureVec3, content, dot, hnf_rows, kernel_saturated

Wedge = tuple  # six ints in the basis 1^i, 1^j, 1^k, i^j, i^k, j^k


def wedge_of(v1, v2) -> Wedge:
    a0, a1, a2, a3 = v1
    b0, b1, b2, b3 = v2
    return (a0 * b1 - a1 * b0, a0 * b2 - a2 * b0, a0 * b3 - a3 * b0,
            a1 * b2 - a2 * b1, a1 * b3 - a3 * b1, a2 * b3 - a3 * b2)


def canonical_sign(vec) -> tuple:
    """Flip the sign so the first nonzero entry is positive."""
    for x in vec:
        if x:
            return tuple(vec) if x > 0 else tuple(-y for y in vec)
    return tuple(vec)


def is_pure_wedge(w) -> bool:
    return w[0] * w[5] - w[1] * w[4] + w[2] * w[3] == 0


@dataclass(frozen=True)
class RationalPlane:
    """A primitive rank-2 sublattice of Z^4, stored by its HNF basis."""
    basis: tuple
    disc: int
    wedge: Wedge

    @classmethod
    def from_basis(cls, rows) -> "RationalPlane":
        """Canonicalize a Z-basis of a saturated rank-2 lattice."""
        h = hnf_rows(rows)
        if len(h) != 2:
            raise ValueError("basis does not have rank 2")
        v1, v2 = h
        g11, g12, g22 = dot(v1, v1), dot(v1, v2), dot(v2, v2)
        return cls(h, g11 * g22 - g12 * g12, canonical_sign(wedge_of(v1, v2)))

    @property
    def rows(self):
        return self.basis


_PAIR_INDEX = {n: {pq: k for k, pq in enumerate(combinations(range(n), 2))} for n in (3, 4)}


def _xgcd(a: int, b: int) -> tuple:
    x0, y0, x1, y1 = 1, 0, 0, 1
    while b:
        q, r = divmod(a, b)
        a, b = b, r
        x0, x1 = x1, x0 - q * x1
        y0, y1 = y1, y0 - q * y1
    return (a, x0, y0) if a >= 0 else (-a, -x0, -y0)


def basis_from_wedge(w, n: int = 4) -> tuple:
    """HNF basis of the saturated rank-2 lattice in Z^n with primitive wedge w.

    Reads pivots and entries straight off the Plucker coordinates; the only
    search is one linear congruence for the entry above the second pivot.
    """
    idx = _PAIR_INDEX[n]

    def p(i, j):
        return w[idx[i, j]] if i < j else -w[idx[j, i]]

    c1 = next(i for i in range(n) if any(p(i, j) for j in range(i + 1, n)))
    row = [p(c1, j) if j > c1 else 0 for j in range(n)]
    c2 = next(j for j in range(c1 + 1, n) if row[j])
    d1 = 0
    for x in row:
        d1 = gcd(d1, x)
    eps = 1 if row[c2] > 0 else -1
    h2 = [eps * x // d1 for x in row]
    d2 = h2[c2]
    rest = [j for j in range(c2 + 1, n)]
    # t = h1[c2] solves t h2[j] = eps p(c2, j) mod d2 for every j > c2
    t = 0
    if d2 > 1:
        g, lam = 0, []
        for j in rest:
            g, x, y = _xgcd(g, h2[j])
            lam = [l * x for l in lam] + [y]
        _, u, _ = _xgcd(g, d2)  # gcd(g, d2) = 1 since h2 is primitive
        t = sum(l * u * eps * p(c2, j) for l, j in zip(lam, rest)) % d2
    h1 = [0] * n
    h1[c1] = d1
    for j in range(c1 + 1, c2):
        h1[j] = eps * p(j, c2) // d2
    h1[c2] = t
    for j in rest:
        h1[j] = (t * h2[j] - eps * p(c2, j)) // d2
    return (tuple(h1), tuple(h2))


def hodge_dual(w) -> Wedge:
    """Wedge of the orthogonal complement (up to sign)."""
    return (w[5], -w[4], w[3], w[2], -w[1], w[0])


def plane_from_wedge(w) -> RationalPlane:
    """The plane whose saturated lattice has the given (not necessarily primitive) wedge."""
    g = content(w)
    w = tuple(x // g for x in w)
    if not is_pure_wedge(w):
        raise ValueError("wedge is not decomposable")
    v1, v2 = basis_from_wedge(w)
    g11, g12, g22 = dot(v1, v1), dot(v1, v2), dot(v2, v2)
    return RationalPlane((v1, v2), g11 * g22 - g12 * g12, canonical_sign(w))


def plane_from_span(v1, v2) -> RationalPlane:
    """The saturated lattice span_Q(v1, v2) intersected with Z^4."""
    if not any(wedge_of(v1, v2)):
        raise ValueError("vectors are linearly dependent")
    perp = kernel_saturated((tuple(v1), tuple(v2)))
    return RationalPlane.from_basis(kernel_saturated(perp))


def discriminant(plane: RationalPlane) -> int:
    return plane.disc


def orthocomplement(plane: RationalPlane) -> RationalPlane:
    return plane_from_wedge(hodge_dual(plane.wedge))


def orthocomplement_kernel(plane: RationalPlane) -> RationalPlane:
    """Same as orthocomplement, through a saturated kernel instead of the dual wedge."""
    return RationalPlane.from_basis(kernel_saturated(plane.basis))


def gram_form(plane: RationalPlane) -> BinaryForm:
    v1, v2 = plane.basis
    return BinaryForm(dot(v1, v1), 2 * dot(v1, v2), dot(v2, v2))


@dataclass(frozen=True)
class OrthoLattice3:
    """v^perp intersected with Z^3, with its Gram form."""
    v: PureVec3
    basis: tuple
    gram_form: BinaryForm


def ortho_lattice(v) -> OrthoLattice3:
    content(v)  # rejects the zero vector
    b1, b2 = kernel_saturated((tuple(v),))
    form = BinaryForm(dot(b1, b1), 2 * dot(b1, b2), dot(b2, b2))
    return OrthoLattice3(PureVec3(*v), (b1, b2), form)


# ---------------------------------------------------------------------------
# Enumeration

def enumerate_sphere(D: int) -> list[PureVec3]:
    """All integer (x, y, z) with x^2 + y^2 + z^2 = D, lexicographically."""
    if D < 1:
        raise ValueError("D must be positive")
    r = isqrt(D)
    out = []
    for x in range(-r, r + 1):
        rx = D - x * x
        ry = isqrt(rx)
        for y in range(-ry, ry + 1):
            rem = rx - y * y
            z = isqrt(rem)
            if z * z == rem:
                if z:
                    out.append(PureVec3(x, y, -z))
                out.append(PureVec3(x, y, z))
    return out


def _sphere_array(D: int) -> np.ndarray:
    pts = enumerate_sphere(D) if D >= 1 else []
    return np.array(pts, dtype=np.int64).reshape(-1, 3)


def _odd_part(a: np.ndarray) -> np.ndarray:
    return a // (a & -a)


def valid_pairs(D: int, with_index: bool = False):
    """Pair classes (v, v') on the sphere of radius sqrt(D) that correspond to planes.

    Returns an (N, 2, 3) int64 array of pairs congruent mod 2 and
    pair-primitive; v has its first nonzero coordinate positive, so each class
    up to simultaneous sign appears once. With with_index, also returns the
    sphere array S and row indices (i, j) into it with pairs = (S[i], S[j]).
    """
    S = _sphere_array(D)
    if len(S) == 0:
        empty = np.zeros((0, 2, 3), dtype=np.int64)
        z = np.zeros(0, dtype=np.int64)
        return (empty, S, z, z) if with_index else empty
    first = np.where(S[:, 0] != 0, S[:, 0], np.where(S[:, 1] != 0, S[:, 1], S[:, 2]))
    pos = np.nonzero(first > 0)[0]
    P = S[pos]
    c = np.gcd(np.gcd(S[:, 0], S[:, 1]), S[:, 2])
    cp = c[pos]
    plus = P[:, None, :] + S[None, :, :]
    minus = P[:, None, :] - S[None, :, :]
    congruent = np.all(minus % 2 == 0, axis=2)
    odd_ok = _odd_part(np.gcd.outer(cp, c)) == 1
    four = np.all(plus % 4 == 0, axis=2) & np.all(minus % 4 == 0, axis=2)
    i, j = np.nonzero(congruent & odd_ok & ~four)
    pairs = np.stack([P[i], S[j]], axis=1)
    return (pairs, S, pos[i], j) if with_index else pairs


def noncongruent_pairs(D4: int) -> np.ndarray:
    """Pair classes (w, w') on sphere D4 with w != w' mod 2 and no common odd factor."""
    S = _sphere_array(D4)
    if len(S) == 0:
        return np.zeros((0, 2, 3), dtype=np.int64)
    first = np.where(S[:, 0] != 0, S[:, 0], np.where(S[:, 1] != 0, S[:, 1], S[:, 2]))
    P = S[first > 0]
    c = np.gcd.reduce(np.abs(S), axis=1)
    minus = P[:, None, :] - S[None, :, :]
    incongruent = np.any(minus % 2 != 0, axis=2)
    odd_ok = _odd_part(np.gcd.outer(c[first > 0], c)) == 1
    i, j = np.nonzero(incongruent & odd_ok)
    return np.stack([P[i], S[j]], axis=1)


def count_planes(D: int) -> int:
    """|R_D| from the pair side of the Klein correspondence."""
    return len(valid_pairs(D))


def _pairs_to_planes(pairs) -> dict:
    from .klein import inverse_klein
    out = {}
    for v, w in pairs.tolist():
        plane = inverse_klein(PureVec3(*v), PureVec3(*w))
        out[plane.basis] = plane
    return out


def enumerate_planes(D: int, check_branches: bool = True) -> list[RationalPlane]:
    """R_D, sorted by canonical basis.

    When 4 | D the pairs on sphere D/4 that are not congruent mod 2 give a
    second construction; with check_branches it is run and required to give
    the same set as the main one (every vector on sphere D is then even, so
    both branches describe the same planes).
    """
    found = _pairs_to_planes(valid_pairs(D))
    if check_branches and D % 4 == 0:
        other = _pairs_to_planes(noncongruent_pairs(D // 4))
        if other.keys() != found.keys():
            raise AssertionError(f"4|D branches disagree for D={D}")
    return [found[k] for k in sorted(found)]


def enumerate_planes_wedge_oracle(D: int) -> tuple[int, set]:
    """Brute-force R_D from primitive pure wedges of squared norm D.

    Splits w = (u, u') with u = (w01, w02, w03) and u' = (w23, -w13, w12):
    purity says u . u' = 0 and the norm is |u|^2 + |u'|^2.
    """
    found = set()
    spheres = {s: _sphere_array(s) for s in range(0, D + 1)}
    spheres[0] = np.zeros((1, 3), dtype=np.int64)
    for s in range(0, D + 1):
        U, V = spheres[s], spheres[D - s]
        if len(U) == 0 or len(V) == 0:
            continue
        i, j = np.nonzero(U @ V.T == 0)
        for u, v in zip(U[i].tolist(), V[j].tolist()):
            w = (u[0], u[1], u[2], v[2], -v[1], v[0])
            g = 0
            for x in w:
                g = gcd(g, x)
            if g == 1:
                found.add(canonical_sign(w))
    return len(found), found

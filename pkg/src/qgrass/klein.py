"""The Klein map between rational planes and pairs of sphere points."""
from __future__ import annotations

import math
from typing import NamedTuple

import numpy as np

from .planes import RationalPlane, orthocomplement, plane_from_wedge, wedge_of
from .quat import PureVec3, Quaternion, conj, content, kernel_saturated, mul, odd_part


class KleinPair(NamedTuple):
    """Associated points (a1, a2), stored up to a simultaneous sign change."""
    a1: PureVec3
    a2: PureVec3

    @property
    def disc(self) -> int:
        return self.a1.norm()


def canonical_pair(a1, a2) -> KleinPair:
    """Pick the lexicographically smaller of +-(a1, a2): first nonzero entry negative."""
    for x in tuple(a1) + tuple(a2):
        if x:
            if x > 0:
                a1, a2 = (-y for y in a1), (-y for y in a2)
            break
    return KleinPair(PureVec3(*a1), PureVec3(*a2))


def associated_points(v1, v2) -> KleinPair:
    """(a1, a2) from an ordered basis, without sign normalization.

    a1 is the imaginary part of v1 conj(v2) and a2 that of conj(v2) v1; the
    real parts are half-traces, integral for integer input.
    """
    c2 = conj(v2)
    p = mul(v1, c2)
    q = mul(c2, v1)
    return KleinPair(PureVec3(p[1], p[2], p[3]), PureVec3(q[1], q[2], q[3]))


def klein_pair(plane: RationalPlane) -> KleinPair:
    v1, v2 = plane.basis
    return canonical_pair(*associated_points(v1, v2))


def twisted_commutator_matrix(w1, w2) -> tuple:
    """4x4 matrix of x -> w1 x - x w2 on coordinates (x0, x1, x2, x3)."""
    q1, q2 = Quaternion(0, *w1), Quaternion(0, *w2)
    cols = []
    for k in range(4):
        e = Quaternion(*(int(i == k) for i in range(4)))
        l, r = mul(q1, e), mul(e, q2)
        cols.append([l[i] - r[i] for i in range(4)])
    return tuple(tuple(cols[k][i] for k in range(4)) for i in range(4))


def is_pair_primitive(w1, w2) -> bool:
    g = content(tuple(w1) + tuple(w2))
    if odd_part(g) != 1:
        return False
    return not all((x + y) % 4 == 0 and (x - y) % 4 == 0 for x, y in zip(w1, w2))


_UNITS = tuple(Quaternion(*(int(i == k) for i in range(4))) for k in range(4))


def _check_input(w1, w2) -> int:
    n = PureVec3(*w1).norm()
    if n != PureVec3(*w2).norm():
        raise ValueError("points have different norms")
    if n == 0:
        raise ValueError("points must be nonzero")
    if not is_pair_primitive(w1, w2):
        raise ValueError("pair is not pair-primitive")
    return n


def inverse_klein(w1, w2) -> RationalPlane:
    """The plane {x : w1 x = x w2}, as a saturated lattice.

    y -> N y - w1 y w2 maps Q^4 onto that plane (N the common norm), so the
    images of the unit quaternions span it; the primitive wedge of two
    independent images determines the saturated lattice.
    """
    n = _check_input(w1, w2)
    q1, q2 = Quaternion(0, *w1), Quaternion(0, *w2)
    images = []
    for e in _UNITS:
        t = mul(mul(q1, e), q2)
        x = (n * e[0] - t[0], n * e[1] - t[1], n * e[2] - t[2], n * e[3] - t[3])
        for y in images:
            w = wedge_of(y, x)
            if any(w):
                return plane_from_wedge(w)
        if any(x):
            images.append(x)
    raise AssertionError("projector images do not span a plane")


def inverse_klein_kernel(w1, w2) -> RationalPlane:
    """inverse_klein computed as a saturated integer kernel (slower, independent)."""
    _check_input(w1, w2)
    return RationalPlane.from_basis(kernel_saturated(twisted_commutator_matrix(w1, w2)))


def expected_pair(w1, w2) -> KleinPair:
    """What klein_pair(inverse_klein(w1, w2)) must return."""
    if all((x - y) % 2 == 0 for x, y in zip(w1, w2)):
        return canonical_pair(w1, w2)
    return canonical_pair(PureVec3(*w1).scale(2), PureVec3(*w2).scale(2))


def wedge_from_pair(a1, a2) -> tuple:
    """The wedge v1 ^ v2 of the plane with associated points (a1, a2)."""
    if any((x - y) % 2 for x, y in zip(a1, a2)):
        raise ValueError("associated points must be congruent mod 2")
    s = [x + y for x, y in zip(a1, a2)]
    d = [y - x for x, y in zip(a1, a2)]
    return (-s[0] // 2, -s[1] // 2, -s[2] // 2, d[2] // 2, -d[1] // 2, d[0] // 2)


def orthogonal_pair(k: KleinPair) -> KleinPair:
    return canonical_pair(k.a1, -PureVec3(*k.a2))


def conjugator(plane: RationalPlane) -> Quaternion:
    """Integral g with g a1 = a2 g for the plane's associated points."""
    a1, a2 = klein_pair(plane)
    q1, q2 = a1.quaternion(), a2.quaternion()
    v1, v2 = (Quaternion(*v) for v in plane.basis)
    for x in (v1, v2, v1 + v2, v1 - v2):
        if mul(x, q2) == mul(q1, x) and any(x):
            return conj(x)
    raise AssertionError("no conjugator among small plane elements")


# ---------------------------------------------------------------------------
# Pointwise stabilizers, checked numerically

def _qmul(p, q) -> np.ndarray:
    a0, a1, a2, a3 = p
    b0, b1, b2, b3 = q
    return np.array([
        a0 * b0 - a1 * b1 - a2 * b2 - a3 * b3,
        a0 * b1 + a1 * b0 + a2 * b3 - a3 * b2,
        a0 * b2 - a1 * b3 + a2 * b0 + a3 * b1,
        a0 * b3 + a1 * b2 - a2 * b1 + a3 * b0,
    ])


def _qinv(q) -> np.ndarray:
    q = np.asarray(q, dtype=float)
    return np.array([q[0], -q[1], -q[2], -q[3]]) / float(q @ q)


class TwistReport(NamedTuple):
    plane: RationalPlane
    theta: float
    residual: float
    ok: bool


def twist_check(plane: RationalPlane, theta: float, tol: float = 1e-9) -> TwistReport:
    """Check that (h, g h g^-1) fixes L and (h, g h^-1 g^-1) fixes L-perp.

    h = cos(theta) + sin(theta) a1 / sqrt(D) and (alpha, beta) . x = alpha x beta^-1.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    a1, _ = klein_pair(plane)
    s = math.sin(theta) / math.sqrt(plane.disc)
    h = np.array([math.cos(theta), a1[0] * s, a1[1] * s, a1[2] * s])
    g = np.array(conjugator(plane), dtype=float)
    ginv = _qinv(g)
    beta_l = _qmul(_qmul(g, h), ginv)
    beta_perp = _qmul(_qmul(g, _qinv(h)), ginv)
    residual = 0.0
    for v in plane.basis:
        v = np.array(v, dtype=float)
        residual = max(residual, float(np.linalg.norm(_qmul(_qmul(h, v), _qinv(beta_l)) - v)))
    for w in orthocomplement(plane).basis:
        w = np.array(w, dtype=float)
        residual = max(residual, float(np.linalg.norm(_qmul(_qmul(h, w), _qinv(beta_perp)) - w)))
    return TwistReport(plane, theta, residual, residual <= tol)


def split_case_isogeny_table() -> dict:
    """Exponents (of s, of t) by which the four accidental maps act on a split torus."""
    return {"psi1": (1, -1), "psi2": (1, 1), "psi3": (2, 0), "psi4": (0, 2)}


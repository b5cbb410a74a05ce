"""Vectorized int64 twins of the per-plane routines, for whole-R_D sweeps.

Everything here mirrors a scalar function elsewhere in the package and is
tested against it. Entries stay far below 2^31 for D <= 10^5, so int64
arithmetic is exact.
"""
from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .planes import noncongruent_pairs, valid_pairs

_PAIRS = {n: list(combinations(range(n), 2)) for n in (3, 4)}


def _first_nonzero(X: np.ndarray) -> np.ndarray:
    idx = np.argmax(X != 0, axis=1)
    return X[np.arange(len(X)), idx]


def canonical_sign_rows(X: np.ndarray) -> np.ndarray:
    s = np.sign(_first_nonzero(X))
    return X * np.where(s == 0, 1, s)[:, None]


def negative_first_rows(X: np.ndarray) -> np.ndarray:
    """Sign convention of KleinPair: first nonzero entry negative."""
    return -canonical_sign_rows(X)


def gcd_rows(X: np.ndarray) -> np.ndarray:
    g = np.abs(X[:, 0])
    for k in range(1, X.shape[1]):
        g = np.gcd(g, X[:, k])
    return g


def xgcd_rows(a: np.ndarray, b: np.ndarray) -> tuple:
    """Elementwise (g, x, y) with a x + b y = g = gcd(a, b) >= 0."""
    x0, y0 = np.ones_like(a), np.zeros_like(a)
    x1, y1 = np.zeros_like(a), np.ones_like(a)
    a, b = a.copy(), b.copy()
    live = b != 0
    while live.any():
        q = np.where(live, a // np.where(live, b, 1), 0)
        a, b = np.where(live, b, a), np.where(live, a - q * b, b)
        x0, x1 = np.where(live, x1, x0), np.where(live, x0 - q * x1, x1)
        y0, y1 = np.where(live, y1, y0), np.where(live, y0 - q * y1, y1)
        live = b != 0
    neg = a < 0
    return np.abs(a), np.where(neg, -x0, x0), np.where(neg, -y0, y0)


def wedges_from_pairs(A1: np.ndarray, A2: np.ndarray) -> np.ndarray:
    s = A1 + A2
    d = A2 - A1
    return np.stack([-s[:, 0] // 2, -s[:, 1] // 2, -s[:, 2] // 2,
                     d[:, 2] // 2, -d[:, 1] // 2, d[:, 0] // 2], axis=1)


def hodge_dual_rows(W: np.ndarray) -> np.ndarray:
    return np.stack([W[:, 5], -W[:, 4], W[:, 3], W[:, 2], -W[:, 1], W[:, 0]], axis=1)


def bases_from_wedges(W: np.ndarray, n: int = 4) -> np.ndarray:
    """HNF bases (N, 2, n) of the saturated lattices with primitive wedges W."""
    N = len(W)
    pairs = _PAIRS[n]
    P = np.zeros((N, n, n), dtype=np.int64)
    for k, (i, j) in enumerate(pairs):
        P[:, i, j] = W[:, k]
        P[:, j, i] = -W[:, k]
    upper = np.triu(np.ones((n, n), dtype=bool), 1)
    c1 = np.argmax(np.any((P != 0) & upper, axis=2), axis=1)
    rows = P[np.arange(N), c1]
    rows = np.where(np.arange(n)[None, :] > c1[:, None], rows, 0)
    c2 = np.argmax(rows != 0, axis=1)
    d1 = gcd_rows(rows)
    lead = rows[np.arange(N), c2]
    eps = np.where(lead > 0, 1, -1)
    H2 = eps[:, None] * rows // d1[:, None]
    d2 = H2[np.arange(N), c2]
    # P[c2, j] for every j, signed
    Pc2 = eps[:, None] * P[np.arange(N), c2]
    after = np.arange(n)[None, :] > c2[:, None]
    # t = h1[c2] solves t h2[j] = p(c2, j) mod d2 for j > c2: combine the
    # h2[j] (j > c2) into 1 mod d2, then t = sum lam_j p(c2, j)
    g = np.zeros(N, dtype=np.int64)
    lam = np.zeros((N, n), dtype=np.int64)
    for j in range(1, n):
        use = after[:, j]
        gj, x, y = xgcd_rows(g, np.where(use, H2[:, j], 0))
        lam = np.where(use[:, None], lam * x[:, None], lam)
        lam[:, j] = np.where(use, y, 0)
        g = np.where(use, gj, g)
    _, u, _ = xgcd_rows(g, d2)
    t = (np.sum(lam * Pc2, axis=1) * u) % d2
    if not np.all(~after | ((t[:, None] * H2 - Pc2) % d2[:, None] == 0)):
        raise AssertionError("no HNF entry solves the congruence; wedge not primitive?")
    H1 = np.zeros((N, n), dtype=np.int64)
    cols = np.arange(n)[None, :]
    H1 = np.where(cols == c1[:, None], d1[:, None], H1)
    between = (cols > c1[:, None]) & (cols < c2[:, None])
    # eps p(j, c2) / d2 for c1 < j < c2
    Pj_c2 = eps[:, None] * P[np.arange(N)[:, None], np.arange(n)[None, :], c2[:, None]]
    H1 = np.where(between, Pj_c2 // d2[:, None], H1)
    H1 = np.where(cols == c2[:, None], t[:, None], H1)
    H1 = np.where(after, (t[:, None] * H2 - Pc2) // d2[:, None], H1)
    return np.stack([H1, H2], axis=1)


def gram_forms(B: np.ndarray) -> np.ndarray:
    v1, v2 = B[:, 0], B[:, 1]
    return np.stack([np.einsum("ij,ij->i", v1, v1),
                     2 * np.einsum("ij,ij->i", v1, v2),
                     np.einsum("ij,ij->i", v2, v2)], axis=1)


def _qmul(p: np.ndarray, q: np.ndarray) -> np.ndarray:
    a0, a1, a2, a3 = p.T
    b0, b1, b2, b3 = q.T
    return np.stack([a0 * b0 - a1 * b1 - a2 * b2 - a3 * b3,
                     a0 * b1 + a1 * b0 + a2 * b3 - a3 * b2,
                     a0 * b2 - a1 * b3 + a2 * b0 + a3 * b1,
                     a0 * b3 + a1 * b2 - a2 * b1 + a3 * b0], axis=1)


def klein_pairs(B: np.ndarray) -> np.ndarray:
    """Sign-canonical associated points (N, 2, 3) of bases (N, 2, 4)."""
    v1, v2 = B[:, 0], B[:, 1]
    c2 = v2 * np.array([1, -1, -1, -1])
    both = np.concatenate([_qmul(v1, c2)[:, 1:], _qmul(c2, v1)[:, 1:]], axis=1)
    return negative_first_rows(both).reshape(-1, 2, 3)


def ortho_forms(V: np.ndarray) -> np.ndarray:
    """Gram forms of v^perp in Z^3 for each row v (HNF basis).

    Repeated rows are common (each sphere point sits in many pairs), so the
    work is done once per distinct row.
    """
    if len(V) == 0:
        return np.zeros((0, 3), dtype=np.int64)
    U, inv = np.unique(V, axis=0, return_inverse=True)
    return _ortho_forms_distinct(U)[inv.reshape(-1)]


def _ortho_forms_distinct(V: np.ndarray) -> np.ndarray:
    g = gcd_rows(V)
    Vt = V // g[:, None]
    # wedge of v^perp in e0^e1, e0^e2, e1^e2 is (v2, -v1, v0) up to sign
    W = np.stack([Vt[:, 2], -Vt[:, 1], Vt[:, 0]], axis=1)
    return gram_forms(bases_from_wedges(W, 3))


def form_contents(F: np.ndarray) -> np.ndarray:
    return gcd_rows(F)


def reduce_gl2_rows(F: np.ndarray) -> np.ndarray:
    """GL2-reduced forms 0 <= b <= a <= c, row by row."""
    a, b, c = (F[:, k].copy() for k in range(3))
    while True:
        k = np.floor_divide(a - b, 2 * a)
        c = a * k * k + b * k + c
        b = b + 2 * a * k
        swap = a > c
        if not swap.any():
            break
        a, c = np.where(swap, c, a), np.where(swap, a, c)
        b = np.where(swap, -b, b)
    return np.stack([a, np.abs(b), c], axis=1)


def primitive_rows(F: np.ndarray) -> np.ndarray:
    return F // gcd_rows(F)[:, None]


def ord_p_rows(X: np.ndarray, p: int) -> np.ndarray:
    """p-adic valuation of each nonzero entry of an int array."""
    X = np.abs(X)
    k = np.zeros(X.shape, dtype=np.int64)
    m = (X % p == 0) & (X != 0)
    while m.any():
        X = np.where(m, X // p, X)
        k += m
        m = (X % p == 0) & (X != 0)
    return k


@dataclass
class PlaneBatch:
    """All of R_D as arrays: associated points, wedges and HNF bases."""
    D: int
    pairs: np.ndarray     # (N, 2, 3) associated points, KleinPair sign convention
    wedges: np.ndarray    # (N, 6) primitive, sign-canonical
    bases: np.ndarray     # (N, 2, 4) HNF
    sphere: np.ndarray | None = None   # points on sphere D
    index: np.ndarray | None = None    # (N, 2): pairs = +-sphere[index]

    def __len__(self):
        return len(self.wedges)

    @property
    def gram(self) -> np.ndarray:
        return gram_forms(self.bases)

    def perp_bases(self) -> np.ndarray:
        return bases_from_wedges(hodge_dual_rows(self.wedges))


def plane_batch(D: int) -> PlaneBatch:
    """R_D from the pair side: congruent pair-primitive pairs on sphere D."""
    pairs, S, i, j = valid_pairs(D, with_index=True)
    index = np.stack([i, j], axis=1)
    if len(pairs) == 0:
        z = np.zeros((0, 6), dtype=np.int64)
        return PlaneBatch(D, pairs, z, np.zeros((0, 2, 4), dtype=np.int64), S, index)
    W = wedges_from_pairs(pairs[:, 0], pairs[:, 1])
    W = canonical_sign_rows(W)
    order = np.lexsort(W.T[::-1])
    W, pairs, index = W[order], pairs[order], index[order]
    flat = negative_first_rows(pairs.reshape(-1, 6))
    return PlaneBatch(D, flat.reshape(-1, 2, 3), W, bases_from_wedges(W), S, index)


def noncongruent_batch_wedges(D: int) -> np.ndarray:
    """Wedges of the planes built from non-congruent pairs on sphere D/4 (4 | D)."""
    pairs = noncongruent_pairs(D // 4) * 2
    if len(pairs) == 0:
        return np.zeros((0, 6), dtype=np.int64)
    W = canonical_sign_rows(wedges_from_pairs(pairs[:, 0], pairs[:, 1]))
    return W[np.lexsort(W.T[::-1])]


def predicted_divisors_rows(D: int, A1: np.ndarray, A2: np.ndarray) -> np.ndarray:
    """Row-wise glue.predicted_divisors: (N, 2) elementary divisors from local types."""
    from .glue import _factor, local_type_two
    N = len(A1)
    lo = np.ones(N, dtype=np.int64)
    hi = np.ones(N, dtype=np.int64)
    for p, n in _factor(D).items():
        if p == 2:
            k, m = local_type_two(D)
            lo *= p ** min(k, m)
            hi *= p ** max(k, m)
            continue
        # ord_p of a vector = min over its nonzero coordinates
        big = np.int64(1 << 40)
        k = np.zeros(N, dtype=np.int64)
        for A in (A1, A2):
            o = np.where(A != 0, ord_p_rows(A, p), big).min(axis=1)
            k = np.maximum(k, o)
        m = n - k
        lo *= p ** np.minimum(k, m)
        hi *= p ** np.maximum(k, m)
    return np.stack([lo, hi], axis=1)

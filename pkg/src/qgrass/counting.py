"""Exact counts: sphere points, finite-field quadric points, congruence fibers."""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import isqrt

import numpy as np

from .planes import enumerate_sphere
from .quat import content


@dataclass(frozen=True)
class CountRecord:
    key: tuple
    counted: int
    formula: int | None

    @property
    def match(self) -> bool | None:
        return None if self.formula is None else self.counted == self.formula


def r3(D: int) -> int:
    return len(enumerate_sphere(D))


def r3_prim(D: int) -> int:
    return sum(1 for v in enumerate_sphere(D) if content(v) == 1)


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    return all(n % d for d in range(2, isqrt(n) + 1))


def legendre(a: int, p: int) -> int:
    if p % 2 == 0 or not is_prime(p):
        raise ValueError(f"{p} is not an odd prime")
    r = pow(a % p, (p - 1) // 2, p)
    return -1 if r == p - 1 else r


def squarefree_decomposition(D: int) -> tuple[int, int]:
    """(D', f) with D = D' f^2 and D' square-free."""
    f = 1
    k = 2
    while k * k <= D:
        while D % (k * k) == 0:
            D //= k * k
            f *= k
        k += 1
    return D, f


def r3_prim_formula(D: int, sign: int = 1) -> int:
    """r3(D') f prod_{odd p | f} (1 - (sign D' / p) / p).

    sign=1 is the product formula as usually quoted; sign=-1 uses the
    character of Q(sqrt(-D')), which is the one that matches brute force for
    odd f.
    """
    Dp, f = squarefree_decomposition(D)
    value = Fraction(r3(Dp) * f)
    m, p = f, 3
    while m % 2 == 0:
        m //= 2
    while m > 1:
        if m % p == 0:
            value *= 1 - Fraction(legendre(sign * Dp, p), p)
            while m % p == 0:
                m //= p
        p += 2
    assert value.denominator == 1
    return int(value)


def r3_prim_report(D_max: int, sign: int = 1) -> list[CountRecord]:
    return [CountRecord((D,), r3_prim(D), r3_prim_formula(D, sign)) for D in range(1, D_max + 1)]


# ---------------------------------------------------------------------------
# Finite fields

def rp_alpha(p: int, alpha: int, method: str = "formula") -> int:
    """#{v in F_p^3 : v1^2 + v2^2 + v3^2 = alpha}."""
    if p % 2 == 0 or not is_prime(p):
        raise ValueError(f"{p} is not an odd prime")
    alpha %= p
    if method == "formula":
        if alpha == 0:
            return p * p
        return p * p + p * legendre(-alpha, p)
    if method == "brute":
        sq = np.arange(p) ** 2 % p
        total = (sq[:, None, None] + sq[None, :, None] + sq[None, None, :]) % p
        return int(np.count_nonzero(total == alpha))
    raise ValueError(f"unknown method {method!r}")


W_COUNT_MAX_P = 7


def _quadric_points(p: int) -> tuple[np.ndarray, np.ndarray]:
    """disc mod p of every nonzero wedge-quadric point over F_p, and a mask."""
    grid = np.indices((p,) * 6, dtype=np.int64).reshape(6, -1)
    w = grid
    on = (w[0] * w[5] - w[1] * w[4] + w[2] * w[3]) % p == 0
    nonzero = np.any(w != 0, axis=0)
    keep = on & nonzero
    disc = (w[:, keep] ** 2).sum(axis=0) % p
    return disc, w[:, keep]


def w_count_mod_p(p: int, alpha: int, allow_larger: bool = False) -> int:
    """Brute-force count of nonzero quadric points over F_p with disc alpha."""
    if p > W_COUNT_MAX_P and not (allow_larger and p <= 11):
        raise ValueError(f"p={p} exceeds the p^6 enumeration budget (p <= {W_COUNT_MAX_P};"
                         " p = 11 needs allow_larger)")
    disc, _ = _quadric_points(p)
    return int(np.count_nonzero(disc == alpha % p))


def w_count_formula(p: int, alpha: int) -> int:
    r = rp_alpha(p, alpha)
    return r * r - 1 if alpha % p == 0 else r * r


def square_fraction(p: int) -> Fraction:
    """Share of W_prim(F_p) whose -disc is a nonzero square."""
    disc, _ = _quadric_points(p)
    counts = np.bincount(disc, minlength=p)
    good = sum(int(counts[a]) for a in range(1, p) if legendre(-a, p) == 1)
    return Fraction(good, int(counts.sum()))


def _odd_squarefree_primes(N: int) -> list[int]:
    ps, m, p = [], N, 3
    if N % 2 == 0:
        raise ValueError("N must be odd")
    while m > 1:
        if m % p == 0:
            m //= p
            if m % p == 0:
                raise ValueError("N must be square-free")
            ps.append(p)
        p += 2
    return ps


def bad_class_density(N: int) -> tuple[Fraction, Fraction]:
    """(density, m (2/3)^m): share of W_prim(Z/N) whose -disc is a nonzero
    square modulo at most one prime divisor of N."""
    if N > 3 * 5 * 7:
        raise ValueError("N exceeds the exact enumeration budget (N <= 105)")
    ps = _odd_squarefree_primes(N)
    s = [square_fraction(p) for p in ps]
    n = [1 - x for x in s]
    none = Fraction(1)
    for x in n:
        none *= x
    one = Fraction(0)
    for k in range(len(ps)):
        term = s[k]
        for j in range(len(ps)):
            if j != k:
                term *= n[j]
        one += term
    m = len(ps)
    return none + one, m * Fraction(2, 3) ** m


# ---------------------------------------------------------------------------
# Congruence fibers of the wedge variety

def w_prim_size(N: int) -> int:
    size = 1
    for p in _odd_squarefree_primes(N):
        disc, _ = _quadric_points(p)
        size *= len(disc)
    return size


@dataclass
class FiberSeries:
    N: int
    residue: tuple
    checkpoints: list
    counts: list
    predicted: list

    @property
    def ratios(self) -> list:
        return [c / p if p else float("nan") for c, p in zip(self.counts, self.predicted)]


def fiber_count(N: int, residue, D_max: int, step: int = 100) -> FiberSeries:
    """Signed primitive wedges of norm^2 < X that are = residue mod N, for X up to D_max."""
    from .batch import plane_batch
    if N > 15 or D_max > 2000:
        raise ValueError("fiber_count is limited to N <= 15 and D_max <= 2000")
    ps = _odd_squarefree_primes(N)
    a = np.array(residue, dtype=np.int64) % N
    for p in ps:
        ap = a % p
        if not ap.any():
            raise ValueError("residue is not primitive mod N")
    if (a[0] * a[5] - a[1] * a[4] + a[2] * a[3]) % N:
        raise ValueError("residue is off the quadric mod N")
    size = w_prim_size(N)
    checkpoints = list(range(step, D_max + 1, step))
    counts, predicted = [], []
    hits = total = 0
    nxt = 0
    for D in range(1, D_max):
        W = plane_batch(D).wedges
        both = np.concatenate([W, -W]) % N
        hits += int(np.count_nonzero(np.all(both == a, axis=1)))
        total += len(both)
        while nxt < len(checkpoints) and D + 1 == checkpoints[nxt]:
            counts.append(hits)
            predicted.append(total / size)
            nxt += 1
    return FiberSeries(N, tuple(int(x) for x in a), checkpoints, counts, predicted)

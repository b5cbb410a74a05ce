"""Exact Hamiltonian quaternions and small integer linear algebra.

Everything here works on Python ints, so there is no overflow. Matrices are
tuples of row tuples.
"""
from __future__ import annotations

from math import gcd
from typing import NamedTuple, Sequence

IntMatrix = tuple  # tuple[tuple[int, ...], ...]


class Quaternion(NamedTuple):
    x0: int
    x1: int
    x2: int
    x3: int

    def __mul__(self, other):  # type: ignore[override]
        return mul(self, other)

    def __add__(self, other):  # type: ignore[override]
        return Quaternion(self.x0 + other[0], self.x1 + other[1],
                          self.x2 + other[2], self.x3 + other[3])

    def __sub__(self, other):
        return Quaternion(self.x0 - other[0], self.x1 - other[1],
                          self.x2 - other[2], self.x3 - other[3])

    def __neg__(self):
        return Quaternion(-self.x0, -self.x1, -self.x2, -self.x3)

    def scale(self, k: int) -> "Quaternion":
        return Quaternion(k * self.x0, k * self.x1, k * self.x2, k * self.x3)

    def pure(self) -> "PureVec3":
        """Imaginary part."""
        return PureVec3(self.x1, self.x2, self.x3)


class PureVec3(NamedTuple):
    """Traceless quaternion x1 i + x2 j + x3 k, identified with Z^3."""
    x1: int
    x2: int
    x3: int

    def quaternion(self) -> Quaternion:
        return Quaternion(0, self.x1, self.x2, self.x3)

    def __neg__(self):
        return PureVec3(-self.x1, -self.x2, -self.x3)

    def __add__(self, other):  # type: ignore[override]
        return PureVec3(self.x1 + other[0], self.x2 + other[1], self.x3 + other[2])

    def __sub__(self, other):
        return PureVec3(self.x1 - other[0], self.x2 - other[1], self.x3 - other[2])

    def scale(self, k: int) -> "PureVec3":
        return PureVec3(k * self.x1, k * self.x2, k * self.x3)

    def norm(self) -> int:
        return self.x1 * self.x1 + self.x2 * self.x2 + self.x3 * self.x3


ONE = Quaternion(1, 0, 0, 0)
I = Quaternion(0, 1, 0, 0)
J = Quaternion(0, 0, 1, 0)
K = Quaternion(0, 0, 0, 1)


def mul(p, q) -> Quaternion:
    a0, a1, a2, a3 = p
    b0, b1, b2, b3 = q
    return Quaternion(
        a0 * b0 - a1 * b1 - a2 * b2 - a3 * b3,
        a0 * b1 + a1 * b0 + a2 * b3 - a3 * b2,
        a0 * b2 - a1 * b3 + a2 * b0 + a3 * b1,
        a0 * b3 + a1 * b2 - a2 * b1 + a3 * b0,
    )


def conj(q) -> Quaternion:
    return Quaternion(q[0], -q[1], -q[2], -q[3])


def trace(q) -> int:
    return 2 * q[0]


def norm(q) -> int:
    return sum(x * x for x in q)


def dot(u: Sequence[int], v: Sequence[int]) -> int:
    return sum(a * b for a, b in zip(u, v))


def cross(u: Sequence[int], v: Sequence[int]) -> tuple:
    return (u[1] * v[2] - u[2] * v[1],
            u[2] * v[0] - u[0] * v[2],
            u[0] * v[1] - u[1] * v[0])


def content(v: Sequence[int]) -> int:
    """gcd of the entries of a nonzero integer vector."""
    g = 0
    for x in v:
        g = gcd(g, x)
    if g == 0:
        raise ValueError("undefined content: zero vector")
    return g


def ord_p(n: int, p: int) -> int:
    """p-adic valuation of a nonzero integer."""
    if n == 0:
        raise ValueError("ord_p of zero")
    k = 0
    while n % p == 0:
        n //= p
        k += 1
    return k


def odd_part(n: int) -> int:
    n = abs(n)
    while n and n % 2 == 0:
        n //= 2
    return n


# ---------------------------------------------------------------------------
# Integer matrices

def _identity(n: int) -> list:
    return [[int(i == j) for j in range(n)] for i in range(n)]


def _freeze(rows) -> IntMatrix:
    return tuple(tuple(r) for r in rows)


def _hnf_rows(A: list, U: list | None) -> list:
    """In-place row HNF of A (list of lists). Applies the same row ops to U."""
    m = len(A)
    n = len(A[0]) if m else 0
    r = 0
    for c in range(n):
        if r == m:
            break
        while True:
            piv = -1
            best = 0
            for i in range(r, m):
                x = A[i][c]
                if x and (piv < 0 or abs(x) < best):
                    piv, best = i, abs(x)
            if piv < 0:
                break
            if piv != r:
                A[r], A[piv] = A[piv], A[r]
                if U is not None:
                    U[r], U[piv] = U[piv], U[r]
            p = A[r][c]
            clean = True
            for i in range(r + 1, m):
                x = A[i][c]
                if x:
                    q = x // p
                    A[i] = [a - q * b for a, b in zip(A[i], A[r])]
                    if U is not None:
                        U[i] = [a - q * b for a, b in zip(U[i], U[r])]
                    if A[i][c]:
                        clean = False
            if clean:
                break
        if piv < 0:
            continue
        if A[r][c] < 0:
            A[r] = [-a for a in A[r]]
            if U is not None:
                U[r] = [-a for a in U[r]]
        p = A[r][c]
        for i in range(r):
            q = A[i][c] // p
            if q:
                A[i] = [a - q * b for a, b in zip(A[i], A[r])]
                if U is not None:
                    U[i] = [a - q * b for a, b in zip(U[i], U[r])]
        r += 1
    return A


def hnf(M) -> tuple[IntMatrix, IntMatrix]:
    """Row Hermite normal form: returns (H, U) with H = U M, U unimodular.

    Pivots are positive and entries above a pivot lie in [0, pivot). Zero
    rows are kept at the bottom.
    """
    A = [list(r) for r in M]
    U = _identity(len(A))
    _hnf_rows(A, U)
    return _freeze(A), _freeze(U)


def hnf_rows(M) -> IntMatrix:
    """HNF without the transform, zero rows dropped."""
    A = [list(r) for r in M]
    _hnf_rows(A, None)
    return _freeze(r for r in A if any(r))


def snf(M) -> tuple[list, IntMatrix, IntMatrix]:
    """Smith normal form: (divisors, U, V) with U M V = diag(divisors).

    Divisors are nonnegative and each divides the next; there are
    min(rows, cols) of them (trailing zeros for singular input).
    """
    A = [list(r) for r in M]
    m = len(A)
    n = len(A[0]) if m else 0
    U = _identity(m)
    V = _identity(n)

    def swap_rows(i, j):
        A[i], A[j] = A[j], A[i]
        U[i], U[j] = U[j], U[i]

    def swap_cols(i, j):
        for row in A:
            row[i], row[j] = row[j], row[i]
        for row in V:
            row[i], row[j] = row[j], row[i]

    def add_row(dst, src, q):  # row_dst -= q * row_src
        A[dst] = [a - q * b for a, b in zip(A[dst], A[src])]
        U[dst] = [a - q * b for a, b in zip(U[dst], U[src])]

    def add_col(dst, src, q):  # col_dst -= q * col_src
        for row in A:
            row[dst] -= q * row[src]
        for row in V:
            row[dst] -= q * row[src]

    for t in range(min(m, n)):
        while True:
            piv = None
            for i in range(t, m):
                for j in range(t, n):
                    if A[i][j] and (piv is None or abs(A[i][j]) < abs(A[piv[0]][piv[1]])):
                        piv = (i, j)
            if piv is None:
                break
            if piv[0] != t:
                swap_rows(t, piv[0])
            if piv[1] != t:
                swap_cols(t, piv[1])
            p = A[t][t]
            dirty = False
            for i in range(t + 1, m):
                if A[i][t]:
                    add_row(i, t, A[i][t] // p)
                    dirty = dirty or A[i][t] != 0
            for j in range(t + 1, n):
                if A[t][j]:
                    add_col(j, t, A[t][j] // p)
                    dirty = dirty or A[t][j] != 0
            if dirty:
                continue
            # pivot must divide the rest of the block
            bad = next((i for i in range(t + 1, m)
                        if any(A[i][j] % p for j in range(t + 1, n))), None)
            if bad is None:
                break
            add_row(t, bad, -1)
        if A[t][t] < 0:
            A[t] = [-a for a in A[t]]
            U[t] = [-a for a in U[t]]
    divisors = [A[t][t] for t in range(min(m, n))]
    return divisors, _freeze(U), _freeze(V)


def kernel_saturated(M) -> IntMatrix:
    """Z-basis (rows, in HNF) of ker(M) intersected with Z^cols.

    Computed from the unimodular transform of the HNF of M^T, so the result
    is automatically saturated.
    """
    rows = [list(r) for r in M]
    n = len(rows[0])
    At = [[rows[i][j] for i in range(len(rows))] for j in range(n)]
    U = _identity(n)
    _hnf_rows(At, U)
    basis = [U[i] for i in range(n) if not any(At[i])]
    if not basis:
        return ()
    return hnf_rows(basis)


def mat_mul(A, B) -> IntMatrix:
    Bt = list(zip(*B))
    return _freeze([[dot(r, c) for c in Bt] for r in A])


def transpose(A) -> IntMatrix:
    return _freeze(zip(*A))


def det(A) -> int:
    """Exact determinant by fraction-free elimination (Bareiss)."""
    M = [list(r) for r in A]
    n = len(M)
    sign, prev = 1, 1
    for k in range(n - 1):
        if M[k][k] == 0:
            sw = next((i for i in range(k + 1, n) if M[i][k]), None)
            if sw is None:
                return 0
            M[k], M[sw] = M[sw], M[k]
            sign = -sign
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                M[i][j] = (M[i][j] * M[k][k] - M[i][k] * M[k][j]) // prev
        prev = M[k][k]
    return sign * M[n - 1][n - 1] if n else 1

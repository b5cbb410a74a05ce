"""Equidistribution diagnostics on the sphere pair and the four CM points."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Iterator

import numpy as np
from scipy import integrate

from . import batch
from .counting import is_prime, legendre
from .forms import BinaryForm, CMPoint
from .glue import in_disc_set

LIBRARY_VERSION = "qgrass-testfns-1"
DEFAULT_T = 1.5


# ---------------------------------------------------------------------------
# Sphere harmonics as harmonic polynomials

def _monomials(l: int) -> list:
    return [(a, b, l - a - b) for a in range(l, -1, -1) for b in range(l - a, -1, -1)]


def _double_fact(n: int) -> int:
    out = 1
    while n > 1:
        out *= n
        n -= 2
    return out


def sphere_moment(a: int, b: int, c: int) -> Fraction:
    """Mean of x^a y^b z^c over the unit sphere (uniform probability)."""
    if a % 2 or b % 2 or c % 2:
        return Fraction(0)
    return Fraction(_double_fact(a - 1) * _double_fact(b - 1) * _double_fact(c - 1),
                    _double_fact(a + b + c + 1))


@lru_cache(maxsize=None)
def harmonic_basis(l: int) -> tuple[tuple, np.ndarray]:
    """Monomials of degree l and coefficients (k, 2l+1) of an orthonormal
    basis of degree-l harmonics under the uniform probability measure."""
    mons = _monomials(l)
    if l < 2:
        C = np.eye(len(mons))
    else:
        lower = {m: i for i, m in enumerate(_monomials(l - 2))}
        lap = np.zeros((len(lower), len(mons)))
        for j, (a, b, c) in enumerate(mons):
            for k, e in enumerate((a, b, c)):
                if e >= 2:
                    m = [a, b, c]
                    m[k] -= 2
                    lap[lower[tuple(m)], j] += e * (e - 1)
        _, s, vt = np.linalg.svd(lap)
        rank = int(np.sum(s > 1e-9))
        C = vt[rank:].T
    G = np.array([[float(sphere_moment(*(np.add(m, n)))) for n in mons] for m in mons])
    S = C.T @ G @ C
    R = np.linalg.cholesky(S)
    return tuple(mons), C @ np.linalg.inv(R).T


def harmonics(dirs: np.ndarray, l: int) -> np.ndarray:
    """Values (N, 2l+1) of the orthonormal degree-l basis at unit vectors."""
    mons, C = harmonic_basis(l)
    X = np.asarray(dirs, dtype=float)
    M = np.stack([X[:, 0] ** a * X[:, 1] ** b * X[:, 2] ** c for a, b, c in mons], axis=1)
    return M @ C


def degree_discrepancy(dirs, l: int) -> float:
    """sup over unit-norm degree-l harmonics Y of |mean Y(dirs)|."""
    return float(np.linalg.norm(harmonics(dirs, l).mean(axis=0)))


def sphere_weyl(dirs, lmax: int = 4) -> float:
    """Largest Weyl mean over even degrees 2..lmax; well defined on +-classes."""
    dirs = np.asarray(dirs, dtype=float).reshape(-1, 3)
    if len(dirs) == 0:
        raise ValueError("no directions")
    if lmax < 2 or lmax % 2:
        raise ValueError("lmax must be even and at least 2")
    return max(degree_discrepancy(dirs, l) for l in range(2, lmax + 1, 2))


# ---------------------------------------------------------------------------
# Cusp of the modular surface

HALF_DOMAIN_AREA = math.pi / 6  # PGL2(Z) fundamental domain, dx dy / y^2


def cusp_expected(T: float) -> float:
    if T < 1:
        raise ValueError("cusp tail formula needs T >= 1")
    return 3 / (math.pi * T)


def cusp_expected_numeric(T: float) -> float:
    """Same quantity by integrating dx dy / y^2 over y > T, 0 <= x <= 1/2."""
    val, _ = integrate.dblquad(lambda y, x: 1 / (y * y), 0, 0.5, T, np.inf)
    return val / HALF_DOMAIN_AREA


def cusp_tail(points, T: float) -> tuple[float, float]:
    """(empirical share with Im z > T, expected share)."""
    expected = cusp_expected(T)
    ys = np.array([p.y if isinstance(p, CMPoint) else p for p in points], dtype=float)
    if len(ys) == 0:
        raise ValueError("no points")
    return float(np.mean(ys > T)), expected


@lru_cache(maxsize=None)
def cos_mean() -> float:
    """Mean of cos(2 pi x) over the fundamental domain."""
    val, _ = integrate.quad(lambda x: math.cos(2 * math.pi * x) / math.sqrt(1 - x * x), 0, 0.5)
    return val / HALF_DOMAIN_AREA


# ---------------------------------------------------------------------------
# Rows and the joint test

SLOTS = ("a1", "a2", "z1", "z2", "z3", "z4")


@dataclass(frozen=True)
class ExperimentRow:
    D: int
    wedge: tuple
    a1_dir: tuple
    a2_dir: tuple
    z: tuple                 # four CMPoints
    glue_key: str | None = None


@dataclass
class RowBatch:
    """Per-D arrays behind a list of ExperimentRows."""
    D: int
    wedges: np.ndarray
    pairs: np.ndarray
    forms: np.ndarray        # (N, 4, 3) GL2-reduced primitive forms
    q_L: np.ndarray          # (N, 3) Gram form of L(Z) in its HNF basis
    sphere: np.ndarray | None = None
    index: np.ndarray | None = None

    def __len__(self):
        return len(self.wedges)

    @property
    def dirs(self) -> tuple[np.ndarray, np.ndarray]:
        s = math.sqrt(self.D)
        return self.pairs[:, 0] / s, self.pairs[:, 1] / s

    @property
    def xy(self) -> tuple[np.ndarray, np.ndarray]:
        a, b, c = (self.forms[..., k].astype(float) for k in range(3))
        return b / (2 * a), np.sqrt(4 * a * c - b * b) / (2 * a)

    def rows(self) -> Iterator[ExperimentRow]:
        s = math.sqrt(self.D)
        for w, pr, fs in zip(self.wedges.tolist(), self.pairs.tolist(), self.forms.tolist()):
            yield ExperimentRow(self.D, tuple(w), tuple(x / s for x in pr[0]),
                                tuple(x / s for x in pr[1]),
                                tuple(CMPoint(BinaryForm(*f)) for f in fs))


def row_batch(D: int) -> RowBatch:
    B = batch.plane_batch(D)
    if len(B) == 0:
        return RowBatch(D, B.wedges, B.pairs, np.zeros((0, 4, 3), dtype=np.int64),
                        np.zeros((0, 3), dtype=np.int64), B.sphere, B.index)
    q_L = batch.gram_forms(B.bases)
    point_forms = batch.reduce_gl2_rows(batch.primitive_rows(batch._ortho_forms_distinct(B.sphere)))
    forms = [batch.reduce_gl2_rows(batch.primitive_rows(F))
             for F in (q_L, batch.gram_forms(B.perp_bases()))]
    forms += [point_forms[B.index[:, 0]], point_forms[B.index[:, 1]]]
    return RowBatch(D, B.wedges, B.pairs, np.stack(forms, axis=1), q_L, B.sphere, B.index)


def test_function_values(rb: RowBatch, T: float = DEFAULT_T) -> tuple[list, list, np.ndarray]:
    """Centered test functions (names, factor labels, values (N, k))."""
    d1, d2 = rb.dirs
    x, y = rb.xy
    names, factors, cols = [], [], []
    for slot, d in (("a1", d1), ("a2", d2)):
        names.append(f"Y20({slot})")
        factors.append(slot)
        cols.append(math.sqrt(5) / 2 * (3 * d[:, 2] ** 2 - 1))
    tail, cm = cusp_expected(T), cos_mean()
    for i in range(4):
        slot = f"z{i + 1}"
        names += [f"tail({slot})", f"cos({slot})"]
        factors += [slot, slot]
        cols.append((y[:, i] > T) - tail)
        cols.append(np.cos(2 * np.pi * x[:, i]) - cm)
    return names, factors, np.stack(cols, axis=1)


def joint_correlation(values: np.ndarray) -> np.ndarray:
    """Empirical means of all pairwise products of centered test functions."""
    values = np.asarray(values, dtype=float)
    if len(values) < 2:
        raise ValueError("need at least two rows")
    return values.T @ values / len(values)


def cross_entries(matrix: np.ndarray, factors: list) -> np.ndarray:
    k = len(factors)
    return np.array([matrix[i, j] for i in range(k) for j in range(i + 1, k)
                     if factors[i] != factors[j]])


@dataclass
class StatsReport:
    D: int
    n: int
    sphere: dict              # slot -> discrepancy
    cusp: dict                # slot -> empirical - expected
    correlation: list         # k x k
    names: list
    factors: list
    isotype: str | None = None
    header: dict = field(default_factory=lambda: {"library": LIBRARY_VERSION})

    @property
    def negative_control(self) -> float:
        return float(np.mean(np.diag(self.correlation)))

    @property
    def cross_median(self) -> float:
        return float(np.median(np.abs(cross_entries(np.array(self.correlation), self.factors))))


def _slot_weyl(rb: RowBatch, slot: int, lmax: int) -> float:
    """sphere_weyl of one slot's directions, evaluated once per sphere point."""
    dirs = rb.sphere / math.sqrt(rb.D)
    weights = np.bincount(rb.index[:, slot], minlength=len(dirs)) / len(rb)
    return max(float(np.linalg.norm(weights @ harmonics(dirs, l)))
               for l in range(2, lmax + 1, 2))


def report_for(rb: RowBatch, lmax: int = 4, T: float = DEFAULT_T,
               mask: np.ndarray | None = None, isotype: str | None = None) -> StatsReport:
    if mask is not None:
        rb = RowBatch(rb.D, rb.wedges[mask], rb.pairs[mask], rb.forms[mask], rb.q_L[mask],
                      rb.sphere, rb.index[mask])
    _, y = rb.xy
    names, factors, vals = test_function_values(rb, T)
    corr = joint_correlation(vals)
    expected = cusp_expected(T)
    return StatsReport(
        rb.D, len(rb),
        {"a1": _slot_weyl(rb, 0, lmax), "a2": _slot_weyl(rb, 1, lmax)},
        {f"z{i + 1}": float(np.mean(y[:, i] > T)) - expected for i in range(4)},
        corr.tolist(), names, factors, isotype)


def is_admissible(D: int, p: int, q: int) -> bool:
    return in_disc_set(D) and all(legendre(-D, r) == 1 for r in (p, q))


def _check_primes(p: int, q: int) -> None:
    if p == q or p % 2 == 0 or q % 2 == 0 or not (is_prime(p) and is_prime(q)):
        raise ValueError("splitting primes must be distinct odd primes")


def run_experiment(d_from: int, d_to: int, p: int = 3, q: int = 7, mode: str = "all",
                   lmax: int = 4, T: float = DEFAULT_T) -> Iterator[StatsReport]:
    """One report per admissible D (per D and glue isotype in isotype mode)."""
    from .forms import _is_squarefree
    _check_primes(p, q)
    if mode not in ("all", "square-free", "isotype"):
        raise ValueError(f"unknown mode {mode!r}")
    for D in range(max(1, d_from), d_to + 1):
        if not is_admissible(D, p, q):
            continue
        if mode == "square-free" and not _is_squarefree(D):
            continue
        rb = row_batch(D)
        if len(rb) < 2:
            continue
        if mode != "isotype":
            yield report_for(rb, lmax, T)
            continue
        keys = isotype_keys(rb)
        for key in sorted(set(keys)):
            mask = np.array([k == key for k in keys])
            if mask.sum() >= 2:
                yield report_for(rb, lmax, T, mask=mask, isotype=key)


def isotype_keys(rb: RowBatch) -> list:
    """Glue key of each plane; the key depends only on the GL2 class of q_L."""
    from .glue import glue_key_from_gram
    red = batch.reduce_gl2_rows(rb.q_L)
    cache = {}
    keys = []
    for f in map(tuple, red.tolist()):
        if f not in cache:
            a, b, c = f
            cache[f] = glue_key_from_gram(((a, b // 2), (b // 2, c)))
        keys.append(cache[f])
    return keys

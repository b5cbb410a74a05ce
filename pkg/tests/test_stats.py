"""Sphere harmonics, cusp tails, correlations and the experiment driver."""
import math

import numpy as np
import pytest
from hypothesis import example, given, strategies as st
from scipy import special

from qgrass.forms import cm_point
from qgrass.klein import klein_pair
from qgrass.planes import gram_form, orthocomplement, ortho_lattice, plane_from_wedge
from qgrass.stats import (cusp_expected, cusp_expected_numeric, cusp_tail, degree_discrepancy,
                          harmonics, is_admissible, joint_correlation, report_for, row_batch,
                          run_experiment, sphere_weyl, _slot_weyl)

AXES = np.array([[1, 0, 0], [-1, 0, 0], [0, 1, 0], [0, -1, 0], [0, 0, 1], [0, 0, -1]], float)


def scipy_discrepancy(dirs, l):
    """sqrt(sum_m |mean Y_lm|^2), Y normalized to the probability measure."""
    x, y, z = np.asarray(dirs, float).T
    theta = np.arctan2(np.hypot(x, y), z)
    phi = np.arctan2(y, x)
    total = 0.0
    for m in range(-l, l + 1):
        Y = special.sph_harm_y(l, m, theta, phi) * math.sqrt(4 * math.pi)
        total += abs(Y.mean()) ** 2
    return math.sqrt(total)


unit = st.tuples(*[st.floats(-1, 1, allow_nan=False)] * 3).filter(
    lambda v: sum(t * t for t in v) > 1e-3).map(lambda v: np.array(v) / np.linalg.norm(v))
dir_sets = st.lists(unit, min_size=1, max_size=30).map(np.array)


@given(dir_sets, st.sampled_from([2, 4, 6]))
@example(np.array([[0.0, 0.5 ** 0.5, 0.5 ** 0.5], [0.0, 1e-9, 1.0]]), 2)
def test_discrepancy_matches_scipy_harmonics(dirs, l):
    assert degree_discrepancy(dirs, l) == pytest.approx(scipy_discrepancy(dirs, l), abs=1e-9)


def test_axis_directions():
    assert degree_discrepancy(AXES, 2) == pytest.approx(0, abs=1e-12)
    assert degree_discrepancy(AXES, 4) > 0.1


@pytest.mark.parametrize("l", [2, 4, 6])
def test_single_point_discrepancy(l):
    # addition theorem: sum_m Y_m(p)^2 = 2l + 1
    p = np.array([[0.6, 0.0, 0.8]])
    assert degree_discrepancy(p, l) == pytest.approx(math.sqrt(2 * l + 1))


def test_sphere_weyl_errors_and_values():
    assert sphere_weyl(np.array([[0.0, 0.0, 1.0]])) == pytest.approx(3.0)
    with pytest.raises(ValueError):
        sphere_weyl(np.zeros((0, 3)))
    with pytest.raises(ValueError):
        sphere_weyl(AXES, lmax=3)


@given(dir_sets)
def test_antipodal_invariance(dirs):
    both = np.concatenate([dirs, -dirs])
    assert sphere_weyl(both) == pytest.approx(sphere_weyl(dirs), abs=1e-9)


def test_harmonics_orthonormal_by_quadrature():
    # Gauss-Legendre in cos(theta) times a uniform grid in phi is exact for degree <= 8
    u, wu = np.polynomial.legendre.leggauss(12)
    phi = np.arange(24) * 2 * np.pi / 24
    U, P = np.meshgrid(u, phi, indexing="ij")
    s = np.sqrt(1 - U ** 2)
    pts = np.stack([s * np.cos(P), s * np.sin(P), U], axis=-1).reshape(-1, 3)
    w = (np.repeat(wu, len(phi)) / 2 / len(phi))
    for l in (2, 4):
        H = harmonics(pts, l)
        assert H.T @ (H * w[:, None]) == pytest.approx(np.eye(2 * l + 1), abs=1e-10)


def test_cusp_expected():
    assert cusp_expected(2) == pytest.approx(3 / (2 * math.pi))
    assert cusp_expected(1e9) < 1e-8
    for T in (1.0, 1.5, 2.0, 5.0):
        assert cusp_expected(T) == pytest.approx(cusp_expected_numeric(T), abs=1e-6)
    with pytest.raises(ValueError):
        cusp_expected(0.5)


def test_cusp_tail_points():
    pts = [cm_point((1, 0, 1))] * 5
    assert cusp_tail(pts, 2) == (0.0, pytest.approx(3 / (2 * math.pi)))
    assert cusp_tail([cm_point((1, 0, 9))], 2)[0] == 1.0
    with pytest.raises(ValueError):
        cusp_tail(pts, 0.9)


def test_joint_correlation_controls():
    rng = np.random.default_rng(12345)
    n = 40000
    z = rng.uniform(-1, 1, n) * math.sqrt(3)
    other = rng.uniform(-1, 1, n) * math.sqrt(3)
    C = joint_correlation(np.stack([z, z, other], axis=1))
    assert C[0, 1] == pytest.approx(1.0, abs=0.05)
    assert abs(C[0, 2]) < 5 / math.sqrt(n)
    with pytest.raises(ValueError):
        joint_correlation(np.zeros((1, 3)))


def test_admissibility_filter():
    assert not is_admissible(5, 5, 13)
    assert not is_admissible(2, 3, 7)
    assert not any(is_admissible(D, 3, 7) for D in range(7, 3000, 16))
    assert is_admissible(17, 3, 7)


def test_experiment_errors():
    with pytest.raises(ValueError):
        list(run_experiment(1, 10, 3, 3))
    with pytest.raises(ValueError):
        list(run_experiment(1, 10, 2, 7))
    with pytest.raises(ValueError):
        list(run_experiment(1, 10, 3, 7, mode="odd"))


def test_experiment_rows_only_for_admissible_d():
    reports = list(run_experiment(1, 300, 3, 7))
    assert reports and all(is_admissible(r.D, 3, 7) for r in reports)
    sf = list(run_experiment(1, 300, 3, 7, mode="square-free"))
    assert {r.D for r in sf} < {r.D for r in reports}


def test_rows_match_scalar_pipeline():
    for D in (5, 17, 50, 101):
        rb = row_batch(D)
        rows = list(rb.rows())
        for row in rows:
            L = plane_from_wedge(row.wedge)
            a1, a2 = klein_pair(L)
            want = (cm_point(gram_form(L)), cm_point(gram_form(orthocomplement(L))),
                    cm_point(ortho_lattice(a1).gram_form), cm_point(ortho_lattice(a2).gram_form))
            assert row.z == want
            s = math.sqrt(D)
            assert np.allclose(row.a1_dir, np.array(a1) / s)
            assert np.allclose(row.a2_dir, np.array(a2) / s)
        for z in (p for row in rows for p in row.z):
            assert 0 <= z.x <= 0.5 and abs(z.z) >= 1 - 1e-12


def test_slot_discrepancy_equals_direct_evaluation():
    for D in (17, 101, 257):
        rb = row_batch(D)
        d1, d2 = rb.dirs
        assert _slot_weyl(rb, 0, 4) == pytest.approx(sphere_weyl(d1), abs=1e-12)
        assert _slot_weyl(rb, 1, 4) == pytest.approx(sphere_weyl(d2), abs=1e-12)


def test_isotype_mode_partitions_each_d():
    iso = list(run_experiment(100, 200, 3, 7, mode="isotype"))
    whole = {r.D: r.n for r in run_experiment(100, 200, 3, 7)}
    by_d = {}
    for r in iso:
        by_d[r.D] = by_d.get(r.D, 0) + r.n
        assert isinstance(r.isotype, str) and r.n >= 2
    for D, n in by_d.items():
        assert n <= whole[D]


def test_reports_are_deterministic():
    a = [report_for(row_batch(D)) for D in (17, 101)]
    b = [report_for(row_batch(D)) for D in (17, 101)]
    assert [vars(x) for x in a] == [vars(x) for x in b]
    assert a[0].header["library"]

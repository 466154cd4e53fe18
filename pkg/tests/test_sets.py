import json

import numpy as np
import pytest

import zonoreach.sets as zs
from conftest import point_in_convex_polygon


def random_zonotope(rng, n, g):
    return zs.Zonotope(rng.normal(size=n), rng.normal(size=(n, g)))


def random_matzono(rng, n, m, g):
    return zs.MatrixZonotope(rng.normal(size=(n, m)), rng.normal(size=(g, n, m)))


# ---------------------------------------------------------------------------
# construction
# ---------------------------------------------------------------------------

def test_zero_generator_columns_dropped():
    Z = zs.Zonotope([1.0, 2.0], [[1.0, 0.0], [0.0, 0.0]])
    assert Z.ngens == 1


def test_dimension_mismatch_rejected():
    with pytest.raises(ValueError):
        zs.Zonotope([1.0, 2.0], [[1.0], [2.0], [3.0]])


def test_values_immutable():
    Z = zs.Zonotope([0.0], [[1.0]])
    with pytest.raises(ValueError):
        Z.center[0] = 5.0


def test_interval_matrix_ordering_enforced():
    with pytest.raises(ValueError):
        zs.IntervalMatrix([[1.0]], [[0.0]])


# ---------------------------------------------------------------------------
# linear map
# ---------------------------------------------------------------------------

def test_linear_map_identity():
    Z = zs.Zonotope([1.0, 2.0], np.eye(2))
    out = zs.linear_map(np.eye(2), Z)
    assert np.array_equal(out.center, Z.center)
    assert np.array_equal(out.generators, Z.generators)


def test_linear_map_direct_formula():
    Z = zs.Zonotope([1.0, 1.0], [[1.0], [1.0]])
    out = zs.linear_map(np.diag([2.0, 3.0]), Z)
    assert np.array_equal(out.center, [2.0, 3.0])
    assert np.array_equal(out.generators, [[2.0], [3.0]])


def test_linear_map_shape_mismatch():
    with pytest.raises(ValueError):
        zs.linear_map(np.eye(3), zs.Zonotope([0.0, 0.0], np.eye(2)))


def test_linear_map_sampled_containment():
    rng = np.random.default_rng(0)
    for _ in range(5):
        Z = random_zonotope(rng, 3, 5)
        L = rng.normal(size=(2, 3))
        out = zs.linear_map(L, Z)
        pts = zs.sample_points(Z, rng, 1000)
        assert zs.contains_points(out, pts @ L.T, tol=1e-9).all()


def test_matmul_operator_sugar():
    Z = zs.Zonotope([1.0, 1.0], np.eye(2))
    L = np.array([[2.0, 0.0], [0.0, 3.0]])
    out = L @ Z
    assert np.array_equal(out.center, [2.0, 3.0])


# ---------------------------------------------------------------------------
# Minkowski sum and Cartesian product
# ---------------------------------------------------------------------------

def test_minkowski_symmetric_1d():
    out = zs.minkowski_sum(zs.Zonotope([0.0], [[1.0]]), zs.Zonotope([0.0], [[1.0]]))
    assert np.array_equal(out.center, [0.0])
    assert np.array_equal(out.generators, [[1.0, 1.0]])
    lo, hi = out.bounds()
    assert lo[0] == -2.0 and hi[0] == 2.0


def test_minkowski_direct_formula():
    out = zs.Zonotope([1.0], [[2.0]]) + zs.Zonotope([2.0], [[3.0]])
    assert np.array_equal(out.center, [3.0])
    assert np.array_equal(out.generators, [[2.0, 3.0]])


def test_minkowski_generator_count_additive():
    rng = np.random.default_rng(1)
    Z1, Z2 = random_zonotope(rng, 3, 4), random_zonotope(rng, 3, 7)
    assert zs.minkowski_sum(Z1, Z2).ngens == 11


def test_minkowski_hull_is_sum_of_hulls():
    rng = np.random.default_rng(2)
    Z1, Z2 = random_zonotope(rng, 4, 3), random_zonotope(rng, 4, 6)
    out = zs.minkowski_sum(Z1, Z2)
    I1, I2, I = zs.interval_hull(Z1), zs.interval_hull(Z2), zs.interval_hull(out)
    assert np.allclose(I.lower, I1.lower + I2.lower)
    assert np.allclose(I.upper, I1.upper + I2.upper)


def test_minkowski_sampled_containment():
    rng = np.random.default_rng(3)
    Z1, Z2 = random_zonotope(rng, 3, 4), random_zonotope(rng, 3, 5)
    out = zs.minkowski_sum(Z1, Z2)
    pts = zs.sample_points(Z1, rng, 1000) + zs.sample_points(Z2, rng, 1000)
    assert zs.contains_points(out, pts, tol=1e-9).all()


def test_cartesian_singletons():
    out = zs.cartesian_product(zs.Zonotope([1.0]), zs.Zonotope([2.0]))
    assert np.array_equal(out.center, [1.0, 2.0])
    assert out.ngens == 0


def test_cartesian_direct_formula():
    out = zs.cartesian_product(zs.Zonotope([0.0], [[1.0]]), zs.Zonotope([5.0], [[2.0]]))
    assert np.array_equal(out.center, [0.0, 5.0])
    assert np.array_equal(out.generators, [[1.0, 0.0], [0.0, 2.0]])


def test_cartesian_projection_roundtrip():
    rng = np.random.default_rng(4)
    Z1, Z2 = random_zonotope(rng, 2, 3), random_zonotope(rng, 3, 4)
    out = zs.cartesian_product(Z1, Z2)
    proj = zs.linear_map(np.hstack([np.eye(2), np.zeros((2, 3))]), out)
    # both directions: samples of the product project into Z1 and samples of
    # Z1 appear as projections of product samples
    pts = zs.sample_points(out, rng, 500)
    assert zs.contains_points(Z1, pts[:, :2], tol=1e-9).all()
    pts1 = zs.sample_points(Z1, rng, 500)
    assert zs.contains_points(proj, pts1, tol=1e-9).all()


# ---------------------------------------------------------------------------
# interval hull
# ---------------------------------------------------------------------------

def test_interval_hull_rowwise_abs_sums():
    Z = zs.Zonotope([0.0, 0.0], [[1.0, -1.0], [0.0, 2.0]])
    I = zs.interval_hull(Z)
    assert np.array_equal(I.lower.ravel(), [-2.0, -2.0])
    assert np.array_equal(I.upper.ravel(), [2.0, 2.0])


def test_interval_hull_singleton():
    I = zs.interval_hull(zs.Zonotope([3.0, -1.0]))
    assert np.array_equal(I.lower.ravel(), [3.0, -1.0])
    assert np.array_equal(I.upper.ravel(), [3.0, -1.0])


def test_interval_hull_contains_samples():
    rng = np.random.default_rng(5)
    Z = random_zonotope(rng, 4, 7)
    pts = zs.sample_points(Z, rng, 1000)
    lo, hi = Z.bounds()
    assert (pts >= lo - 1e-12).all() and (pts <= hi + 1e-12).all()


# ---------------------------------------------------------------------------
# reduction
# ---------------------------------------------------------------------------

def test_reduce_noop_when_small():
    rng = np.random.default_rng(6)
    Z = random_zonotope(rng, 2, 3)
    assert zs.reduce(Z, 5) is Z


def test_reduce_rejects_small_order():
    with pytest.raises(ValueError):
        zs.reduce(zs.Zonotope([0.0, 0.0], np.eye(2)), 1)


def test_reduce_sampled_containment():
    rng = np.random.default_rng(7)
    Z = random_zonotope(rng, 2, 10)
    red = zs.reduce(Z, 4)
    assert red.ngens <= 4
    pts = zs.sample_points(Z, rng, 1000)
    assert zs.contains_points(red, pts, tol=1e-9).all()


def test_reduce_box_fixed_point():
    Z = zs.Zonotope([0.0, 0.0], np.diag([1.0, 2.0]))
    red = zs.reduce(Z, 2)
    assert np.allclose(zs.interval_hull(red).upper, zs.interval_hull(Z).upper)
    assert np.allclose(zs.interval_hull(red).lower, zs.interval_hull(Z).lower)


# ---------------------------------------------------------------------------
# containment and sampling
# ---------------------------------------------------------------------------

def test_contains_center():
    rng = np.random.default_rng(8)
    Z = random_zonotope(rng, 3, 5)
    assert zs.contains_point(Z, Z.center)


def test_contains_outside_interval():
    assert not zs.contains_point(zs.Zonotope([0.0], [[1.0]]), [1.5])


def test_contains_constructed_witness():
    rng = np.random.default_rng(9)
    for _ in range(20):
        Z = random_zonotope(rng, 3, 6)
        beta = rng.uniform(-1.0, 1.0, size=6)
        assert zs.contains_point(Z, Z.center + Z.generators @ beta)


def test_contains_off_affine_span_is_false():
    Z = zs.Zonotope([0.0, 0.0], [[1.0], [0.0]])
    assert not zs.contains_point(Z, [0.0, 0.5])


def test_contains_rejects_negative_tol():
    with pytest.raises(ValueError):
        zs.contains_point(zs.Zonotope([0.0]), [0.0], tol=-1.0)


def test_sample_singleton():
    rng = np.random.default_rng(10)
    Z = zs.Zonotope([4.0, 5.0])
    assert np.array_equal(zs.sample(Z, rng), [4.0, 5.0])


def test_sample_coverage_1d():
    rng = np.random.default_rng(11)
    Z = zs.Zonotope([0.0], [[1.0]])
    draws = zs.sample_points(Z, rng, 10_000).ravel()
    assert -1.0 <= draws.min() <= -0.99
    assert 0.99 <= draws.max() <= 1.0


def test_samples_always_contained():
    rng = np.random.default_rng(12)
    Z = random_zonotope(rng, 3, 6)
    for _ in range(50):
        assert zs.contains_point(Z, zs.sample(Z, rng), tol=1e-9)


def test_vertex_sample_on_boundary_factors():
    rng = np.random.default_rng(13)
    Z = zs.Zonotope([0.0, 0.0], np.eye(2))
    for _ in range(10):
        p = zs.vertex_sample(Z, rng)
        assert set(np.abs(p)) == {1.0}


# ---------------------------------------------------------------------------
# 2-D vertices
# ---------------------------------------------------------------------------

def test_vertices_unit_box():
    Z = zs.Zonotope([0.0, 0.0], np.eye(2))
    V = zs.vertices_2d(Z)
    assert V.shape == (4, 2)
    corners = {(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)}
    assert {tuple(v) for v in V} == corners


def test_vertices_single_generator_segment():
    Z = zs.Zonotope([1.0, 1.0], [[0.5], [0.25]])
    V = zs.vertices_2d(Z)
    assert V.shape == (2, 2)
    assert np.allclose(sorted(V[:, 0]), [0.5, 1.5])


def test_vertices_invalid_dims():
    with pytest.raises(ValueError):
        zs.vertices_2d(zs.Zonotope([0.0, 0.0], np.eye(2)), dims=(0, 0))


def test_vertices_contain_samples():
    rng = np.random.default_rng(14)
    for _ in range(5):
        Z = random_zonotope(rng, 2, 6)
        V = zs.vertices_2d(Z)
        for p in zs.sample_points(Z, rng, 200):
            assert point_in_convex_polygon(V, p, tol=1e-7)


def test_vertices_shoelace_matches_area_formula():
    rng = np.random.default_rng(15)
    for _ in range(5):
        Z = random_zonotope(rng, 2, 5)
        V = zs.vertices_2d(Z)
        x, y = V[:, 0], V[:, 1]
        shoelace = 0.5 * abs(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))
        G = Z.generators
        area = 0.0
        for i in range(G.shape[1]):
            for j in range(i + 1, G.shape[1]):
                area += 4.0 * abs(G[0, i] * G[1, j] - G[1, i] * G[0, j])
        assert shoelace >= 0.0
        assert np.isclose(shoelace, area, rtol=1e-9)


def test_vertices_projection_from_higher_dim():
    rng = np.random.default_rng(16)
    Z = random_zonotope(rng, 4, 5)
    V = zs.vertices_2d(Z, dims=(1, 3))
    pts = zs.sample_points(Z, rng, 200)[:, [1, 3]]
    for p in pts:
        assert point_in_convex_polygon(V, p, tol=1e-7)


# ---------------------------------------------------------------------------
# matrix zonotopes
# ---------------------------------------------------------------------------

def test_vec_unvec_scalar_case():
    M = zs.MatrixZonotope([[2.0]], [[[0.5]]])
    Z = zs.matzono_vec(M)
    assert np.array_equal(Z.center, [2.0])
    assert np.array_equal(Z.generators, [[0.5]])


def test_vec_unvec_roundtrip():
    rng = np.random.default_rng(17)
    M = random_matzono(rng, 3, 2, 5)
    back = zs.matzono_unvec(zs.matzono_vec(M), (3, 2))
    assert np.array_equal(back.center, M.center)
    assert np.array_equal(back.generators, M.generators)


def test_vec_unvec_shape_mismatch():
    with pytest.raises(ValueError):
        zs.matzono_unvec(zs.Zonotope(np.zeros(5), np.eye(5)), (2, 3))


def test_vec_of_minkowski_is_minkowski_of_vecs():
    rng = np.random.default_rng(18)
    M1, M2 = random_matzono(rng, 2, 3, 4), random_matzono(rng, 2, 3, 2)
    left = zs.matzono_vec(zs.matzono_minkowski(M1, M2))
    right = zs.minkowski_sum(zs.matzono_vec(M1), zs.matzono_vec(M2))
    assert np.array_equal(left.center, right.center)
    assert np.array_equal(left.generators, right.generators)


def test_matzono_reduce_noop():
    rng = np.random.default_rng(19)
    M = random_matzono(rng, 2, 2, 4)
    assert zs.matzono_reduce(M, 6) is M


def test_matzono_reduce_sampled_containment():
    rng = np.random.default_rng(20)
    M = random_matzono(rng, 2, 2, 12)
    red = zs.matzono_reduce(M, 6)
    assert red.ngens <= 6
    Zred = zs.matzono_vec(red)
    for _ in range(300):
        A = zs.matzono_sample(M, rng)
        assert zs.contains_point(Zred, A.reshape(-1, order="F"), tol=1e-9)


def test_matzono_reduce_whitened_still_contains():
    rng = np.random.default_rng(21)
    M = random_matzono(rng, 3, 2, 15)
    T = np.linalg.cholesky(np.diag([1.0, 4.0, 0.25]))
    red = zs.matzono_reduce(M, 8, whiten=T)
    assert red.ngens <= 8
    Zred = zs.matzono_vec(red)
    for _ in range(300):
        A = zs.matzono_sample(M, rng)
        assert zs.contains_point(Zred, A.reshape(-1, order="F"), tol=1e-8)


def test_matzono_reduce_preserves_boxed_hull():
    box = zs.MatrixZonotope(np.zeros((2, 1)), np.array([[[1.0], [0.0]], [[0.0], [2.0]]]))
    red = zs.matzono_reduce(box, 2)
    I0, I1 = zs.matzono_interval(box), zs.matzono_interval(red)
    assert np.allclose(I0.lower, I1.lower) and np.allclose(I0.upper, I1.upper)


def test_matzono_interval_no_generators():
    C = np.array([[1.0, -2.0]])
    I = zs.matzono_interval(zs.MatrixZonotope(C))
    assert np.array_equal(I.lower, C) and np.array_equal(I.upper, C)
    assert zs.interval_frobenius(I) == np.linalg.norm(C)


def test_interval_frobenius_scalar_case():
    M = zs.MatrixZonotope([[0.0]], [[[2.0]]])
    I = zs.matzono_interval(M)
    assert np.array_equal(I.lower, [[-2.0]]) and np.array_equal(I.upper, [[2.0]])
    assert zs.interval_frobenius(I) == 2.0


def test_interval_frobenius_bounds_sampled_members():
    rng = np.random.default_rng(22)
    M = random_matzono(rng, 3, 3, 6)
    bound = zs.interval_frobenius(zs.matzono_interval(M))
    for _ in range(1000):
        assert np.linalg.norm(zs.matzono_sample(M, rng)) <= bound + 1e-12


# ---------------------------------------------------------------------------
# matrix zonotope times zonotope
# ---------------------------------------------------------------------------

def test_times_zono_pointlike_matrix_set():
    rng = np.random.default_rng(23)
    C = rng.normal(size=(2, 3))
    M = zs.MatrixZonotope(C)
    Z = random_zonotope(rng, 3, 4)
    out = zs.matzono_times_zono(M, Z)
    ref = zs.linear_map(C, Z)
    assert np.array_equal(out.center, ref.center)
    assert np.array_equal(out.generators, ref.generators)


def test_times_zono_singleton_vector():
    rng = np.random.default_rng(24)
    M = random_matzono(rng, 2, 3, 4)
    c = rng.normal(size=3)
    out = zs.matzono_times_zono(M, zs.Zonotope(c))
    # exactly the set {A c : A in M}
    assert np.allclose(out.center, M.center @ c)
    assert out.ngens <= 4
    for _ in range(200):
        A = zs.matzono_sample(M, rng)
        assert zs.contains_point(out, A @ c, tol=1e-9)


def test_times_zono_sampled_containment():
    rng = np.random.default_rng(25)
    M = random_matzono(rng, 2, 3, 3)
    Z = random_zonotope(rng, 3, 4)
    out = zs.matzono_times_zono(M, Z)
    for _ in range(1000):
        A = zs.matzono_sample(M, rng)
        z = zs.sample(Z, rng)
        assert zs.contains_point(out, A @ z, tol=1e-9)


def test_times_zono_dimension_mismatch():
    rng = np.random.default_rng(26)
    with pytest.raises(ValueError):
        zs.matzono_times_zono(random_matzono(rng, 2, 3, 1), random_zonotope(rng, 2, 1))


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------

def test_zonotope_json_roundtrip():
    rng = np.random.default_rng(27)
    Z = random_zonotope(rng, 3, 5)
    d = json.loads(json.dumps(Z.to_dict()))
    back = zs.Zonotope.from_dict(d)
    assert np.array_equal(back.center, Z.center)
    assert np.array_equal(back.generators, Z.generators)


def test_singleton_json_roundtrip():
    back = zs.Zonotope.from_dict(json.loads(json.dumps(zs.Zonotope([1.5, -2.5]).to_dict())))
    assert back.ngens == 0 and np.array_equal(back.center, [1.5, -2.5])


def test_matzono_json_roundtrip():
    rng = np.random.default_rng(28)
    M = random_matzono(rng, 3, 2, 4)
    back = zs.MatrixZonotope.from_dict(json.loads(json.dumps(M.to_dict())))
    assert np.array_equal(back.center, M.center)
    assert np.array_equal(back.generators, M.generators)

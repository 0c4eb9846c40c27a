import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.stats import ortho_group, special_ortho_group

from primstab.cartan import (
    FlatDescriptor, FlatSolveError, NotLoxodromic, SpacePoint, WeylVector,
    cartan_projection, chamber_vector, delta_distance, distance_to_flat, flat_of,
    is_semisimple, jordan_projection, kassel_defect, ladder_to_chamber,
    nearest_flat_point, opposition, riemannian_distance, translation_length,
    wall_margin,
)

seeds = st.integers(0, 2**32 - 1)


def random_sl(rng, n):
    g = rng.normal(size=(n, n))
    if np.linalg.det(g) < 0:
        g[0] *= -1
    return g / np.linalg.det(g) ** (1 / n)


def test_weyl_vector_invariants():
    WeylVector([1.0, 0.0, -1.0])
    with pytest.raises(ValueError):
        WeylVector([0.0, 1.0, -1.0])
    with pytest.raises(ValueError):
        WeylVector([2.0, 0.0, -1.0])


def test_cartan_examples():
    np.testing.assert_allclose(cartan_projection(np.diag(np.exp([2.0, 0, -2]))).coords, [2, 0, -2], atol=1e-14)
    k = special_ortho_group.rvs(3, random_state=4)
    np.testing.assert_allclose(cartan_projection(k).coords, 0, atol=1e-14)
    gamma1 = np.array([[1, 1, 1], [0, 1, 2], [0, 0, 1]])
    half = 0.5 * np.log(4 + np.sqrt(15))
    np.testing.assert_allclose(cartan_projection(gamma1).coords, [half, 0, -half], atol=1e-14)
    assert half == pytest.approx(1.03172, abs=1e-5)
    with pytest.raises(np.linalg.LinAlgError):
        cartan_projection(np.ones((3, 3)))


def test_cartan_exact_path_handles_huge_integers():
    n = 10**6
    g = np.array([[1, n, n * n], [0, 1, 2 * n], [0, 0, 1]], dtype=object)
    v = cartan_projection(g).coords
    assert abs(v[1]) < 1e-12
    assert v[0] + v[2] == 0.0


def test_cartan_badly_scaled_input():
    g = np.diag([1e120, 1.0, 1e-120])
    np.testing.assert_allclose(cartan_projection(g).coords, [120 * np.log(10), 0, -120 * np.log(10)], rtol=1e-14)


@given(seeds, st.integers(2, 5))
@settings(max_examples=50, deadline=None)
def test_k_biinvariance_and_opposition(seed, n):
    rng = np.random.default_rng(seed)
    g = random_sl(rng, n)
    k1, k2 = ortho_group.rvs(n, size=2, random_state=rng) if n > 1 else (np.eye(1),) * 2
    mu = cartan_projection(g).coords
    np.testing.assert_allclose(cartan_projection(k1 @ g @ k2).coords, mu, atol=1e-9)
    np.testing.assert_allclose(cartan_projection(np.linalg.inv(g)).coords,
                               opposition(cartan_projection(g)).coords, atol=1e-9)


@given(seeds)
@settings(max_examples=50, deadline=None)
def test_subadditivity_and_point_identification(seed):
    rng = np.random.default_rng(seed)
    g, h = random_sl(rng, 3), random_sl(rng, 3)
    assert cartan_projection(g @ h).norm() <= cartan_projection(g).norm() + cartan_projection(h).norm() + 1e-9
    P = SpacePoint.orbit_point(g)
    np.testing.assert_allclose(delta_distance(SpacePoint.identity(3), P).coords,
                               cartan_projection(g).coords, atol=1e-9)


def test_kassel_trivial_cases():
    rng = np.random.default_rng(0)
    g = random_sl(rng, 3)
    assert kassel_defect(np.eye(3), g, np.eye(3)) == pytest.approx((0, 0), abs=1e-12)
    k1, k2 = special_ortho_group.rvs(3, size=2, random_state=1)
    lhs, rhs = kassel_defect(k1, g, k2)
    assert lhs < 1e-12 and rhs < 1e-12


def test_jordan_examples():
    np.testing.assert_allclose(jordan_projection(np.diag([2, 1, 0.5])).coords, [np.log(2), 0, -np.log(2)])
    qh = jordan_projection(np.array([[2, 1, 0], [0, 2, 0], [0, 0, 0.25]])).coords
    assert qh[0] == qh[1]
    np.testing.assert_allclose(qh, [np.log(2), np.log(2), -2 * np.log(2)], atol=1e-15)
    np.testing.assert_allclose(jordan_projection(np.triu(np.ones((4, 4)))).coords, 0, atol=1e-12)


@given(seeds, st.integers(1, 6))
@settings(max_examples=40, deadline=None)
def test_jordan_power_scaling(seed, k):
    rng = np.random.default_rng(seed)
    B = rng.normal(size=(3, 3))
    g = B @ np.diag(np.exp(rng.normal(size=3))) @ np.linalg.inv(B)
    np.testing.assert_allclose(jordan_projection(np.linalg.matrix_power(g, k)).coords,
                               k * jordan_projection(g).coords, atol=1e-8)


def test_ladder_reconstruction():
    g = np.random.default_rng(3).normal(size=(4, 4))
    s = np.log(np.linalg.svd(g, compute_uv=False))
    np.testing.assert_allclose(ladder_to_chamber(np.cumsum(s)).coords, chamber_vector(s).coords, atol=1e-12)


def test_delta_distance_examples():
    P = SpacePoint.orbit_point(random_sl(np.random.default_rng(5), 3))
    np.testing.assert_allclose(delta_distance(P, P).coords, 0, atol=1e-12)
    np.testing.assert_allclose(delta_distance(np.eye(3), np.diag(np.exp([4.0, 0, -4]))).coords, [2, 0, -2])
    with pytest.raises(ValueError):
        SpacePoint(np.diag([-1.0, -1.0, 1.0]))
    with pytest.raises(ValueError):
        SpacePoint(np.diag([2.0, 1.0, 1.0]))


@given(seeds)
@settings(max_examples=50, deadline=None)
def test_delta_distance_symmetry(seed):
    rng = np.random.default_rng(seed)
    P = SpacePoint.orbit_point(random_sl(rng, 3))
    Q = SpacePoint.orbit_point(random_sl(rng, 3))
    np.testing.assert_allclose(delta_distance(Q, P).coords, opposition(delta_distance(P, Q)).coords, atol=1e-9)


def test_wall_margin():
    assert wall_margin(WeylVector([2.0, 0.0, -2.0])) == 2.0
    assert wall_margin(WeylVector([1.0, 1.0, -2.0])) == 0.0
    n = 2
    alpha = (38 + np.sqrt(38**2 - 4)) / 2
    mu = cartan_projection(np.linalg.matrix_power(np.array([[1, 1, 1], [0, 1, 2], [0, 0, 1]]), n))
    assert wall_margin(mu) == pytest.approx(0.5 * np.log(alpha), rel=1e-12)
    assert wall_margin(mu) == pytest.approx(1.81845, abs=1e-4)


def sym2(g):
    a, b, c, d = g.ravel()
    return np.array([[a * a, a * b, b * b], [2 * a * c, a * d + b * c, 2 * b * d], [c * c, c * d, d * d]])


def test_flat_of_examples():
    F = flat_of(np.diag([4.0, 2.0, 1.0]))
    np.testing.assert_allclose(np.abs(F.frame), np.eye(3))
    g = sym2(np.array([[2.0, 1.0], [1.0, 1.0]]))
    F = flat_of(g)
    np.testing.assert_allclose(np.linalg.norm(F.frame, axis=0), 1.0)
    # g maps the flat to itself: image of a flat point lies on the flat
    Q = SpacePoint.orbit_point(g, F.point([0.3, -0.1, 0.0]))
    assert distance_to_flat(Q, F) < 1e-8
    with pytest.raises(NotLoxodromic) as err:
        flat_of(np.array([[2, 1, 0], [0, 2, 0], [0, 0, 0.25]]))
    assert err.value.pair is not None
    c, s = np.cos(1), np.sin(1)
    with pytest.raises(NotLoxodromic):
        flat_of(np.array([[c, -s, 0], [s, c, 0], [0, 0, 1]]))


def grid_distance_to_diagonal_flat(Q, step=1e-3, radius=0.05, center=None):
    best = np.inf
    ts = np.arange(-radius, radius + step / 2, step)
    for a in ts:
        for b in ts:
            t = center + np.array([a, b, -a - b])
            best = min(best, riemannian_distance(Q, SpacePoint.normalized(np.diag(np.exp(t)))))
    return best


def test_distance_to_flat_on_flat_and_grid_oracle():
    F = FlatDescriptor.diagonal(3)
    assert distance_to_flat(np.diag(np.exp([1.0, 0.5, -1.5])), F) < 1e-8
    k = special_ortho_group.rvs(3, random_state=11)
    Q = SpacePoint.normalized(k @ np.diag(np.exp([2.0, 0.0, -2.0])) @ k.T)
    d, P = nearest_flat_point(Q, F)
    center = np.log(np.diag(P.matrix))
    assert d <= grid_distance_to_diagonal_flat(Q, center=center) + 1e-12
    # the grid is 1e-3 fine, so it gets within O(step^2) of the optimum
    assert grid_distance_to_diagonal_flat(Q, center=center) - d < 1e-5


@given(seeds)
@settings(max_examples=25, deadline=None)
def test_distance_to_flat_is_minimal_and_invariant(seed):
    rng = np.random.default_rng(seed)
    # keep g well conditioned: the invariance check loses cond(g Q g^T) * eps
    B = np.eye(3) + 0.3 * rng.normal(size=(3, 3))
    g = B @ np.diag([2.0, 1.0, 0.5]) @ np.linalg.inv(B)
    F = flat_of(g)
    Q = SpacePoint.orbit_point(random_sl(rng, 3))
    d = distance_to_flat(Q, F)
    probes = rng.normal(scale=2.0, size=(100, 3))
    assert all(d <= riemannian_distance(Q, F.point(t)) + 1e-12 for t in probes)
    assert distance_to_flat(SpacePoint.orbit_point(g, Q), F) == pytest.approx(d, abs=1e-7)


def test_flat_solver_reports_failure():
    F = FlatDescriptor.diagonal(3)
    with pytest.raises(FlatSolveError):
        nearest_flat_point(SpacePoint.orbit_point(random_sl(np.random.default_rng(2), 3)), F, max_iter=0)


def test_translation_length():
    t = translation_length(np.diag(np.exp([1.0, 0.0, -1.0])))
    assert t.length == pytest.approx(np.sqrt(2)) and t.semisimple
    g = np.diag([3.0, 1.0, 1 / 3])
    for k in range(1, 6):
        assert translation_length(np.linalg.matrix_power(g, k)).length == pytest.approx(k * translation_length(g).length)
    t = translation_length(np.array([[1, 1, 0], [0, 1, 1], [0, 0, 1]]))
    assert t.length < 1e-12 and not t.semisimple
    assert not is_semisimple(np.array([[2, 1, 0], [0, 2, 0], [0, 0, 0.25]]))
    assert is_semisimple(np.diag([2.0, 2.0, 0.25]))

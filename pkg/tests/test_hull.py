import numpy as np
import pytest

from polyrelax.densities import phi_double_well, phi_ksd, phi_squared_norm
from polyrelax.exceptions import DegenerateInput
from polyrelax.hull import TAU_DOWN, build_lower_envelope, convex_hull, evaluate_envelope
from polyrelax.lattice import LatticeSpec, generate_lattice, sample_density
from polyrelax.linalg import minors_vector, signed_singular_values
from polyrelax.lp import envelope_lp

from oracles import brute_force_1d, lower_hull_vertices, lp_envelope


def test_raised_midpoint():
    env = build_lower_envelope([[0.0], [0.5], [1.0]], [1.0, 2.0, 0.0])
    assert len(env.facets) == 1
    assert sorted(env.facets[0].vertex_indices) == [0, 2]
    assert list(env.support_indices) == [0, 2]
    v = evaluate_envelope(env, [0.5])
    assert v.value == pytest.approx(0.5)
    np.testing.assert_allclose(sorted(v.weights), [0.5, 0.5])
    assert evaluate_envelope(env, [1.5]).value == np.inf


def test_vertex_query_is_exact():
    env = build_lower_envelope([[0.0], [0.5], [1.0]], [1.0, 2.0, 0.0])
    v = env.evaluate([1.0])
    assert v.value == 0.0 and list(v.weights) == [1.0]


def test_flat_unit_square():
    env = build_lower_envelope([[0, 0], [1, 0], [0, 1], [1, 1]], [0.0, 0.0, 0.0, 0.0])
    assert len(env.facets) == 2
    for f in env.facets:
        np.testing.assert_allclose(f.normal, [0, 0, -1], atol=1e-12)
    for x in np.random.default_rng(0).uniform(0, 1, (20, 2)):
        assert env.evaluate(x).value == pytest.approx(0.0, abs=1e-15)


def test_affine_graph_is_reproduced():
    X = generate_lattice(LatticeSpec(2, 0.5, 1.0)).points
    h = 1.0 + X @ [2.0, -3.0]
    env = build_lower_envelope(X, h)
    for x in np.random.default_rng(1).uniform(-1, 1, (20, 2)):
        assert env.evaluate(x).value == pytest.approx(1 + 2 * x[0] - 3 * x[1], abs=1e-12)


def test_constant_restricted_double_well():
    env = build_lower_envelope([[-1.0], [0.0], [1.0]], [1.0, 1.0, 1.0])
    assert env.evaluate([0.0]).value == 1.0
    assert env.evaluate([0.3]).value == pytest.approx(brute_force_1d([-1, 0, 1], [1, 1, 1], 0.3))


def test_one_dimensional_against_brute_force(rng):
    xs = np.sort(rng.uniform(-1, 1, 12))
    hs = rng.normal(size=12)
    env = build_lower_envelope(xs[:, None], hs)
    for x in rng.uniform(xs[0], xs[-1], 30):
        assert env.evaluate([x]).value == pytest.approx(brute_force_1d(xs, hs, x), abs=1e-12)


def test_degenerate_points_rejected():
    with pytest.raises(DegenerateInput):
        build_lower_envelope([[0, 0], [1, 1], [2, 2], [3, 3]], [0.0, 1.0, 0.0, 1.0])
    with pytest.raises(DegenerateInput):
        build_lower_envelope([[0.0, 0.0]], [1.0])


def test_input_validation():
    with pytest.raises(ValueError):
        build_lower_envelope([[0.0], [1.0]], [0.0])
    with pytest.raises(ValueError):
        build_lower_envelope([[0.0], [1.0], [2.0]], [0.0, np.inf, 1.0])


@pytest.mark.parametrize("dim", [2, 3, 4])
def test_full_hull_contains_all_points(dim, rng):
    P = rng.normal(size=(60, dim))
    simplices, normals, offsets = convex_hull(P)
    np.testing.assert_allclose(np.linalg.norm(normals, axis=1), 1.0, atol=1e-12)
    tau = 1e-10 * (1 + np.abs(P).max())
    assert np.all(P @ normals.T <= offsets + tau * 10)
    assert np.all(np.array([len(set(s)) for s in simplices]) == dim)


def _lattice_graph(phi, d, delta, r):
    return sample_density(generate_lattice(LatticeSpec(d, delta, r)), phi)


@pytest.mark.parametrize("phi,delta,r", [(phi_double_well, 0.25, 2.0), (phi_ksd, 0.1375, 1.1)])
def test_envelope_below_and_lower_normals(phi, delta, r):
    g = _lattice_graph(phi, 2, delta, r)
    env = build_lower_envelope(g.lifted, g.values)
    assert all(f.normal[-1] < 0 for f in env.facets)
    assert all(f.normal[-1] <= -TAU_DOWN for f in env.facets)
    vals = env.evaluate_many(g.lifted)
    assert np.all(vals <= g.values + 1e-9 * (1 + np.abs(g.values)))
    on = env.support_indices
    np.testing.assert_array_equal(vals[on], g.values[on])


def test_support_matches_qhull():
    g = _lattice_graph(phi_double_well, 2, 0.5, 2.0)
    env = build_lower_envelope(g.lifted, g.values)
    ref = lower_hull_vertices(g.lifted, g.values)
    assert set(env.support_indices) == set(ref)


def test_convex_fixed_point():
    g = _lattice_graph(phi_squared_norm, 2, 0.25, 1.0)
    env = build_lower_envelope(g.lifted, g.values)
    assert len(env.support_indices) == len(g)
    np.testing.assert_allclose(env.evaluate_many(g.lifted), g.values, atol=1e-9)


def test_ksd_reference_value(f_hat):
    g = _lattice_graph(phi_ksd, 2, 0.1375, 1.1)
    env = build_lower_envelope(g.lifted, g.values)
    v = env.evaluate(minors_vector(signed_singular_values(f_hat)))
    assert v.value == pytest.approx(0.9 + 7.305e-4, abs=1e-6)


def test_certificate_reconstructs_query(rng):
    g = _lattice_graph(phi_double_well, 2, 0.25, 2.0)
    env = build_lower_envelope(g.lifted, g.values)
    for nu in rng.uniform(-1.5, 1.5, (30, 2)):
        x = minors_vector(nu)
        v = env.evaluate(x)
        assert v.finite
        assert np.all(v.weights >= 0) and v.weights.sum() == pytest.approx(1.0, abs=1e-10)
        np.testing.assert_allclose(v.weights @ g.lifted[v.vertices], x, atol=1e-9 * (1 + np.abs(x).max()))
        assert v.value == pytest.approx(v.weights @ g.values[v.vertices], abs=1e-12)


@pytest.mark.parametrize("n,size", [(3, 200), (7, 25)])
def test_random_instances_against_lp(n, size, rng):
    for _ in range(3):
        if n == 3:
            X = rng.uniform(-1, 1, (size, 3))
        else:
            X = minors_vector(rng.uniform(-1.5, 1.5, (size, 3)))
        h = np.sin(3 * X[:, 0]) + X[:, 1] ** 2 + rng.normal(scale=0.1, size=size)
        env = build_lower_envelope(X, h)
        for _ in range(10):
            x = rng.dirichlet(np.ones(size)) @ X
            a = env.evaluate(x).value
            b = envelope_lp(X, h, x).value
            assert abs(a - b) <= 1e-8 * (1 + abs(b))
            assert abs(a - lp_envelope(X, h, x)) <= 1e-7 * (1 + abs(b))


def test_off_dump(tmp_path):
    env = build_lower_envelope([[0.0], [0.5], [1.0]], [1.0, 2.0, 0.0])
    path = tmp_path / "env.off"
    env.write_off(path)
    lines = path.read_text().splitlines()
    assert lines[0] == "OFF"
    assert lines[1] == "2 1 0"
    assert lines[-1].split()[0] == "2"

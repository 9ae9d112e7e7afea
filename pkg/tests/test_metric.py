import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from finsler_morse.errors import ChartDomainError, ConfigError
from finsler_morse.metric import (
    ChartManifold,
    MetricSpec,
    OneForm,
    TangentVector,
    cartan_tensor,
    check_strong_convexity,
    ellipsoid,
    euclidean_plane,
    eval_F,
    fd_cartan_tensor,
    fd_fundamental_tensor,
    flat_torus,
    fundamental_tensor,
    load_metric,
    randers,
    round_sphere,
    sample_tangent_vectors,
)

METRICS = {
    "euclidean": euclidean_plane(),
    "euclidean3": euclidean_plane(3),
    "torus": flat_torus(),
    "sphere": round_sphere(),
    "ellipsoid": ellipsoid(),
    "randers-plane": randers(euclidean_plane(), OneForm("constant", (0.3, -0.2))),
    "randers-sphere": randers(round_sphere(), OneForm("rotation", strength=0.4)),
    "randers-ellipsoid": randers(ellipsoid(), OneForm("rotation", strength=0.3)),
}


def randers_plane(b):
    return randers(euclidean_plane(), OneForm("constant", (b, 0.0)))


def test_euclidean_norm():
    assert eval_F(euclidean_plane(), TangentVector((0.7, -2.0), (3.0, 4.0))) == pytest.approx(5.0, abs=1e-14)


def test_randers_flat_closed_form():
    b = 0.37
    assert eval_F(randers_plane(b), TangentVector((0, 0), (1, 0))) == pytest.approx(1 + b, abs=1e-14)


@pytest.mark.parametrize("name", sorted(METRICS))
def test_zero_vector_has_zero_norm(name):
    m = METRICS[name]
    x = sample_tangent_vectors(m.manifold, 1)[0][0]
    assert eval_F(m, TangentVector(x, np.zeros(m.dimension))) == 0.0


def test_euclidean_fundamental_tensor_is_identity():
    g = fundamental_tensor(euclidean_plane(), TangentVector((0.2, 0.1), (-1.3, 0.4)))
    np.testing.assert_allclose(g, np.eye(2), atol=1e-14)


def test_randers_fundamental_tensor_closed_form_and_fd():
    # F = |v| + v1/2 at v = (1, 0): l = (3/2, 0), h = diag(0, 1), g = l l + F h
    m = randers_plane(0.5)
    g = fundamental_tensor(m, TangentVector((0, 0), (1, 0)))
    np.testing.assert_allclose(g, np.diag([2.25, 1.5]), atol=1e-14)
    np.testing.assert_allclose(fd_fundamental_tensor(m, (0, 0), (1, 0)), g, atol=1e-6)


def test_round_sphere_tensor_is_metric_coefficients():
    th = 1.1
    g = fundamental_tensor(round_sphere(), TangentVector((th, 0.3), (1.0, 0.0)))
    np.testing.assert_allclose(g, np.diag([1.0, np.sin(th) ** 2]), atol=1e-14)


def _fd_hessian_sq(m, x, v, h=1e-4):
    """Independent oracle: central second differences of F^2 / 2 using only F."""
    n = len(v)
    E = np.eye(n)
    f = lambda w: 0.5 * float(m.F(np.asarray(x, float), w)) ** 2
    H = np.empty((n, n))
    for i in range(n):
        for j in range(n):
            H[i, j] = (
                f(v + h * E[i] + h * E[j]) - f(v + h * E[i] - h * E[j]) - f(v - h * E[i] + h * E[j]) + f(v - h * E[i] - h * E[j])
            ) / (4 * h * h)
    return H


@pytest.mark.parametrize("name", sorted(METRICS))
def test_closed_form_tensor_matches_independent_fd(name):
    m = METRICS[name]
    xs, vs = sample_tangent_vectors(m.manifold, 5, seed=3)
    for x, v in zip(xs, vs):
        np.testing.assert_allclose(fundamental_tensor(m, TangentVector(x, v)), _fd_hessian_sq(m, x, v), atol=1e-6)


@pytest.mark.parametrize("name", ["torus", "sphere", "ellipsoid"])
def test_riemannian_cartan_vanishes(name):
    m = METRICS[name]
    xs, vs = sample_tangent_vectors(m.manifold, 4)
    for x, v in zip(xs, vs):
        assert np.max(np.abs(cartan_tensor(m, TangentVector(x, v)))) == 0.0


def test_randers_cartan_against_fd_and_symmetric():
    m = randers_plane(0.5)
    for v in ([1.0, 0.0], [0.6, 0.8], [-0.3, 1.1]):
        C = cartan_tensor(m, TangentVector((0, 0), v))
        Cfd = fd_cartan_tensor(m, (0.0, 0.0), np.array(v))
        np.testing.assert_allclose(C, Cfd, atol=1e-5)
        for perm in [(1, 0, 2), (0, 2, 1), (2, 1, 0)]:
            assert np.max(np.abs(Cfd - Cfd.transpose(perm))) < 1e-5
        assert np.max(np.abs(np.einsum("i,ijk->jk", v, C))) < 1e-8


def test_convexity_pass_and_fail():
    assert check_strong_convexity(euclidean_plane()).min_eigenvalue == pytest.approx(1.0)
    ok = check_strong_convexity(randers_plane(0.5))
    bad = check_strong_convexity(randers_plane(1.2))
    assert ok.passed and ok.witness is None
    assert not bad.passed and bad.witness is not None and bad.min_eigenvalue < 0


def test_metric_roundtrip_and_hash():
    for m in METRICS.values():
        again = load_metric(json.dumps(m.to_dict()))
        assert again == m and again.metric_id == m.metric_id
    assert METRICS["sphere"].metric_id != METRICS["ellipsoid"].metric_id


@pytest.mark.parametrize(
    "bad",
    [
        {},
        {"manifold": {"chart": "klein-bottle"}},
        {"manifold": {"chart": "sphere-chart", "radius": -1}},
        {"manifold": {"chart": "periodic-lattice", "lattice": [[1, 0], [2, 0]]}},
        {"manifold": {"chart": "euclidean-plane"}, "kind": "randers"},
        {"manifold": {"chart": "euclidean-plane"}, "kind": "randers", "parameters": {"beta": {"type": "rotation", "strength": 0.1}}},
    ],
)
def test_invalid_configs_raise(bad):
    with pytest.raises(ConfigError):
        load_metric(bad)


def test_points_outside_chart_raise():
    with pytest.raises(ChartDomainError):
        round_sphere().manifold.check_point(np.array([0.01, 0.0]))
    with pytest.raises(ChartDomainError):
        flat_torus().manifold.check_point(np.array([0.0, 0.0, 0.0]))


def test_reversibility_flag():
    assert METRICS["sphere"].reversibility_flag
    assert not METRICS["randers-sphere"].reversibility_flag


# -- properties ------------------------------------------------------------------------

finite = st.floats(-3.0, 3.0, allow_nan=False)


@settings(max_examples=60, deadline=None)
@given(name=st.sampled_from(sorted(METRICS)), idx=st.integers(0, 63), lam=st.floats(0.01, 50.0))
def test_positive_homogeneity(name, idx, lam):
    m = METRICS[name]
    xs, vs = sample_tangent_vectors(m.manifold, 64, seed=7)
    x, v = xs[idx], vs[idx]
    assert float(m.F(x, lam * v)) == pytest.approx(lam * float(m.F(x, v)), rel=1e-12)


@settings(max_examples=60, deadline=None)
@given(name=st.sampled_from(sorted(METRICS)), idx=st.integers(0, 63), scale=st.floats(0.1, 10.0))
def test_tensor_reproduces_norm(name, idx, scale):
    m = METRICS[name]
    xs, vs = sample_tangent_vectors(m.manifold, 64, seed=11)
    x, v = xs[idx], scale * vs[idx]
    g = m.g(x, v)
    assert v @ g @ v == pytest.approx(float(m.F(x, v)) ** 2, rel=1e-12)
    np.testing.assert_allclose(g, g.T, atol=1e-14)
    assert np.linalg.eigvalsh(g)[0] > 0


@settings(max_examples=40, deadline=None)
@given(name=st.sampled_from(["randers-plane", "randers-sphere", "randers-ellipsoid"]), idx=st.integers(0, 31))
def test_cartan_symmetry_and_contraction(name, idx):
    m = METRICS[name]
    xs, vs = sample_tangent_vectors(m.manifold, 32, seed=5)
    x, v = xs[idx], vs[idx]
    C = m.cartan(x, v)
    for perm in [(1, 0, 2), (0, 2, 1), (2, 1, 0)]:
        np.testing.assert_allclose(C, C.transpose(perm), atol=1e-14)
    np.testing.assert_allclose(np.einsum("i,ijk->jk", v, C), 0.0, atol=1e-12)


@settings(max_examples=30, deadline=None)
@given(b1=st.floats(-0.95, 0.95), b2=st.floats(-0.95, 0.95))
def test_randers_convexity_criterion(b1, b2):
    norm = np.hypot(b1, b2)
    if abs(norm - 1) < 0.05:
        return
    rep = check_strong_convexity(randers(euclidean_plane(), OneForm("constant", (b1, b2))))
    assert rep.passed == (norm < 1)


def test_chart_manifold_periods():
    m = ChartManifold(2, "periodic-lattice", lattice=((1.0, 0.0), (0.5, 1.0)))
    assert m.is_period(np.array([1.5, 1.0]))
    assert m.chart_distance(np.array([0.0, 0.0]), np.array([0.9, 0.0])) == pytest.approx(0.1)


def test_metric_spec_requires_beta_for_randers():
    with pytest.raises(ConfigError):
        MetricSpec(euclidean_plane().manifold, kind="randers")

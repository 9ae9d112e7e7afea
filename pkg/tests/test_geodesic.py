import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import EQ_P, EQ_Q, sphere_arc
from finsler_morse import geodesic as geo
from finsler_morse.errors import ChartExitError, IncompleteSearchWarning, NotAGeodesicError, NotClosedError
from finsler_morse.geodesic import GeodesicPath
from finsler_morse.metric import (
    OneForm,
    TangentVector,
    ellipsoid,
    euclidean_plane,
    flat_torus,
    randers,
    round_sphere,
    sample_tangent_vectors,
)

# brute-force enumeration of |(0.3 + i, 0.4 + j)| < 2 over integer (i, j)
TORUS_LENGTHS = [
    0.5, 0.67082039325, 0.80622577483, 0.921954445729, 1.360147050874, 1.431782106328, 1.431782106328,
    1.56524758425, 1.62788205961, 1.746424919657, 1.746424919657, 1.802775637732, 1.910497317454,
]

SPRAY_METRICS = [
    flat_torus(),
    euclidean_plane(3),
    round_sphere(),
    round_sphere(2.5),
    ellipsoid(),
    ellipsoid((1.3, 0.9, 1.1)),
    randers(round_sphere(), OneForm("rotation", strength=0.3)),
    randers(ellipsoid(), OneForm("rotation", strength=0.2)),
    randers(flat_torus(), OneForm("constant", (0.2, -0.1))),
]


@pytest.mark.parametrize("metric", SPRAY_METRICS, ids=lambda m: m.name)
def test_compiled_spray_matches_numpy(metric):
    xs, vs = sample_tangent_vectors(metric.manifold, 200, seed=2)
    a = geo.spray_batch(metric, xs, 3.0 * vs)
    b = geo.spray_compiled(metric, xs, 3.0 * vs)
    np.testing.assert_allclose(b, a, atol=1e-12 * max(1.0, np.max(np.abs(a))))


@pytest.mark.parametrize("metric", SPRAY_METRICS, ids=lambda m: m.name)
def test_spray_jacobians_match_fd(metric):
    xs, vs = sample_tangent_vectors(metric.manifold, 4, seed=9)
    Sx, Sv = geo.spray_jacobians(metric, xs, vs)
    h = 1e-6
    n = metric.dimension
    for k in range(n):
        e = np.zeros(n)
        e[k] = h
        fx = (geo.spray_batch(metric, xs + e, vs) - geo.spray_batch(metric, xs - e, vs)) / (2 * h)
        fv = (geo.spray_batch(metric, xs, vs + e) - geo.spray_batch(metric, xs, vs - e)) / (2 * h)
        np.testing.assert_allclose(Sx[..., k], fx, atol=1e-6)
        np.testing.assert_allclose(Sv[..., k], fv, atol=1e-6)


def test_flat_spray_is_zero():
    for m in (flat_torus(), euclidean_plane(3)):
        xs, vs = sample_tangent_vectors(m.manifold, 10)
        assert np.all(geo.spray_batch(m, xs, vs) == 0)


def test_sphere_spray_is_classical_christoffel():
    # theta'' = sin cos phi'^2, phi'' = -2 cot theta theta' phi'
    th, w0, w1 = 1.0, 0.4, 1.3
    s = geo.spray(round_sphere(), TangentVector((th, 0.2), (w0, w1)))
    np.testing.assert_allclose(s, [np.sin(th) * np.cos(th) * w1**2, -2 * w0 * w1 / np.tan(th)], atol=1e-14)


@settings(max_examples=30, deadline=None)
@given(idx=st.integers(0, 49), which=st.integers(0, len(SPRAY_METRICS) - 1))
def test_spray_is_quadratic(idx, which):
    m = SPRAY_METRICS[which]
    xs, vs = sample_tangent_vectors(m.manifold, 50, seed=4)
    np.testing.assert_allclose(
        geo.spray_batch(m, xs[idx], 2 * vs[idx]), 4 * geo.spray_batch(m, xs[idx], vs[idx]), atol=1e-12
    )


def test_ivp_flat_torus():
    g = geo.integrate_ivp(flat_torus(), TangentVector((0, 0), (0.3, 0.4)))
    np.testing.assert_allclose(g.x[-1], [0.3, 0.4], atol=1e-14)
    assert g.length == pytest.approx(0.5, abs=1e-12)


def test_ivp_sphere_equator_closes(equator):
    assert equator.is_closed
    assert equator.length == pytest.approx(2 * np.pi, abs=1e-9)


def test_ivp_half_great_circle_reaches_antipode(sphere):
    p = np.array([1.2, 0.4])
    # unit-speed direction at angle 0.3 from d/dtheta, scaled to length pi
    v = np.array([np.cos(0.3), np.sin(0.3) / np.sin(p[0])]) * np.pi
    g = geo.integrate_ivp(sphere, TangentVector(p, v))
    P = sphere.manifold.embed(p)
    np.testing.assert_allclose(sphere.manifold.embed(g.x[-1]), -P, atol=1e-6)


def test_chart_exit_raises(sphere):
    with pytest.raises(ChartExitError) as exc:
        geo.integrate_ivp(sphere, TangentVector(EQ_P, (4.0, 0.0)))
    assert 0 < exc.value.exit_time < 1


def test_torus_bvp_matches_lattice_enumeration(torus):
    res = geo.solve_bvp(torus, (0, 0), (0.3, 0.4), 2.0)
    np.testing.assert_allclose(sorted(g.length for g in res.paths), TORUS_LENGTHS, atol=1e-8)
    assert all(r < 1e-8 for r in res.residuals)


def test_sphere_bvp_below_first_wrap(sphere):
    res = geo.solve_bvp(sphere, EQ_P, EQ_Q, 2 * np.pi + 1 - 0.01)
    np.testing.assert_allclose(sorted(g.length for g in res.paths), [1.0, 2 * np.pi - 1], atol=1e-7)


def test_bvp_below_shortest_is_empty_without_warning(torus):
    with warnings.catch_warnings():
        warnings.simplefilter("error", IncompleteSearchWarning)
        res = geo.solve_bvp(torus, (0, 0), (0.3, 0.4), 0.45)
    assert res.paths == []


def test_bvp_randers_torus_counts():
    m = randers(flat_torus(), OneForm("constant", (0.2, -0.1)))
    res = geo.solve_bvp(m, (0, 0), (0.3, 0.4), 2.5)
    # brute-force enumeration of F(d) < 2.5 over lattice translates gives 22
    assert len(res.paths) == 22


def test_iterates_and_concatenation(sphere, equator, torus):
    assert geo.iterate_closed(equator, 3).length == pytest.approx(6 * np.pi, abs=1e-8)
    assert geo.iterate_closed(equator, 1) is equator
    gamma0 = sphere_arc(sphere, 1.0)
    for m in (0, 1, 3):
        assert geo.concatenate_iterate(gamma0, geo.rebase(equator, 1 / (2 * np.pi)), m).length == pytest.approx(
            1 + 2 * np.pi * m, abs=1e-8
        )
    loop = geo.find_closed_geodesic(torus, (0, 0), (1, 0), (1, 0))
    assert geo.iterate_closed(loop, 5).length == pytest.approx(5.0, abs=1e-12)
    g0 = geo.integrate_ivp(torus, TangentVector((0, 0), (0.3, 0)))
    loop_q = geo.find_closed_geodesic(torus, (0.3, 0), (1, 0), (1, 0))
    assert geo.concatenate_iterate(g0, loop_q, 2).length == pytest.approx(2.3, abs=1e-12)


def test_concatenation_rejects_broken_junction(sphere, equator):
    with pytest.raises(NotAGeodesicError):
        geo.concatenate_iterate(sphere_arc(sphere, 1.0), equator, 1)


def test_iterate_needs_closed(sphere):
    with pytest.raises(NotClosedError):
        geo.iterate_closed(sphere_arc(sphere, 1.0), 2)


def test_split(sphere):
    g = sphere_arc(sphere, 1.5 * np.pi)
    a, b = geo.split_at(g, 2 / 3)
    assert a.length == pytest.approx(np.pi, abs=1e-9) and b.length == pytest.approx(0.5 * np.pi, abs=1e-9)
    c, d = geo.split_at(g, 0.5)
    assert c.length == pytest.approx(d.length, abs=1e-9)
    assert c.length + d.length == pytest.approx(g.length, abs=1e-9)


def test_verify_geodesic_rejects_perturbed_samples(sphere):
    g = sphere_arc(sphere, 2.0)
    geo.verify_geodesic(sphere, g)
    bent = GeodesicPath(sphere, g.t, g.x + 1e-3 * np.sin(np.pi * g.t)[:, None], g.v, g.length, g.energy, False)
    with pytest.raises(NotAGeodesicError):
        geo.verify_geodesic(sphere, bent)


def test_principal_ellipses_have_ellipse_perimeters():
    out = geo.principal_closed_geodesics((1.0, 1.1, 1.3))
    lengths = [c.length for _, _, c in out]
    expected = sorted(geo.ellipse_perimeter(a, b) for a, b in [(1.0, 1.1), (1.0, 1.3), (1.1, 1.3)])
    np.testing.assert_allclose(lengths, expected, rtol=1e-9)
    assert all(c.is_closed for _, _, c in out)


def test_path_serialisation_roundtrip(sphere):
    g = sphere_arc(sphere, 1.0, steps=64)
    again = GeodesicPath.from_dict(sphere, g.to_dict())
    np.testing.assert_array_equal(again.x, g.x)
    assert g.to_csv().splitlines()[0] == "t,x0,x1,v0,v1"


@settings(max_examples=20, deadline=None)
@given(speed=st.floats(0.2, 3.0), ang=st.floats(0, 2 * np.pi))
def test_randers_speed_is_conserved(speed, ang):
    m = randers(round_sphere(), OneForm("rotation", strength=0.3))
    v = speed * np.array([np.cos(ang), np.sin(ang)])
    try:
        g = geo.integrate_ivp(m, TangentVector(EQ_P, v))
    except ChartExitError:
        return
    F = g.speeds
    assert np.max(np.abs(F - F[0])) < 1e-8 * max(1.0, F[0])

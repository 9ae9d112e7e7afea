import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import EQ_P, EQ_Q, sphere_arc
from finsler_morse import census as cen
from finsler_morse import geodesic as geo
from finsler_morse.errors import IndexCoverageError
from finsler_morse.metric import OneForm, TangentVector, ellipsoid, flat_torus, randers, round_sphere

TWO_PI = 2 * np.pi


@pytest.fixture(scope="module")
def sphere_census(sphere):
    return cen.build_census(sphere, EQ_P, EQ_Q, 8 * np.pi)


@pytest.fixture(scope="module")
def torus_census(torus):
    return cen.build_census(torus, (0, 0), (0.3, 0.4), 2.0)


@pytest.fixture(scope="module")
def pq_loop(torus):
    return cen.closed_geodesic_through(torus, (0, 0), (0.3, 0.4))


def test_lattice_oracle_counts():
    assert len(cen.lattice_oracle(flat_torus(), (0, 0), (0.3, 0.4), 2.0)) == 13
    assert len(cen.lattice_oracle(randers(flat_torus(), OneForm("constant", (0.2, -0.1))), (0, 0), (0.3, 0.4), 2.5)) == 22
    assert cen.lattice_oracle(round_sphere(), EQ_P, EQ_Q, 2.0) is None


def test_great_circle_oracle():
    out = cen.great_circle_oracle(round_sphere(), EQ_P, EQ_Q, 4 * np.pi)
    np.testing.assert_allclose([o.length for o in out], [1, TWO_PI - 1, TWO_PI + 1, 2 * TWO_PI - 1], atol=1e-12)
    assert [o.index for o in out] == [0, 1, 2, 3]
    # a great circle passing within the pole exclusion leaves the chart, so no arc survives
    a, b = (0.5, 0.0), (0.5, np.pi - 0.2)
    xa = np.array([np.sin(a[0]) * np.cos(a[1]), np.sin(a[0]) * np.sin(a[1]), np.cos(a[0])])
    xb = np.array([np.sin(b[0]) * np.cos(b[1]), np.sin(b[0]) * np.sin(b[1]), np.cos(b[0])])
    normal = np.cross(xa, xb)
    top = np.arccos(np.sqrt(1 - (normal[2] / np.linalg.norm(normal)) ** 2))
    assert top < round_sphere().manifold.pole_exclusion
    assert cen.great_circle_oracle(round_sphere(), a, b, 12.0) == []
    d = np.arccos(np.cos(0.15) * np.cos(0.2) + np.sin(0.15) * np.sin(0.2) * np.cos(1.0))
    out = cen.great_circle_oracle(round_sphere(), (0.15, 0.0), (0.2, 1.0), 4.0)
    assert len(out) == 1 and out[0].length == pytest.approx(d, abs=1e-12)
    assert cen.great_circle_oracle(round_sphere(), EQ_P, (np.pi / 2, np.pi), 4.0) is None


def test_torus_census(torus_census):
    assert torus_census.count == 13
    assert torus_census.completeness == cen.ORACLE_EXACT
    assert set(torus_census.indices) == {0}
    assert torus_census.non_conjugate


def test_sphere_census(sphere_census):
    exp = [1, TWO_PI - 1, TWO_PI + 1, 2 * TWO_PI - 1, 2 * TWO_PI + 1, 3 * TWO_PI - 1, 3 * TWO_PI + 1, 4 * TWO_PI - 1]
    np.testing.assert_allclose(sphere_census.lengths, exp, atol=1e-6)
    assert sphere_census.indices == list(range(8))
    assert sphere_census.completeness == cen.ORACLE_EXACT
    assert all(e.nullity == 0 for e in sphere_census.entries)


def test_census_step_function(sphere_census):
    pts = sphere_census.N_of_L
    assert pts[0] == (0.0, 0) and pts[-1][1] == sphere_census.count
    assert all(b[1] >= a[1] and b[0] >= a[0] for a, b in zip(pts, pts[1:]))
    for L in np.linspace(0.5, 8 * np.pi, 40):
        assert sphere_census.N(L) == sum(v for k, v in sphere_census.N_k.items() if k <= 7 and L > [e.length for e in sphere_census.entries if e.index == k][0])


def test_empty_census(torus):
    t = cen.build_census(torus, (0, 0), (0.3, 0.4), 0.4)
    assert t.count == 0 and t.completeness == cen.ORACLE_EXACT
    assert t.to_csv().splitlines()[1:] == ["length,index,nullity"]


def test_census_serialisation(torus_census):
    lines = torus_census.to_csv().splitlines()
    assert lines[0] == f"# metric {flat_torus().metric_id}" and len(lines) == 2 + 13
    d = torus_census.to_dict()
    assert d["N_k"] == {"0": 13}


def test_randers_census_is_oracle_exact():
    m = randers(flat_torus(), OneForm("constant", (0.2, -0.1)))
    t = cen.build_census(m, (0, 0), (0.3, 0.4), 2.5)
    assert t.count == 22 and t.completeness == cen.ORACLE_EXACT


def test_ellipsoid_census_is_search_based():
    t = cen.build_census(ellipsoid(), EQ_P, EQ_Q, 3.0)
    assert t.completeness == cen.SEARCH_BASED and t.count >= 1


def test_covered_bound_sphere(sphere_census, equator):
    rep = cen.covered_bound_check(sphere_census, [equator])
    assert rep.outcome == cen.PASS and rep.covering_count == 1
    assert rep.shortest_prime_length == pytest.approx(TWO_PI, abs=1e-6)
    assert len(rep.rows) == 8
    for L, N, bound, margin in rep.rows:
        assert N <= 2 * (1 + L / TWO_PI) and margin >= 0


def test_covered_bound_torus(torus, pq_loop):
    t = cen.build_census(torus, (0, 0), (0.3, 0.4), 6.0, grid_density=96)
    assert t.completeness == cen.ORACLE_EXACT
    covering = [pq_loop, cen.reverse_closed(pq_loop)]
    assert cen.covered_bound_check(t, covering).outcome == cen.NOT_APPLICABLE
    rep = cen.covered_bound_check(t, covering, restrict=True)
    assert rep.outcome == cen.PASS
    # along the (3, 4) line only the displacements (0.3, 0.4) * (1 + 10 k) are covered
    np.testing.assert_allclose([r[0] for r in rep.rows], [0.5, 4.5, 5.5], atol=1e-8)


def test_covered_bound_empty_covering(torus_census):
    assert cen.covered_bound_check(torus_census, []).outcome == cen.NOT_APPLICABLE


def test_geometrically_distinct(torus_census, pq_loop):
    distinct = cen.geometrically_distinct(torus_census, [pq_loop])
    assert len(distinct) == 12


def test_subadditivity_examples(sphere, torus):
    g = sphere_arc(sphere, 2.5 * np.pi)
    rep = cen.subadditivity_check(sphere, g, [0.5, 0.3])
    assert [(r.lambda_gamma, r.lambda_first, r.lambda_second) for r in rep.rows] == [(2, 1, 1), (2, 0, 1)]
    assert rep.outcome == cen.PASS
    flat = geo.integrate_ivp(torus, TangentVector((0, 0), (1.3, 2.1)))
    rep = cen.subadditivity_check(torus, flat, [0.2, 0.5, 0.9])
    assert all((r.lambda_gamma, r.lambda_first, r.lambda_second) == (0, 0, 0) for r in rep.rows)


@settings(max_examples=15, deadline=None)
@given(angle=st.floats(0.3, 3.9), t0=st.floats(0.05, 0.95))
def test_subadditivity_property(angle, t0):
    sphere = round_sphere()
    # stay away from splits that put a conjugate point exactly on an end
    for a in (angle * t0, angle * (1 - t0), angle):
        if abs(a - round(a)) < 0.02:
            return
    rep = cen.subadditivity_check(sphere, sphere_arc(sphere, angle * np.pi), [t0])
    assert rep.outcome == cen.PASS
    r = rep.rows[0]
    assert r.lambda_first == int(angle * t0) and r.lambda_second == int(angle * (1 - t0))


def test_growth_sphere(sphere, equator):
    rep = cen.iterate_growth(sphere, equator, EQ_P, EQ_Q, 6)
    assert rep.lambda_periodic == [2 * m - 1 for m in range(1, 7)]
    assert rep.lambda_arcs == [2 * m for m in range(0, 7)]
    assert rep.concavities == [0] * 6
    assert rep.fitted_slope == pytest.approx(2.0) and not rep.all_zero
    assert rep.chain_holds and rep.outcome == cen.PASS
    lt = rep.lambda_periodic
    assert all(lt[i] - lt[j] >= 2 * (i - j) - 1 for i in range(6) for j in range(i))


def test_growth_torus(torus, pq_loop):
    rep = cen.iterate_growth(torus, pq_loop, (0, 0), (0.3, 0.4), 4)
    assert rep.all_zero and rep.remark_holds
    assert rep.lambda_arcs == [0] * 5


def test_growth_rejects_points_off_the_loop(torus, pq_loop):
    with pytest.raises(ValueError):
        cen.iterate_growth(torus, pq_loop, (0, 0), (0.5, 0.4), 4)


def test_fit_growth():
    assert cen.fit_growth([1, 2, 3], [0, 0, 0]) == (0.0, 0.0)
    a1, a2 = cen.fit_growth([1, 2, 3, 4], [1, 1, 4, 4])
    assert a1 == pytest.approx(1.0) and a2 == pytest.approx(1.0)


def test_betti_tables():
    assert cen.betti_table("S2", 6).values == (1,) * 7
    assert cen.betti_table("S3", 5).values == (1, 0, 1, 0, 1, 0)
    assert cen.betti_table("T2").report_only
    with pytest.raises(ValueError):
        cen.betti_table("K3")


def test_morse_inequalities(sphere_census, torus_census):
    rep = cen.morse_inequality_check(sphere_census, cen.betti_table("S2"), 6)
    assert rep.outcome == cen.PASS
    assert [(k, b, n) for k, b, n, _ in rep.rows] == [(k, 1, 1) for k in range(7)]
    assert cen.morse_inequality_check(torus_census, cen.betti_table("T2"), 0).outcome == cen.NOT_APPLICABLE
    with pytest.raises(IndexCoverageError):
        cen.morse_inequality_check(sphere_census, cen.betti_table("S2"), 9)


def test_boundedness_demo(sphere, equator, torus, pq_loop):
    rep = cen.boundedness_contradiction_demo(sphere, [equator], EQ_P, EQ_Q, 6)
    assert rep.outcome == cen.PASS
    assert rep.N_k == {k: 1 for k in range(7)} and rep.K == 4
    rep = cen.boundedness_contradiction_demo(torus, [pq_loop], (0, 0), (0.3, 0.4), 3)
    assert rep.outcome == cen.PASS and all(rep.N_k[k] == 0 for k in (1, 2, 3)) and rep.zero_ladder_N0 > 0
    assert cen.boundedness_contradiction_demo(sphere, [], EQ_P, EQ_Q, 3).outcome == cen.NOT_APPLICABLE


def test_projection_onto_closed(equator):
    t, d = cen.project_onto_closed(equator, [[np.pi / 2, 1.0], [np.pi / 2, 2 * np.pi - 0.2], [1.5, 3.0]])
    np.testing.assert_allclose(t[:2], [1 / TWO_PI, 1 - 0.2 / TWO_PI], atol=1e-9)
    np.testing.assert_allclose(d, [0, 0, np.pi / 2 - 1.5], atol=1e-9)

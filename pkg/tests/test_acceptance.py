"""Acceptance criteria, one test each.

Every test prints a single ``[acceptance N] PASS|FAIL ...`` line before asserting,
so ``pytest -s -k acceptance`` gives a compact verdict table.
"""

import time
import warnings

import numpy as np
import pytest

from conftest import EQ_P, EQ_Q, sphere_arc
from finsler_morse import census as cen
from finsler_morse import geodesic as geo
from finsler_morse import jacobi as jac
from finsler_morse.index import index_report, verify_index_decomposition
from finsler_morse.metric import (
    OneForm,
    TangentVector,
    cartan_tensor,
    check_strong_convexity,
    ellipsoid,
    euclidean_plane,
    eval_F,
    flat_torus,
    fundamental_tensor,
    randers,
    round_sphere,
    sample_tangent_vectors,
)

TWO_PI = 2 * np.pi


def verdict(number, ok, detail):
    print(f"[acceptance {number}] {'PASS' if ok else 'FAIL'} {detail}")
    return ok


@pytest.fixture(scope="module")
def ellipses():
    return geo.principal_closed_geodesics()


def lattice_lengths(p, q, max_length):
    """Brute-force lengths of the straight segments from p to the lifts of q."""
    d = np.asarray(q) - np.asarray(p)
    r = int(np.ceil(max_length)) + 1
    out = [np.hypot(d[0] + i, d[1] + j) for i in range(-r, r + 1) for j in range(-r, r + 1)]
    return sorted(x for x in out if x < max_length)


def test_acceptance_1_torus_census():
    start = time.perf_counter()
    t = cen.build_census(flat_torus(), (0, 0), (0.3, 0.4), 2.0)
    elapsed = time.perf_counter() - start
    oracle = lattice_lengths((0, 0), (0.3, 0.4), 2.0)
    lengths_ok = len(oracle) == t.count and np.max(np.abs(np.array(t.lengths) - oracle)) <= 1e-8
    ok = t.count == 11 and set(t.indices) == {0} and lengths_ok and elapsed < 10
    verdict(1, ok, f"count={t.count} (required 11, lattice enumeration {len(oracle)}) indices={sorted(set(t.indices))} lengths_match={lengths_ok} time={elapsed:.1f}s")
    assert set(t.indices) == {0}
    assert lengths_ok
    assert elapsed < 10
    assert t.count == 11


def test_acceptance_2_sphere_index_ladder():
    sphere = round_sphere()
    start = time.perf_counter()
    t = cen.build_census(sphere, EQ_P, EQ_Q, 4 * np.pi)
    agreement = []
    for e in t.entries:
        rep = index_report(jac.linearize(sphere, e.path), segments=200)
        agreement.append((rep.lambda_dirichlet, rep.method_agreement))
    elapsed = time.perf_counter() - start
    expected = [1, TWO_PI - 1, TWO_PI + 1, 2 * TWO_PI - 1]
    lengths_ok = t.count == 4 and np.allclose(t.lengths, expected, atol=1e-6)
    idx_ok = t.indices == [0, 1, 2, 3]
    agree_ok = all(set(m.values()) == {lam} for lam, m in agreement)
    ok = lengths_ok and idx_ok and agree_ok and elapsed < 60
    verdict(2, ok, f"lengths={np.round(t.lengths, 6).tolist()} indices={t.indices} methods={[m for _, m in agreement]} time={elapsed:.1f}s")
    assert ok


def test_acceptance_3_index_decomposition(ellipses, torus_loop, equator):
    cases = [("torus loop", torus_loop, "0 = 0 + 0 - 0 + 0 PASS"), ("equator", equator, "1 = 1 + 1 - 1 + 0 PASS")]
    cases += [(label, c, None) for label, _, c in ellipses]
    results = []
    for label, c, expected in cases:
        r = verify_index_decomposition(c)
        good = r.outcome == "pass" and r.identity_holds and (expected is None or r.ledger() == expected)
        results.append((label, r.ledger(), good))
    ok = all(g for *_, g in results)
    verdict(3, ok, "; ".join(f"{lab}: {led}" for lab, led, _ in results))
    assert ok


def test_acceptance_4_concavity_bound(ellipses, torus_loop, equator):
    cases = [("torus", torus_loop, True), ("sphere", equator, True)] + [(lab, c, False) for lab, _, c in ellipses]
    table = {}
    ok = True
    for label, c, exact_zero in cases:
        cons = []
        for m in range(1, 9):
            r = verify_index_decomposition(geo.iterate_closed(c, m))
            cons.append(r.concavity)
            ok &= r.outcome == "pass" and 0 <= r.concavity <= 2 * c.metric.dimension
            ok &= not exact_zero or r.concavity == 0
        table[label] = cons
    verdict(4, ok, " ".join(f"{k}={v}" for k, v in table.items()))
    assert ok


def test_acceptance_5_arc_subadditivity():
    sphere = round_sphere()
    ell = ellipsoid()
    rows = []
    for angle in (0.5, 1.5, 2.5, 3.3, 3.9):
        rep = cen.subadditivity_check(sphere, sphere_arc(sphere, angle * np.pi), [0.2, 0.37, 0.5, 0.71])
        rows += rep.rows
    for scale in (1.0, 2.0, 3.0):
        gamma = geo.integrate_ivp(ell, TangentVector((1.4, 0.5), (0.3 * scale, 3.0 * scale)))
        rows += cen.subadditivity_check(ell, gamma, [0.25, 0.5, 0.8]).rows
    violations = sum(r.outcome == cen.FAIL for r in rows)
    decided = sum(r.outcome == cen.PASS for r in rows)
    ok = len(rows) >= 20 and violations == 0 and decided == len(rows)
    verdict(5, ok, f"pairs={len(rows)} violations={violations} inconclusive={len(rows) - decided - violations}")
    assert ok


def test_acceptance_6_iterate_growth(equator):
    sphere = round_sphere()
    torus = flat_torus()
    rep = cen.iterate_growth(sphere, equator, EQ_P, EQ_Q, 8)
    alpha = 1.0
    sphere_ok = (
        rep.lambda_periodic == [2 * m - 1 for m in range(1, 9)]
        and rep.lambda_arcs == [2 * m + int(alpha // np.pi) for m in range(0, 9)]
        and rep.fitted_slope >= 2 - 1e-9
        and not rep.all_zero
    )
    loop = cen.closed_geodesic_through(torus, (0, 0), (0.3, 0.4))
    flat = cen.iterate_growth(torus, loop, (0, 0), (0.3, 0.4), 8)
    torus_ok = flat.all_zero and flat.remark_holds and flat.lambda_arcs == [0] * 9
    ok = sphere_ok and torus_ok
    verdict(6, ok, f"sphere periodic={rep.lambda_periodic} arcs={rep.lambda_arcs} a1={rep.fitted_slope:.12g}; torus all_zero={flat.all_zero} arcs={flat.lambda_arcs}")
    assert ok


def test_acceptance_7_covered_bound(equator):
    t = cen.build_census(round_sphere(), EQ_P, EQ_Q, 8 * np.pi)
    rep = cen.covered_bound_check(t, [equator])
    jumps_ok = len(rep.rows) == t.count and all(N <= 2 * (1 + L / TWO_PI) for L, N, _, _ in rep.rows)
    ok = rep.outcome == cen.PASS and t.completeness == cen.ORACLE_EXACT and jumps_ok
    verdict(7, ok, f"jumps={len(rep.rows)} min_margin={min(r[3] for r in rep.rows):.4f} completeness={t.completeness}")
    assert ok


def test_acceptance_8_morse_inequality():
    t = cen.build_census(round_sphere(), EQ_P, EQ_Q, 7 * np.pi)
    rep = cen.morse_inequality_check(t, cen.betti_table("S2"), 6)
    rows_ok = [(k, b, n) for k, b, n, _ in rep.rows] == [(k, 1, 1) for k in range(7)]
    ok = rep.outcome == cen.PASS and t.completeness == cen.ORACLE_EXACT and rows_ok
    verdict(8, ok, f"N_k={[n for _, _, n, _ in rep.rows]} completeness={t.completeness}")
    assert ok


def test_acceptance_9_numerical_hygiene():
    start = time.perf_counter()
    metrics = [
        euclidean_plane(),
        flat_torus(),
        round_sphere(),
        ellipsoid(),
        randers(euclidean_plane(), OneForm("constant", (0.3, -0.2))),
        randers(round_sphere(), OneForm("rotation", strength=0.4)),
        randers(ellipsoid(), OneForm("rotation", strength=0.3)),
    ]
    checks = {}
    hom = gvv = cart = 0.0
    for metric in metrics:
        xs, vs = sample_tangent_vectors(metric.manifold, 32, seed=3)
        for x, v in zip(xs, vs):
            tv = TangentVector(x, v)
            F = eval_F(metric, tv)
            for lam in (0.1, 2.0, 37.0):
                hom = max(hom, abs(eval_F(metric, tv.scaled(lam)) - lam * F) / (lam * F))
            g = fundamental_tensor(metric, tv)
            gvv = max(gvv, abs(v @ g @ v - F * F) / (F * F))
            C = cartan_tensor(metric, tv)
            for perm in ((1, 0, 2), (0, 2, 1), (2, 1, 0)):
                cart = max(cart, np.max(np.abs(C - C.transpose(perm))))
            cart = max(cart, np.max(np.abs(np.einsum("ijk,k->ij", C, v))))
    checks["homogeneity"] = hom <= 1e-12
    checks["g(v,v)=F^2"] = gvv <= 1e-12
    checks["cartan"] = cart <= 1e-10

    drift = 0.0
    fd_err = 0.0
    for metric, x0, v0 in [
        (ellipsoid(), (1.4, 0.5), (0.3, 3.0)),
        (randers(round_sphere(), OneForm("rotation", strength=0.3)), (1.5, 0.0), (0.2, 4.0)),
    ]:
        x0, v0 = np.array(x0), np.array(v0)
        s = jac.linearize(metric, geo.integrate_ivp(metric, TangentVector(x0, v0)))
        fields = [jac.solve_jacobi(s, b[:2], b[2:]) for b in np.eye(4)]
        for i in range(4):
            for j in range(i + 1, 4):
                w = jac.wronskian(s, fields[i], fields[j])
                drift = max(drift, np.max(np.abs(w - w[0])) / max(1.0, np.max(np.abs(w))))
        eps = 1e-5
        for u in np.eye(2):
            plus = geo.integrate_ivp(metric, TangentVector(x0, v0 + eps * u)).x
            minus = geo.integrate_ivp(metric, TangentVector(x0, v0 - eps * u)).x
            fd_err = max(fd_err, np.max(np.abs(s.Phi[:, :2, 2:] @ u - (plus - minus) / (2 * eps))))
    checks["wronskian"] = drift <= 1e-7
    checks["jacobi-vs-fd"] = fd_err <= 1e-4

    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        weak = check_strong_convexity(randers(euclidean_plane(), OneForm("constant", (0.5, 0.0))))
        strong = check_strong_convexity(randers(euclidean_plane(), OneForm("constant", (1.2, 0.0))))
    checks["convexity"] = weak.passed and not strong.passed and strong.witness is not None
    elapsed = time.perf_counter() - start
    checks["time"] = elapsed < 300
    ok = all(checks.values())
    verdict(9, ok, " ".join(f"{k}={'ok' if v else 'FAIL'}" for k, v in checks.items()) + f" drift={drift:.1e} fd={fd_err:.1e} time={elapsed:.1f}s")
    assert ok

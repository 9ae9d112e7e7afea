"""Geodesic integration, multi-start shooting and iterated closed geodesics.

All paths are parametrised on ``[0, 1]`` at constant speed, so a path of
length ``L`` starts with a velocity of Finsler norm ``L``.  Integration is a
classical fixed-step fourth-order Runge-Kutta scheme on the spray.
"""

from __future__ import annotations

import io
import json
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import simpson
from scipy.spatial import cKDTree
from scipy.special import ellipe

from . import _kernels
from .errors import (
    ChartExitError,
    ConjugatePairWarning,
    ConvexityError,
    IncompleteSearchWarning,
    NotAGeodesicError,
    NotClosedError,
)
from .metric import COMPLEX_STEP, MetricSpec, TangentVector, ellipsoid, lagrangian_derivatives

DEFAULT_STEPS = 1000
CLOSURE_TOL = 1e-8
JUNCTION_TOL = 1e-6


def spray_batch(metric: MetricSpec, x, v):
    """Acceleration of the geodesic through ``(x, v)``: solves the Euler-Lagrange equations of ``F^2/2``."""
    L_x, _, g, L_vx = lagrangian_derivatives(metric, x, v)
    rhs = L_x - np.einsum("...ik,...k->...i", L_vx, v)
    return np.linalg.solve(g, rhs[..., None])[..., 0]


def spray(metric: MetricSpec, v: TangentVector) -> np.ndarray:
    x, comp = v.x, v.v
    metric.manifold.check_point(x)
    if not np.any(comp):
        raise ValueError("spray is evaluated away from the zero section")
    g = metric.g(x, comp)
    lam = np.linalg.eigvalsh(0.5 * (g + g.T))[0]
    if not lam > 0:
        raise ConvexityError(x, comp, lam)
    return spray_batch(metric, x, comp)


def spray_compiled(metric: MetricSpec, x, v):
    """Same as :func:`spray_batch` through the compiled kernel; accepts real or complex input."""
    x, v = np.broadcast_arrays(np.asarray(x), np.asarray(v))
    dtype = np.result_type(x, v, float)
    n = x.shape[-1]
    X = np.ascontiguousarray(x.reshape(-1, n), dtype=dtype)
    V = np.ascontiguousarray(v.reshape(-1, n), dtype=dtype)
    out = np.zeros_like(X)
    chart, cp, bkind, bp, _ = metric.kernel_args
    _kernels.spray_many(chart, cp, bkind, bp, X, V, out)
    return out.reshape(x.shape)


def spray_jacobians(metric: MetricSpec, x, v):
    """``(dS/dx, dS/dv)`` by complex-step differentiation, shapes ``(..., n, n)``."""
    x = np.asarray(x, dtype=float)
    v = np.asarray(v, dtype=float)
    n = x.shape[-1]
    pert = 1j * COMPLEX_STEP * np.eye(2 * n)
    xc = x[..., None, :] + pert[:, :n]
    vc = v[..., None, :] + pert[:, n:]
    S = spray_compiled(metric, xc, vc).imag / COMPLEX_STEP  # (..., 2n, n): row j = d S / d z_j
    S = np.swapaxes(S, -1, -2)
    return S[..., :n], S[..., n:]


# -- integration ---------------------------------------------------------------------


def _rk4(metric, x0, v0, steps, keep_path=True, record_stages=False):
    """RK4 for ``x'' = S(x, x')`` on [0, 1].

    With ``keep_path`` a single trajectory is sampled at every step (and the
    stage states are kept when ``record_stages``); otherwise any batch of
    initial data is advanced and only endpoints are returned.  Trajectories
    that leave the chart are frozen; ``exit_step`` holds the step index at
    which that happened (-1 otherwise).
    """
    chart, cp, bkind, bp, eps = metric.kernel_args
    x0, v0 = np.broadcast_arrays(np.asarray(x0, dtype=float), np.asarray(v0, dtype=float))
    n = x0.shape[-1]
    if keep_path:
        if x0.ndim != 1:
            raise ValueError("full paths are computed one trajectory at a time")
        xs = np.empty((steps + 1, n))
        vs = np.empty((steps + 1, n))
        stages = np.empty((steps, 4, 2, n))
        es = _kernels.rk4_path(chart, cp, bkind, bp, eps, x0.copy(), v0.copy(), steps, xs, vs, stages)
        if es >= 0:
            xs[es:] = xs[es - 1]
            vs[es:] = vs[es - 1]
        out = {"x": xs[-1], "v": vs[-1], "alive": np.bool_(es < 0), "exit_step": np.int64(es), "xs": xs, "vs": vs}
        if record_stages:
            out["stages"] = stages
        return out
    lead = x0.shape[:-1]
    X0 = np.ascontiguousarray(x0.reshape(-1, n))
    V0 = np.ascontiguousarray(v0.reshape(-1, n))
    X, V = np.empty_like(X0), np.empty_like(V0)
    es = np.empty(len(X0), dtype=np.int64)
    _kernels.rk4_final(chart, cp, bkind, bp, eps, X0, V0, steps, X, V, es)
    return {"x": X.reshape(x0.shape), "v": V.reshape(x0.shape), "alive": (es < 0).reshape(lead), "exit_step": es.reshape(lead)}


@dataclass(frozen=True, eq=False)
class GeodesicPath:
    """A sampled constant-speed geodesic on [0, 1]."""

    metric: MetricSpec = field(repr=False)
    t: np.ndarray = field(repr=False)
    x: np.ndarray = field(repr=False)
    v: np.ndarray = field(repr=False)
    length: float
    energy: float
    is_closed: bool
    base_point_index: int | None = None
    shift: np.ndarray | None = field(default=None, repr=False)

    @property
    def metric_id(self) -> str:
        return self.metric.metric_id

    @property
    def steps(self) -> int:
        return len(self.t) - 1

    @property
    def start(self) -> TangentVector:
        return TangentVector(self.x[0], self.v[0])

    @property
    def speeds(self) -> np.ndarray:
        return self.metric.F(self.x, self.v)

    @property
    def samples(self) -> list[tuple]:
        return [(float(t), tuple(x), tuple(v)) for t, x, v in zip(self.t, self.x, self.v)]

    def to_dict(self) -> dict:
        rows = np.column_stack([self.t, self.x, self.v])
        return {
            "metric_id": self.metric_id,
            "samples": rows.tolist(),
            "length": float(self.length),
            "energy": float(self.energy),
            "is_closed": bool(self.is_closed),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    def to_csv(self) -> str:
        n = self.x.shape[1]
        buf = io.StringIO()
        buf.write("t," + ",".join(f"x{i}" for i in range(n)) + "," + ",".join(f"v{i}" for i in range(n)) + "\n")
        for row in np.column_stack([self.t, self.x, self.v]):
            buf.write(",".join(repr(float(c)) for c in row) + "\n")
        return buf.getvalue()

    @classmethod
    def from_dict(cls, metric: MetricSpec, d: dict) -> "GeodesicPath":
        rows = np.asarray(d["samples"], dtype=float)
        n = metric.dimension
        t, x, v = rows[:, 0], rows[:, 1 : 1 + n], rows[:, 1 + n :]
        shift = metric.manifold.nearest_period(x[-1] - x[0]) if d.get("is_closed") else None
        return cls(metric, t, x, v, float(d["length"]), float(d["energy"]), bool(d["is_closed"]), None, shift)


def _finish(metric, xs, vs, *, base_point_index=None) -> GeodesicPath:
    steps = len(xs) - 1
    t = np.linspace(0.0, 1.0, steps + 1)
    F = metric.F(xs, vs)
    length = float(simpson(F, x=t))
    energy = float(simpson(0.5 * F * F, x=t))
    d = xs[-1] - xs[0]
    shift = metric.manifold.nearest_period(d)
    scale = max(1.0, float(F[0]))
    closed = bool(
        np.max(np.abs(d - shift)) <= CLOSURE_TOL * scale and np.max(np.abs(vs[-1] - vs[0])) <= CLOSURE_TOL * scale
    )
    for arr in (t, xs, vs):
        arr.setflags(write=False)
    return GeodesicPath(metric, t, xs, vs, length, energy, closed, base_point_index, shift if closed else None)


def integrate_ivp(metric: MetricSpec, start: TangentVector, steps: int = DEFAULT_STEPS) -> GeodesicPath:
    """Integrate the geodesic with initial data ``start`` over [0, 1] with RK4."""
    if steps < 16:
        raise ValueError("steps must be at least 16")
    metric.manifold.check_point(start.x)
    if not np.any(start.v):
        raise ValueError("initial velocity must be nonzero")
    out = _rk4(metric, start.x, start.v, steps)
    if not out["alive"]:
        raise ChartExitError(out["exit_step"] / steps)
    return _finish(metric, out["xs"], out["vs"])


def _integrate_closed(metric, x0, v0, steps, base_point_index=None) -> GeodesicPath:
    out = _rk4(metric, x0, v0, steps)
    if not out["alive"]:
        raise ChartExitError(out["exit_step"] / steps)
    path = _finish(metric, out["xs"], out["vs"], base_point_index=base_point_index)
    if not path.is_closed:
        raise NotClosedError("path does not close up to tolerance")
    return path


def verify_geodesic(metric: MetricSpec, gamma: GeodesicPath, tol: float = 1e-5, record_stages=False):
    """Re-integrate from the initial sample and compare; returns the RK4 output."""
    out = _rk4(metric, gamma.x[0], gamma.v[0], gamma.steps, record_stages=record_stages)
    scale = max(1.0, float(np.max(np.abs(gamma.v))))
    err = max(np.max(np.abs(out["xs"] - gamma.x)), np.max(np.abs(out["vs"] - gamma.v)) / scale)
    if not out["alive"] or not err <= tol:
        raise NotAGeodesicError(f"samples deviate from the geodesic flow by {err:.3e}")
    return out


# -- derived paths -----------------------------------------------------------------------


def _steps_for(*parts: int) -> int:
    return max(16, int(sum(parts)))


def iterate_closed(c: GeodesicPath, m: int) -> GeodesicPath:
    """The ``m``-th iterate ``c^m(s) = c(ms)`` of a closed geodesic."""
    if not c.is_closed:
        raise NotClosedError("iterate_closed needs a closed geodesic")
    if m < 1:
        raise ValueError("m must be positive")
    if m == 1:
        return c
    return _integrate_closed(c.metric, c.x[0], m * c.v[0], m * c.steps, c.base_point_index)


def _point_at(gamma: GeodesicPath, t0: float):
    """Position and velocity of ``gamma`` at parameter ``t0`` (re-integrated)."""
    k = int(round(t0 * gamma.steps))
    if abs(k / gamma.steps - t0) < 1e-14:
        return gamma.x[k], gamma.v[k]
    steps = max(16, int(np.ceil(t0 * gamma.steps)))
    out = _rk4(gamma.metric, gamma.x[0], t0 * gamma.v[0], steps, keep_path=False)
    if not out["alive"]:
        raise ChartExitError(t0 * out["exit_step"] / steps)
    return out["x"], out["v"] / t0


def split_at(gamma: GeodesicPath, t0: float) -> tuple[GeodesicPath, GeodesicPath]:
    """Arcs ``gamma|[0,t0]`` and ``gamma|[t0,1]``, each reparametrised on [0, 1]."""
    if not 0 < t0 < 1:
        raise ValueError("split point must lie in (0, 1)")
    metric = gamma.metric
    xr, vr = _point_at(gamma, t0)
    g1 = integrate_ivp(metric, TangentVector(gamma.x[0], t0 * gamma.v[0]), _steps_for(np.ceil(t0 * gamma.steps)))
    g2 = integrate_ivp(metric, TangentVector(xr, (1 - t0) * vr), _steps_for(np.ceil((1 - t0) * gamma.steps)))
    return g1, g2


def rebase(c: GeodesicPath, t0: float) -> GeodesicPath:
    """The closed geodesic ``c`` with its base point moved to ``c(t0)``."""
    if not c.is_closed:
        raise NotClosedError("rebase needs a closed geodesic")
    t0 = t0 % 1.0
    if t0 == 0.0:
        return c
    xr, vr = _point_at(c, t0)
    k = int(round(t0 * c.steps))
    return _integrate_closed(c.metric, xr, vr, c.steps, base_point_index=k)


def concatenate_iterate(gamma0: GeodesicPath, c: GeodesicPath, m: int) -> GeodesicPath:
    """``gamma^m``: the arc ``gamma0`` followed by ``m`` turns of the closed geodesic ``c``.

    ``c`` must be based at the endpoint of ``gamma0`` and leave it in the
    direction ``gamma0`` arrives, since ``gamma0`` is an arc of ``c``.
    """
    if m < 0:
        raise ValueError("m must be nonnegative")
    if m == 0:
        return gamma0
    if not c.is_closed:
        raise NotClosedError("concatenate_iterate needs a closed geodesic")
    manifold = gamma0.metric.manifold
    gap = float(manifold.chart_distance(gamma0.x[-1], c.x[0]))
    w1, w2 = gamma0.v[-1], c.v[0]
    cosang = float(np.dot(w1, w2) / (np.linalg.norm(w1) * np.linalg.norm(w2)))
    angle = float(np.arccos(np.clip(cosang, -1.0, 1.0)))
    if gap > JUNCTION_TOL or angle > JUNCTION_TOL:
        raise NotAGeodesicError(f"junction mismatch: gap {gap:.3e}, angle {angle:.3e}")
    total = gamma0.length + m * c.length
    v0 = gamma0.v[0] * (total / gamma0.length)
    return integrate_ivp(gamma0.metric, TangentVector(gamma0.x[0], v0), _steps_for(gamma0.steps, m * c.steps))


def find_closed_geodesic(
    metric: MetricSpec, point, velocity_guess, shift, steps: int = DEFAULT_STEPS, tol: float = 1e-11, max_iter: int = 30
) -> GeodesicPath:
    """Newton-shoot a geodesic loop from ``point`` to ``point + shift`` and require it to close smoothly."""
    x0 = np.asarray(point, dtype=float)
    u = np.asarray(velocity_guess, dtype=float).copy()
    target = x0 + np.asarray(shift, dtype=float)
    n = len(x0)
    for _ in range(max_iter):
        U = np.vstack([u, u + 1e-7 * np.eye(n) * max(1.0, np.linalg.norm(u)), u - 1e-7 * np.eye(n) * max(1.0, np.linalg.norm(u))])
        out = _rk4(metric, np.broadcast_to(x0, U.shape), U, steps, keep_path=False)
        if not out["alive"][0]:
            raise ChartExitError(out["exit_step"][0] / steps)
        r = out["x"][0] - target
        if np.linalg.norm(r) <= tol:
            break
        d = 2e-7 * max(1.0, np.linalg.norm(u))
        J = ((out["x"][1 : 1 + n] - out["x"][1 + n :]) / d).T
        u = u - np.linalg.lstsq(J, r, rcond=1e-10)[0]
    return _integrate_closed(metric, x0, u, steps)


def ellipse_perimeter(p: float, q: float) -> float:
    a, b = max(p, q), min(p, q)
    return float(4 * a * ellipe(1 - (b / a) ** 2))


def principal_closed_geodesics(semi_axes=(1.0, 1.1, 1.3), steps: int = DEFAULT_STEPS, pole_exclusion: float = 0.1):
    """The three principal ellipses of a triaxial ellipsoid.

    Each ellipse is realised as the equator of an ellipsoid chart whose polar
    axis is the remaining semi-axis, so it stays far from the chart poles.
    Returns ``[(label, metric, path), ...]`` sorted by length.
    """
    a = tuple(float(s) for s in semi_axes)
    out = []
    for polar in range(3):
        eq = [a[i] for i in range(3) if i != polar]
        metric = ellipsoid((eq[0], eq[1], a[polar]), pole_exclusion=pole_exclusion)
        P = ellipse_perimeter(eq[0], eq[1])
        x0 = np.array([np.pi / 2, 0.0])
        c = find_closed_geodesic(metric, x0, [0.0, P / eq[1]], [0.0, 2 * np.pi], steps)
        out.append((f"ellipse({eq[0]:g},{eq[1]:g})", metric, c))
    out.sort(key=lambda item: item[2].length)
    return out


# -- two-point boundary value problem ------------------------------------------------------


@dataclass
class ShootingResult:
    paths: list[GeodesicPath]
    residuals: list[float]
    duplicates_merged: int
    warnings: list[str] = field(default_factory=list)
    starts: int = 0


def _straight_length_estimate(metric, p, q_lift, samples=33):
    s = np.linspace(0.0, 1.0, samples)
    pts = p + s[:, None] * (q_lift - p)
    if not np.all(metric.manifold.in_domain(pts)):
        return np.inf
    d = q_lift - p
    return float(simpson(metric.F(pts, np.broadcast_to(d, pts.shape)), x=s))


def _direction_grid(metric, p, grid_density, seed=0):
    n = metric.dimension
    if n == 2:
        ang = 2 * np.pi * np.arange(grid_density) / grid_density
        w = np.stack([np.cos(ang), np.sin(ang)], axis=-1)
    else:
        rng = np.random.default_rng(seed)
        w = rng.standard_normal((grid_density ** (n - 1), n))
        w /= np.linalg.norm(w, axis=-1, keepdims=True)
    return w / metric.F(np.broadcast_to(p, w.shape), w)[:, None]


def _direction_angle(u):
    return float(np.arctan2(u[1], u[0])) if len(u) == 2 else 0.0


def _newton_batch(metric, p, q, U, steps, tol, max_iter, fixed_lift=None, central=False, merge=False):
    """Batched Newton on the endpoint residual with a finite-difference Jacobian."""
    manifold = metric.manifold
    n = len(p)
    B = len(U)
    U = U.copy()
    lifts = None if fixed_lift is None else fixed_lift.copy()
    active = np.ones(B, dtype=bool)
    converged = np.zeros(B, dtype=bool)
    resid = np.full(B, np.inf)
    for _ in range(max_iter):
        idx = np.flatnonzero(active)
        if len(idx) == 0:
            break
        Ua = U[idx]
        dscale = 1e-7 * np.maximum(1.0, np.linalg.norm(Ua, axis=-1))
        E = np.eye(n)
        if central:
            pert = np.concatenate([Ua[:, None, :], Ua[:, None, :] + dscale[:, None, None] * E, Ua[:, None, :] - dscale[:, None, None] * E], axis=1)
        else:
            pert = np.concatenate([Ua[:, None, :], Ua[:, None, :] + dscale[:, None, None] * E], axis=1)
        flat = pert.reshape(-1, n)
        out = _rk4(metric, np.broadcast_to(p, flat.shape), flat, steps, keep_path=False)
        Xe = out["x"].reshape(pert.shape)
        ok = out["alive"].reshape(pert.shape[:2]).all(axis=1)
        X1 = Xe[:, 0]
        if lifts is None:
            lifts = np.full((B, n), np.nan)
        new = np.isnan(lifts[idx, 0])
        lifts[idx[new]] = q + manifold.nearest_period(X1[new] - q)
        r = X1 - lifts[idx]
        rn = np.linalg.norm(r, axis=-1)
        resid[idx] = rn
        done = ok & (rn <= tol)
        converged[idx[done]] = True
        if central:
            J = (Xe[:, 1 : 1 + n] - Xe[:, 1 + n :]) / (2 * dscale[:, None, None])
        else:
            J = (Xe[:, 1 : 1 + n] - X1[:, None, :]) / dscale[:, None, None]
        J = np.swapaxes(J, -1, -2)
        with np.errstate(all="ignore"):
            step = -np.einsum("bij,bj->bi", np.linalg.pinv(J, rcond=1e-12), r)
        sn = np.linalg.norm(step, axis=-1)
        un = np.linalg.norm(Ua, axis=-1)
        lim = 0.5 * un + 1.0
        step = step * np.minimum(1.0, lim / np.maximum(sn, 1e-300))[:, None]
        bad = ~ok | ~np.all(np.isfinite(step), axis=-1)
        U[idx] = np.where(done[:, None], Ua, Ua + step)
        keep = ~done & ~bad
        active[idx] = keep
        if merge:
            _merge_starts(U, lifts, active, converged, resid)
    return U, converged, resid, lifts


def _merge_starts(U, lifts, active, converged, resid, basin=1e-3, radius=1e-4):
    """Retire active starts that sit on top of a converged or lower-numbered start.

    Only starts already inside a Newton basin (residual below ``basin``) are
    compared; they converge to the same solution, so this saves work without
    changing the result.
    """
    cand = np.flatnonzero((active & (resid < basin)) | converged)
    if len(cand) < 2:
        return
    scale = max(1.0, float(np.max(np.linalg.norm(U[cand], axis=-1))))
    pts = np.hstack([U[cand] / scale, lifts[cand] * 1e3])
    pairs = cKDTree(pts).query_pairs(radius, output_type="ndarray")
    if len(pairs) == 0:
        return
    alive = np.ones(len(cand), dtype=bool)
    order = np.lexsort((pairs[:, 1], pairs[:, 0]))
    for i, j in pairs[order]:
        a, b = cand[i], cand[j]
        if converged[b] and not converged[a]:
            a, b = b, a
        if alive[np.searchsorted(cand, a)] and active[b]:
            active[b] = False
            alive[np.searchsorted(cand, b)] = False


def _dedup(metric, p, U, angle_tol, length_tol):
    """Canonical sort by (length, direction angle); drop near-duplicates."""
    lengths = metric.F(np.broadcast_to(p, U.shape), U)
    order = sorted(range(len(U)), key=lambda i: (round(float(lengths[i]), 9), _direction_angle(U[i])))
    kept: list[int] = []
    merged = 0
    for i in order:
        ui = U[i] / np.linalg.norm(U[i])
        dup = False
        for j in kept:
            uj = U[j] / np.linalg.norm(U[j])
            ang = np.arccos(np.clip(np.dot(ui, uj), -1.0, 1.0))
            if ang < angle_tol and abs(lengths[i] - lengths[j]) <= length_tol * max(lengths[i], lengths[j]):
                dup = True
                break
        if dup:
            merged += 1
        else:
            kept.append(i)
    return kept, merged


def solve_bvp(
    metric: MetricSpec,
    p,
    q,
    max_length: float,
    grid_density: int = 64,
    steps: int = DEFAULT_STEPS,
    speed_count: int | None = None,
    bvp_tolerance: float = 1e-8,
    dedup_angle: float = 1e-4,
    dedup_length: float = 1e-5,
    max_newton: int = 15,
    check_conjugacy: bool = True,
) -> ShootingResult:
    """All geodesics from ``p`` to ``q`` shorter than ``max_length``, by multi-start shooting.

    Starts form a grid of ``grid_density`` directions on the unit ``F``-sphere
    times a geometric ladder of speeds up to ``max_length``.  Each start is
    refined by Newton's method with a forward-difference Jacobian at a coarse
    step count, converged starts are merged, then polished at ``steps`` with a
    central-difference Jacobian and re-verified by :func:`integrate_ivp`.
    """
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    manifold = metric.manifold
    manifold.check_point(p)
    manifold.check_point(q)
    if manifold.chart_distance(p, q) < 1e-12:
        raise ValueError("p and q coincide modulo the chart identification")
    W = _direction_grid(metric, p, grid_density)
    s_min = max_length / 50.0
    if speed_count is None:
        speed_count = int(np.ceil(np.log(max_length / s_min) / np.log(1.2))) + 1
    speeds = np.geomspace(s_min, max_length, speed_count)
    U0 = (speeds[:, None, None] * W[None, :, :]).reshape(-1, metric.dimension)
    search_steps = int(max(32, min(steps, np.ceil(16 * max_length))))

    U, conv, _, lifts = _newton_batch(metric, p, q, U0, search_steps, 1e-9 * max(1.0, max_length), max_newton, merge=True)
    U, lifts = U[conv], lifts[conv]
    lengths = metric.F(np.broadcast_to(p, U.shape), U)
    keep = lengths < max_length * (1 + 1e-6)
    U, lifts = U[keep], lifts[keep]
    coarse, merged0 = _dedup(metric, p, U, 1e-5, 1e-6)
    U, lifts = U[coarse], lifts[coarse]

    U, conv, resid, lifts = _newton_batch(metric, p, q, U, steps, 0.1 * bvp_tolerance, 8, fixed_lift=lifts, central=True)
    U = U[conv]
    lengths = metric.F(np.broadcast_to(p, U.shape), U)
    U = U[lengths < max_length]
    kept, merged1 = _dedup(metric, p, U, dedup_angle, dedup_length)

    paths, residuals, notes = [], [], []
    for i in kept:
        try:
            path = integrate_ivp(metric, TangentVector(p, U[i]), steps)
        except ChartExitError:
            continue
        res = float(manifold.chart_distance(path.x[-1], q))
        if res <= bvp_tolerance:
            paths.append(path)
            residuals.append(res)
    if not paths:
        q_lift = q + manifold.nearest_period(p - q)
        if max_length > _straight_length_estimate(metric, p, q_lift):
            msg = "incomplete search: no geodesic found although a chart segment shorter than max_length joins p and q"
            notes.append(msg)
            warnings.warn(msg, IncompleteSearchWarning, stacklevel=2)
    if check_conjugacy and paths:
        from .jacobi import conjugate_points, linearize

        for path in paths:
            sysm = linearize(metric, path)
            if conjugate_points(sysm).endpoint_multiplicity > 0:
                msg = f"endpoints conjugate along the geodesic of length {path.length:.6g}"
                notes.append(msg)
                warnings.warn(msg, ConjugatePairWarning, stacklevel=2)
    return ShootingResult(paths, residuals, merged0 + merged1, notes, len(U0))

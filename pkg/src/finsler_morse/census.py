"""Geodesic censuses between two points and the index-growth experiments built on them.

A census lists every geodesic from ``p`` to ``q`` shorter than ``L_max``
with its Dirichlet Morse index and nullity.  Where a closed-form enumeration
exists (straight lines on a flat torus, great-circle arcs on a round sphere)
the search result is compared against it and the table is tagged
``oracle-exact``; otherwise it is ``search-based``.

Checks that compare against an inequality return one of the outcomes
``pass``, ``fail``, ``inconclusive`` (an ambiguous rank or kernel decision
upstream) or ``not-applicable`` (a precondition does not hold).
"""

from __future__ import annotations

import csv
import io
import json
import math
import warnings
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.interpolate import CubicHermiteSpline
from scipy.optimize import minimize_scalar

from .errors import (
    AmbiguousRankWarning,
    ChartExitError,
    ConjugatePairWarning,
    IncompleteSearchWarning,
    IndexCoverageError,
    NotClosedError,
)
from .geodesic import (
    DEFAULT_STEPS,
    GeodesicPath,
    _integrate_closed,
    _point_at,
    concatenate_iterate,
    integrate_ivp,
    iterate_closed,
    rebase,
    solve_bvp,
    split_at,
)
from .index import DEFAULT_SEGMENTS, KERNEL_TOL, morse_spectrum
from .jacobi import linearize
from .metric import MetricSpec, TangentVector

PASS, FAIL, INCONCLUSIVE, NOT_APPLICABLE = "pass", "fail", "inconclusive", "not-applicable"
OUTCOMES = (PASS, FAIL, INCONCLUSIVE, NOT_APPLICABLE)
ORACLE_EXACT, SEARCH_BASED = "oracle-exact", "search-based"

ORACLE_LENGTH_TOL = 1e-6
COVER_TOL = 1e-6


def _csv_text(metric_id: str, header, rows) -> str:
    buf = io.StringIO()
    buf.write(f"# metric {metric_id}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([repr(float(c)) if isinstance(c, (float, np.floating)) else c for c in row])
    return buf.getvalue()


def _dirichlet_index(metric, gamma, segments, kernel_tol):
    """``(index, nullity, ambiguous)`` of ``gamma`` with fixed endpoints."""
    if gamma.steps < max(segments, DEFAULT_STEPS):
        gamma = integrate_ivp(metric, gamma.start, max(segments, DEFAULT_STEPS))
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", AmbiguousRankWarning)
        s = morse_spectrum(linearize(metric, gamma), "dirichlet", segments, kernel_tol)
    return s.index, s.nullity, s.ambiguous or any(issubclass(w.category, AmbiguousRankWarning) for w in caught)


# -- closed-form enumerations ---------------------------------------------------------


@dataclass(frozen=True)
class OracleGeodesic:
    length: float
    index: int
    nullity: int
    label: str


def lattice_oracle(metric: MetricSpec, p, q, max_length: float) -> list[OracleGeodesic] | None:
    """Straight segments from ``p`` to the lattice translates of ``q``.

    Valid for flat charts whose one-form (if any) is constant, where every
    geodesic is a straight line of index 0.  Returns ``None`` otherwise.
    """
    man = metric.manifold
    if man.chart_kind not in ("periodic-lattice", "euclidean-plane"):
        return None
    if metric.kind == "randers" and metric.beta.kind != "constant":
        return None
    d0 = np.asarray(q, dtype=float) - np.asarray(p, dtype=float)
    n = man.dimension
    if man.chart_kind == "euclidean-plane":
        ell = float(metric.F(np.zeros(n), d0))
        return [OracleGeodesic(ell, 0, 0, "0")] if ell < max_length else []
    P = man.periods
    bnorm = float(np.linalg.norm(metric.beta.components)) if metric.kind == "randers" else 0.0
    reach = max_length / (1.0 - bnorm) + np.linalg.norm(d0)
    kmax = int(np.ceil(reach * np.linalg.norm(np.linalg.pinv(P), 2))) + 1
    grid = np.stack(np.meshgrid(*[np.arange(-kmax, kmax + 1)] * n, indexing="ij"), axis=-1).reshape(-1, n)
    D = d0 + grid @ P
    ell = metric.F(np.zeros_like(D), D)
    out = [OracleGeodesic(float(e), 0, 0, ",".join(map(str, k))) for e, k in zip(ell, grid) if e < max_length]
    return sorted(out, key=lambda o: (o.length, o.label))


def great_circle_oracle(metric: MetricSpec, p, q, max_length: float) -> list[OracleGeodesic] | None:
    """Great-circle arcs from ``p`` to ``q`` on a round sphere that stay inside the chart.

    An arc of length ``l`` on a sphere of radius ``r`` meets conjugate
    points at ``k*pi*r``, so its index is the number of those strictly inside.
    Returns ``None`` for other metrics or for antipodal / coincident pairs.
    """
    man = metric.manifold
    if man.chart_kind != "sphere-chart" or metric.kind != "riemannian":
        return None
    r = man.radius
    P = man.embed(np.asarray(p, dtype=float)) / r
    Q = man.embed(np.asarray(q, dtype=float)) / r
    alpha = float(np.arccos(np.clip(P @ Q, -1.0, 1.0)))
    if alpha < 1e-9 or np.pi - alpha < 1e-9:
        return None
    nrm = np.cross(P, Q)
    nrm /= np.linalg.norm(nrm)
    zmax = np.cos(man.pole_exclusion)
    out = []
    for sense, base in ((1, alpha), (-1, 2 * np.pi - alpha)):
        W = sense * np.cross(nrm, P)
        k = 0
        while r * (base + 2 * np.pi * k) < max_length:
            ang = base + 2 * np.pi * k
            s = np.linspace(0.0, min(ang, 2 * np.pi), 4001)
            z = P[2] * np.cos(s) + W[2] * np.sin(s)
            if np.max(np.abs(z)) <= zmax:
                ell = r * ang
                ratio = ang / np.pi
                on_grid = abs(ratio - round(ratio)) < 1e-12
                index = int(round(ratio)) - 1 if on_grid else int(np.floor(ratio))
                out.append(OracleGeodesic(float(ell), index, int(on_grid), f"{'+' if sense > 0 else '-'}{k}"))
            k += 1
    return sorted(out, key=lambda o: (o.length, o.label))


def closed_form_oracle(metric: MetricSpec, p, q, max_length: float) -> list[OracleGeodesic] | None:
    out = lattice_oracle(metric, p, q, max_length)
    return out if out is not None else great_circle_oracle(metric, p, q, max_length)


# -- census tables ---------------------------------------------------------------------


@dataclass(eq=False)
class CensusEntry:
    path: GeodesicPath = field(repr=False)
    length: float
    index: int
    nullity: int
    direction: float
    ambiguous: bool = False


@dataclass(eq=False)
class CensusTable:
    """Geodesics from ``p`` to ``q`` below ``max_length``, sorted by length then direction."""

    metric_id: str
    pair: tuple
    max_length: float
    entries: list[CensusEntry]
    completeness: str
    warnings: list[str] = field(default_factory=list)
    oracle: list[OracleGeodesic] | None = field(default=None, repr=False)

    @property
    def count(self) -> int:
        return len(self.entries)

    @property
    def lengths(self) -> list[float]:
        return [e.length for e in self.entries]

    @property
    def indices(self) -> list[int]:
        return [e.index for e in self.entries]

    @property
    def non_conjugate(self) -> bool:
        return all(e.nullity == 0 for e in self.entries) and not any("conjugate" in w for w in self.warnings)

    @property
    def ambiguous(self) -> bool:
        return any(e.ambiguous for e in self.entries)

    def N(self, L: float) -> int:
        """Number of geodesics of length ``< L``."""
        return sum(1 for e in self.entries if e.length < L)

    @property
    def N_of_L(self) -> list[tuple[float, int]]:
        """Step function samples: ``(0, 0)``, then ``(l_i, N(l_i+))`` at every jump, then ``(L_max, total)``."""
        pts = [(0.0, 0)]
        for i, e in enumerate(self.entries):
            if i + 1 < len(self.entries) and self.entries[i + 1].length == e.length:
                continue
            pts.append((e.length, i + 1))
        pts.append((float(self.max_length), self.count))
        return pts

    @property
    def N_k(self) -> dict[int, int]:
        out: dict[int, int] = {}
        for e in self.entries:
            out[e.index] = out.get(e.index, 0) + 1
        return dict(sorted(out.items()))

    def to_dict(self) -> dict:
        return {
            "metric_id": self.metric_id,
            "pair": [list(map(float, self.pair[0])), list(map(float, self.pair[1]))],
            "max_length": float(self.max_length),
            "completeness": self.completeness,
            "entries": [
                {"length": e.length, "index": e.index, "nullity": e.nullity, "direction": e.direction} for e in self.entries
            ],
            "N_of_L": [[float(L), n] for L, n in self.N_of_L],
            "N_k": {str(k): v for k, v in self.N_k.items()},
            "warnings": list(self.warnings),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)

    def to_csv(self) -> str:
        return _csv_text(self.metric_id, ("length", "index", "nullity"), [(e.length, e.index, e.nullity) for e in self.entries])


def _compare_with_oracle(entries, oracle):
    """Mismatch messages between a search result and an enumeration; empty when they agree."""
    msgs = []
    if len(entries) != len(oracle):
        msgs.append(f"search found {len(entries)} geodesics, enumeration gives {len(oracle)}")
        return msgs
    for e, o in zip(entries, oracle):
        if abs(e.length - o.length) > ORACLE_LENGTH_TOL * max(1.0, o.length):
            msgs.append(f"length {e.length:.9g} differs from enumerated {o.length:.9g}")
        if e.index != o.index:
            msgs.append(f"index {e.index} at length {e.length:.6g} differs from enumerated {o.index}")
    return msgs


def build_census(
    metric: MetricSpec,
    p,
    q,
    max_length: float,
    grid_density: int = 64,
    steps: int = DEFAULT_STEPS,
    segments: int = DEFAULT_SEGMENTS,
    kernel_tol: float = KERNEL_TOL,
) -> CensusTable:
    """Shoot all geodesics from ``p`` to ``q`` below ``max_length`` and index each one."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    notes: list[str] = []
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        result = solve_bvp(metric, p, q, max_length, grid_density=grid_density, steps=steps)
    for w in caught:
        if issubclass(w.category, (IncompleteSearchWarning, ConjugatePairWarning)):
            notes.append(str(w.message))
        warnings.warn(w.message, w.category, stacklevel=2)
    entries = []
    for path in result.paths:
        k, nu, amb = _dirichlet_index(metric, path, segments, kernel_tol)
        u = path.v[0] / np.linalg.norm(path.v[0])
        direction = float(np.arctan2(u[1], u[0]) % (2 * np.pi))
        entries.append(CensusEntry(path, float(path.length), k, nu, direction, amb))
    entries.sort(key=lambda e: (round(e.length, 9), e.direction))
    oracle = closed_form_oracle(metric, p, q, max_length)
    completeness = SEARCH_BASED
    if oracle is not None:
        mismatch = _compare_with_oracle(entries, oracle)
        if mismatch:
            notes.extend(mismatch)
        else:
            completeness = ORACLE_EXACT
    return CensusTable(metric.metric_id, (tuple(p), tuple(q)), float(max_length), entries, completeness, notes, oracle)


# -- locating points on closed geodesics ---------------------------------------------------


def _periodic_spline(c: GeodesicPath):
    """Cubic Hermite interpolant of a closed geodesic on ``[-1, 2]``."""
    t, x, v, s = c.t, c.x, c.v, c.shift
    T = np.concatenate([t[:-1] - 1.0, t[:-1], t + 1.0])
    X = np.concatenate([x[:-1] - s, x[:-1], x + s])
    V = np.concatenate([v[:-1], v[:-1], v])
    return CubicHermiteSpline(T, X, V, axis=0)


def project_onto_closed(c: GeodesicPath, Y, iterations: int = 60):
    """Parameters in ``[0, 1)`` of the points of ``c`` nearest to ``Y`` and the chart distances.

    The nearest sample is refined by a golden-section search on the cubic
    Hermite interpolant over the two adjacent steps.
    """
    if not c.is_closed:
        raise NotClosedError("projection needs a closed geodesic")
    man = c.metric.manifold
    Y = np.atleast_2d(np.asarray(Y, dtype=float))
    xs = c.x[:-1]
    D = np.linalg.norm(man.minimal_image(xs[None, :, :] - Y[:, None, :]), axis=-1)
    k = np.argmin(D, axis=1)
    h = 1.0 / c.steps
    spl = _periodic_spline(c)

    def dist(s):
        return np.linalg.norm(man.minimal_image(spl(s) - Y), axis=-1)

    a, b = c.t[k] - h, c.t[k] + h
    g = (math.sqrt(5) - 1) / 2
    s1, s2 = b - g * (b - a), a + g * (b - a)
    f1, f2 = dist(s1), dist(s2)
    for _ in range(iterations):
        left = f1 < f2
        b = np.where(left, s2, b)
        a = np.where(left, a, s1)
        s1n, s2n = b - g * (b - a), a + g * (b - a)
        s1, s2 = s1n, s2n
        f1, f2 = dist(s1), dist(s2)
    s = 0.5 * (a + b)
    return s % 1.0, dist(s)


def covering_distance(path: GeodesicPath, covering, stride: int = 4) -> float:
    """Largest distance from the samples of ``path`` to the union of the covering closed geodesics."""
    Y = path.x[::stride]
    if len(path.x) % stride != 1:
        Y = np.vstack([Y, path.x[-1:]])
    best = np.full(len(Y), np.inf)
    for c in covering:
        best = np.minimum(best, project_onto_closed(c, Y)[1])
    return float(np.max(best))


def geometrically_distinct(table: CensusTable, covering, tol: float = 1e-4) -> list[CensusEntry]:
    """Entries whose support leaves the union of the covering closed geodesics somewhere."""
    return [e for e in table.entries if covering_distance(e.path, covering) > tol]


# -- covered-count bound ----------------------------------------------------------------


@dataclass
class BoundReport:
    outcome: str
    covering_count: int
    shortest_prime_length: float | None
    rows: list[tuple[float, int, float, float]]
    notes: list[str] = field(default_factory=list)
    metric_id: str = ""

    def to_dict(self) -> dict:
        return asdict(self)

    def to_csv(self) -> str:
        return _csv_text(self.metric_id, ("L", "lhs", "rhs", "margin"), self.rows)


def covered_bound_check(table: CensusTable, covering, restrict: bool = False, tol: float = COVER_TOL) -> BoundReport:
    """``N(p, q, L) <= 2m (1 + L / L0)`` at every jump of the census.

    ``m`` is the number of covering closed geodesics and ``L0`` the shortest
    of their lengths.  The bound presupposes that every census entry lies on
    the covering; uncovered entries make the check ``not-applicable`` unless
    ``restrict`` is set, in which case only covered entries are counted.
    """
    covering = list(covering)
    if not covering:
        return BoundReport(NOT_APPLICABLE, 0, None, [], ["empty covering"], table.metric_id)
    for c in covering:
        if not c.is_closed:
            raise NotClosedError("covering geodesics must be closed")
    m = len(covering)
    L0 = min(c.length for c in covering)
    covered, notes = [], []
    for e in table.entries:
        d = covering_distance(e.path, covering)
        if d <= tol:
            covered.append(e)
        elif not restrict:
            notes.append(f"geodesic of length {e.length:.6g} is not covered (distance {d:.2e})")
    if notes:
        return BoundReport(NOT_APPLICABLE, m, L0, [], notes, table.metric_id)
    if restrict and len(covered) < table.count:
        notes.append(f"{table.count - len(covered)} uncovered geodesics excluded from the count")
    rows = []
    for i, e in enumerate(covered):
        if i + 1 < len(covered) and covered[i + 1].length == e.length:
            continue
        bound = 2 * m * (1 + e.length / L0)
        rows.append((e.length, i + 1, bound, bound - (i + 1)))
    outcome = PASS if all(r[3] >= 0 for r in rows) else FAIL
    if outcome == PASS and table.ambiguous:
        outcome = INCONCLUSIVE
    return BoundReport(outcome, m, L0, rows, notes, table.metric_id)


# -- arc subadditivity --------------------------------------------------------------------


@dataclass
class SplitRow:
    t0: float
    lambda_gamma: int
    lambda_first: int
    lambda_second: int
    outcome: str

    @property
    def margin(self) -> int:
        return self.lambda_gamma - self.lambda_first - self.lambda_second


@dataclass
class SubadditivityReport:
    length: float
    rows: list[SplitRow]
    metric_id: str = ""

    @property
    def outcome(self) -> str:
        outs = {r.outcome for r in self.rows}
        if FAIL in outs:
            return FAIL
        if INCONCLUSIVE in outs:
            return INCONCLUSIVE
        return PASS

    @property
    def violations(self) -> int:
        return sum(r.outcome == FAIL for r in self.rows)

    def to_dict(self) -> dict:
        return {"length": self.length, "outcome": self.outcome, "rows": [asdict(r) | {"margin": r.margin} for r in self.rows]}

    def to_csv(self) -> str:
        return _csv_text(
            self.metric_id,
            ("t0", "lhs", "rhs", "margin"),
            [(r.t0, r.lambda_gamma, r.lambda_first + r.lambda_second, r.margin) for r in self.rows],
        )


def subadditivity_check(
    metric: MetricSpec, gamma: GeodesicPath, split_points, segments: int = DEFAULT_SEGMENTS, kernel_tol: float = KERNEL_TOL
) -> SubadditivityReport:
    """``lambda(gamma) >= lambda(gamma_1) + lambda(gamma_2)`` for the arcs on either side of each split."""
    k, _, amb = _dirichlet_index(metric, gamma, segments, kernel_tol)
    rows = []
    for t0 in split_points:
        t0 = float(t0)
        if not 0 < t0 < 1:
            raise ValueError("split points must lie in (0, 1)")
        g1, g2 = split_at(gamma, t0)
        k1, _, a1 = _dirichlet_index(metric, g1, segments, kernel_tol)
        k2, _, a2 = _dirichlet_index(metric, g2, segments, kernel_tol)
        if k >= k1 + k2:
            out = PASS
        else:
            out = INCONCLUSIVE if (amb or a1 or a2) else FAIL
        rows.append(SplitRow(t0, k, k1, k2, out))
    return SubadditivityReport(float(gamma.length), rows, metric.metric_id)


# -- iterate growth -------------------------------------------------------------------------


def fit_growth(ms, values, min_gap: int = 1) -> tuple[float, float]:
    """Witness constants ``(a1, a2)`` with ``v(m) - v(m') >= a1 (m - m') - a2`` for all ``m - m' >= min_gap``.

    ``a1`` is the end-to-end average slope; ``a2`` is then the smallest
    nonnegative offset satisfying every pairwise constraint.
    """
    ms = np.asarray(ms, dtype=float)
    vals = np.asarray(values, dtype=float)
    if len(ms) < 2 or np.all(vals == 0):
        return 0.0, 0.0
    a1 = float((vals[-1] - vals[0]) / (ms[-1] - ms[0]))
    a2 = 0.0
    for i in range(len(ms)):
        for j in range(i):
            if ms[i] - ms[j] >= min_gap:
                a2 = max(a2, a1 * (ms[i] - ms[j]) - (vals[i] - vals[j]))
    return a1, float(a2)


@dataclass
class ChainRow:
    """Both steps of the lower bound for ``lambda(gamma^m) - lambda(gamma^m')`` through the closed iterates."""

    m: int
    m_prime: int
    lhs: int
    middle: int
    rhs: int

    @property
    def holds(self) -> bool:
        return self.lhs >= self.middle >= self.rhs


@dataclass
class GrowthReport:
    """Indices along the iterates of a closed geodesic ``c`` through ``p`` and ``q``.

    ``iterate_indices`` holds ``(m, lambda(gamma^m), lambda~(c^m), con(c^m))``
    where ``gamma^m`` is the arc of ``c`` from ``p`` to ``q`` followed by ``m``
    turns of ``c`` based at ``q``.
    """

    iterate_indices: list[tuple[int, int, int, int]]
    fitted_slope: float
    fitted_intercept: float
    all_zero: bool
    lambda_gamma0: int
    lambda_pq: int
    lambda_qp: int
    lambda_based: list[int]
    gm2_slope: float
    gm2_intercept: float
    chain: list[ChainRow]
    dimension: int
    remark_holds: bool | None
    ambiguous: bool = False
    truncated_at: int | None = None
    notes: list[str] = field(default_factory=list)
    metric_id: str = ""

    @property
    def ms(self) -> list[int]:
        return [r[0] for r in self.iterate_indices]

    @property
    def lambda_arcs(self) -> list[int]:
        """``lambda(gamma^m)`` for ``m = 0, 1, ...``."""
        return [self.lambda_gamma0] + [r[1] for r in self.iterate_indices]

    @property
    def lambda_periodic(self) -> list[int]:
        return [r[2] for r in self.iterate_indices]

    @property
    def concavities(self) -> list[int]:
        return [r[3] for r in self.iterate_indices]

    @property
    def growth_holds(self) -> bool:
        ms, v = self.ms, self.lambda_periodic
        return all(
            v[i] - v[j] >= self.fitted_slope * (ms[i] - ms[j]) - self.fitted_intercept - 1e-12
            for i in range(len(ms))
            for j in range(i)
        )

    @property
    def chain_holds(self) -> bool:
        return all(r.holds for r in self.chain)

    @property
    def outcome(self) -> str:
        ok = self.growth_holds and self.chain_holds and self.remark_holds is not False
        ok = ok and all(0 <= c <= 2 * self.dimension for c in self.concavities)
        if ok:
            return PASS
        return INCONCLUSIVE if self.ambiguous else FAIL

    def to_dict(self) -> dict:
        d = asdict(self)
        d["outcome"] = self.outcome
        return d

    def to_csv(self) -> str:
        return _csv_text(self.metric_id, ("m", "lambda", "lambda_periodic", "con"), self.iterate_indices)

    def ladder_csv(self) -> str:
        """``(m, lambda(gamma^m))`` including ``m = 0``."""
        return _csv_text(self.metric_id, ("m", "index"), list(enumerate(self.lambda_arcs)))


def _arc(c: GeodesicPath, t_from: float, span: float) -> GeodesicPath:
    x, v = _point_at(c, t_from)
    return integrate_ivp(c.metric, TangentVector(x, span * v), max(16, int(np.ceil(span * c.steps))))


def locate_on_closed(c: GeodesicPath, point, tol: float = COVER_TOL) -> float:
    t, d = project_onto_closed(c, point)
    if d[0] > tol:
        raise ValueError(f"point {tuple(np.asarray(point, dtype=float))} is not on the closed geodesic (distance {d[0]:.2e})")
    return float(t[0])


def iterate_growth(
    metric: MetricSpec,
    c: GeodesicPath,
    p,
    q,
    m_max: int,
    segments: int = DEFAULT_SEGMENTS,
    kernel_tol: float = KERNEL_TOL,
) -> GrowthReport:
    """Index ladders of ``c^m`` and of ``gamma^m`` for ``m <= m_max``, with fitted growth constants."""
    if m_max < 4:
        raise ValueError("m_max must be at least 4")
    if not c.is_closed:
        raise NotClosedError("iterate_growth needs a closed geodesic")
    t_p, t_q = locate_on_closed(c, p), locate_on_closed(c, q)
    span = (t_q - t_p) % 1.0
    if span < 1e-12:
        raise ValueError("p and q coincide on the closed geodesic")
    ambiguous = False

    def dirichlet(g):
        nonlocal ambiguous
        k, _, amb = _dirichlet_index(metric, g, segments, kernel_tol)
        ambiguous = ambiguous or amb
        return k

    gamma0 = _arc(c, t_p, span)
    gamma_qp = _arc(c, t_q, 1.0 - span)
    c_q, c_p = rebase(c, t_q), rebase(c, t_p)
    lam0, lam_pq, lam_qp = dirichlet(gamma0), dirichlet(gamma0), dirichlet(gamma_qp)

    rows, based, notes = [], [], []
    truncated = None
    for m in range(1, m_max + 1):
        try:
            cm = iterate_closed(c_p, m)
            g = concatenate_iterate(gamma0, c_q, m)
        except ChartExitError:
            truncated = m - 1
            notes.append(f"chart exit at iterate {m}; ladder truncated at m = {m - 1}")
            break
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always", AmbiguousRankWarning)
            system = linearize(metric, cm)
            per = morse_spectrum(system, "periodic", segments, kernel_tol)
            dir_ = morse_spectrum(system, "dirichlet", segments, kernel_tol)
        ambiguous = ambiguous or per.ambiguous or dir_.ambiguous or bool(caught)
        based.append(dir_.index)
        rows.append((m, dirichlet(g), per.index, per.index - dir_.index))

    ms = [r[0] for r in rows]
    lt = [r[2] for r in rows]
    all_zero = all(v == 0 for v in lt)
    a1, a2 = fit_growth(ms, lt, 1)
    arcs = [lam0] + [r[1] for r in rows]
    b1, b2 = fit_growth(list(range(len(arcs))), arcs, 2)

    dim = metric.dimension
    lt_of = {r[0]: r[2] for r in rows}
    con_of = {r[0]: r[3] for r in rows}
    chain = []
    for m in range(2, len(arcs)):
        for mp in range(0, m - 1):
            base = lt_of[m] - lt_of[mp + 1] + lam_pq + lam_qp
            chain.append(ChainRow(m, mp, arcs[m] - arcs[mp], base - con_of[m] + con_of[mp + 1], base - 2 * dim))
    remark = None
    if all_zero:
        remark = all(v == 0 for v in arcs[: len(rows)]) and all(v == 0 for v in based)
    return GrowthReport(
        rows, a1, a2, all_zero, lam0, lam_pq, lam_qp, based, b1, b2, chain, dim, remark, ambiguous, truncated, notes,
        metric.metric_id,
    )


# -- Betti numbers and Morse inequalities ------------------------------------------------


@dataclass(frozen=True)
class BettiTable:
    """Betti numbers of a based loop space, taken from standard loop-space homology.

    ``report_only`` marks tables whose comparison with a census is not
    asserted (component conventions are not fixed for non-simply-connected
    targets).
    """

    space: str
    values: tuple[int, ...]
    field: str = "Q"
    report_only: bool = False

    def __getitem__(self, k: int) -> int:
        return self.values[k]

    @property
    def k_max(self) -> int:
        return len(self.values) - 1


BETTI_SPACES = ("S2", "S3", "T2")


def betti_table(space: str, k_max: int = 12) -> BettiTable:
    """Rational Betti numbers of the based loop space of ``S2``, ``S3`` or ``T2`` up to degree ``k_max``.

    The loop space of the 2-sphere has one rational class in every degree;
    that of the 3-sphere has rational homology a polynomial ring on a class
    of degree 2.  Each component of the loop space of the torus is
    contractible; the table counts one component and is report-only.
    """
    ks = range(k_max + 1)
    if space == "S2":
        return BettiTable("S2", tuple(1 for _ in ks))
    if space == "S3":
        return BettiTable("S3", tuple(1 if k % 2 == 0 else 0 for k in ks))
    if space == "T2":
        return BettiTable("T2", tuple(1 if k == 0 else 0 for k in ks), report_only=True)
    raise ValueError(f"no Betti table for {space!r}; available: {', '.join(BETTI_SPACES)}")


@dataclass
class InequalityReport:
    outcome: str
    rows: list[tuple[int, int, int, int]]
    notes: list[str] = field(default_factory=list)
    metric_id: str = ""

    def to_dict(self) -> dict:
        return asdict(self)

    def to_csv(self) -> str:
        return _csv_text(self.metric_id, ("k", "lhs", "rhs", "margin"), self.rows)


def morse_inequality_check(table: CensusTable, betti: BettiTable, k_max: int) -> InequalityReport:
    """``beta_k <= N_k(p, q)`` for ``k <= k_max``; asserted only on an oracle-exact census."""
    if k_max > betti.k_max:
        raise ValueError(f"Betti table only reaches degree {betti.k_max}")
    realized = max(table.indices, default=-1)
    if k_max > realized:
        raise IndexCoverageError(
            f"census realises indices up to {realized} only; increase L_max to cover index {k_max}"
        )
    Nk = table.N_k
    rows = [(k, betti[k], Nk.get(k, 0), Nk.get(k, 0) - betti[k]) for k in range(k_max + 1)]
    notes = []
    if betti.report_only:
        notes.append(f"Betti table for {betti.space} is report-only")
        return InequalityReport(NOT_APPLICABLE, rows, notes, table.metric_id)
    holds = all(r[3] >= 0 for r in rows)
    if table.completeness != ORACLE_EXACT:
        notes.append("search-based census: inequality reported, not asserted")
        return InequalityReport(INCONCLUSIVE, rows, notes, table.metric_id)
    if table.ambiguous:
        return InequalityReport(INCONCLUSIVE, rows, ["ambiguous index decision in the census"], table.metric_id)
    return InequalityReport(PASS if holds else FAIL, rows, notes, table.metric_id)


# -- bounded-count demonstration --------------------------------------------------------------


@dataclass
class Ladder:
    label: str
    indices: list[int]
    slope: float
    intercept: float

    @property
    def grows(self) -> bool:
        return any(k != 0 for k in self.indices)

    @property
    def ratio(self) -> float:
        return max(self.intercept / self.slope, 2.0) if self.slope > 0 else math.inf


@dataclass
class BoundednessReport:
    """Counts ``N_k`` realised by iterate arcs along a covering, against the uniform bound ``K``."""

    outcome: str
    ladders: list[Ladder]
    K: float | None
    N_k: dict[int, int]
    zero_ladder_N0: int
    narrative: list[str]
    metric_id: str = ""

    def to_dict(self) -> dict:
        d = asdict(self)
        d["N_k"] = {str(k): v for k, v in self.N_k.items()}
        return d


def reverse_closed(c: GeodesicPath) -> GeodesicPath:
    """The closed curve ``c`` traversed backwards; a geodesic only for reversible metrics."""
    return _integrate_closed(c.metric, c.x[0], -c.v[0], c.steps)


def boundedness_contradiction_demo(
    metric: MetricSpec,
    covering,
    p,
    q,
    k_max: int,
    m_max: int = 4,
    m_cap: int = 12,
    segments: int = DEFAULT_SEGMENTS,
) -> BoundednessReport:
    """Index ladders of the arcs ``gamma_i^m`` along each covering geodesic and the bound they force.

    For each covering closed geodesic (and its reverse when ``F`` is
    reversible) through ``p`` and ``q``, the ladder ``lambda(gamma_i^m)`` is
    computed and fitted with constants ``(b1, b2)``.  A growing ladder can
    hold each index at most ``max(b2 / b1, 2)`` times, so ``N_k`` is bounded
    by ``K = h * max_i max(b2_i / b1_i, 2)`` over the ``h`` growing ladders.
    """
    covering = list(covering)
    if not covering:
        return BoundednessReport(NOT_APPLICABLE, [], None, {}, 0, ["empty covering"], metric.metric_id)
    curves = []
    for i, c in enumerate(covering):
        curves.append((f"c{i}", c))
        if metric.reversibility_flag:
            curves.append((f"c{i}-reversed", reverse_closed(c)))
    ladders, narrative = [], []
    for label, c in curves:
        try:
            locate_on_closed(c, p)
            locate_on_closed(c, q)
        except ValueError as exc:
            return BoundednessReport(NOT_APPLICABLE, [], None, {}, 0, [f"{label}: {exc}"], metric.metric_id)
        m = max(4, m_max)
        while True:
            rep = iterate_growth(metric, c, p, q, m, segments)
            arcs = rep.lambda_arcs
            if not any(arcs) or arcs[-1] > k_max or m >= m_cap or rep.truncated_at is not None:
                break
            m = min(m_cap, 2 * m)
        ladders.append(Ladder(label, arcs, rep.gm2_slope, rep.gm2_intercept))
        if any(arcs) and arcs[-1] <= k_max:
            narrative.append(f"{label}: ladder stops at index {arcs[-1]} < {k_max}; higher counts not realised")
    growing = [ld for ld in ladders if ld.grows]
    h = len(growing)
    K = h * max((ld.ratio for ld in growing), default=0.0)
    Nk: dict[int, int] = {}
    for ld in growing:
        for k in ld.indices:
            if k <= k_max:
                Nk[k] = Nk.get(k, 0) + 1
    Nk = {k: Nk.get(k, 0) for k in range(k_max + 1)}
    zero_n0 = sum(len(ld.indices) for ld in ladders if not ld.grows)
    for ld in ladders:
        narrative.append(f"{ld.label}: lambda(gamma^m) = {ld.indices}, b1 = {ld.slope:g}, b2 = {ld.intercept:g}")
    if h == 0:
        narrative.append(
            "every arc has index 0: N_k = 0 for k >= 1, so any unbounded Betti sequence contradicts the Morse relations"
        )
        ok = all(v == 0 for k, v in Nk.items() if k >= 1)
    else:
        narrative.append(f"h = {h} growing ladders give K = {K:g}; N_k <= K for every realised k <= {k_max}")
        ok = all(v <= K for v in Nk.values())
        if ok:
            narrative.append("N_k stays bounded, so the Betti numbers must be bounded too: no contradiction for this space")
    return BoundednessReport(PASS if ok else FAIL, ladders, K, Nk, zero_n0, narrative, metric.metric_id)


def closed_geodesic_through(
    metric: MetricSpec, p, q, search_length: float = 50.0, steps_per_length: int = 200
) -> GeodesicPath:
    """A closed geodesic containing the shortest geodesic from ``p`` to ``q``.

    The shortest connecting geodesic is continued until it first returns to
    ``p`` with its initial direction; the return is then polished into a
    smooth loop by :func:`find_closed_geodesic`.
    """
    from .geodesic import _rk4, find_closed_geodesic

    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    d = metric.manifold.chart_distance(p, q)
    res = solve_bvp(metric, p, q, max(4.0 * d, 1.0) * 2.0, check_conjugacy=False)
    if not res.paths:
        raise NotClosedError("no geodesic joins p and q")
    first = min(res.paths, key=lambda g: g.length)
    u = first.v[0] / first.length
    steps = int(np.ceil(search_length * steps_per_length))
    out = _rk4_path(metric, p, search_length * u, steps)
    xs, vs, alive = out
    man = metric.manifold
    dist = man.chart_distance(xs[:alive], p)
    cos = (vs[:alive] @ u) / (np.linalg.norm(vs[:alive], axis=1) * np.linalg.norm(u))
    step_len = np.max(np.linalg.norm(np.diff(xs[:alive], axis=0), axis=1)) if alive > 1 else 0.0
    start = int(np.ceil(first.length / search_length * steps)) + 1
    hits = [k for k in range(start, alive) if dist[k] <= 2 * step_len and cos[k] > 1 - 1e-3]
    if not hits:
        raise NotClosedError(f"the geodesic through p and q does not close within length {search_length:g}")
    run = [hits[0]]
    for i in hits[1:]:
        if i != run[-1] + 1:
            break
        run.append(i)
    k = min(run, key=lambda i: dist[i])
    shift = man.nearest_period(xs[k] - p)
    # keep the direction of the p-q geodesic and only tune the length; loops
    # through p can come in degenerate families (great circles on a sphere)
    ds = search_length / steps

    def gap(s):
        out = _rk4(metric, p, s * u, DEFAULT_STEPS, keep_path=False)
        return float(np.linalg.norm(out["x"] - p - shift)) if out["alive"] else np.inf

    s0 = k * ds
    best = minimize_scalar(gap, bounds=(s0 - 2 * ds, s0 + 2 * ds), method="bounded", options={"xatol": 1e-13})
    try:
        return _integrate_closed(metric, p, best.x * u, DEFAULT_STEPS)
    except NotClosedError:
        return find_closed_geodesic(metric, p, best.x * u, shift)


def _rk4_path(metric, x0, v0, steps):
    from .geodesic import _rk4

    out = _rk4(metric, x0, v0, steps, keep_path=True)
    alive = len(out["xs"]) if out["exit_step"] < 0 else int(out["exit_step"])
    return out["xs"], out["vs"], alive

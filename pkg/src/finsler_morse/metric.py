"""Coordinate-chart manifolds and Finsler metrics of Randers type.

Every shipped metric has the form ``F(x, v) = sqrt(a_x(v, v)) + b_x(v)`` where
``a`` is a Riemannian metric given by chart coefficients and ``b`` is a one-form
(identically zero for the Riemannian kind).  All evaluators are vectorised over
leading axes and are written so that they accept complex input; the complex-step
derivatives used by :mod:`finsler_morse.geodesic` and :mod:`finsler_morse.jacobi`
rely on that.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np
from scipy.stats import qmc

from .errors import ChartDomainError, ConfigError, ConvexityError

CHART_KINDS = ("euclidean-plane", "periodic-lattice", "sphere-chart", "ellipsoid-chart")
METRIC_KINDS = ("riemannian", "randers")

FD_STEP_SECOND = 1e-4
FD_STEP_THIRD = 1e-3
COMPLEX_STEP = 1e-20


@dataclass(frozen=True)
class ChartManifold:
    """A manifold covered by one coordinate chart.

    ``periodic-lattice`` charts identify points differing by an integer
    combination of the lattice basis (rows of ``lattice``).  Sphere and
    ellipsoid charts use polar coordinates ``(theta, phi)``; ``phi`` is
    periodic with period ``2*pi`` and ``theta`` must stay at least
    ``pole_exclusion`` away from ``0`` and ``pi``.
    """

    dimension: int
    chart_kind: str
    lattice: tuple[tuple[float, ...], ...] | None = None
    radius: float | None = None
    semi_axes: tuple[float, float, float] | None = None
    pole_exclusion: float = 0.1
    sample_box: float = 1.0

    def __post_init__(self):
        if self.chart_kind not in CHART_KINDS:
            raise ConfigError(f"unknown chart kind {self.chart_kind!r}")
        if self.dimension < 2:
            raise ConfigError("dimension must be at least 2")
        if self.chart_kind == "periodic-lattice":
            if self.lattice is None:
                raise ConfigError("periodic-lattice chart needs a lattice basis")
            basis = np.asarray(self.lattice, dtype=float)
            if basis.shape != (self.dimension, self.dimension):
                raise ConfigError("lattice basis must be n vectors of length n")
            if abs(np.linalg.det(basis)) < 1e-12:
                raise ConfigError("lattice basis is not linearly independent")
        if self.chart_kind in ("sphere-chart", "ellipsoid-chart"):
            if self.dimension != 2:
                raise ConfigError("sphere and ellipsoid charts are two-dimensional")
            if not self.pole_exclusion > 0:
                raise ConfigError("pole_exclusion must be positive")
        if self.chart_kind == "sphere-chart" and not (self.radius and self.radius > 0):
            raise ConfigError("sphere chart needs a positive radius")
        if self.chart_kind == "ellipsoid-chart":
            if self.semi_axes is None or len(self.semi_axes) != 3 or min(self.semi_axes) <= 0:
                raise ConfigError("ellipsoid chart needs three positive semi-axes")

    # -- identification -------------------------------------------------
    @cached_property
    def periods(self) -> np.ndarray:
        """Period vectors of the chart identification, shape (k, n)."""
        n = self.dimension
        if self.chart_kind == "periodic-lattice":
            return np.asarray(self.lattice, dtype=float)
        if self.chart_kind in ("sphere-chart", "ellipsoid-chart"):
            return np.array([[0.0, 2 * np.pi]])
        return np.zeros((0, n))

    def lattice_coefficients(self, d) -> np.ndarray:
        """Real coefficients of displacement(s) ``d`` along the period vectors."""
        P = self.periods
        d = np.asarray(d, dtype=float)
        if len(P) == 0:
            return np.zeros(d.shape[:-1] + (0,))
        return d @ np.linalg.pinv(P)

    def minimal_image(self, d) -> np.ndarray:
        """Shift displacement(s) ``d`` by the nearest period combination."""
        d = np.asarray(d, dtype=float)
        if len(self.periods) == 0:
            return d.copy()
        k = np.round(self.lattice_coefficients(d))
        return d - k @ self.periods

    def nearest_period(self, d) -> np.ndarray:
        d = np.asarray(d, dtype=float)
        return d - self.minimal_image(d)

    def chart_distance(self, x, y) -> np.ndarray:
        """Euclidean chart distance modulo the identification."""
        return np.linalg.norm(self.minimal_image(np.asarray(y) - np.asarray(x)), axis=-1)

    def is_period(self, d, tol: float = 1e-8) -> bool:
        return bool(np.all(np.abs(self.minimal_image(d)) <= tol))

    def in_domain(self, x) -> np.ndarray:
        x = np.real(np.asarray(x))
        if self.chart_kind in ("sphere-chart", "ellipsoid-chart"):
            th = x[..., 0]
            eps = self.pole_exclusion
            return (th >= eps) & (th <= np.pi - eps)
        return np.ones(x.shape[:-1], dtype=bool)

    def check_point(self, x) -> None:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.dimension,):
            raise ChartDomainError(f"expected {self.dimension} coordinates, got shape {x.shape}")
        if not np.all(np.isfinite(x)) or not self.in_domain(x):
            raise ChartDomainError(f"point {tuple(x)} lies outside the {self.chart_kind} chart")

    # -- coefficients -----------------------------------------------------
    def coefficients(self, x):
        """Metric coefficients ``a_ij(x)`` and derivatives ``da[..., k, i, j] = d_k a_ij``."""
        x = np.asarray(x)
        n = self.dimension
        lead = x.shape[:-1]
        if self.chart_kind in ("euclidean-plane", "periodic-lattice"):
            a = np.broadcast_to(np.eye(n), lead + (n, n))
            da = np.zeros(lead + (n, n, n), dtype=x.dtype)
            return a, da
        if self.chart_kind == "sphere-chart":
            r2 = self.radius**2
            th = x[..., 0]
            s, c = np.sin(th), np.cos(th)
            a = np.zeros(lead + (2, 2), dtype=np.result_type(x, float))
            a[..., 0, 0] = r2
            a[..., 1, 1] = r2 * s * s
            da = np.zeros(lead + (2, 2, 2), dtype=a.dtype)
            da[..., 0, 1, 1] = 2 * r2 * s * c
            return a, da
        D1, D2 = self._embedding_derivatives(x)
        a = np.einsum("...ip,...jp->...ij", D1, D1)
        da = np.einsum("...kip,...jp->...kij", D2, D1) + np.einsum("...ip,...kjp->...kij", D1, D2)
        return a, da

    def embed(self, x) -> np.ndarray:
        """Position in R^3 for sphere and ellipsoid charts."""
        x = np.asarray(x)
        th, ph = x[..., 0], x[..., 1]
        if self.chart_kind == "sphere-chart":
            ax = (self.radius,) * 3
        elif self.chart_kind == "ellipsoid-chart":
            ax = self.semi_axes
        else:
            raise ChartDomainError("embedding only defined for sphere and ellipsoid charts")
        return np.stack(
            [ax[0] * np.sin(th) * np.cos(ph), ax[1] * np.sin(th) * np.sin(ph), ax[2] * np.cos(th)],
            axis=-1,
        )

    def _embedding_derivatives(self, x):
        a1, a2, a3 = self.semi_axes
        th, ph = x[..., 0], x[..., 1]
        st, ct, sp, cp = np.sin(th), np.cos(th), np.sin(ph), np.cos(ph)
        zero = np.zeros_like(th)
        X_t = np.stack([a1 * ct * cp, a2 * ct * sp, -a3 * st], axis=-1)
        X_p = np.stack([-a1 * st * sp, a2 * st * cp, zero], axis=-1)
        X_tt = np.stack([-a1 * st * cp, -a2 * st * sp, -a3 * ct], axis=-1)
        X_tp = np.stack([-a1 * ct * sp, a2 * ct * cp, zero], axis=-1)
        X_pp = np.stack([-a1 * st * cp, -a2 * st * sp, zero], axis=-1)
        D1 = np.stack([X_t, X_p], axis=-2)
        D2 = np.stack([np.stack([X_tt, X_tp], axis=-2), np.stack([X_tp, X_pp], axis=-2)], axis=-3)
        return D1, D2

    @property
    def max_azimuthal_radius(self) -> float:
        if self.chart_kind == "sphere-chart":
            return float(self.radius)
        if self.chart_kind == "ellipsoid-chart":
            return float(max(self.semi_axes[:2]))
        raise ConfigError("azimuthal radius only defined for sphere and ellipsoid charts")

    # -- sampling ------------------------------------------------------------
    def sample_points(self, u: np.ndarray) -> np.ndarray:
        """Map points of the unit cube (shape (m, n)) into the chart domain."""
        if self.chart_kind == "periodic-lattice":
            return u @ np.asarray(self.lattice, dtype=float)
        if self.chart_kind in ("sphere-chart", "ellipsoid-chart"):
            eps = self.pole_exclusion
            return np.stack([eps + (np.pi - 2 * eps) * u[:, 0], 2 * np.pi * u[:, 1]], axis=-1)
        return self.sample_box * (2 * u - 1)

    # -- serialisation -------------------------------------------------------
    def to_dict(self) -> dict:
        out = {"chart": self.chart_kind, "dimension": self.dimension}
        if self.lattice is not None:
            out["lattice"] = [list(map(float, row)) for row in self.lattice]
        if self.radius is not None:
            out["radius"] = float(self.radius)
        if self.semi_axes is not None:
            out["semi_axes"] = [float(s) for s in self.semi_axes]
        if self.chart_kind in ("sphere-chart", "ellipsoid-chart"):
            out["pole_exclusion"] = float(self.pole_exclusion)
        if self.chart_kind == "euclidean-plane":
            out["sample_box"] = float(self.sample_box)
        return out

    @classmethod
    def from_dict(cls, d: dict) -> "ChartManifold":
        lattice = d.get("lattice")
        axes = d.get("semi_axes")
        kind = d["chart"]
        dim = int(d.get("dimension", 2 if kind != "periodic-lattice" else len(lattice)))
        return cls(
            dimension=dim,
            chart_kind=kind,
            lattice=None if lattice is None else tuple(tuple(float(c) for c in row) for row in lattice),
            radius=None if d.get("radius") is None else float(d["radius"]),
            semi_axes=None if axes is None else tuple(float(s) for s in axes),
            pole_exclusion=float(d.get("pole_exclusion", 0.1)),
            sample_box=float(d.get("sample_box", 1.0)),
        )


@dataclass(frozen=True)
class OneForm:
    """Wind one-form of a Randers metric.

    ``constant``: chart-constant components.  ``rotation``: ``strength`` times the
    metric dual of the azimuthal field ``d/dphi``, normalised by the largest
    azimuthal radius so that its norm never exceeds ``strength``.
    """

    kind: str = "constant"
    components: tuple[float, ...] | None = None
    strength: float = 0.0

    def evaluate(self, manifold: ChartManifold, x, a, da):
        lead = np.shape(x)[:-1]
        n = manifold.dimension
        if self.kind == "constant":
            b = np.broadcast_to(np.asarray(self.components, dtype=float), lead + (n,))
            db = np.zeros(lead + (n, n))
            return b, db
        if self.kind == "rotation":
            scale = self.strength / manifold.max_azimuthal_radius
            return scale * a[..., :, 1], scale * da[..., :, :, 1]
        raise ConfigError(f"unknown one-form kind {self.kind!r}")

    def to_dict(self) -> dict:
        if self.kind == "constant":
            return {"type": "constant", "components": [float(c) for c in self.components]}
        return {"type": "rotation", "strength": float(self.strength)}


@dataclass(frozen=True)
class TangentVector:
    base_point: tuple[float, ...]
    components: tuple[float, ...]

    def __init__(self, base_point, components):
        object.__setattr__(self, "base_point", tuple(float(c) for c in np.ravel(base_point)))
        object.__setattr__(self, "components", tuple(float(c) for c in np.ravel(components)))
        if len(self.base_point) != len(self.components):
            raise ValueError("base point and components must have the same length")

    @property
    def x(self) -> np.ndarray:
        return np.array(self.base_point)

    @property
    def v(self) -> np.ndarray:
        return np.array(self.components)

    def scaled(self, lam: float) -> "TangentVector":
        return TangentVector(self.base_point, lam * self.v)


@dataclass(frozen=True)
class MetricSpec:
    """A Riemannian or Randers metric on a :class:`ChartManifold`."""

    manifold: ChartManifold
    kind: str = "riemannian"
    beta: OneForm | None = None
    cap_asserted: bool = False
    name: str = field(default="", compare=False)

    def __post_init__(self):
        if self.kind not in METRIC_KINDS:
            raise ConfigError(f"unknown metric kind {self.kind!r}")
        if self.kind == "randers":
            if self.beta is None:
                raise ConfigError("randers metric needs a one-form 'beta'")
            if self.beta.kind == "constant":
                if self.beta.components is None or len(self.beta.components) != self.manifold.dimension:
                    raise ConfigError("constant one-form needs n components")
            elif self.beta.kind == "rotation":
                if self.manifold.chart_kind not in ("sphere-chart", "ellipsoid-chart"):
                    raise ConfigError("rotation one-form needs a sphere or ellipsoid chart")
            else:
                raise ConfigError(f"unknown one-form kind {self.beta.kind!r}")

    @property
    def dimension(self) -> int:
        return self.manifold.dimension

    # -- pointwise data --------------------------------------------------------
    def local_data(self, x):
        """``(a, da, b, db)`` at chart point(s) ``x``."""
        a, da = self.manifold.coefficients(x)
        if self.kind == "randers":
            b, db = self.beta.evaluate(self.manifold, x, a, da)
        else:
            lead = np.shape(x)[:-1]
            n = self.dimension
            b = np.zeros(lead + (n,))
            db = np.zeros(lead + (n, n))
        return a, da, b, db

    def F(self, x, v):
        """Vectorised Finsler norm."""
        a, _, b, _ = self.local_data(x)
        v = np.asarray(v)
        alpha2 = np.einsum("...i,...ij,...j->...", v, a, v)
        return np.sqrt(alpha2) + np.einsum("...i,...i->...", b, v)

    def g(self, x, v):
        """Vectorised fundamental tensor (closed form)."""
        a, _, b, _ = self.local_data(x)
        p = _randers_parts(a, b, np.asarray(v))
        return p["g"]

    def cartan(self, x, v):
        """Vectorised Cartan tensor (closed form)."""
        a, _, b, _ = self.local_data(x)
        p = _randers_parts(a, b, np.asarray(v))
        h, u, alpha, v = p["h"], p["u"], p["alpha"], np.asarray(v)
        m = b - (np.einsum("...i,...i->...", b, v) / alpha)[..., None] * u
        return 0.5 * (
            np.einsum("...ij,...k->...ijk", h, m)
            + np.einsum("...jk,...i->...ijk", h, m)
            + np.einsum("...ki,...j->...ijk", h, m)
        )

    @cached_property
    def reversibility_flag(self) -> bool:
        """True iff F(-v) = F(v) on a fixed sample of tangent vectors."""
        if self.kind == "riemannian":
            return True
        xs, vs = sample_tangent_vectors(self.manifold, 128, seed=0)
        f_plus, f_minus = self.F(xs, vs), self.F(xs, -vs)
        return bool(np.all(np.abs(f_plus - f_minus) <= 1e-12 * np.abs(f_plus)))

    @cached_property
    def kernel_args(self) -> tuple:
        """Flat encoding ``(chart, chart_params, beta_kind, beta_params, pole_eps)`` for the compiled loops."""
        m = self.manifold
        chart = {"euclidean-plane": 0, "periodic-lattice": 0, "sphere-chart": 1, "ellipsoid-chart": 2}[m.chart_kind]
        if chart == 1:
            cp = np.array([m.radius], dtype=float)
        elif chart == 2:
            cp = np.array(m.semi_axes, dtype=float)
        else:
            cp = np.zeros(1)
        if self.kind == "randers" and self.beta.kind == "constant":
            bkind, bp = 1, np.array(self.beta.components, dtype=float)
        elif self.kind == "randers":
            bkind, bp = 2, np.array([self.beta.strength / m.max_azimuthal_radius])
        else:
            bkind, bp = 0, np.zeros(1)
        return chart, cp, bkind, bp, float(m.pole_exclusion if chart else 0.0)

    @cached_property
    def metric_id(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:12]

    # -- serialisation -----------------------------------------------------------
    def to_dict(self) -> dict:
        out = {"manifold": self.manifold.to_dict(), "kind": self.kind, "parameters": {}}
        if self.kind == "randers":
            out["parameters"]["beta"] = self.beta.to_dict()
        if self.cap_asserted:
            out["cap_asserted"] = True
        return out

    @classmethod
    def from_dict(cls, d: dict) -> "MetricSpec":
        validate_metric_config(d)
        params = d.get("parameters") or {}
        beta = None
        if "beta" in params:
            bd = params["beta"]
            if bd["type"] == "constant":
                beta = OneForm("constant", tuple(float(c) for c in bd["components"]))
            else:
                beta = OneForm("rotation", strength=float(bd["strength"]))
        return cls(
            manifold=ChartManifold.from_dict(d["manifold"]),
            kind=d.get("kind", "riemannian"),
            beta=beta,
            cap_asserted=bool(d.get("cap_asserted", False)),
            name=str(d.get("name", "")),
        )


def _randers_parts(a, b, v):
    """Closed-form pieces of F = alpha + b(v) shared by g, Cartan and the Lagrangian."""
    av = np.einsum("...ij,...j->...i", a, v)
    alpha = np.sqrt(np.einsum("...i,...i->...", v, av))
    u = av / alpha[..., None]
    F = alpha + np.einsum("...i,...i->...", b, v)
    ell = u + b
    h = (a - u[..., :, None] * u[..., None, :]) / alpha[..., None, None]
    g = ell[..., :, None] * ell[..., None, :] + F[..., None, None] * h
    return {"av": av, "alpha": alpha, "u": u, "F": F, "ell": ell, "h": h, "g": g}


# -- Lagrangian L = F^2 / 2 and its derivatives ---------------------------------


def lagrangian_derivatives(metric: MetricSpec, x, v):
    """First and mixed second derivatives of ``L = F^2/2``.

    Returns ``(L_x, L_v, g, L_vx)`` with ``L_vx[..., i, k] = d^2 L / dv^i dx^k``.
    """
    x = np.asarray(x)
    v = np.asarray(v)
    a, da, b, db = metric.local_data(x)
    p = _randers_parts(a, b, v)
    alpha, u, F, ell, av = p["alpha"], p["u"], p["F"], p["ell"], p["av"]
    q = np.einsum("...kij,...i,...j->...k", da, v, v)
    dalpha = q / (2 * alpha[..., None])
    Fx = dalpha + np.einsum("...ki,...i->...k", db, v)
    L_x = F[..., None] * Fx
    L_v = F[..., None] * ell
    dav = np.einsum("...kij,...j->...ik", da, v)
    du = dav / alpha[..., None, None] - av[..., :, None] * dalpha[..., None, :] / (alpha**2)[..., None, None]
    dell = du + np.swapaxes(db, -1, -2)
    L_vx = ell[..., :, None] * Fx[..., None, :] + F[..., None, None] * dell
    return L_x, L_v, p["g"], L_vx


def lagrangian_xx(metric: MetricSpec, x, v):
    """``d^2 L / dx dx`` by complex-step differentiation of the closed-form ``L_x``."""
    x = np.asarray(x, dtype=float)
    v = np.asarray(v, dtype=float)
    n = x.shape[-1]
    xc = x[..., None, :] + 1j * COMPLEX_STEP * np.eye(n)
    vc = np.broadcast_to(v[..., None, :], xc.shape)
    L_x = lagrangian_derivatives(metric, xc, vc)[0]
    # L_x[..., k, i] = d/dx^k of (L_x)_i
    return np.swapaxes(L_x.imag / COMPLEX_STEP, -1, -2)


# -- public pointwise operations -------------------------------------------------


def _unpack(metric: MetricSpec, v: TangentVector):
    x, comp = v.x, v.v
    metric.manifold.check_point(x)
    return x, comp


def eval_F(metric: MetricSpec, v: TangentVector) -> float:
    """Finsler norm of a tangent vector; exactly 0 for the zero vector."""
    x, comp = _unpack(metric, v)
    if not np.any(comp):
        return 0.0
    return float(metric.F(x, comp))


def fundamental_tensor(metric: MetricSpec, v: TangentVector) -> np.ndarray:
    """``g_v`` as a symmetric matrix; raises :class:`ConvexityError` if not positive definite."""
    x, comp = _unpack(metric, v)
    if not np.any(comp):
        raise ValueError("fundamental tensor is undefined on the zero section")
    g = metric.g(x, comp)
    g = 0.5 * (g + g.T)
    lam = np.linalg.eigvalsh(g)[0]
    if not lam > 0:
        raise ConvexityError(x, comp, lam)
    return g


def cartan_tensor(metric: MetricSpec, v: TangentVector) -> np.ndarray:
    x, comp = _unpack(metric, v)
    if not np.any(comp):
        raise ValueError("Cartan tensor is undefined on the zero section")
    return metric.cartan(x, comp)


def fd_fundamental_tensor(metric: MetricSpec, x, v, step: float = FD_STEP_SECOND) -> np.ndarray:
    """Central-difference Hessian of ``F^2/2`` in the fibre (independent oracle for ``g``)."""
    x = np.asarray(x, dtype=float)
    v = np.asarray(v, dtype=float)
    n = len(v)
    E = np.eye(n) * step
    f2 = lambda w: metric.F(x, w) ** 2
    out = np.empty((n, n))
    for i in range(n):
        for j in range(n):
            out[i, j] = (
                f2(v + E[i] + E[j]) - f2(v + E[i] - E[j]) - f2(v - E[i] + E[j]) + f2(v - E[i] - E[j])
            ) / (4 * step * step)
    return 0.5 * out


def fd_cartan_tensor(metric: MetricSpec, x, v, step: float = FD_STEP_THIRD) -> np.ndarray:
    """Third-order central differences of ``F^2``, scaled by 1/4."""
    x = np.asarray(x, dtype=float)
    v = np.asarray(v, dtype=float)
    n = len(v)
    E = np.eye(n) * step
    f2 = lambda w: metric.F(x, w) ** 2
    out = np.empty((n, n, n))
    signs = [(1, 1, 1), (1, 1, -1), (1, -1, 1), (1, -1, -1), (-1, 1, 1), (-1, 1, -1), (-1, -1, 1), (-1, -1, -1)]
    for i in range(n):
        for j in range(n):
            for k in range(n):
                acc = 0.0
                for si, sj, sk in signs:
                    acc += si * sj * sk * f2(v + si * E[i] + sj * E[j] + sk * E[k])
                out[i, j, k] = acc / (8 * step**3)
    return 0.25 * out


def sample_tangent_vectors(manifold: ChartManifold, count: int, seed: int = 0):
    """Quasi-uniform base points and unit (Euclidean-chart) directions."""
    n = manifold.dimension
    sampler = qmc.Halton(d=2 * n, scramble=True, seed=seed)
    u = sampler.random(count)
    xs = manifold.sample_points(u[:, :n])
    if n == 2:
        ang = 2 * np.pi * u[:, 2]
        dirs = np.stack([np.cos(ang), np.sin(ang)], axis=-1)
    else:
        from scipy.special import ndtri

        gauss = ndtri(np.clip(u[:, n:], 1e-12, 1 - 1e-12))
        dirs = gauss / np.linalg.norm(gauss, axis=-1, keepdims=True)
    return xs, dirs


@dataclass(frozen=True)
class ConvexityReport:
    min_eigenvalue: float
    passed: bool
    witness: TangentVector | None
    sample_count: int


def check_strong_convexity(metric: MetricSpec, sample_count: int = 512, seed: int = 0) -> ConvexityReport:
    """Smallest eigenvalue of ``g_v`` over seeded quasi-uniform samples of (x, v)."""
    xs, dirs = sample_tangent_vectors(metric.manifold, sample_count, seed)
    with np.errstate(invalid="ignore"):
        gs = metric.g(xs, dirs)
    gs = 0.5 * (gs + np.swapaxes(gs, -1, -2))
    lam = np.linalg.eigvalsh(gs)[:, 0]
    # a Randers norm with |b| >= 1 is negative in some directions: also a convexity failure
    F = metric.F(xs, dirs)
    lam = np.where(F > 0, lam, np.minimum(lam, F))
    i = int(np.argmin(lam))
    passed = bool(lam[i] > 0)
    witness = None if passed else TangentVector(xs[i], dirs[i])
    return ConvexityReport(float(lam[i]), passed, witness, sample_count)


# -- configuration ------------------------------------------------------------------

METRIC_SCHEMA = {
    "type": "object",
    "required": ["manifold"],
    "properties": {
        "name": {"type": "string"},
        "kind": {"enum": list(METRIC_KINDS)},
        "cap_asserted": {"type": "boolean"},
        "manifold": {
            "type": "object",
            "required": ["chart"],
            "properties": {
                "chart": {"enum": list(CHART_KINDS)},
                "dimension": {"type": "integer", "minimum": 2},
                "lattice": {"type": "array", "items": {"type": "array", "items": {"type": "number"}}},
                "radius": {"type": "number", "exclusiveMinimum": 0},
                "semi_axes": {
                    "type": "array",
                    "items": {"type": "number", "exclusiveMinimum": 0},
                    "minItems": 3,
                    "maxItems": 3,
                },
                "pole_exclusion": {"type": "number", "exclusiveMinimum": 0},
                "sample_box": {"type": "number", "exclusiveMinimum": 0},
            },
            "additionalProperties": False,
        },
        "parameters": {
            "type": "object",
            "properties": {
                "beta": {
                    "oneOf": [
                        {
                            "type": "object",
                            "required": ["type", "components"],
                            "properties": {
                                "type": {"const": "constant"},
                                "components": {"type": "array", "items": {"type": "number"}},
                            },
                            "additionalProperties": False,
                        },
                        {
                            "type": "object",
                            "required": ["type", "strength"],
                            "properties": {
                                "type": {"const": "rotation"},
                                "strength": {"type": "number"},
                            },
                            "additionalProperties": False,
                        },
                    ]
                }
            },
            "additionalProperties": False,
        },
    },
    "additionalProperties": False,
}


def validate_metric_config(d) -> None:
    import jsonschema

    try:
        jsonschema.validate(d, METRIC_SCHEMA)
    except jsonschema.ValidationError as exc:
        path = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"metric config invalid at {path}: {exc.message}") from None


def load_metric(source) -> MetricSpec:
    """Build a metric from a dict, a JSON string, or a path to a JSON file."""
    if isinstance(source, MetricSpec):
        return source
    if isinstance(source, dict):
        return MetricSpec.from_dict(source)
    text = str(source)
    if not text.lstrip().startswith("{"):
        try:
            text = Path(text).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read metric file {source!r}: {exc}") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"metric config is not valid JSON: {exc}") from None
    return MetricSpec.from_dict(data)


# -- shipped metrics -------------------------------------------------------------------


def flat_torus(lattice=((1.0, 0.0), (0.0, 1.0))) -> MetricSpec:
    m = ChartManifold(len(lattice), "periodic-lattice", lattice=tuple(tuple(map(float, r)) for r in lattice))
    return MetricSpec(m, name="flat-torus")


def euclidean_plane(dimension: int = 2) -> MetricSpec:
    return MetricSpec(ChartManifold(dimension, "euclidean-plane"), name="euclidean")


def round_sphere(radius: float = 1.0, pole_exclusion: float = 0.1) -> MetricSpec:
    m = ChartManifold(2, "sphere-chart", radius=float(radius), pole_exclusion=pole_exclusion)
    return MetricSpec(m, name="round-sphere")


def ellipsoid(semi_axes=(1.0, 1.1, 1.3), pole_exclusion: float = 0.1) -> MetricSpec:
    m = ChartManifold(2, "ellipsoid-chart", semi_axes=tuple(map(float, semi_axes)), pole_exclusion=pole_exclusion)
    return MetricSpec(m, name="ellipsoid")


def randers(base: MetricSpec, beta: OneForm) -> MetricSpec:
    return MetricSpec(base.manifold, kind="randers", beta=beta, name=f"randers-{base.name}")

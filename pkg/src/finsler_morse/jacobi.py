"""Jacobi fields along a geodesic, monodromy, Jacobi subspaces and conjugate points.

Everything is expressed in chart coordinates.  A Jacobi field is a solution
``xi`` of the variational equation ``xi'' = S_x xi + S_v xi'`` of the spray
``S``; its covariant derivative along the geodesic is ``D xi = xi' + N xi``
with the nonlinear connection ``N = -S_v / 2``.  Pairs ``(J, J')`` handed to
or returned from this module use the covariant derivative unless a name says
otherwise.

The fundamental matrix is the exact derivative of the RK4 map used for the
geodesic itself (tangent-linear RK4 with the spray Jacobians evaluated at the
stored stage states), so Jacobi fields and finite-difference variations of
the integrated geodesic agree to round-off.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.interpolate import CubicHermiteSpline
from scipy.optimize import brentq, minimize_scalar

from .errors import AmbiguousRankWarning, InconsistentJacobiBasisError, NotClosedError
from .geodesic import GeodesicPath, spray_compiled, spray_jacobians, verify_geodesic
from .metric import MetricSpec, lagrangian_derivatives

RANK_TOL = 1e-6
CONJUGATE_GRID = 2000
BISECTION_TOL = 1e-10
ENDPOINT_WINDOW = 1e-6
SYMMETRY_TOL = 1e-6


def _tangent_linear_propagators(A, h):
    """Per-step derivative of the RK4 map, from the 4 stage matrices ``A[k, s]``."""
    K, _, d, _ = A.shape
    eye = np.eye(d)
    A1, A2, A3, A4 = A[:, 0], A[:, 1], A[:, 2], A[:, 3]
    K1 = A1
    K2 = A2 @ (eye + 0.5 * h * K1)
    K3 = A3 @ (eye + 0.5 * h * K2)
    K4 = A4 @ (eye + h * K3)
    return eye + h / 6.0 * (K1 + 2 * K2 + 2 * K3 + K4)


def _first_order(Sx, Sv):
    n = Sx.shape[-1]
    lead = Sx.shape[:-2]
    A = np.zeros(lead + (2 * n, 2 * n))
    A[..., :n, n:] = np.eye(n)
    A[..., n:, :n] = Sx
    A[..., n:, n:] = Sv
    return A


@dataclass(frozen=True, eq=False)
class JacobiSystem:
    """Linearisation of the geodesic flow along ``geodesic``.

    ``Phi[k]`` maps coordinate initial data ``(xi(0), xi'(0))`` to
    ``(xi(t_k), xi'(t_k))``; ``steps[k]`` is the propagator of step ``k``.
    """

    metric: MetricSpec = field(repr=False)
    geodesic: GeodesicPath = field(repr=False)
    Phi: np.ndarray = field(repr=False)
    steps: np.ndarray = field(repr=False)
    Sx: np.ndarray = field(repr=False)
    Sv: np.ndarray = field(repr=False)
    frame_kind: str = "coordinate"

    @property
    def n(self) -> int:
        return self.metric.dimension

    @property
    def t(self) -> np.ndarray:
        return self.geodesic.t

    @property
    def N(self) -> np.ndarray:
        return -0.5 * self.Sv

    @property
    def speed(self) -> float:
        return float(self.geodesic.length)

    @cached_property
    def g(self) -> np.ndarray:
        return self.metric.g(self.geodesic.x, self.geodesic.v)

    @cached_property
    def L_vx(self) -> np.ndarray:
        return lagrangian_derivatives(self.metric, self.geodesic.x, self.geodesic.v)[3]

    def to_covariant(self, k) -> np.ndarray:
        """``C`` with ``(xi, D xi) = C (xi, xi')`` at node(s) ``k``."""
        n = self.n
        N = self.N[k]
        C = np.zeros(np.shape(N)[:-2] + (2 * n, 2 * n))
        C[..., :n, :n] = np.eye(n)
        C[..., n:, n:] = np.eye(n)
        C[..., n:, :n] = N
        return C

    @cached_property
    def Phi_covariant(self) -> np.ndarray:
        """Fundamental matrix in covariant data: ``(J(0), J'(0)) -> (J(t_k), J'(t_k))``."""
        C = self.to_covariant(slice(None))
        return C @ self.Phi @ np.linalg.inv(C[0])

    @cached_property
    def N_dot(self) -> np.ndarray:
        """``dN/dt`` along the geodesic by a central difference of ``S_v`` along the flow."""
        x, v = self.geodesic.x, self.geodesic.v
        acc = spray_compiled(self.metric, x, v)
        eps = 1e-5 / max(1.0, float(np.max(np.abs(v))))
        _, Sp = spray_jacobians(self.metric, x + eps * v, v + eps * acc)
        _, Sm = spray_jacobians(self.metric, x - eps * v, v - eps * acc)
        return -0.25 * (Sp - Sm) / eps

    @cached_property
    def curvature_samples(self) -> np.ndarray:
        """``R(t_k)`` with ``D^2 J = R J`` in coordinates, shape ``(steps+1, n, n)``."""
        N = self.N
        return self.Sx + self.N_dot + N @ N


def linearize(metric: MetricSpec, gamma: GeodesicPath) -> JacobiSystem:
    """Variational equation of the geodesic flow along ``gamma``.

    ``gamma`` is re-integrated and rejected with :class:`NotAGeodesicError`
    if its samples deviate from the flow by more than ``1e-5``.
    """
    out = verify_geodesic(metric, gamma, record_stages=True)
    stages = out["stages"]  # (K, 4, 2, n)
    K = gamma.steps
    h = 1.0 / K
    Sx_st, Sv_st = spray_jacobians(metric, stages[:, :, 0], stages[:, :, 1])
    P = _tangent_linear_propagators(_first_order(Sx_st, Sv_st), h)
    n = metric.dimension
    Phi = np.empty((K + 1, 2 * n, 2 * n))
    Phi[0] = np.eye(2 * n)
    for k in range(K):
        Phi[k + 1] = P[k] @ Phi[k]
    Sx_end, Sv_end = spray_jacobians(metric, gamma.x[-1], gamma.v[-1])
    Sx = np.concatenate([Sx_st[:, 0], Sx_end[None]])
    Sv = np.concatenate([Sv_st[:, 0], Sv_end[None]])
    for arr in (Phi, P, Sx, Sv):
        arr.setflags(write=False)
    return JacobiSystem(metric, gamma, Phi, P, Sx, Sv)


@dataclass(frozen=True)
class JacobiField:
    """A sampled Jacobi field: ``J`` and its covariant derivative ``DJ``; ``dJ`` is the coordinate derivative."""

    t: np.ndarray
    J: np.ndarray
    DJ: np.ndarray
    dJ: np.ndarray


def solve_jacobi(system: JacobiSystem, J0, J0p) -> JacobiField:
    """Jacobi field with ``J(0) = J0`` and covariant derivative ``J'(0) = J0p``."""
    n = system.n
    y0 = np.concatenate([np.asarray(J0, dtype=float), np.asarray(J0p, dtype=float)])
    Y = system.Phi_covariant @ y0
    J, DJ = Y[:, :n], Y[:, n:]
    dJ = DJ - np.einsum("kij,kj->ki", system.N, J)
    return JacobiField(system.t, J, DJ, dJ)


def wronskian(system: JacobiSystem, f1: JacobiField, f2: JacobiField) -> np.ndarray:
    """``g_T(J1', J2) - g_T(J1, J2')`` at every sample."""
    g = system.g
    return np.einsum("ki,kij,kj->k", f1.DJ, g, f2.J) - np.einsum("ki,kij,kj->k", f1.J, g, f2.DJ)


def monodromy(system: JacobiSystem) -> np.ndarray:
    """``(J(0), J'(0)) -> (J(1), J'(1))`` over one traversal of a closed geodesic."""
    if not system.geodesic.is_closed:
        raise NotClosedError("monodromy needs a closed geodesic")
    return system.Phi_covariant[-1].copy()


# -- subspaces -----------------------------------------------------------------


def _kernel(A, rank_tol):
    """Numerical kernel of ``A``: right singular vectors with ``s <= rank_tol * s_max``."""
    A = np.atleast_2d(A)
    _, s, Vt = np.linalg.svd(A)
    cols = A.shape[1]
    svals = np.concatenate([s, np.zeros(cols - len(s))])
    smax = float(svals.max()) if cols else 0.0
    if smax == 0.0:
        return np.eye(cols), False
    thr = rank_tol * smax
    null = svals <= thr
    nonzero = svals[svals > 0]
    ambiguous = bool(np.any((nonzero > thr / 10) & (nonzero < thr * 10)))
    return Vt[null].T, ambiguous


def _dim_of_sum(U, V, rank_tol):
    """Dimension of span(U) + span(V) for column bases."""
    W = np.hstack([U, V])
    if W.shape[1] == 0:
        return 0
    s = np.linalg.svd(W, compute_uv=False)
    return int(np.sum(s > rank_tol * max(1.0, s[0])))


@dataclass
class JacobiSubspaces:
    """Dimensions of the closing, periodic and Dirichlet Jacobi spaces of a closed geodesic.

    ``basis_Jcl`` has one row ``(J(0), J'(0))`` per basis field of the closing
    space (unit norm in the scaled data ``(J, J'/speed)``).
    """

    monodromy: np.ndarray
    dim_Jcl: int
    dim_Jp: int
    dim_J0: int
    dim_J0_cap_Jp: int
    basis_Jcl: np.ndarray
    rank_tolerance: float
    ambiguous: bool = False
    warnings: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "monodromy": self.monodromy.tolist(),
            "dim_Jcl": self.dim_Jcl,
            "dim_Jp": self.dim_Jp,
            "dim_J0": self.dim_J0,
            "dim_J0_cap_Jp": self.dim_J0_cap_Jp,
            "rank_tolerance": self.rank_tolerance,
            "ambiguous": self.ambiguous,
        }


def _scaled_blocks(system: JacobiSystem, M):
    n = system.n
    s = max(system.speed, 1e-300)
    D = np.diag(np.r_[np.ones(n), np.full(n, 1.0 / s)])
    Ms = D @ M @ np.linalg.inv(D)
    return Ms, D


def dirichlet_kernel(system: JacobiSystem, rank_tol: float = RANK_TOL):
    """Basis of ``{J : J(0) = 0 = J(1)}`` as columns of initial derivatives, plus an ambiguity flag."""
    n = system.n
    Ms, D = _scaled_blocks(system, system.Phi_covariant[-1])
    K, amb = _kernel(Ms[:n, n:], rank_tol)
    return K * system.speed, amb


def jacobi_subspaces(system: JacobiSystem, rank_tol: float = RANK_TOL) -> JacobiSubspaces:
    """Numerical kernels of the closing, periodic and Dirichlet conditions on the monodromy."""
    n = system.n
    M = monodromy(system)
    Ms, D = _scaled_blocks(system, M)
    I = np.eye(n)
    Kcl, a1 = _kernel(np.hstack([Ms[:n, :n] - I, Ms[:n, n:]]), rank_tol)
    Kp, a2 = _kernel(Ms - np.eye(2 * n), rank_tol)
    K0, a3 = _kernel(Ms[:n, n:], rank_tol)
    K0p, a4 = _kernel(np.vstack([Ms[:n, n:], Ms[n:, n:] - I]), rank_tol)
    notes = []
    ambiguous = a1 or a2 or a3 or a4
    if ambiguous:
        msg = "a singular value lies within a factor 10 of the rank threshold; Jacobi subspace dimensions are uncertain"
        notes.append(msg)
        warnings.warn(msg, AmbiguousRankWarning, stacklevel=2)
    basis = (np.linalg.inv(D) @ Kcl).T
    return JacobiSubspaces(M, Kcl.shape[1], Kp.shape[1], K0.shape[1], K0p.shape[1], basis, rank_tol, ambiguous, notes)


# -- b-form ----------------------------------------------------------------------


@dataclass
class BFormReport:
    """Matrix and signature of ``b(J1, J2) = g_T(J1'(1) - J1'(0), J2(0))`` on the closing space."""

    matrix: np.ndarray
    n_minus: int
    n_zero: int
    n_plus: int
    kernel_dim_check: bool
    asymmetry: float
    kernel_tol: float
    ambiguous: bool = False

    def to_dict(self) -> dict:
        return {
            "matrix": self.matrix.tolist(),
            "n_minus": self.n_minus,
            "n_zero": self.n_zero,
            "n_plus": self.n_plus,
            "kernel_dim_check": self.kernel_dim_check,
            "asymmetry": self.asymmetry,
        }


def b_form(system: JacobiSystem, subspaces: JacobiSubspaces) -> BFormReport:
    n = system.n
    basis = subspaces.basis_Jcl
    k = len(basis)
    g0 = system.g[0]
    scale = float(np.linalg.norm(g0, 2)) * system.speed
    if k == 0:
        return BFormReport(np.zeros((0, 0)), 0, 0, 0, True, 0.0, subspaces.rank_tolerance * scale)
    end = basis @ subspaces.monodromy.T  # (k, 2n)
    dJp = end[:, n:] - basis[:, n:]
    B = dJp @ g0 @ basis[:, :n].T
    asym = float(np.max(np.abs(B - B.T))) / scale
    if asym > SYMMETRY_TOL:
        raise InconsistentJacobiBasisError(f"b-form asymmetry {asym:.3e} exceeds {SYMMETRY_TOL:g}")
    B = 0.5 * (B + B.T)
    ev = np.linalg.eigvalsh(B)
    tol = subspaces.rank_tolerance * scale
    n_minus = int(np.sum(ev < -tol))
    n_plus = int(np.sum(ev > tol))
    n_zero = k - n_minus - n_plus
    a = np.abs(ev)
    ambiguous = bool(np.any((a > tol / 10) & (a < tol * 10)))
    if ambiguous:
        warnings.warn("b-form eigenvalue within a factor 10 of the kernel threshold", AmbiguousRankWarning, stacklevel=2)
    expected = subspaces.dim_J0 + subspaces.dim_Jp - subspaces.dim_J0_cap_Jp
    return BFormReport(B, n_minus, n_zero, n_plus, n_zero == expected, asym, tol, ambiguous)


# -- conjugate points ------------------------------------------------------------


@dataclass
class ConjugatePoints:
    """Interior conjugate points ``(t, multiplicity)`` of ``t = 0`` along the geodesic.

    ``endpoint_multiplicity`` is the dimension of ``{J(0) = 0 = J(1)}``;
    ``tangencies`` lists interior zeros of the end-map determinant without a
    sign change.
    """

    points: list[tuple[float, int]]
    endpoint_multiplicity: int
    tangencies: list[float] = field(default_factory=list)

    @property
    def count(self) -> int:
        return sum(m for _, m in self.points)

    def __iter__(self):
        return iter(self.points)

    def __len__(self):
        return len(self.points)

    def to_dict(self) -> dict:
        return {
            "points": [[t, m] for t, m in self.points],
            "endpoint_multiplicity": self.endpoint_multiplicity,
            "tangencies": list(self.tangencies),
        }


def _end_map_spline(system: JacobiSystem):
    n = system.n
    Y = system.Phi[:, :n, n:]
    dY = system.Phi[:, n:, n:]
    return CubicHermiteSpline(system.t, Y, dY, axis=0)


def _rank_drop(Y, tol):
    s = np.linalg.svd(Y, compute_uv=False)
    return int(np.sum(s <= tol * max(s[0], 1e-300)))


def conjugate_points(system: JacobiSystem, grid: int = CONJUGATE_GRID, rank_tol: float = 1e-5) -> ConjugatePoints:
    """Zeros of ``det Y(t)`` on ``(0, 1)``, ``Y`` the end map of the Dirichlet fields ``J(0) = 0``."""
    n = system.n
    spline = _end_map_spline(system)

    def ndet(t):
        Y = spline(t)
        cols = np.linalg.norm(Y, axis=-2)
        return np.linalg.det(Y) / np.prod(np.maximum(cols, 1e-300), axis=-1)

    ts = np.linspace(0.0, 1.0, grid + 1)[1:]
    d = ndet(ts)
    points: list[tuple[float, int]] = []
    tangencies: list[float] = []
    for i in range(len(ts) - 1):
        a, b = ts[i], ts[i + 1]
        if d[i] == 0.0 or np.sign(d[i]) != np.sign(d[i + 1]):
            if d[i] == 0.0:
                root = a
            else:
                root = brentq(ndet, a, b, xtol=BISECTION_TOL)
            if root >= 1.0 - ENDPOINT_WINDOW:
                continue
            mult = max(1, _rank_drop(spline(root), rank_tol))
            points.append((float(root), mult))
    # touching zeros: local minima of |det| that almost vanish without a sign change
    ad = np.abs(d)
    for i in range(1, len(ts) - 1):
        if ad[i] <= ad[i - 1] and ad[i] <= ad[i + 1] and ad[i] < 1e-3 and np.sign(d[i - 1]) == np.sign(d[i + 1]):
            if ts[i + 1] >= 1.0 - ENDPOINT_WINDOW:
                continue
            res = minimize_scalar(lambda t: abs(ndet(t)), bounds=(ts[i - 1], ts[i + 1]), method="bounded", options={"xatol": BISECTION_TOL})
            if res.fun < 1e-8 and not any(abs(res.x - t0) < 1e-6 for t0, _ in points):
                mult = max(1, _rank_drop(spline(res.x), rank_tol))
                tangencies.append(float(res.x))
                points.append((float(res.x), mult))
    points.sort()
    end_mult = _rank_drop(system.Phi[-1, :n, n:] * system.speed, rank_tol) if n else 0
    return ConjugatePoints(points, end_mult, tangencies)


def jacobi_summary(system: JacobiSystem, rank_tol: float = RANK_TOL) -> dict:
    """JSON-ready summary: monodromy and subspace dimensions (closed geodesics) plus conjugate points."""
    out = {"metric_id": system.metric.metric_id, "length": system.speed}
    if system.geodesic.is_closed:
        out["subspaces"] = jacobi_subspaces(system, rank_tol).to_dict()
    out["conjugate_points"] = conjugate_points(system).to_dict()
    return out


def jacobi_summary_json(system: JacobiSystem, rank_tol: float = RANK_TOL) -> str:
    return json.dumps(jacobi_summary(system, rank_tol), sort_keys=True)

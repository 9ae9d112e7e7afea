"""Morse indices of geodesics from the second variation of the energy.

In chart coordinates the index form of a geodesic ``gamma`` on ``[0, 1]`` is

    I(V, W) = int V'^T A W' + V'^T B W + W'^T B V + V^T C W  dt

with ``A = g``, ``B = d^2 L / dv dx`` and ``C = d^2 L / dx^2`` for
``L = F^2 / 2``, all evaluated along ``(gamma, gamma')``.  Three routes to
its index are offered:

* piecewise-linear finite elements (:func:`index_form_matrix`),
* broken Jacobi fields, where each element carries the Jacobi field with the
  given end values so the element matrix is a boundary term built from the
  element's fundamental matrix (the default for :func:`morse_index`),
* the finite-difference Hessian of a discrete energy that only calls ``F``
  (:func:`hessian_crosscheck`).
"""

from __future__ import annotations

import json
import warnings
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.interpolate import CubicHermiteSpline
from scipy.integrate import simpson

from .errors import AmbiguousRankWarning, NotClosedError, StepSizeError
from .geodesic import GeodesicPath, rebase, spray_compiled
from .jacobi import (
    RANK_TOL,
    JacobiSystem,
    b_form,
    conjugate_points,
    jacobi_subspaces,
    linearize,
)
from .metric import MetricSpec, lagrangian_derivatives, lagrangian_xx

DEFAULT_SEGMENTS = 200
KERNEL_TOL = 1e-6
HESSIAN_ASYMMETRY_TOL = 1e-4
BCS = ("dirichlet", "periodic")

_GAUSS_X, _GAUSS_W = np.polynomial.legendre.leggauss(3)
_GAUSS_S = 0.5 * (_GAUSS_X + 1.0)
_GAUSS_W = 0.5 * _GAUSS_W


def _check_bc(system_or_path, bc, segments, minimum=8):
    if bc not in BCS:
        raise ValueError(f"bc must be one of {BCS}")
    if segments < minimum:
        raise ValueError(f"need at least {minimum} segments")
    gamma = system_or_path.geodesic if isinstance(system_or_path, JacobiSystem) else system_or_path
    if bc == "periodic" and not gamma.is_closed:
        raise NotClosedError("periodic boundary conditions need a closed geodesic")


def form_coefficients(metric: MetricSpec, x, v):
    """``(A, B, C)`` of the index form at points ``(x, v)`` of the geodesic."""
    _, _, g, L_vx = lagrangian_derivatives(metric, x, v)
    return g, L_vx, lagrangian_xx(metric, x, v)


def _interpolants(system: JacobiSystem):
    gamma = system.geodesic
    acc = spray_compiled(system.metric, gamma.x, gamma.v)
    return CubicHermiteSpline(gamma.t, gamma.x, gamma.v, axis=0), CubicHermiteSpline(gamma.t, gamma.v, acc, axis=0)


def _reduce(K, n, nodes, bc):
    """Apply boundary conditions to a matrix assembled over ``nodes + 1`` nodes."""
    N = nodes
    if bc == "dirichlet":
        return K[n : N * n, n : N * n]
    P = np.zeros(((N + 1) * n, N * n))
    P[: N * n, : N * n] = np.eye(N * n)
    P[N * n :, :n] = np.eye(n)
    return P.T @ K @ P


def _linear_elements(system: JacobiSystem, segments: int) -> np.ndarray:
    n = system.n
    N = segments
    h = 1.0 / N
    xs, vs = _interpolants(system)
    tq = (np.arange(N)[:, None] + _GAUSS_S[None, :]) * h  # (N, 3)
    A, B, C = form_coefficients(system.metric, xs(tq), vs(tq))  # (N, 3, n, n)
    phi = np.stack([1.0 - _GAUSS_S, _GAUSS_S])  # (2, 3)
    dphi = np.array([-1.0, 1.0]) / h
    w = _GAUSS_W * h
    Bt = np.swapaxes(B, -1, -2)
    K = np.zeros(((N + 1) * n, (N + 1) * n))
    for a in range(2):
        for b in range(2):
            blk = np.einsum(
                "q,eqij->eij",
                w,
                dphi[a] * dphi[b] * A
                + (dphi[a] * phi[b])[None, :, None, None] * B
                + (phi[a] * dphi[b])[None, :, None, None] * Bt
                + (phi[a] * phi[b])[None, :, None, None] * C,
            )
            for e in range(N):
                r, c = (e + a) * n, (e + b) * n
                K[r : r + n, c : c + n] += blk[e]
    return K


def _jacobi_elements(system: JacobiSystem, segments: int) -> np.ndarray:
    n = system.n
    N = segments
    idx = np.round(np.linspace(0, system.geodesic.steps, N + 1)).astype(int)
    if len(np.unique(idx)) != N + 1:
        raise ValueError("more segments than integration steps")
    Phi = system.Phi[idx]
    g, L_vx = system.g[idx], system.L_vx[idx]
    K = np.zeros(((N + 1) * n, (N + 1) * n))
    for e in range(N):
        P = Phi[e + 1] @ np.linalg.inv(Phi[e])
        P11, P12, P21, P22 = P[:n, :n], P[:n, n:], P[n:, :n], P[n:, n:]
        Q = np.linalg.inv(P12)
        Gaa, Gab = -Q @ P11, Q
        Hba, Hbb = P21 - P22 @ Q @ P11, P22 @ Q
        Aa, Ba, Ab, Bb = g[e], L_vx[e], g[e + 1], L_vx[e + 1]
        E = np.block([[-(Aa @ Gaa + Ba), -Aa @ Gab], [Ab @ Hba, Ab @ Hbb + Bb]])
        E = 0.5 * (E + E.T)
        r = e * n
        K[r : r + 2 * n, r : r + 2 * n] += E
    return K


def index_form_matrix(system: JacobiSystem, bc: str = "dirichlet", segments: int = DEFAULT_SEGMENTS, elements: str = "linear") -> np.ndarray:
    """Symmetric matrix of the index form on a uniform grid of ``segments`` elements.

    ``elements="linear"``: piecewise-linear fields, 3-point Gauss quadrature.
    ``elements="jacobi"``: broken Jacobi fields (exact element matrices).
    Dirichlet conditions drop the end nodes; periodic conditions identify them.
    """
    _check_bc(system, bc, segments)
    if elements == "linear":
        K = _linear_elements(system, segments)
    elif elements == "jacobi":
        K = _jacobi_elements(system, segments)
    else:
        raise ValueError("elements must be 'linear' or 'jacobi'")
    K = _reduce(K, system.n, segments, bc)
    return 0.5 * (K + K.T)


@dataclass
class Spectrum:
    eigenvalues: np.ndarray
    index: int
    nullity: int
    threshold: float
    ambiguous: bool


def _inertia(ev, kernel_tol):
    scale = float(np.max(np.abs(ev))) if len(ev) else 0.0
    thr = kernel_tol * scale
    index = int(np.sum(ev < -thr))
    nullity = int(np.sum(np.abs(ev) <= thr))
    a = np.abs(ev)
    ambiguous = bool(np.any((a > thr / 10) & (a < thr * 10)))
    return index, nullity, thr, ambiguous


def morse_spectrum(
    system: JacobiSystem, bc: str = "dirichlet", segments: int = DEFAULT_SEGMENTS, kernel_tol: float = KERNEL_TOL, elements: str = "jacobi"
) -> Spectrum:
    ev = np.linalg.eigvalsh(index_form_matrix(system, bc, segments, elements))
    index, nullity, thr, ambiguous = _inertia(ev, kernel_tol)
    if ambiguous:
        warnings.warn(
            f"index-form eigenvalue within a factor 10 of the kernel threshold ({bc}, {elements} elements)",
            AmbiguousRankWarning,
            stacklevel=3,
        )
    return Spectrum(ev, index, nullity, thr, ambiguous)


def morse_index(
    system: JacobiSystem, bc: str = "dirichlet", segments: int = DEFAULT_SEGMENTS, kernel_tol: float = KERNEL_TOL, elements: str = "jacobi"
) -> tuple[int, int]:
    """``(index, nullity)`` of the index form: eigenvalues below ``-kernel_tol * scale`` and within it."""
    s = morse_spectrum(system, bc, segments, kernel_tol, elements)
    return s.index, s.nullity


# -- discrete energy Hessian ------------------------------------------------------


def _segment_energy(metric, Xa, Xb, h):
    mid = 0.5 * (Xa + Xb)
    F = metric.F(mid, (Xb - Xa) / h)
    return 0.5 * h * F * F


def _segment_gradients(metric, Z, h, e1):
    """Central-difference gradient of each segment energy in its ``2n`` variables."""
    n2 = Z.shape[-1]
    n = n2 // 2
    E = np.eye(n2) * e1
    Zp = Z[..., None, :] + E
    Zm = Z[..., None, :] - E
    fp = _segment_energy(metric, Zp[..., :n], Zp[..., n:], h)
    fm = _segment_energy(metric, Zm[..., :n], Zm[..., n:], h)
    return (fp - fm) / (2 * e1)


def _discrete_hessian(metric, X, h, e1=1e-5, e2=1e-4):
    """Block-tridiagonal Hessian of the discrete energy over nodes ``X`` (all nodes, no bc)."""
    N = len(X) - 1
    n = X.shape[1]
    Z = np.concatenate([X[:-1], X[1:]], axis=1)  # (N, 2n)
    E = np.eye(2 * n) * e2
    Gp = _segment_gradients(metric, Z[:, None, :] + E, h, e1)  # (N, 2n, 2n): [seg, pert j, grad i]
    Gm = _segment_gradients(metric, Z[:, None, :] - E, h, e1)
    Hs = np.swapaxes((Gp - Gm) / (2 * e2), -1, -2)  # [seg, i, j] = d grad_i / d z_j
    grads = _segment_gradients(metric, Z, h, e1)
    H = np.zeros(((N + 1) * n, (N + 1) * n))
    grad = np.zeros((N + 1) * n)
    for k in range(N):
        H[k * n : (k + 2) * n, k * n : (k + 2) * n] += Hs[k]
        grad[k * n : (k + 2) * n] += grads[k]
    return H, grad


def _hessian_bc(H, grad, n, N, bc):
    return _reduce(H, n, N, bc), (grad[n : N * n] if bc == "dirichlet" else _fold(grad, n, N))


def _fold(vec, n, N):
    out = vec[: N * n].copy()
    out[:n] += vec[N * n :]
    return out


def _node_positions(gamma: GeodesicPath, nodes: int):
    xs = CubicHermiteSpline(gamma.t, gamma.x, gamma.v, axis=0)
    return xs(np.linspace(0.0, 1.0, nodes + 1))


def hessian_spectrum(metric: MetricSpec, gamma: GeodesicPath, bc: str = "dirichlet", nodes: int = DEFAULT_SEGMENTS, relax_steps: int = 3):
    """Eigenvalues of the finite-difference Hessian of ``sum_k h F^2(midpoint, (x_{k+1}-x_k)/h) / 2``.

    The sampled geodesic is first relaxed to a critical point of the discrete
    energy by a few Newton steps.
    """
    _check_bc(gamma, bc, nodes)
    n = metric.dimension
    N = nodes
    h = 1.0 / N
    X = _node_positions(gamma, N).copy()
    shift = X[-1] - X[0] if bc == "periodic" else None
    for _ in range(relax_steps + 1):
        H, grad = _discrete_hessian(metric, X, h)
        Hr, gr = _hessian_bc(H, grad, n, N, bc)
        scale = float(np.max(np.abs(Hr)))
        asym = float(np.max(np.abs(Hr - Hr.T))) / scale
        if asym > HESSIAN_ASYMMETRY_TOL:
            raise StepSizeError(f"finite-difference Hessian asymmetry {asym:.2e} exceeds {HESSIAN_ASYMMETRY_TOL:g}")
        Hr = 0.5 * (Hr + Hr.T)
        if _ == relax_steps:
            break
        step = np.linalg.lstsq(Hr, -gr, rcond=1e-10)[0]
        if bc == "dirichlet":
            X[1:N] += step.reshape(N - 1, n)
        else:
            X[:N] += step.reshape(N, n)
            X[N] = X[0] + shift
    return np.linalg.eigvalsh(Hr)


def hessian_crosscheck(metric: MetricSpec, gamma: GeodesicPath, bc: str = "dirichlet", nodes: int = DEFAULT_SEGMENTS, kernel_tol: float = KERNEL_TOL) -> int:
    """Morse index of the discrete energy Hessian; an independent check on :func:`morse_index`."""
    ev = hessian_spectrum(metric, gamma, bc, nodes)
    return _inertia(ev, kernel_tol)[0]


# -- reports -------------------------------------------------------------------------


@dataclass
class IndexReport:
    lambda_dirichlet: int
    nullity_dirichlet: int
    lambda_periodic: int | None
    nullity_periodic: int | None
    concavity: int | None
    method_agreement: dict
    segments_used: int
    kernel_tol: float
    ambiguous: bool = False

    @property
    def methods_agree(self) -> bool:
        return len(set(self.method_agreement.values())) <= 1

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def index_report(
    system: JacobiSystem,
    segments: int = DEFAULT_SEGMENTS,
    kernel_tol: float = KERNEL_TOL,
    methods=("fem", "conjugate-points", "hessian"),
) -> IndexReport:
    """Dirichlet (and, for closed geodesics, periodic) index and nullity with a cross-method table."""
    d = morse_spectrum(system, "dirichlet", segments, kernel_tol)
    agreement = {}
    if "fem" in methods:
        agreement["fem"] = morse_spectrum(system, "dirichlet", segments, kernel_tol, elements="linear").index
    if "conjugate-points" in methods:
        agreement["conjugate-points"] = conjugate_points(system).count
    if "hessian" in methods:
        agreement["hessian"] = hessian_crosscheck(system.metric, system.geodesic, "dirichlet", segments, kernel_tol)
    lp = npd = con = None
    ambiguous = d.ambiguous
    if system.geodesic.is_closed:
        p = morse_spectrum(system, "periodic", segments, kernel_tol)
        lp, npd, con = p.index, p.nullity, p.index - d.index
        ambiguous = ambiguous or p.ambiguous
    return IndexReport(d.index, d.nullity, lp, npd, con, agreement, segments, kernel_tol, ambiguous)


# -- index decomposition --------------------------------------------------------------


@dataclass
class DecompositionReport:
    """Both sides of ``lambda~ = lambda + dim J0 - dim(J0 cap Jp) + n_-(b)`` and the concavity bound."""

    lambda_periodic: int
    lambda_dirichlet: int
    dim_J0: int
    dim_J0_cap_Jp: int
    n_minus_b: int
    dim_ker_b: int
    dim_Jp: int
    dim_Jcl: int
    nullity_dirichlet: int
    nullity_periodic: int
    dimension: int
    outcome: str
    notes: list[str] = field(default_factory=list)

    @property
    def rhs(self) -> int:
        return self.lambda_dirichlet + self.dim_J0 - self.dim_J0_cap_Jp + self.n_minus_b

    @property
    def identity_holds(self) -> bool:
        return self.lambda_periodic == self.rhs

    @property
    def concavity(self) -> int:
        return self.lambda_periodic - self.lambda_dirichlet

    @property
    def concavity_formula(self) -> int:
        return self.dim_ker_b + self.n_minus_b - self.dim_Jp

    @property
    def concavity_bound(self) -> int:
        return 2 * self.dimension

    @property
    def concavity_sharp_bound(self) -> int:
        return self.dimension - 1

    @property
    def concavity_within_bound(self) -> bool:
        return 0 <= self.concavity <= self.concavity_bound

    @property
    def nullities_match(self) -> bool:
        return self.nullity_dirichlet == self.dim_J0 and self.nullity_periodic == self.dim_Jp

    def ledger(self) -> str:
        verdict = {"pass": "PASS", "fail": "FAIL", "inconclusive": "INCONCLUSIVE"}[self.outcome]
        return (
            f"{self.lambda_periodic} = {self.lambda_dirichlet} + {self.dim_J0} - {self.dim_J0_cap_Jp} + {self.n_minus_b} {verdict}"
        )

    def ledger_lines(self) -> list[str]:
        lines = [
            f"lambda_periodic (left side) = {self.lambda_periodic}",
            f"lambda_dirichlet = {self.lambda_dirichlet}",
            f"dim J0 = {self.dim_J0}",
            f"dim (J0 cap Jp) = {self.dim_J0_cap_Jp}",
            f"n_minus(b) = {self.n_minus_b}",
            f"identity: {self.ledger()}",
            f"con = {self.concavity}; dim ker b + n_minus(b) - dim Jp = {self.concavity_formula}",
            f"0 <= con <= 2 dim M = {self.concavity_bound}: {'PASS' if self.concavity_within_bound else 'FAIL'}",
            f"con <= dim M - 1 = {self.concavity_sharp_bound}: {'yes' if self.concavity <= self.concavity_sharp_bound else 'no'} (reported only)",
        ]
        return lines + [f"note: {n}" for n in self.notes]

    def to_dict(self) -> dict:
        d = asdict(self)
        d.update(
            rhs=self.rhs,
            concavity=self.concavity,
            concavity_formula=self.concavity_formula,
            concavity_bound=self.concavity_bound,
            concavity_sharp_bound=self.concavity_sharp_bound,
            ledger=self.ledger(),
        )
        return d


def verify_index_decomposition(
    c: GeodesicPath,
    base_point_index: int | None = None,
    segments: int = DEFAULT_SEGMENTS,
    kernel_tol: float = KERNEL_TOL,
    rank_tol: float = RANK_TOL,
) -> DecompositionReport:
    """Compute the periodic index and, independently, every term of its decomposition.

    The closed geodesic is based at sample ``base_point_index`` (default: its
    first sample).  Any ambiguous rank or kernel decision upstream makes the
    outcome ``inconclusive``; otherwise it is ``pass`` or ``fail`` on the
    integer identity together with the consistency checks of the b-form.
    """
    if not c.is_closed:
        raise NotClosedError("index decomposition needs a closed geodesic")
    if base_point_index:
        c = rebase(c, base_point_index / c.steps)
    system = linearize(c.metric, c)
    notes = []
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", AmbiguousRankWarning)
        per = morse_spectrum(system, "periodic", segments, kernel_tol)
        dir_ = morse_spectrum(system, "dirichlet", segments, kernel_tol)
        sub = jacobi_subspaces(system, rank_tol)
        b = b_form(system, sub)
    ambiguous = per.ambiguous or dir_.ambiguous or sub.ambiguous or b.ambiguous or any(
        issubclass(w.category, AmbiguousRankWarning) for w in caught
    )
    for w in caught:
        warnings.warn(w.message, w.category, stacklevel=2)
    if not b.kernel_dim_check:
        notes.append("dim ker b differs from dim(J0 + Jp)")
    report = DecompositionReport(
        per.index,
        dir_.index,
        sub.dim_J0,
        sub.dim_J0_cap_Jp,
        b.n_minus,
        b.n_zero,
        sub.dim_Jp,
        sub.dim_Jcl,
        dir_.nullity,
        per.nullity,
        c.metric.dimension,
        "pass",
        notes,
    )
    if ambiguous:
        report.outcome = "inconclusive"
        report.notes.append("ambiguous rank or kernel decision upstream")
    elif not (report.identity_holds and report.concavity == report.concavity_formula and report.concavity_within_bound):
        report.outcome = "fail"
    return report


# -- direct quadrature of the form, for consistency checks ---------------------------------


def index_form_value(system: JacobiSystem, V, dV, W, dW, breaks=None) -> float:
    """``I(V, W)`` by composite Simpson quadrature on the geodesic samples.

    ``V, W`` and their coordinate derivatives are sampled at the geodesic
    nodes.  Piecewise-smooth fields pass ``dV``/``dW`` of shape
    ``(elements, samples_per_element, n)`` together with ``breaks``, the node
    indices of the element boundaries.
    """
    gamma = system.geodesic
    A, B, C = form_coefficients(system.metric, gamma.x, gamma.v)
    if breaks is None:
        breaks = np.array([0, gamma.steps])
        dV, dW = dV[None], dW[None]
    total = 0.0
    for e, (a, b) in enumerate(zip(breaks[:-1], breaks[1:])):
        sl = slice(a, b + 1)
        v, w, dv, dw = V[sl], W[sl], dV[e], dW[e]
        f = (
            np.einsum("ki,kij,kj->k", dv, A[sl], dw)
            + np.einsum("ki,kij,kj->k", dv, B[sl], w)
            + np.einsum("ki,kij,kj->k", dw, B[sl], v)
            + np.einsum("ki,kij,kj->k", v, C[sl], w)
        )
        total += simpson(f, x=gamma.t[sl])
    return float(total)

"""Compiled spray and RK4 loops.

These mirror the numpy closed forms in :mod:`finsler_morse.metric`; the test
suite checks the two against each other.  The spray is written on scalars so
that it stays in registers and works unchanged for complex arguments, which
is what complex-step differentiation needs.

Chart codes: 0 flat (constant coefficients, any dimension), 1 round sphere,
2 ellipsoid.  One-form codes: 0 none, 1 constant components, 2 scaled
azimuthal dual.  On a flat chart every supported one-form is constant, so the
Finsler norm does not depend on the point and the spray vanishes.
"""

import numpy as np
from numba import njit


@njit(cache=True)
def _spray2(chart, c1, c2, c3, bkind, b0, b1, x0, x1, v0, v1):
    """Geodesic acceleration on a 2-dimensional sphere or ellipsoid chart."""
    zero = 0.0 * (x0 + v0)
    st = np.sin(x0)
    ct = np.cos(x0)
    if chart == 1:
        r2 = c1 * c1
        a00 = r2 + zero
        a01 = zero
        a11 = r2 * st * st
        t00 = zero
        t01 = zero
        t11 = 2.0 * r2 * st * ct
        p00 = zero
        p01 = zero
        p11 = zero
    else:
        sp = np.sin(x1)
        cp = np.cos(x1)
        # first and second derivatives of the embedding in (theta, phi)
        Xt0, Xt1, Xt2 = c1 * ct * cp, c2 * ct * sp, -c3 * st
        Xp0, Xp1 = -c1 * st * sp, c2 * st * cp
        Xtt0, Xtt1, Xtt2 = -c1 * st * cp, -c2 * st * sp, -c3 * ct
        Xtp0, Xtp1 = -c1 * ct * sp, c2 * ct * cp
        Xpp0, Xpp1 = -c1 * st * cp, -c2 * st * sp
        a00 = Xt0 * Xt0 + Xt1 * Xt1 + Xt2 * Xt2
        a01 = Xt0 * Xp0 + Xt1 * Xp1
        a11 = Xp0 * Xp0 + Xp1 * Xp1
        t00 = 2.0 * (Xtt0 * Xt0 + Xtt1 * Xt1 + Xtt2 * Xt2)
        t01 = Xtt0 * Xp0 + Xtt1 * Xp1 + Xt0 * Xtp0 + Xt1 * Xtp1
        t11 = 2.0 * (Xtp0 * Xp0 + Xtp1 * Xp1)
        p00 = 2.0 * (Xtp0 * Xt0 + Xtp1 * Xt1)
        p01 = Xtp0 * Xp0 + Xtp1 * Xp1 + Xt0 * Xpp0 + Xt1 * Xpp1
        p11 = 2.0 * (Xpp0 * Xp0 + Xpp1 * Xp1)
    # one-form b and its derivatives (t: d/dtheta, p: d/dphi)
    if bkind == 1:
        bb0, bb1 = b0 + zero, b1 + zero
        dt0, dt1, dp0, dp1 = zero, zero, zero, zero
    elif bkind == 2:
        bb0, bb1 = b0 * a01, b0 * a11
        dt0, dt1, dp0, dp1 = b0 * t01, b0 * t11, b0 * p01, b0 * p11
    else:
        bb0, bb1 = zero, zero
        dt0, dt1, dp0, dp1 = zero, zero, zero, zero
    av0 = a00 * v0 + a01 * v1
    av1 = a01 * v0 + a11 * v1
    alpha = np.sqrt(v0 * av0 + v1 * av1)
    F = alpha + bb0 * v0 + bb1 * v1
    u0, u1 = av0 / alpha, av1 / alpha
    l0, l1 = u0 + bb0, u1 + bb1
    g00 = l0 * l0 + F * (a00 - u0 * u0) / alpha
    g01 = l0 * l1 + F * (a01 - u0 * u1) / alpha
    g11 = l1 * l1 + F * (a11 - u1 * u1) / alpha
    dal0 = (t00 * v0 * v0 + 2.0 * t01 * v0 * v1 + t11 * v1 * v1) / (2.0 * alpha)
    dal1 = (p00 * v0 * v0 + 2.0 * p01 * v0 * v1 + p11 * v1 * v1) / (2.0 * alpha)
    Fx0 = dal0 + dt0 * v0 + dt1 * v1
    Fx1 = dal1 + dp0 * v0 + dp1 * v1
    dav00 = t00 * v0 + t01 * v1
    dav10 = t01 * v0 + t11 * v1
    dav01 = p00 * v0 + p01 * v1
    dav11 = p01 * v0 + p11 * v1
    a2 = alpha * alpha
    # L_vx[i, k] = l_i dF/dx_k + F (du_i/dx_k + db_i/dx_k)
    q00 = l0 * Fx0 + F * (dav00 / alpha - av0 * dal0 / a2 + dt0)
    q01 = l0 * Fx1 + F * (dav01 / alpha - av0 * dal1 / a2 + dp0)
    q10 = l1 * Fx0 + F * (dav10 / alpha - av1 * dal0 / a2 + dt1)
    q11 = l1 * Fx1 + F * (dav11 / alpha - av1 * dal1 / a2 + dp1)
    r0 = F * Fx0 - q00 * v0 - q01 * v1
    r1 = F * Fx1 - q10 * v0 - q11 * v1
    det = g00 * g11 - g01 * g01
    return (g11 * r0 - g01 * r1) / det, (g00 * r1 - g01 * r0) / det


@njit(cache=True)
def _params(cp, bp):
    return cp[0], cp[min(1, cp.shape[0] - 1)], cp[cp.shape[0] - 1], bp[0], bp[bp.shape[0] - 1]


@njit(cache=True)
def spray_many(chart, cp, bkind, bp, X, V, out):
    if chart == 0:
        out[:] = 0.0
        return
    c1, c2, c3, b0, b1 = _params(cp, bp)
    for m in range(X.shape[0]):
        s0, s1 = _spray2(chart, c1, c2, c3, bkind, b0, b1, X[m, 0], X[m, 1], V[m, 0], V[m, 1])
        out[m, 0] = s0
        out[m, 1] = s1


@njit(cache=True)
def _step2(chart, c1, c2, c3, bkind, b0, b1, h, x0, x1, v0, v1):
    k1a, k1b = _spray2(chart, c1, c2, c3, bkind, b0, b1, x0, x1, v0, v1)
    x20, x21 = x0 + 0.5 * h * v0, x1 + 0.5 * h * v1
    v20, v21 = v0 + 0.5 * h * k1a, v1 + 0.5 * h * k1b
    k2a, k2b = _spray2(chart, c1, c2, c3, bkind, b0, b1, x20, x21, v20, v21)
    x30, x31 = x0 + 0.5 * h * v20, x1 + 0.5 * h * v21
    v30, v31 = v0 + 0.5 * h * k2a, v1 + 0.5 * h * k2b
    k3a, k3b = _spray2(chart, c1, c2, c3, bkind, b0, b1, x30, x31, v30, v31)
    x40, x41 = x0 + h * v30, x1 + h * v31
    v40, v41 = v0 + h * k3a, v1 + h * k3b
    k4a, k4b = _spray2(chart, c1, c2, c3, bkind, b0, b1, x40, x41, v40, v41)
    xn0 = x0 + h / 6.0 * (v0 + 2.0 * v20 + 2.0 * v30 + v40)
    xn1 = x1 + h / 6.0 * (v1 + 2.0 * v21 + 2.0 * v31 + v41)
    vn0 = v0 + h / 6.0 * (k1a + 2.0 * k2a + 2.0 * k3a + k4a)
    vn1 = v1 + h / 6.0 * (k1b + 2.0 * k2b + 2.0 * k3b + k4b)
    return xn0, xn1, vn0, vn1, x20, x21, v20, v21, x30, x31, v30, v31, x40, x41, v40, v41


@njit(cache=True)
def _inside(eps, x0, x1, v0, v1):
    ok = np.isfinite(x0) and np.isfinite(x1) and np.isfinite(v0) and np.isfinite(v1)
    return ok and eps <= x0 and x0 <= np.pi - eps


@njit(cache=True)
def rk4_final(chart, cp, bkind, bp, eps, X0, V0, steps, Xout, Vout, exit_step):
    """Endpoints of many trajectories; a trajectory stops at its first chart exit."""
    B = X0.shape[0]
    if chart == 0:
        for m in range(B):
            Xout[m] = X0[m] + V0[m]
            Vout[m] = V0[m]
            exit_step[m] = -1
        return
    h = 1.0 / steps
    c1, c2, c3, b0, b1 = _params(cp, bp)
    for m in range(B):
        x0, x1, v0, v1 = X0[m, 0], X0[m, 1], V0[m, 0], V0[m, 1]
        es = -1
        for k in range(steps):
            r = _step2(chart, c1, c2, c3, bkind, b0, b1, h, x0, x1, v0, v1)
            if not _inside(eps, r[0], r[1], r[2], r[3]):
                es = k + 1
                break
            x0, x1, v0, v1 = r[0], r[1], r[2], r[3]
        Xout[m, 0], Xout[m, 1], Vout[m, 0], Vout[m, 1] = x0, x1, v0, v1
        exit_step[m] = es


@njit(cache=True)
def rk4_path(chart, cp, bkind, bp, eps, x0, v0, steps, xs, vs, stages):
    """Full sampled trajectory with RK4 stage states; returns the exit step or -1."""
    h = 1.0 / steps
    if chart == 0:
        offsets = np.array([0.0, 0.5, 0.5, 1.0])
        for k in range(steps + 1):
            xs[k] = x0 + (k * h) * v0
            vs[k] = v0
        for k in range(steps):
            for s in range(4):
                stages[k, s, 0] = x0 + (k + offsets[s]) * h * v0
                stages[k, s, 1] = v0
        return -1
    c1, c2, c3, b0, b1 = _params(cp, bp)
    xs[0] = x0
    vs[0] = v0
    for k in range(steps):
        p0, p1, w0, w1 = xs[k, 0], xs[k, 1], vs[k, 0], vs[k, 1]
        r = _step2(chart, c1, c2, c3, bkind, b0, b1, h, p0, p1, w0, w1)
        stages[k, 0, 0, 0], stages[k, 0, 0, 1], stages[k, 0, 1, 0], stages[k, 0, 1, 1] = p0, p1, w0, w1
        stages[k, 1, 0, 0], stages[k, 1, 0, 1], stages[k, 1, 1, 0], stages[k, 1, 1, 1] = r[4], r[5], r[6], r[7]
        stages[k, 2, 0, 0], stages[k, 2, 0, 1], stages[k, 2, 1, 0], stages[k, 2, 1, 1] = r[8], r[9], r[10], r[11]
        stages[k, 3, 0, 0], stages[k, 3, 0, 1], stages[k, 3, 1, 0], stages[k, 3, 1, 1] = r[12], r[13], r[14], r[15]
        xs[k + 1, 0], xs[k + 1, 1], vs[k + 1, 0], vs[k + 1, 1] = r[0], r[1], r[2], r[3]
        if not _inside(eps, r[0], r[1], r[2], r[3]):
            return k + 1
    return -1

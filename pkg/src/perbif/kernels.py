"""Hot numeric kernels: Dormand-Prince 8(5,3) for u' = v, v' = -lam*u - a(t)*u**3.

The weight enters as a piecewise polynomial: ``bp`` holds the breakpoints and
row ``i`` of ``coef`` the ascending coefficients of a(t) in the local variable
``t - bp[i]``. Steps never straddle a breakpoint, so each stage sees a smooth
right-hand side.

Passing an 8-component initial state integrates the variational equations too::

    [u, v, dU/du0, dV/du0, dU/dv0, dV/dv0, dU/dlam, dV/dlam]

Everything here compiles under numba unless ``PERBIF_NUMBA=0``.
"""

import numpy as np
from scipy.integrate._ivp import dop853_coefficients as _dop

from perbif._jit import njit

N_STAGES = _dop.N_STAGES
A = np.ascontiguousarray(_dop.A[:N_STAGES, :N_STAGES])
B = np.ascontiguousarray(_dop.B)
C = np.ascontiguousarray(_dop.C[:N_STAGES])
E3 = np.ascontiguousarray(_dop.E3)
E5 = np.ascontiguousarray(_dop.E5)

SAFETY = 0.9
MIN_FACTOR = 0.2
MAX_FACTOR = 10.0
ERROR_EXPONENT = -1.0 / 8.0

STATUS_OK = 0
STATUS_UNDERFLOW = 1
STATUS_MAXSTEPS = 2
STATUS_NONFINITE = 3


@njit
def weight_value(coef, i, s):
    n = coef.shape[1]
    acc = coef[i, n - 1]
    for j in range(n - 2, -1, -1):
        acc = acc * s + coef[i, j]
    return acc


@njit
def rhs(lam, aval, y, out):
    u = y[0]
    out[0] = y[1]
    out[1] = -lam * u - aval * u * u * u
    if y.shape[0] == 8:
        m = -lam - 3.0 * aval * u * u
        out[2] = y[3]
        out[3] = m * y[2]
        out[4] = y[5]
        out[5] = m * y[4]
        out[6] = y[7]
        out[7] = m * y[6] - u


@njit
def _dop853_step(lam, coef, seg, s0, y, f0, h, K, ytmp, ynew, fnew):
    dim = y.shape[0]
    for d in range(dim):
        K[0, d] = f0[d]
    for st in range(1, N_STAGES):
        for d in range(dim):
            acc = 0.0
            for r in range(st):
                acc += A[st, r] * K[r, d]
            ytmp[d] = y[d] + h * acc
        aval = weight_value(coef, seg, s0 + C[st] * h)
        rhs(lam, aval, ytmp, K[st])
    for d in range(dim):
        acc = 0.0
        for r in range(N_STAGES):
            acc += B[r] * K[r, d]
        ynew[d] = y[d] + h * acc
    aval = weight_value(coef, seg, s0 + h)
    rhs(lam, aval, ynew, fnew)
    for d in range(dim):
        K[N_STAGES, d] = fnew[d]


@njit
def _error_norm(y, ynew, K, h, rtol, atol):
    dim = y.shape[0]
    e5 = 0.0
    e3 = 0.0
    for d in range(dim):
        sc = atol + rtol * max(abs(y[d]), abs(ynew[d]))
        a5 = 0.0
        a3 = 0.0
        for r in range(N_STAGES + 1):
            a5 += E5[r] * K[r, d]
            a3 += E3[r] * K[r, d]
        a5 /= sc
        a3 /= sc
        e5 += a5 * a5
        e3 += a3 * a3
    if e5 == 0.0 and e3 == 0.0:
        return 0.0
    denom = e5 + 0.01 * e3
    return abs(h) * e5 / np.sqrt(denom * dim)


@njit
def integrate_piecewise(lam, y0, bp, coef, t_out, rtol, atol, h0, max_steps):
    """Integrate from bp[0] to bp[-1], recording the state at each ``t_out``.

    Returns ``(Y, y_end, n_steps, status, h_last)``; ``Y[j]`` is the state at
    ``t_out[j]`` (which must be sorted and lie in ``[bp[0], bp[-1]]``).
    """
    dim = y0.shape[0]
    n_out = t_out.shape[0]
    nseg = bp.shape[0] - 1
    Y = np.zeros((n_out, dim))
    y = y0.copy()
    f = np.empty(dim)
    K = np.empty((N_STAGES + 1, dim))
    ytmp = np.empty(dim)
    ynew = np.empty(dim)
    fnew = np.empty(dim)

    t = bp[0]
    span = bp[nseg] - bp[0]
    h = h0 if h0 > 0.0 else 0.01 * span
    j = 0
    while j < n_out and t_out[j] <= t:
        for d in range(dim):
            Y[j, d] = y[d]
        j += 1

    n_steps = 0
    status = STATUS_OK
    for seg in range(nseg):
        t_seg_end = bp[seg + 1]
        if t_seg_end <= bp[seg]:
            continue
        rhs(lam, weight_value(coef, seg, t - bp[seg]), y, f)
        while t < t_seg_end:
            stop = t_seg_end
            if j < n_out and t_out[j] < stop:
                stop = t_out[j]
            landing = False
            hh = h
            if t + hh >= stop - 1e-13 * (1.0 + abs(stop)):
                hh = stop - t
                landing = True
            if hh <= 1e-14 * (1.0 + abs(t)):
                if landing:
                    t = stop
                    hh = 0.0
                else:
                    status = STATUS_UNDERFLOW
                    return Y, y, n_steps, status, h
            if hh > 0.0:
                _dop853_step(lam, coef, seg, t - bp[seg], y, f, hh, K, ytmp, ynew, fnew)
                err = _error_norm(y, ynew, K, hh, rtol, atol)
                if not np.isfinite(err):
                    err = 1e10
                if err > 1.0:
                    fac = max(MIN_FACTOR, SAFETY * err ** ERROR_EXPONENT)
                    h = hh * fac
                    n_steps += 1
                    if n_steps > max_steps:
                        return Y, y, n_steps, STATUS_MAXSTEPS, h
                    continue
                if err == 0.0:
                    fac = MAX_FACTOR
                else:
                    fac = min(MAX_FACTOR, SAFETY * err ** ERROR_EXPONENT)
                hn = hh * fac
                if landing:
                    h = max(hn, h) if fac >= 1.0 else hn
                else:
                    h = hn
                for d in range(dim):
                    y[d] = ynew[d]
                    f[d] = fnew[d]
                t = stop if landing else t + hh
                n_steps += 1
                if n_steps > max_steps:
                    return Y, y, n_steps, STATUS_MAXSTEPS, h
                for d in range(dim):
                    if not np.isfinite(y[d]):
                        return Y, y, n_steps, STATUS_NONFINITE, h
            while j < n_out and t_out[j] <= t:
                for d in range(dim):
                    Y[j, d] = y[d]
                j += 1
    return Y, y, n_steps, status, h


@njit
def hermite_root(t0, t1, u0, du0, u1, du1):
    """Zero of the cubic Hermite interpolant on [t0, t1] (sign change assumed)."""
    h = t1 - t0
    lo = 0.0
    hi = 1.0
    flo = u0
    for _ in range(80):
        x = 0.5 * (lo + hi)
        x2 = x * x
        x3 = x2 * x
        val = ((2 * x3 - 3 * x2 + 1) * u0 + (x3 - 2 * x2 + x) * h * du0
               + (-2 * x3 + 3 * x2) * u1 + (x3 - x2) * h * du1)
        if (val > 0.0) == (flo > 0.0):
            lo = x
            flo = val
        else:
            hi = x
        if hi - lo < 1e-15:
            break
    return t0 + 0.5 * (lo + hi) * h


@njit
def angle_increments(u, v):
    """Clockwise-positive angle increments between consecutive samples."""
    n = u.shape[0]
    out = np.empty(n - 1)
    for i in range(n - 1):
        cr = u[i] * v[i + 1] - v[i] * u[i + 1]
        dt = u[i] * u[i + 1] + v[i] * v[i + 1]
        out[i] = -np.arctan2(cr, dt)
    return out

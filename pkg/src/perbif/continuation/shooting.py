"""Newton's method on the shooting map S(lam; u0, v0) = (u(T) - u0, u'(T) - v0)."""

from __future__ import annotations

import math
from dataclasses import replace

import numpy as np

from perbif.continuation.trajectory import (
    DEFAULT_SAMPLES,
    DegeneracyError,
    IntegrationError,
    detect_parity,
    integrate,
    norms,
    winding_number,
)
from perbif.orbit import OrbitPoint
from perbif.weights import Weight

SHOOT_TOL = 1e-8
SHOOT_MAX_ITER = 30
RANK_RCOND = 1e-10
POLISH_TOL = 1e-12
STEP_RTOL = 1e-6


def shooting_map(w: Weight, lam: float, u0: float, v0: float):
    """Defect, its (u0, v0)-Jacobian M - I and its lambda-derivative."""
    tr = integrate(w, lam, u0, v0, samples=0, variational=True)
    return tr.defect, tr.monodromy - np.eye(2), tr.dlam


def shoot_newton(w: Weight, start: OrbitPoint, tol: float = SHOOT_TOL,
                 max_iter: int = SHOOT_MAX_ITER, info: dict | None = None,
                 annotate_result: bool = True) -> OrbitPoint | None:
    """Correct (u0, v0) at fixed lambda until |S| < tol.

    Steps are minimum-norm least-squares solutions, which copes with the
    rank-one Jacobian that every nontrivial solution has when a(t) is
    constant (time-shift invariance). A numerically zero Jacobian, or no
    convergence within ``max_iter``, gives None with ``info`` explaining why.
    """
    x = np.array([start.u0, start.v0], dtype=float)
    if not (np.all(np.isfinite(x)) and math.isfinite(start.lam)):
        raise ValueError("start point must be finite")
    diag = info if info is not None else {}
    diag.update(iterations=0, residual=math.inf, near_bifurcation=False, rank=2)
    lam = float(start.lam)
    extra = 0
    last = math.inf
    for it in range(max_iter + 1):
        try:
            S, J, _ = shooting_map(w, lam, x[0], x[1])
        except IntegrationError as exc:
            diag["error"] = str(exc)
            return None
        res = float(np.linalg.norm(S))
        diag.update(iterations=it, residual=res)
        dx, _, rank, _ = np.linalg.lstsq(J, -S, rcond=RANK_RCOND)
        diag["rank"] = int(rank)
        scale = max(1.0, float(np.max(np.abs(x))))
        step = float(np.max(np.abs(dx))) if rank else 0.0
        # a small residual alone is not enough: near a degenerate zero the
        # residual is cubic in the error and Newton is still moving
        settled = step < STEP_RTOL * scale
        if res < tol and settled and (res < POLISH_TOL or extra >= 2 or res >= last or it == max_iter):
            p = OrbitPoint(lam, float(x[0]), float(x[1]), residual=res)
            return annotate(w, p) if annotate_result else p
        if res < tol and settled:
            extra += 1
        last = res
        if it == max_iter:
            break
        if rank < 2:
            diag["near_bifurcation"] = True
        if rank == 0:
            return None
        # damp huge steps; the map is cubic and overshoots easily
        if step > 0.5 * scale:
            dx *= 0.5 * scale / step
        x = x + dx
    return None


def annotate(w: Weight, p: OrbitPoint, samples: int = DEFAULT_SAMPLES) -> OrbitPoint:
    """Fill zeros, winding, parity, norms and the residual of an accepted point."""
    tr = integrate(w, p.lam, p.u0, p.v0, samples=samples)
    res = float(np.linalg.norm(tr.defect)) if p.residual is None else p.residual
    nm = norms(tr)
    if p.is_trivial:
        return replace(p, residual=res, linf_u=0.0, linf_du=0.0, h2_norm=0.0)
    try:
        wi = winding_number(tr)
        zeros, wind = wi.zeros, wi.winding
    except DegeneracyError:
        zeros = wind = None
    return replace(p, zeros=zeros, winding=wind, parity=detect_parity(tr), linf_u=nm.linf_u,
                   linf_du=nm.linf_du, h2_norm=nm.h2, residual=res)

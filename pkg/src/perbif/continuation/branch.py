"""Pseudo-arclength continuation of periodic-solution branches.

Points live in scaled coordinates X = (lam, u0, v0 * T / (2 pi)) so that the
two shooting unknowns are comparable near sigma_k. A branch is followed from
a seed until one of the termination rules fires:

* ``ReachedLambdaMin``: lam fell below the window; the last point is
  re-solved at exactly ``lambda_min``.
* ``ClosedLoop``: the path came back to a point it already visited (same
  orientation) or fell back into the bifurcation point (sigma_k, 0).
* ``BoundExceeded``: |u|_inf + |u'|_inf passed ``bound_cap``.
* ``NewtonFailure``: the corrector kept failing down to ``ds_min``.
* ``MaxSteps``: the step budget ran out.
"""

from __future__ import annotations

import enum
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from perbif import lsred, spectral
from perbif.continuation.shooting import SHOOT_TOL, annotate, shoot_newton, shooting_map
from perbif.continuation.trajectory import IntegrationError, integrate
from perbif.orbit import OrbitPoint, Parity
from perbif.weights import Weight, require_hloc


POLISH_TOL = 1e-12


class Termination(str, enum.Enum):
    REACHED_LAMBDA_MIN = "ReachedLambdaMin"
    CLOSED_LOOP = "ClosedLoop"
    BOUND_EXCEEDED = "BoundExceeded"
    NEWTON_FAILURE = "NewtonFailure"
    MAX_STEPS = "MaxSteps"


class SymmetryClass(str, enum.Enum):
    EVEN = "EvenFamily"
    ODD = "OddFamily"
    ASYMMETRIC = "Asymmetric"


@dataclass(frozen=True)
class BranchOrigin:
    kind: str  # "eigen", "k0", "seed"
    k: int | None = None
    root: int | None = None

    def label(self) -> str:
        if self.kind == "eigen":
            return f"k{self.k}_r{self.root}"
        if self.kind == "k0":
            return f"k0_{'pos' if (self.root or 1) > 0 else 'neg'}"
        return "seed"


@dataclass(frozen=True)
class ContinuationOptions:
    lambda_min: float | None = None  # default sigma_k - 10
    ds: float = 0.02
    ds_min: float = 1e-6
    ds_max: float = 0.25
    loop_tol: float = 1e-6
    bound_cap: float = 1e6
    max_steps: int = 4000
    tol: float = SHOOT_TOL
    corrector_max_iter: int = 8
    seed_offset: float = 0.01
    k0_seed_lambda: float = -0.05
    direction: int = -1  # initial sign of d(lam)/ds
    max_turn: float = 0.8  # min cos between consecutive tangents
    samples: int = 512

    def with_(self, **kw) -> "ContinuationOptions":
        return replace(self, **kw)


@dataclass(frozen=True)
class Branch:
    origin: BranchOrigin
    points: tuple[OrbitPoint, ...]
    termination: Termination
    symmetry_class: SymmetryClass | None
    winding: int | None
    lambda_min: float
    message: str = ""
    failing_step: dict | None = None
    folds: tuple[int, ...] = ()
    secondary_candidates: tuple[int, ...] = ()
    loop_partner: int | None = None
    n_rejected: int = 0

    @property
    def lambdas(self) -> np.ndarray:
        return np.array([p.lam for p in self.points])

    def __len__(self) -> int:
        return len(self.points)

    def negated(self) -> "Branch":
        org = self.origin
        if org.kind == "k0" and org.root is not None:
            org = replace(org, root=-org.root)
        return replace(self, points=tuple(p.negated() for p in self.points), origin=org)


def _classify_symmetry(points) -> SymmetryClass | None:
    if not points:
        return None
    par = {p.parity for p in points}
    if par == {Parity.EVEN}:
        return SymmetryClass.EVEN
    if par == {Parity.ODD}:
        return SymmetryClass.ODD
    return SymmetryClass.ASYMMETRIC


class _Map:
    """Shooting map in scaled coordinates."""

    def __init__(self, w: Weight):
        self.w = w
        self.sv = w.period / (2.0 * math.pi)

    def to_point(self, X, **kw) -> OrbitPoint:
        return OrbitPoint(float(X[0]), float(X[1]), float(X[2] / self.sv), **kw)

    def to_x(self, p: OrbitPoint) -> np.ndarray:
        return np.array([p.lam, p.u0, p.v0 * self.sv])

    def __call__(self, X):
        S, J, dl = shooting_map(self.w, X[0], X[1], X[2] / self.sv)
        return S, np.column_stack([dl, J[:, 0], J[:, 1] / self.sv]), J


def _tangent(Jx: np.ndarray) -> np.ndarray | None:
    t = np.cross(Jx[0], Jx[1])
    n = float(np.linalg.norm(t))
    if not n > 1e-14 * max(1.0, float(np.max(np.abs(Jx)))) ** 2:
        return None
    return t / n


def _correct(G: _Map, Xp, anchor, normal, tol, max_iter):
    """Newton on (S(X) = 0, normal . (X - anchor) = 0)."""
    Y = np.array(Xp, dtype=float)
    extra = 0
    last = math.inf
    for it in range(max_iter + 2):
        try:
            S, Jx, J = G(Y)
        except IntegrationError:
            return None
        res = float(np.linalg.norm(S))
        g = float(normal @ (Y - anchor))
        A = np.vstack([Jx, normal])
        if it > 0 and res < tol and abs(g) < 1e-12:
            # a couple of extra sweeps: near branch points |S| < tol alone
            # leaves symmetric components visibly perturbed
            if res < POLISH_TOL or extra >= 2 or res >= last:
                return Y, Jx, J, res, it - extra
            extra += 1
        last = res
        try:
            dY = np.linalg.solve(A, -np.concatenate([S, [g]]))
        except np.linalg.LinAlgError:
            return None
        if not np.all(np.isfinite(dY)):
            return None
        Y = Y + dY
    try:
        S, Jx, J = G(Y)
    except IntegrationError:
        return None
    res = float(np.linalg.norm(S))
    if res < tol:
        return Y, Jx, J, res, max_iter
    return None


def _amplitude(X) -> float:
    return float(math.hypot(X[1], X[2]))


def continue_branch(w: Weight, seed: OrbitPoint, opts: ContinuationOptions | None = None,
                    origin: BranchOrigin | None = None,
                    coefficients: lsred.LsCoefficients | None = None) -> Branch:
    """Follow the solution branch through ``seed`` from its seeding lambda downward."""
    opts = opts or ContinuationOptions()
    origin = origin or BranchOrigin("seed")
    T = w.period
    info: dict = {}
    p0 = shoot_newton(w, seed, tol=opts.tol, info=info)
    lam_min_default = seed.lam - 10.0 if opts.lambda_min is None else opts.lambda_min

    def fail(msg, pts=(), lam_min=lam_min_default, **kw):
        return Branch(origin, tuple(pts), Termination.NEWTON_FAILURE, _classify_symmetry(pts),
                      pts[0].winding if pts else None, lam_min, msg, **kw)

    if p0 is None:
        return fail(f"seed not accepted by shooting Newton ({info})", failing_step=dict(info))
    if _amplitude((0, p0.u0, p0.v0)) < 1e-10 or p0.winding is None:
        return fail("seed converged to the trivial solution", failing_step=dict(info))
    k = p0.winding
    sig_k = spectral.sigma(T, k)
    lam_min = sig_k - 10.0 if opts.lambda_min is None else opts.lambda_min

    G = _Map(w)
    X = G.to_x(p0)
    try:
        S, Jx, J = G(X)
    except IntegrationError as exc:
        return fail(str(exc), lam_min=lam_min)
    t = _tangent(Jx)
    if t is None:
        return fail("shooting Jacobian has rank < 2 at the seed", [p0], lam_min,
                    failing_step={"step": 0, "lam": p0.lam})
    if t[0] * opts.direction < 0 or (t[0] == 0 and opts.direction < 0):
        t = -t

    pts = [p0]
    Xs = [X]
    Ts = [t]
    arc = [0.0]
    dets = [np.sign(np.linalg.det(J))]
    adets = [np.sign(np.linalg.det(np.vstack([Jx, t])))]
    folds, secondary = [], []
    ds = opts.ds
    lam_seed = p0.lam
    seed_amp = _amplitude(X)
    min_lam_seen = lam_seed
    rejected = 0
    term = Termination.MAX_STEPS
    msg = f"step budget {opts.max_steps} exhausted"
    failing = None
    partner = None

    for step in range(1, opts.max_steps + 1):
        Xp = X + ds * t
        out = _correct(G, Xp, Xp, t, opts.tol, opts.corrector_max_iter)
        ok = out is not None
        if ok:
            Y, Jx, J, res, iters = out
            tn = _tangent(Jx)
            ok = tn is not None
        if ok:
            if tn @ t < 0:
                tn = -tn
            ok = float(tn @ t) >= opts.max_turn
        p = None
        if ok:
            try:
                p = annotate(w, G.to_point(Y, residual=res), samples=opts.samples)
            except IntegrationError:
                p = None
            ok = p is not None and p.winding == k and p.zeros == 2 * k
        if not ok:
            rejected += 1
            ds *= 0.5
            if ds < opts.ds_min:
                term = Termination.NEWTON_FAILURE
                failing = {"step": step, "lam": float(X[0]), "ds": ds}
                msg = f"step size fell below {opts.ds_min:g} near lam={X[0]:.6g}"
                break
            continue

        if p.linf_u + p.linf_du > opts.bound_cap:
            pts.append(p)
            term = Termination.BOUND_EXCEEDED
            msg = f"|u|+|u'| = {p.linf_u + p.linf_du:.3g} exceeds {opts.bound_cap:g}"
            break

        if Y[0] <= lam_min:
            # land exactly on lambda_min
            s = (X[0] - lam_min) / (X[0] - Y[0])
            guess = X + s * (Y - X)
            q = shoot_newton(w, G.to_point([lam_min, guess[1], guess[2]]), tol=opts.tol)
            if q is not None and q.winding == k:
                pts.append(q)
                term = Termination.REACHED_LAMBDA_MIN
                msg = f"extends to lambda_min={lam_min:g}"
            else:
                pts.append(p)
                term = Termination.REACHED_LAMBDA_MIN
                msg = f"crossed lambda_min={lam_min:g}; endpoint at lam={p.lam:.6g}"
            break

        pts.append(p)
        d = np.sign(np.linalg.det(J))
        ad = np.sign(np.linalg.det(np.vstack([Jx, tn])))
        if ad != adets[-1]:
            secondary.append(len(pts) - 1)
        elif d != dets[-1]:
            folds.append(len(pts) - 1)
        dets.append(d)
        adets.append(ad)
        Xprev, X, t = X, Y, tn
        Xs.append(X)
        Ts.append(t)
        arc.append(arc[-1] + float(np.linalg.norm(X - Xprev)))
        min_lam_seen = min(min_lam_seen, X[0])

        # back into (sigma_k, 0) from below, after having left the seed region
        left = min_lam_seen < lam_seed - 0.5 * (sig_k - lam_seed)
        if left and t[0] > 0 and X[0] >= lam_seed and _amplitude(X) <= 3.0 * seed_amp:
            term = Termination.CLOSED_LOOP
            partner = _loop_partner(coefficients, p)
            msg = f"returned to the bifurcation point (sigma_{k}, 0)"
            break
        hit = _revisit(G, Xs, Ts, arc, ds, opts)
        if hit is not None:
            term = Termination.CLOSED_LOOP
            msg = f"path closed on point {hit}"
            break

        if iters <= 3:
            ds = min(ds * 1.5, opts.ds_max)
        elif iters >= 6:
            ds *= 0.7

    return Branch(origin, tuple(pts), term, _classify_symmetry(pts), k, lam_min, msg, failing,
                  tuple(folds), tuple(secondary), partner, rejected)


def _revisit(G: _Map, Xs, Ts, arc, ds, opts) -> int | None:
    """Index of an earlier point the path just returned to, if any."""
    X, t = Xs[-1], Ts[-1]
    n = len(Xs)
    if n < 8:
        return None
    old = np.array(Xs[:-4])
    dist = np.linalg.norm(old - X, axis=1)
    for j in np.argsort(dist)[:3]:
        if dist[j] > 2.0 * max(ds, opts.ds):
            break
        # a genuine return has travelled much farther than the gap it closes
        if arc[-1] - arc[j] < 10.0 * dist[j] + 4.0 * opts.ds_max:
            continue
        if float(Ts[j] @ t) < 0.9:
            continue
        out = _correct(G, X, Xs[j], Ts[j], opts.tol, opts.corrector_max_iter)
        if out is not None and np.linalg.norm(out[0] - Xs[j]) < opts.loop_tol:
            return int(j)
    return None


def _loop_partner(c: lsred.LsCoefficients | None, p: OrbitPoint) -> int | None:
    if c is None:
        return None
    try:
        roots = lsred.solve_local_roots(c)
    except lsred.StructureError:
        return None
    best, arg = math.inf, None
    for r in roots:
        q = lsred.local_predictor(c, r, min(p.lam, c.sigma))
        d = math.hypot(q.u0 - p.u0, (q.v0 - p.v0) / max(c.omega, 1e-300))
        if d < best:
            best, arg = d, r.index
    return arg


# seeding -------------------------------------------------------------------

def seed_from_root(w: Weight, c: lsred.LsCoefficients, root: lsred.LocalRoot,
                   offset: float = 0.01) -> OrbitPoint:
    lam = c.sigma * (1.0 - offset)
    return lsred.local_predictor(c, root, lam)


def branches_from_eigenvalue(w: Weight, k: int, opts: ContinuationOptions | None = None,
                             workers: int | None = None) -> list[Branch]:
    """All branches bifurcating from (sigma_k, 0) that the reduced model predicts."""
    opts = opts or ContinuationOptions()
    c = lsred.compute_coefficients(w, k)
    roots = lsred.solve_local_roots(c)
    jobs = [(w, seed_from_root(w, c, r, opts.seed_offset), opts, BranchOrigin("eigen", k, r.index), c)
            for r in roots]
    return run_jobs(jobs, workers)


def _run(job):
    return continue_branch(*job)


def run_jobs(jobs, workers: int | None = None) -> list[Branch]:
    n = max_workers() if workers is None else max(1, int(workers))
    n = min(n, len(jobs))
    if n <= 1:
        return [_run(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=n) as ex:
        return list(ex.map(_run, jobs))


def max_workers() -> int:
    env = os.environ.get("PERBIF_THREADS")
    cpu = os.cpu_count() or 1
    if env:
        try:
            return max(1, min(int(env), cpu))
        except ValueError:
            pass
    return cpu


def branch_k0(w: Weight, opts: ContinuationOptions | None = None) -> tuple[Branch, Branch]:
    """Positive and negative branches of sign-definite solutions emanating from (0, 0)."""
    require_hloc(w)
    opts = opts or ContinuationOptions()
    lam_min = -10.0 if opts.lambda_min is None else opts.lambda_min
    o = opts.with_(lambda_min=lam_min)
    lam = opts.k0_seed_lambda
    amp = math.sqrt(-lam / w.mean())
    pos = continue_branch(w, OrbitPoint(lam, amp, 0.0), o, BranchOrigin("k0", 0, 1))
    neg = continue_branch(w, OrbitPoint(lam, -amp, 0.0), o, BranchOrigin("k0", 0, -1))
    return pos, neg


def sign_definite(w: Weight, p: OrbitPoint, samples: int = 1024) -> bool:
    tr = integrate(w, p.lam, p.u0, p.v0, samples=samples)
    return bool(np.all(tr.u > 0.0) or np.all(tr.u < 0.0))


def find_bifurcation_points(period: float, k_max: int, n: int = 1, N: int = spectral.DEFAULT_N):
    """(k, sigma_k, kernel dimension) for k = 0..k_max; the only places branches can start."""
    out = []
    for k in range(k_max + 1):
        dim, _ = spectral.kernel_dimension(period, k, max(N, k + 1), n)
        out.append((k, spectral.sigma(period, k, n), dim))
    return out

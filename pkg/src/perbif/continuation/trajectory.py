"""Time integration of the planar system u' = v, v' = -lam*u - a(t)*u**3 over one period."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from perbif import kernels
from perbif.orbit import Parity
from perbif.weights import Weight

RTOL = 1e-11
ATOL = 1e-12
MAX_STEPS = 2_000_000
DEFAULT_SAMPLES = 512
ORIGIN_GUARD = 1e-10
PARITY_TOL = 1e-7


class IntegrationError(RuntimeError):
    pass


class DegeneracyError(ValueError):
    """The trajectory passes (numerically) through the origin."""


@dataclass(frozen=True)
class Trajectory:
    weight: Weight
    lam: float
    t: np.ndarray
    u: np.ndarray
    v: np.ndarray
    y0: tuple[float, float]
    y_end: tuple[float, float]
    monodromy: np.ndarray | None = None  # d(u, v)(T) / d(u0, v0)
    dlam: np.ndarray | None = None  # d(u, v)(T) / d lam
    n_steps: int = 0

    @property
    def period(self) -> float:
        return self.weight.period

    @property
    def defect(self) -> np.ndarray:
        return np.array([self.y_end[0] - self.y0[0], self.y_end[1] - self.y0[1]])


_STATUS_MSG = {
    kernels.STATUS_UNDERFLOW: "step size underflow",
    kernels.STATUS_MAXSTEPS: "step budget exhausted",
    kernels.STATUS_NONFINITE: "solution became non-finite",
}


def integrate(w: Weight, lam: float, u0: float, v0: float, samples: int = DEFAULT_SAMPLES,
              variational: bool = False, rtol: float = RTOL, atol: float = ATOL,
              max_steps: int = MAX_STEPS) -> Trajectory:
    """Integrate over [0, T] with steps landing on every breakpoint.

    ``samples`` uniform output intervals are recorded (``samples + 1`` points
    including both ends); 0 records none. With ``variational`` the monodromy
    matrix and the lambda-sensitivity of the end state are returned too.
    """
    bp, coef = w.kernel_arrays
    T = w.period
    t_out = np.linspace(0.0, T, samples + 1) if samples > 0 else np.empty(0)
    if variational:
        y0 = np.array([u0, v0, 1.0, 0.0, 0.0, 1.0, 0.0, 0.0], dtype=float)
    else:
        y0 = np.array([u0, v0], dtype=float)
    Y, y_end, n, status, _ = kernels.integrate_piecewise(
        float(lam), y0, bp, coef, t_out, float(rtol), float(atol), 0.0, int(max_steps))
    if status != kernels.STATUS_OK:
        raise IntegrationError(f"{_STATUS_MSG[status]} at lam={lam}, (u0, v0)=({u0}, {v0})")
    mono = dl = None
    if variational:
        mono = np.array([[y_end[2], y_end[4]], [y_end[3], y_end[5]]])
        dl = np.array([y_end[6], y_end[7]])
    return Trajectory(w, float(lam), t_out, Y[:, 0].copy() if samples else np.empty(0),
                      Y[:, 1].copy() if samples else np.empty(0), (float(u0), float(v0)),
                      (float(y_end[0]), float(y_end[1])), mono, dl, int(n))


@dataclass(frozen=True)
class WindingInfo:
    winding: int
    raw: float
    zeros: int
    zero_times: np.ndarray
    min_radius: float
    samples: int


def _refined(traj: Trajectory, max_samples: int = 1 << 16) -> Trajectory:
    cur = traj
    while True:
        if cur.u.size < 2:
            cur = integrate(cur.weight, cur.lam, *cur.y0, samples=DEFAULT_SAMPLES)
        inc = kernels.angle_increments(cur.u, cur.v)
        if np.max(np.abs(inc)) < 0.5 * math.pi:
            return cur
        n = 2 * (cur.u.size - 1)
        if n > max_samples:
            raise DegeneracyError("angle increments stay large; orbit too close to the origin")
        cur = integrate(cur.weight, cur.lam, *cur.y0, samples=n)


def winding_number(traj: Trajectory) -> WindingInfo:
    """Clockwise revolutions of (u, u') over [0, T], cross-checked by the zeros of u.

    Zeros are counted on the cyclic sample sequence, so a zero at t = 0 is
    counted once and the end point T is not counted again.
    """
    tr = _refined(traj)
    r = np.hypot(tr.u, tr.v)
    scale = max(1.0, float(np.max(r)))
    rmin = float(np.min(r))
    if rmin < ORIGIN_GUARD * scale:
        raise DegeneracyError(f"trajectory passes within {rmin:.3g} of the origin")
    inc = kernels.angle_increments(tr.u, tr.v)
    raw = float(np.sum(inc)) / (2.0 * math.pi)

    u, v, t = tr.u[:-1], tr.v[:-1], tr.t[:-1]
    s = np.sign(u)
    # u' has the sign u takes right after a zero
    s[s == 0] = np.sign(v[s == 0])
    nxt = np.roll(s, -1)
    idx = np.nonzero(s != nxt)[0]
    times = []
    M = u.size
    for i in idx:
        j = i + 1
        if (u[0] if j == M else u[j]) == 0.0:
            times.append(tr.t[j] % tr.period)
        else:
            times.append(kernels.hermite_root(t[i], tr.t[j], u[i], v[i], tr.u[j], tr.v[j]))
    zeros = int(idx.size)
    return WindingInfo(int(round(raw)), raw, zeros, np.sort(np.array(times)), rmin, tr.u.size - 1)


def detect_parity(traj: Trajectory, tol: float = PARITY_TOL) -> Parity | None:
    """Even if u(T - t) = u(t), Odd if u(T - t) = -u(t); None otherwise or for non-even weights."""
    if not traj.weight.is_even():
        return None
    u = traj.u
    if u.size < 3:
        traj = integrate(traj.weight, traj.lam, *traj.y0, samples=DEFAULT_SAMPLES)
        u = traj.u
    m = float(np.max(np.abs(u)))
    if m == 0.0:
        return None
    rev = u[::-1]
    if np.max(np.abs(rev - u)) <= tol * m:
        return Parity.EVEN
    if np.max(np.abs(rev + u)) <= tol * m:
        return Parity.ODD
    return None


@dataclass(frozen=True)
class Norms:
    linf_u: float
    linf_du: float
    h2: float


def norms(traj: Trajectory) -> Norms:
    """Sup norms from the samples and a trapezoid H2 estimate (u'' from the equation)."""
    w = traj.weight
    u, v, t = traj.u, traj.v, traj.t
    a = w.sample_mid_jumps(t)
    upp = -traj.lam * u - a * u ** 3
    dens = u * u + v * v + upp * upp
    h2 = math.sqrt(float(np.trapezoid(dens, t)))
    return Norms(float(np.max(np.abs(u))), float(np.max(np.abs(v))), h2)

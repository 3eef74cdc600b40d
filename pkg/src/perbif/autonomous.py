"""Phase plane of -u'' = lam*u + a*u**3 with constant a > 0.

Orbits around the origin are indexed by their energy e > 0; ``period_tau``
is the time for one clockwise revolution and ``find_orbit`` picks the energy
whose k-fold revolution time equals the period T.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate, optimize

MAX_BRACKET_EXPANSIONS = 200
TAU_TOL = 1e-10


@dataclass(frozen=True)
class AutonomousProblem:
    a: float
    lam: float
    period: float

    def __post_init__(self):
        if not self.a > 0.0:
            raise ValueError(f"a must be positive, got {self.a}")
        if not self.period > 0.0:
            raise ValueError(f"period must be positive, got {self.period}")

    def sigma(self, k: int) -> float:
        return ((2.0 * math.pi / self.period) * k) ** 2


@dataclass(frozen=True)
class PhasePortrait:
    equilibria: list
    u_star: float
    regime: str  # "CenterOnly" | "SaddleWithCenters"


@dataclass(frozen=True)
class OrbitSpec:
    k: int
    e: float
    u_plus: float
    tau_residual: float


def energy(p: AutonomousProblem, u, v):
    return 0.5 * v * v + 0.5 * p.lam * u * u + 0.25 * p.a * u ** 4


def phase_portrait(p: AutonomousProblem) -> PhasePortrait:
    if p.lam >= 0.0:
        return PhasePortrait([(0.0, 0.0)], 0.0, "CenterOnly")
    om = math.sqrt(-p.lam / p.a)
    return PhasePortrait([(0.0, 0.0), (-om, 0.0), (om, 0.0)],
                         math.sqrt(-2.0 * p.lam / p.a), "SaddleWithCenters")


def u_plus_from_energy(p: AutonomousProblem, e: float) -> float:
    """Rightmost axis crossing of the energy-``e`` orbit around the origin."""
    if not e > 0.0:
        raise ValueError(f"energy must be positive, got {e}")
    lam, a = p.lam, p.a
    disc = math.sqrt(lam * lam + 4.0 * a * e)
    # positive root of (a/4) X^2 + (lam/2) X = e, cancellation-free for lam > 0
    if lam <= 0.0:
        u2 = (disc - lam) / a
    else:
        u2 = 4.0 * e / (lam + disc)
    return math.sqrt(u2)


def period_tau(p: AutonomousProblem, e: float) -> float:
    """One-revolution time of the energy-``e`` orbit.

    With s = sin(theta) the quadrant integral becomes
    ``int_0^{pi/2} dtheta / sqrt(lam + (a/2) u+^2 (1 + sin^2 theta))``,
    which has no endpoint singularity.
    """
    up2 = u_plus_from_energy(p, e) ** 2
    base = p.lam + 0.5 * p.a * up2
    slope = 0.5 * p.a * up2
    if not base > 0.0:
        raise ArithmeticError(f"nonpositive radicand {base} at e={e}")

    def f(th):
        return 1.0 / math.sqrt(base + slope * math.sin(th) ** 2)

    val, _ = integrate.quad(f, 0.0, 0.5 * math.pi, epsabs=1e-13, epsrel=1e-13, limit=200)
    return 4.0 * val


def find_orbit(p: AutonomousProblem, k: int) -> OrbitSpec | None:
    """Energy of the unique orbit with winding number ``k`` and period T, if any."""
    if k < 1:
        raise ValueError("k must be >= 1")
    if p.lam >= p.sigma(k):
        return None
    target = p.period / k

    def g(e):
        return period_tau(p, e) - target

    lo = hi = 1.0
    glo = ghi = g(1.0)
    n = 0
    # tau decreases in e: need g(lo) > 0 > g(hi)
    while glo <= 0.0:
        lo /= 4.0
        glo = g(lo)
        n += 1
        if n > MAX_BRACKET_EXPANSIONS:
            raise RuntimeError("could not bracket orbit energy from below")
    while ghi >= 0.0:
        hi *= 4.0
        ghi = g(hi)
        n += 1
        if n > MAX_BRACKET_EXPANSIONS:
            raise RuntimeError("could not bracket orbit energy from above")
    if lo == hi:
        hi = lo * 4.0
        ghi = g(hi)
    e = optimize.brentq(g, lo, hi, xtol=1e-300, rtol=4 * np.finfo(float).eps, maxiter=500)
    res = g(e)
    return OrbitSpec(k=k, e=e, u_plus=u_plus_from_energy(p, e), tau_residual=abs(res))


def orbit_grid(a: float, period: float, k: int, lambdas) -> list[tuple[float, OrbitSpec | None]]:
    """Orbits along a lambda grid; sampled version of the surface S_k."""
    return [(float(lam), find_orbit(AutonomousProblem(a, float(lam), period), k)) for lam in lambdas]

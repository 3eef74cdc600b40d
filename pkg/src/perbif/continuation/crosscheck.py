"""Re-solve a shooting point with the Fourier-Galerkin solver."""

from __future__ import annotations

from dataclasses import dataclass

from perbif import spectral
from perbif.continuation.trajectory import integrate
from perbif.orbit import OrbitPoint
from perbif.weights import Weight


@dataclass(frozen=True)
class SpectralCheck:
    u0: float
    v0: float
    coarse: tuple[float, float]
    fine: tuple[float, float]
    N: int
    iterations: tuple[int, int]

    def error(self, p: OrbitPoint) -> float:
        return max(abs(self.u0 - p.u0), abs(self.v0 - p.v0))


def spectral_resolve(w: Weight, p: OrbitPoint, N: int = 128, samples: int = 4096,
                     extrapolate: bool = True) -> SpectralCheck | None:
    """Galerkin solutions at N and 2N seeded by the point's Fourier projection.

    With jumps in a(t) the recovered (u(0), u'(0)) converge like N**-3, so the
    two levels are combined by one Richardson step (weights 8/7, -1/7).
    """
    tr = integrate(w, p.lam, p.u0, p.v0, samples=samples)
    vals, its = [], []
    for n in (N, 2 * N):
        guess = spectral.FourierVector.from_samples(w.period, tr.u[:-1], n)
        info: dict = {}
        sol = spectral.newton_solve(w, p.lam, guess, info=info)
        if sol is None:
            return None
        vals.append(spectral.boundary_values(w, p.lam, sol))
        its.append(info["iterations"])
    (a0, a1), (b0, b1) = vals
    if extrapolate and not w.is_constant:
        u0 = (8.0 * b0 - a0) / 7.0
        v0 = (8.0 * b1 - a1) / 7.0
    else:
        u0, v0 = b0, b1
    return SpectralCheck(u0, v0, vals[0], vals[1], N, tuple(its))

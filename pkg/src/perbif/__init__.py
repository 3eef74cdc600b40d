"""Periodic solutions of -u'' = lam*u + a(t)*u**3: local bifurcation models and branch continuation."""

from perbif._jit import backend
from perbif.orbit import OrbitPoint, Parity
from perbif.weights import Weight

__version__ = "0.1.0"
__all__ = ["OrbitPoint", "Parity", "Weight", "backend", "__version__"]

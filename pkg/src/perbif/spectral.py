"""Truncated Fourier representation, the linear operator v'' + lam*v, and a Galerkin Newton solver.

Coefficients are stored complex, ``coeffs[k + N] = u_hat(k)`` for k = -N..N with
``u(t) = sum_k u_hat(k) exp(2 pi i k t / T)``. The Newton solver works in the
equivalent real basis ``[c0, a_1..a_N, b_1..b_N]`` (cosines then sines).

The cubic term is projected either with piecewise Gauss-Legendre rules on the
weight's segments (``method="quad"``, exact for piecewise-polynomial weights)
or by uniform-grid sampling with midpoint values at jumps (``method="grid"``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from perbif.weights import Weight

DEFAULT_N = 64
RESONANCE_GUARD = 1e-8
NEWTON_TOL = 1e-10
NEWTON_MAX_ITER = 50
CONJ_TOL = 1e-14


class ResonanceError(ArithmeticError):
    def __init__(self, lam: float, k: int, sigma_k: float):
        super().__init__(f"lambda={lam!r} is within {RESONANCE_GUARD:g} of sigma_{k}={sigma_k!r}")
        self.k = k
        self.sigma_k = sigma_k


def sigma(T: float, k: int, n: int = 1) -> float:
    """(2 pi k / (n T))**2; n > 1 gives the subharmonic eigenvalues."""
    if not T > 0.0:
        raise ValueError("T must be positive")
    if n < 1:
        raise ValueError("n must be >= 1")
    return ((2.0 * math.pi / (n * T)) * k) ** 2


@dataclass(frozen=True)
class EigenPair:
    k: int
    sigma: float
    period: float

    @property
    def kernel_basis(self) -> tuple[str, ...]:
        return ("1",) if self.k == 0 else ("cos", "sin")

    @property
    def h2_normalizer(self) -> float:
        om2 = (2.0 * math.pi * self.k / self.period) ** 2
        return 1.0 / math.sqrt(1.0 + om2 + om2 * om2)

    def phi(self, t):
        t = np.asarray(t, dtype=float)
        if self.k == 0:
            return np.full_like(t, 1.0 / math.sqrt(self.period))
        return math.sqrt(2.0 / self.period) * np.cos(2.0 * math.pi * self.k * t / self.period)

    def vphi(self, t):
        t = np.asarray(t, dtype=float)
        return math.sqrt(2.0 / self.period) * np.sin(2.0 * math.pi * self.k * t / self.period)


def eigenpair(T: float, k: int, n: int = 1) -> EigenPair:
    return EigenPair(k, sigma(T, k, n), n * T)


@dataclass(frozen=True)
class FourierVector:
    period: float
    coeffs: np.ndarray = field(repr=False)

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=complex)
        if c.ndim != 1 or c.size % 2 != 1:
            raise ValueError("coeffs must be a 1-d array of odd length 2N+1")
        if not self.period > 0.0:
            raise ValueError("period must be positive")
        defect = np.max(np.abs(c - np.conj(c[::-1]))) if c.size else 0.0
        scale = max(1.0, float(np.max(np.abs(c))))
        if defect > CONJ_TOL * scale:
            raise ValueError(f"coefficients are not conjugate-symmetric (defect {defect:.3g})")
        c = 0.5 * (c + np.conj(c[::-1]))
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    # construction ---------------------------------------------------------

    @classmethod
    def zeros(cls, period: float, N: int = DEFAULT_N) -> "FourierVector":
        return cls(period, np.zeros(2 * N + 1, dtype=complex))

    @classmethod
    def from_real(cls, period: float, x) -> "FourierVector":
        x = np.asarray(x, dtype=float)
        N = (x.size - 1) // 2
        c = np.empty(2 * N + 1, dtype=complex)
        c[N] = x[0]
        pos = 0.5 * (x[1:N + 1] - 1j * x[N + 1:])
        c[N + 1:] = pos
        c[:N] = np.conj(pos[::-1])
        return cls(period, c)

    @classmethod
    def from_samples(cls, period: float, values, N: int = DEFAULT_N) -> "FourierVector":
        """Project M uniform samples u(j T / M), j < M, onto modes |k| <= N (M > 2N)."""
        v = np.asarray(values, dtype=float)
        M = v.size
        if M <= 2 * N:
            raise ValueError(f"need more than 2N={2 * N} samples, got {M}")
        f = np.fft.fft(v) / M
        c = np.concatenate([f[M - N:], f[:N + 1]])
        c = 0.5 * (c + np.conj(c[::-1]))
        return cls(period, c)

    @classmethod
    def from_function(cls, f, period: float, N: int = DEFAULT_N, oversample: int = 8) -> "FourierVector":
        M = oversample * (2 * N + 1)
        t = np.arange(M) * (period / M)
        return cls.from_samples(period, f(t), N)

    @classmethod
    def mode(cls, period: float, k: int, kind: str = "cos", N: int = DEFAULT_N,
             normalized: bool = True) -> "FourierVector":
        """phi_k (cos), vphi_k (sin) or the constant mode."""
        x = np.zeros(2 * N + 1)
        s = math.sqrt(2.0 / period) if normalized else 1.0
        if k == 0:
            x[0] = 1.0 / math.sqrt(period) if normalized else 1.0
        elif kind == "cos":
            x[k] = s
        elif kind == "sin":
            x[N + k] = s
        else:
            raise ValueError(f"unknown mode kind {kind!r}")
        return cls.from_real(period, x)

    # views ------------------------------------------------------------------

    @property
    def N(self) -> int:
        return (self.coeffs.size - 1) // 2

    @property
    def ks(self) -> np.ndarray:
        return np.arange(-self.N, self.N + 1)

    @property
    def omega(self) -> float:
        return 2.0 * math.pi / self.period

    def to_real(self) -> np.ndarray:
        N = self.N
        c = self.coeffs
        pos = c[N + 1:]
        return np.concatenate([[c[N].real], 2.0 * pos.real, -2.0 * pos.imag])

    def resized(self, N: int) -> "FourierVector":
        if N == self.N:
            return self
        out = np.zeros(2 * N + 1, dtype=complex)
        m = min(N, self.N)
        out[N - m:N + m + 1] = self.coeffs[self.N - m:self.N + m + 1]
        return FourierVector(self.period, out)

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        ph = np.exp(1j * self.omega * np.multiply.outer(t, self.ks))
        return (ph @ self.coeffs).real

    def derivative(self, order: int = 1) -> "FourierVector":
        return FourierVector(self.period, self.coeffs * (1j * self.omega * self.ks) ** order)

    # arithmetic -------------------------------------------------------------

    def _check(self, other: "FourierVector"):
        if other.period != self.period or other.N != self.N:
            raise ValueError("FourierVectors differ in period or truncation")

    def __add__(self, other):
        self._check(other)
        return FourierVector(self.period, self.coeffs + other.coeffs)

    def __sub__(self, other):
        self._check(other)
        return FourierVector(self.period, self.coeffs - other.coeffs)

    def __mul__(self, s: float):
        return FourierVector(self.period, self.coeffs * float(s))

    __rmul__ = __mul__

    def __neg__(self):
        return FourierVector(self.period, -self.coeffs)

    # norms ------------------------------------------------------------------

    def l2_norm(self) -> float:
        return math.sqrt(self.period * float(np.sum(np.abs(self.coeffs) ** 2)))

    def h2_norm(self) -> float:
        """sqrt(|u|^2 + |u'|^2 + |u''|^2) in L2."""
        m2 = (self.omega * self.ks) ** 2
        return math.sqrt(self.period * float(np.sum((1.0 + m2 + m2 * m2) * np.abs(self.coeffs) ** 2)))

    def h2f_norm(self) -> float:
        """(sum (1 + |k|^4) |u_hat(k)|^2)^(1/2), the index-weighted variant."""
        k4 = self.ks.astype(float) ** 4
        return math.sqrt(float(np.sum((1.0 + k4) * np.abs(self.coeffs) ** 2)))

    def is_even(self, tol: float = 1e-10) -> bool:
        """u(T - t) == u(t), i.e. no sine content."""
        x = self.to_real()
        return bool(np.max(np.abs(x[self.N + 1:]), initial=0.0) <= tol * max(1.0, np.max(np.abs(x))))

    def is_odd(self, tol: float = 1e-10) -> bool:
        x = self.to_real()
        return bool(np.max(np.abs(x[:self.N + 1])) <= tol * max(1.0, np.max(np.abs(x))))


# linear operator ------------------------------------------------------------

def _symbol(lam: float, period: float, N: int) -> np.ndarray:
    om = 2.0 * math.pi / period
    return lam - (om * np.arange(-N, N + 1)) ** 2


def apply_L(lam: float, u: FourierVector) -> FourierVector:
    return FourierVector(u.period, _symbol(lam, u.period, u.N) * u.coeffs)


def invert_L(lam: float, v: FourierVector) -> FourierVector:
    for k in range(v.N + 1):
        s = sigma(v.period, k)
        if abs(lam - s) < RESONANCE_GUARD:
            raise ResonanceError(lam, k, s)
    return FourierVector(v.period, v.coeffs / _symbol(lam, v.period, v.N))


def real_symbol(lam: float, period: float, N: int) -> np.ndarray:
    om = 2.0 * math.pi / period
    j = np.arange(1, N + 1)
    return np.concatenate([[lam], lam - (om * j) ** 2, lam - (om * j) ** 2])


def kernel_dimension(T: float, k: int, N: int = DEFAULT_N, n: int = 1,
                     rel_tol: float = 1e-10) -> tuple[int, float]:
    """Numerical nullity of v -> v'' + lam v at lam = sigma(T, k, n), plus the singular-value gap.

    For n > 1 the operator acts on nT-periodic functions.
    """
    P = n * T
    lam = sigma(T, k, n)
    s = np.linalg.svd(np.diag(real_symbol(lam, P, N)), compute_uv=False)
    s = np.sort(s)
    thresh = rel_tol * s[-1]
    dim = int(np.sum(s <= thresh))
    if dim == 0 or dim == s.size:
        return dim, 1.0
    if s[dim - 1] == 0.0:
        return dim, math.inf
    return dim, float(s[dim] / s[dim - 1])


# nonlinear residual ---------------------------------------------------------

@dataclass(frozen=True)
class _Rule:
    nodes: np.ndarray
    wts: np.ndarray
    avals: np.ndarray
    basis: np.ndarray  # (n_nodes, 2N+1) real basis values
    proj: np.ndarray  # (2N+1, n_nodes) maps nodal values to real coefficients


def _basis(t: np.ndarray, period: float, N: int) -> np.ndarray:
    om = 2.0 * math.pi / period
    arg = om * np.multiply.outer(t, np.arange(1, N + 1))
    return np.hstack([np.ones((t.size, 1)), np.cos(arg), np.sin(arg)])


_RULES: dict = {}


def _rule(w: Weight, N: int, method: str, oversample: int) -> _Rule:
    key = (id(w), w.period, N, method, oversample)
    hit = _RULES.get(key)
    if hit is not None and hit[0] is w:
        return hit[1]
    T = w.period
    if method == "quad":
        nodes, wts, avals = w.gauss_rule(4.0 * N * 2.0 * math.pi / T)
    elif method == "grid":
        # bandwidth of a is resolved only up to the grid; K_a taken as N
        M = oversample * (3 * N + N)
        nodes = np.arange(M) * (T / M)
        wts = np.full(M, T / M)
        avals = w.sample_mid_jumps(nodes)
    else:
        raise ValueError(f"unknown projection method {method!r}")
    B = _basis(nodes, T, N)
    scale = np.concatenate([[1.0 / T], np.full(2 * N, 2.0 / T)])
    P = scale[:, None] * (B * wts[:, None]).T
    r = _Rule(nodes, wts, avals, B, P)
    if len(_RULES) > 64:
        _RULES.clear()
    _RULES[key] = (w, r)
    return r


def _residual_real(w, lam, x, rule):
    u = rule.basis @ x
    return real_symbol(lam, w.period, (x.size - 1) // 2) * x + rule.proj @ (rule.avals * u ** 3), u


def residual(w: Weight, lam: float, u: FourierVector, method: str = "quad",
             oversample: int = 4) -> FourierVector:
    """Galerkin projection of u'' + lam u + a u**3 onto the modes of u."""
    if u.period != w.period:
        raise ValueError("period mismatch between weight and FourierVector")
    rule = _rule(w, u.N, method, oversample)
    r, _ = _residual_real(w, lam, u.to_real(), rule)
    return FourierVector.from_real(w.period, r)


def jacobian(w: Weight, lam: float, u: FourierVector, method: str = "quad",
             oversample: int = 4) -> np.ndarray:
    """Dense real-basis matrix of v -> v'' + lam v + 3 a u**2 v."""
    rule = _rule(w, u.N, method, oversample)
    uu = rule.basis @ u.to_real()
    J = rule.proj @ ((3.0 * rule.avals * uu * uu)[:, None] * rule.basis)
    J[np.diag_indices_from(J)] += real_symbol(lam, w.period, u.N)
    return J


def _l2(period: float, x: np.ndarray, N: int) -> float:
    return math.sqrt(period * (x[0] ** 2 + 0.5 * float(np.sum(x[1:] ** 2))))


def newton_solve(w: Weight, lam: float, guess: FourierVector, method: str = "quad",
                 oversample: int = 4, tol: float = NEWTON_TOL, max_iter: int = NEWTON_MAX_ITER,
                 info: dict | None = None) -> FourierVector | None:
    """Damped Newton on the truncated residual; None on failure.

    ``info`` (if given) receives ``iterations``, ``residual`` and
    ``near_bifurcation`` (set when the Jacobian is numerically singular).
    """
    if guess.period != w.period:
        raise ValueError("period mismatch between weight and guess")
    x = guess.to_real()
    if not np.all(np.isfinite(x)):
        raise ValueError("guess must be finite")
    N = guess.N
    rule = _rule(w, N, method, oversample)
    diag = info if info is not None else {}
    diag.update(iterations=0, residual=math.inf, near_bifurcation=False)
    r, _ = _residual_real(w, lam, x, rule)
    rn = _l2(w.period, r, N)
    for it in range(max_iter + 1):
        diag.update(iterations=it, residual=rn)
        if rn < tol:
            return FourierVector.from_real(w.period, x)
        if it == max_iter:
            break
        J = jacobian(w, lam, FourierVector.from_real(w.period, x), method, oversample)
        sv = np.linalg.svd(J, compute_uv=False)
        if sv[-1] <= 1e-13 * sv[0]:
            diag["near_bifurcation"] = True
            return None
        dx = np.linalg.solve(J, -r)
        step = 1.0
        while step >= 1.0 / 1024:
            xn = x + step * dx
            rn_new_vec, _ = _residual_real(w, lam, xn, rule)
            rn_new = _l2(w.period, rn_new_vec, N)
            if rn_new < (1.0 - 1e-4 * step) * rn or rn_new < tol:
                break
            step *= 0.5
        else:
            return None
        x, r, rn = xn, rn_new_vec, rn_new
    return None


def boundary_values(w: Weight, lam: float, u: FourierVector) -> tuple[float, float]:
    """(u(0), u'(0)) of a Galerkin solution, recovered through the equation.

    Integrating u'' = -lam u - a u**3 against t - T/2 and against the
    periodic quadratic kernel ``(t - T/2)**2 / 2 - T**2 / 24`` avoids the slow
    pointwise convergence of a truncated series when a(t) jumps.
    """
    T = w.period
    om = 2.0 * math.pi / T
    ks = u.ks
    c = u.coeffs
    nz = ks != 0
    nodes, wts, avals = w.gauss_rule(3.0 * u.N * om)
    au3 = avals * u(nodes) ** 3
    lin1 = T * np.sum(c[nz] / (1j * om * ks[nz])).real
    lin2 = T * np.sum(c[nz] / (om * ks[nz]) ** 2).real
    q1 = float(np.sum(wts * (nodes - 0.5 * T) * au3))
    G = 0.5 * (nodes - 0.5 * T) ** 2 - T * T / 24.0
    q2 = float(np.sum(wts * G * au3))
    du0 = (-lam * lin1 - q1) / T
    u0 = c[u.N].real + (lam * lin2 + q2) / T
    return float(u0), float(du0)


def count_zeros(u: FourierVector, samples: int = 4096) -> int:
    """Sign changes of u over one period on a uniform grid (cyclic)."""
    t = np.arange(samples) * (u.period / samples)
    v = u(t)
    s = np.sign(v)
    s[s == 0] = 1
    return int(np.sum(s != np.roll(s, -1)))

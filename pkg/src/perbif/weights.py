"""Piecewise weights a(t) on [0, T] and exact quadrature against trig products."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
from numpy.polynomial import polynomial as P

NONNEG_TOL = 1e-12
_N_CHEB = 1024


class WeightStructureError(ValueError):
    """Malformed breakpoint or segment data."""


class HypothesisError(ValueError):
    """The weight violates a hypothesis an operation depends on."""


@dataclass(frozen=True)
class Segment:
    """One piece of a(t); ``coeffs`` are ascending powers of ``t - start``."""

    kind: str
    coeffs: tuple[float, ...] = ()

    def __post_init__(self):
        if self.kind not in ("zero", "const", "poly"):
            raise WeightStructureError(f"unknown segment kind {self.kind!r}")
        if self.kind == "zero" and any(c != 0.0 for c in self.coeffs):
            raise WeightStructureError("zero segment with nonzero coefficients")
        if self.kind == "const" and len(self.coeffs) != 1:
            raise WeightStructureError("const segment needs exactly one value")
        if self.kind == "poly" and len(self.coeffs) == 0:
            raise WeightStructureError("poly segment needs coefficients")

    @classmethod
    def zero(cls) -> "Segment":
        return cls("zero", ())

    @classmethod
    def const(cls, value: float) -> "Segment":
        return cls("const", (float(value),))

    @classmethod
    def poly(cls, coeffs: Iterable[float]) -> "Segment":
        return cls("poly", tuple(float(c) for c in coeffs))

    @property
    def array(self) -> np.ndarray:
        return np.array(self.coeffs if self.coeffs else (0.0,), dtype=float)

    @property
    def degree(self) -> int:
        c = np.trim_zeros(self.array, "b")
        return max(len(c) - 1, 0)

    @property
    def is_zero(self) -> bool:
        return not np.any(self.array)

    def __call__(self, s):
        return P.polyval(s, self.array)

    def extrema(self, length: float) -> tuple[float, float]:
        """(min, max) over the closed interval [0, length]."""
        c = self.array
        if self.kind != "poly" or len(c) == 1:
            return float(c[0]), float(c[0])
        cheb = 0.5 * length * (1.0 - np.cos(np.pi * np.arange(_N_CHEB) / (_N_CHEB - 1)))
        cand = [cheb]
        dc = P.polyder(c)
        if np.any(dc):
            r = P.polyroots(dc)
            r = r[np.abs(r.imag) < 1e-12].real
            cand.append(r[(r >= 0.0) & (r <= length)])
        s = np.concatenate(cand)
        vals = P.polyval(s, c)
        return float(vals.min()), float(vals.max())

    def to_dict(self, start: float, end: float) -> dict:
        d = {"from": start, "to": end, "kind": self.kind}
        if self.kind == "const":
            d["value"] = self.coeffs[0]
        elif self.kind == "poly":
            d["coeffs"] = list(self.coeffs)
        return d


@dataclass(frozen=True)
class HypothesisReport:
    hloc: bool
    hglob: bool
    violations: list = field(default_factory=list)


@dataclass(frozen=True)
class Weight:
    """Piecewise weight on [0, period] with breakpoints t_0 = 0 < ... < t_N = period."""

    period: float
    breakpoints: tuple[float, ...]
    segments: tuple[Segment, ...]

    def __post_init__(self):
        bp = tuple(float(b) for b in self.breakpoints)
        object.__setattr__(self, "breakpoints", bp)
        object.__setattr__(self, "segments", tuple(self.segments))
        object.__setattr__(self, "period", float(self.period))
        if not (self.period > 0.0 and math.isfinite(self.period)):
            raise WeightStructureError(f"period must be positive, got {self.period}")
        if len(bp) < 2:
            raise WeightStructureError("need at least two breakpoints")
        if len(self.segments) != len(bp) - 1:
            raise WeightStructureError(
                f"{len(self.segments)} segments for {len(bp)} breakpoints")
        if bp[0] != 0.0:
            raise WeightStructureError("breakpoint 0 must equal 0")
        for i in range(1, len(bp)):
            if not bp[i] > bp[i - 1]:
                raise WeightStructureError(f"breakpoint {i} ({bp[i]}) not increasing")
        if abs(bp[-1] - self.period) > 1e-12 * self.period:
            raise WeightStructureError(
                f"breakpoint {len(bp) - 1} ({bp[-1]}) differs from period {self.period}")
        if bp[-1] != self.period:
            object.__setattr__(self, "breakpoints", bp[:-1] + (self.period,))

    # construction helpers

    @classmethod
    def constant(cls, value: float, period: float) -> "Weight":
        return cls(period, (0.0, period), (Segment.const(value),))

    @classmethod
    def zeros(cls, period: float) -> "Weight":
        return cls(period, (0.0, period), (Segment.zero(),))

    @classmethod
    def indicators(cls, pieces: Sequence[tuple[float, float, float]], period: float) -> "Weight":
        """Sum of ``height * 1_[lo, hi]`` over non-overlapping pieces, zero elsewhere."""
        pieces = sorted(pieces)
        bps = [0.0]
        segs = []
        for lo, hi, height in pieces:
            if lo < bps[-1] or hi <= lo or hi > period:
                raise WeightStructureError(f"bad indicator piece [{lo}, {hi}]")
            if lo > bps[-1]:
                segs.append(Segment.zero())
                bps.append(lo)
            segs.append(Segment.const(height))
            bps.append(hi)
        if bps[-1] < period:
            segs.append(Segment.zero())
            bps.append(period)
        return cls(period, tuple(bps), tuple(segs))

    @classmethod
    def from_dict(cls, data: dict) -> "Weight":
        try:
            period = float(data["period"])
            raw = data["segments"]
        except (KeyError, TypeError) as exc:
            raise WeightStructureError(f"weight config missing field: {exc}") from None
        if not raw:
            raise WeightStructureError("weight config has no segments")
        bps = []
        segs = []
        tol = 1e-12 * period
        for i, item in enumerate(raw):
            try:
                lo, hi = float(item["from"]), float(item["to"])
            except (KeyError, TypeError, ValueError) as exc:
                raise WeightStructureError(f"segment {i}: bad or missing bound ({exc})") from None
            if i == 0:
                bps.append(lo)
            elif abs(lo - bps[-1]) > tol:
                raise WeightStructureError(
                    f"segment {i} starts at {lo} but previous ends at {bps[-1]} (gap)")
            bps.append(hi)
            kind = item.get("kind")
            if kind == "zero":
                segs.append(Segment.zero())
            elif kind == "const" and "value" in item:
                segs.append(Segment.const(item["value"]))
            elif kind == "poly" and "coeffs" in item:
                segs.append(Segment.poly(item["coeffs"]))
            elif kind in ("const", "poly"):
                raise WeightStructureError(f"segment {i}: kind {kind!r} needs "
                                           f"{'value' if kind == 'const' else 'coeffs'}")
            else:
                raise WeightStructureError(f"segment {i}: unknown kind {kind!r}")
        return cls(period, tuple(bps), tuple(segs))

    @classmethod
    def from_json(cls, path) -> "Weight":
        return cls.from_dict(json.loads(Path(path).read_text()))

    def to_dict(self) -> dict:
        bp = self.breakpoints
        return {"period": self.period,
                "segments": [s.to_dict(bp[i], bp[i + 1]) for i, s in enumerate(self.segments)]}

    # evaluation

    @property
    def n_segments(self) -> int:
        return len(self.segments)

    def segment_index(self, t) -> np.ndarray:
        idx = np.searchsorted(self.breakpoints, np.asarray(t, dtype=float), side="right") - 1
        return np.clip(idx, 0, self.n_segments - 1)

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        idx = self.segment_index(t)
        out = np.empty_like(t)
        bp = np.asarray(self.breakpoints)
        for i, seg in enumerate(self.segments):
            m = idx == i
            if np.any(m):
                out[m] = seg(t[m] - bp[i])
        return out

    def sample_mid_jumps(self, t) -> np.ndarray:
        """Values at ``t`` with the average of the one-sided limits at breakpoints."""
        t = np.asarray(t, dtype=float)
        out = self(t)
        bp = np.asarray(self.breakpoints)
        for i in range(len(bp)):
            hit = np.isclose(t, bp[i], rtol=0.0, atol=1e-14 * self.period)
            if i == 0 or i == len(bp) - 1:
                hit |= np.isclose(t, 0.0, atol=1e-14 * self.period) | np.isclose(
                    t, self.period, rtol=0.0, atol=1e-14 * self.period)
                left = self.segments[-1](bp[-1] - bp[-2])
                right = self.segments[0](0.0)
            else:
                left = self.segments[i - 1](bp[i] - bp[i - 1])
                right = self.segments[i](0.0)
            out[hit] = 0.5 * (left + right)
        return out

    @cached_property
    def kernel_arrays(self) -> tuple[np.ndarray, np.ndarray]:
        """(breakpoints, coefficient matrix) in the layout the integrator expects."""
        deg = max(len(s.array) for s in self.segments)
        coef = np.zeros((self.n_segments, deg))
        for i, s in enumerate(self.segments):
            coef[i, : len(s.array)] = s.array
        return np.asarray(self.breakpoints, dtype=float), coef

    @property
    def is_constant(self) -> bool:
        vals = {s.coeffs[0] if s.kind == "const" else None for s in self.segments}
        return len(vals) == 1 and None not in vals and all(s.kind == "const" for s in self.segments)

    def is_even(self, tol: float = 1e-12) -> bool:
        """a(T - t) == a(t) off a null set."""
        cuts = np.unique(np.concatenate([self.breakpoints, self.period - np.asarray(self.breakpoints)]))
        x = np.polynomial.chebyshev.chebpts2(12)[1:-1]
        scale = max(1.0, float(np.max(np.abs(self.sample_points()))))
        for lo, hi in zip(cuts[:-1], cuts[1:]):
            if hi - lo < 1e-13 * self.period:
                continue
            t = 0.5 * (lo + hi) + 0.5 * (hi - lo) * x
            if np.max(np.abs(self(t) - self(self.period - t))) > tol * scale:
                return False
        return True

    def sample_points(self, n: int = 64) -> np.ndarray:
        bp = self.breakpoints
        vals = []
        for i, s in enumerate(self.segments):
            L = bp[i + 1] - bp[i]
            vals.append(s(np.linspace(0.0, L, n)))
        return np.concatenate(vals)

    def mean(self) -> float:
        return integrate_against(self, TrigPolySpec()) / self.period

    def split_at(self, t: float) -> "Weight":
        """Same function with an extra breakpoint at interior point ``t``."""
        i = int(self.segment_index(t))
        bp = self.breakpoints
        if not bp[i] < t < bp[i + 1]:
            raise WeightStructureError(f"{t} is not interior to a segment")
        seg = self.segments[i]
        shift = t - bp[i]
        if seg.kind == "poly":
            # re-expand p(s + shift) in powers of s
            c = seg.array
            n = len(c)
            new = np.zeros(n)
            for j in range(n):
                for m in range(j, n):
                    new[j] += c[m] * math.comb(m, j) * shift ** (m - j)
            right = Segment.poly(new)
        else:
            right = seg
        return Weight(self.period, bp[: i + 1] + (t,) + bp[i + 1:],
                      self.segments[: i + 1] + (right,) + self.segments[i + 1:])

    def extended(self, n: int) -> "Weight":
        """The T-periodic extension restricted to [0, n*T]."""
        if n < 1:
            raise ValueError("n must be >= 1")
        bp = list(self.breakpoints)
        out_bp = [0.0]
        segs = []
        for r in range(n):
            for i, s in enumerate(self.segments):
                out_bp.append(r * self.period + bp[i + 1])
                segs.append(s)
        return Weight(n * self.period, tuple(out_bp), tuple(segs))

    def gauss_rule(self, max_freq: float, extra: int = 16) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Piecewise Gauss-Legendre nodes on the nonzero segments.

        ``max_freq`` is the largest angular frequency in the integrand apart
        from the weight. Returns ``(nodes, quad_weights, a_values)``.
        """
        nodes, wts, avals = [], [], []
        bp = self.breakpoints
        for i, s in enumerate(self.segments):
            if s.is_zero:
                continue
            L = bp[i + 1] - bp[i]
            n = int(math.ceil(0.5 * max_freq * L + 0.5 * s.degree)) + extra
            x, w = _gauss(n)
            loc = 0.5 * L * (x + 1.0)
            nodes.append(bp[i] + loc)
            wts.append(0.5 * L * w)
            avals.append(s(loc))
        if not nodes:
            return np.zeros(0), np.zeros(0), np.zeros(0)
        return np.concatenate(nodes), np.concatenate(wts), np.concatenate(avals)


_GAUSS_CACHE: dict[int, tuple[np.ndarray, np.ndarray]] = {}


def _gauss(n: int) -> tuple[np.ndarray, np.ndarray]:
    if n not in _GAUSS_CACHE:
        _GAUSS_CACHE[n] = np.polynomial.legendre.leggauss(n)
    return _GAUSS_CACHE[n]


def validate_hypotheses(w: Weight) -> HypothesisReport:
    """Check HLoc (nonnegative, not a.e. zero) and HGlob (each piece zero or bounded below)."""
    violations = []
    bp = w.breakpoints
    any_nonzero = False
    hglob = True
    nonneg = True
    for i, seg in enumerate(w.segments):
        L = bp[i + 1] - bp[i]
        if seg.is_zero:
            continue
        lo, hi = seg.extrema(L)
        if hi > NONNEG_TOL:
            any_nonzero = True
        if lo < -NONNEG_TOL:
            nonneg = False
            violations.append(f"segment {i} on [{bp[i]}, {bp[i + 1]}] takes negative value {lo:.3g}")
        if not lo > NONNEG_TOL:
            hglob = False
            violations.append(f"segment {i} is neither identically zero nor bounded below by a positive constant")
    if not any_nonzero:
        violations.append("weight vanishes identically")
    hloc = nonneg and any_nonzero
    return HypothesisReport(hloc=hloc, hglob=hglob, violations=violations)


def require_hloc(w: Weight) -> None:
    rep = validate_hypotheses(w)
    if not rep.hloc:
        raise HypothesisError("; ".join(rep.violations))


@dataclass(frozen=True)
class TrigPolySpec:
    """``prefactor * prod(f_j(2*pi*k_j*t/T))`` with each ``f_j`` in {cos, sin}."""

    prefactor: float = 1.0
    factors: tuple[tuple[str, int], ...] = ()

    def __post_init__(self):
        if len(self.factors) > 4:
            raise ValueError("at most four trig factors")
        for name, k in self.factors:
            if name not in ("cos", "sin"):
                raise ValueError(f"unknown factor {name!r}")
            if int(k) != k:
                raise ValueError("frequencies must be integers")

    @classmethod
    def of(cls, *names: str, k: int = 1, prefactor: float = 1.0) -> "TrigPolySpec":
        return cls(prefactor, tuple((n, k) for n in names))

    def scaled(self, factor: float) -> "TrigPolySpec":
        return TrigPolySpec(self.prefactor * factor, self.factors)

    def exponentials(self) -> dict[int, complex]:
        """Coefficients ``c_n`` with ``g(t) = sum c_n exp(i n omega t)``."""
        terms = {0: complex(self.prefactor)}
        for name, k in self.factors:
            if name == "cos":
                pair = ((k, 0.5), (-k, 0.5))
            else:
                pair = ((k, -0.5j), (-k, 0.5j))
            nxt: dict[int, complex] = {}
            for n, c in terms.items():
                for m, d in pair:
                    nxt[n + m] = nxt.get(n + m, 0.0) + c * d
            terms = nxt
        return terms

    @property
    def max_frequency(self) -> int:
        return sum(abs(k) for _, k in self.factors)

    def __call__(self, t, period: float):
        t = np.asarray(t, dtype=float)
        out = np.full_like(t, self.prefactor)
        om = 2.0 * math.pi / period
        for name, k in self.factors:
            out = out * (np.cos(k * om * t) if name == "cos" else np.sin(k * om * t))
        return out


def _exp_integral(terms: dict[int, complex], om: float, t0: float, t1: float) -> float:
    total = 0.0
    for n, c in terms.items():
        if c == 0:
            continue
        if n == 0:
            total += (c * (t1 - t0)).real
        else:
            w = n * om
            total += (c * (np.exp(1j * w * t1) - np.exp(1j * w * t0)) / (1j * w)).real
    return total


def integrate_against(w: Weight, g: TrigPolySpec) -> float:
    """Integral of a(t) g(t) over one period.

    Constant pieces use closed-form antiderivatives; polynomial pieces use
    Gauss-Legendre with the node count doubled until two rules agree.
    """
    om = 2.0 * math.pi / w.period
    terms = g.exponentials()
    bp = w.breakpoints
    total = 0.0
    for i, seg in enumerate(w.segments):
        if seg.is_zero:
            continue
        t0, t1 = bp[i], bp[i + 1]
        if seg.kind == "const" or seg.degree == 0:
            total += seg.array[0] * _exp_integral(terms, om, t0, t1)
            continue
        L = t1 - t0
        n = seg.degree + g.max_frequency + int(math.ceil(g.max_frequency * om * L)) + 8
        prev = _gl_segment(seg, g, w.period, t0, L, n)
        while True:
            n *= 2
            cur = _gl_segment(seg, g, w.period, t0, L, n)
            if abs(cur - prev) <= 1e-14 * (1.0 + abs(cur)) or n > 1 << 14:
                break
            prev = cur
        total += cur
    return float(total)


def _gl_segment(seg: Segment, g: TrigPolySpec, period: float, t0: float, L: float, n: int) -> float:
    x, wq = _gauss(n)
    s = 0.5 * L * (x + 1.0)
    return float(0.5 * L * np.sum(wq * seg(s) * g(t0 + s, period)))

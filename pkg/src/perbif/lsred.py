"""Reduced cubic models at a double eigenvalue sigma_k and their nontrivial roots.

Near (sigma_k, 0) a solution is ``x1*phi_k + x2*vphi_k + (higher order)`` with
phi_k, vphi_k the L2-normalized cosine and sine modes, and (x1, x2) solving a
planar system whose cubic part is fixed by five weighted quartic moments of
those modes. After the blow-up (x1, x2) = sqrt(sigma_k - lam) * (z, w) the
branches are seeded by the nontrivial zeros of ``-(z, w) + C(z, w)``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy import optimize

from perbif.orbit import OrbitPoint
from perbif.weights import TrigPolySpec, Weight, integrate_against, require_hloc

STRUCTURE_RTOL = 1e-9
ROOT_RESIDUAL_TOL = 1e-12
REGULAR_DET_TOL = 1e-8


class StructureError(ValueError):
    """The coefficients do not have the structure a model or solver requires."""


class Family(str, enum.Enum):
    FOUR_BRANCH_H = "FourBranch_H"
    EIGHT_BRANCH_EVEN = "EightBranch_Even"
    EIGHT_BRANCH_PERTURBED = "EightBranch_Perturbed"
    FULL = "Full"


@dataclass(frozen=True)
class LsCoefficients:
    k: int
    a: float
    b: float
    c: float
    d: float
    e: float
    period: float = math.pi

    @property
    def sigma(self) -> float:
        return ((2.0 * math.pi / self.period) * self.k) ** 2

    @property
    def omega(self) -> float:
        return (2.0 * math.pi / self.period) * self.k

    def as_tuple(self) -> tuple[float, float, float, float, float]:
        return (self.a, self.b, self.c, self.d, self.e)


@dataclass(frozen=True)
class StructureReport:
    satisfies_H: tuple[bool, bool, bool, bool]
    satisfies_8branch: bool
    subcrit_margins: tuple[float, float]
    even_like: bool
    rtol: float = STRUCTURE_RTOL

    @property
    def all_H(self) -> bool:
        return all(self.satisfies_H)


@dataclass(frozen=True)
class LocalRoot:
    index: int
    z: float
    w: float
    regular: bool
    family: Family
    residual: float = 0.0
    det: float = 0.0


def compute_coefficients(w: Weight, k: int) -> LsCoefficients:
    """The five quartic moments of the weight against the k-th cos/sin modes."""
    if k < 1:
        raise ValueError("k must be >= 1")
    require_hloc(w)
    norm = (2.0 / w.period) ** 2

    def mom(*names):
        return integrate_against(w, TrigPolySpec.of(*names, k=k, prefactor=norm))

    a = mom("cos", "cos", "cos", "cos")
    c = mom("cos", "sin", "sin", "cos")
    c_alt = mom("cos", "cos", "sin", "sin")
    e = mom("sin", "sin", "sin", "sin")
    b = mom("cos", "cos", "sin", "cos")
    b_alt = mom("cos", "cos", "cos", "sin")
    d = mom("sin", "sin", "sin", "cos")
    d_alt = mom("cos", "sin", "sin", "sin")
    for name, x, y in (("c", c, c_alt), ("b", b, b_alt), ("d", d, d_alt)):
        if abs(x - y) > 1e-12:
            raise ArithmeticError(f"pairing identity for {name}_k broken: {x} vs {y}")
    return LsCoefficients(k, a, b, c, d, e, w.period)


def _close(x: float, y: float, rtol: float) -> bool:
    return abs(x - y) <= rtol * max(abs(x), abs(y))


def classify_structure(c: LsCoefficients, rtol: float = STRUCTURE_RTOL) -> StructureReport:
    h = (_close(c.a, 3.0 * c.c, rtol), _close(c.b, c.d, rtol), _close(c.a, c.e, rtol),
         abs(c.b) > rtol * c.a)
    det = c.a * c.e - 9.0 * c.c ** 2
    # each factor must be nonzero beyond roundoff (a = e = 3c for constant a(t))
    ga, ge = c.a - 3.0 * c.c, c.e - 3.0 * c.c
    sure = abs(ga) > rtol * c.a and abs(ge) > rtol * c.e and abs(det) > rtol * c.a * c.e
    eight = sure and ga * det > 0.0 and ge * det > 0.0
    even_like = abs(c.b) <= rtol * c.a and abs(c.d) <= rtol * c.a
    return StructureReport(h, bool(eight), (c.a + 2.0 * c.b, c.a - 2.0 * c.b), even_like, rtol)


def cubic_map(c: LsCoefficients, x: float, y: float, family: Family = Family.FULL,
              rtol: float = STRUCTURE_RTOL) -> tuple[float, float]:
    """Homogeneous cubic part of the reduced map in the requested normal form."""
    if family == Family.FOUR_BRANCH_H:
        if not classify_structure(c, rtol).all_H:
            raise StructureError("H-form requested but (H) fails for these coefficients")
        a, b = c.a, c.b
        return (a * x ** 3 + 3 * b * x * x * y + a * x * y * y + b * y ** 3,
                b * x ** 3 + a * x * x * y + 3 * b * x * y * y + a * y ** 3)
    if family == Family.EIGHT_BRANCH_EVEN:
        if not classify_structure(c, rtol).even_like:
            raise StructureError("even form requested but b_k, d_k do not vanish")
        return (x * (c.a * x * x + 3 * c.c * y * y), y * (3 * c.c * x * x + c.e * y * y))
    a, b, cc, d, e = c.as_tuple()
    return (a * x ** 3 + 3 * b * x * x * y + 3 * cc * x * y * y + d * y ** 3,
            b * x ** 3 + 3 * cc * x * x * y + 3 * d * x * y * y + e * y ** 3)


def cubic_jacobian(c: LsCoefficients, x: float, y: float) -> np.ndarray:
    a, b, cc, d, e = c.as_tuple()
    return np.array([
        [3 * a * x * x + 6 * b * x * y + 3 * cc * y * y, 3 * b * x * x + 6 * cc * x * y + 3 * d * y * y],
        [3 * b * x * x + 6 * cc * x * y + 3 * d * y * y, 3 * cc * x * x + 6 * d * x * y + 3 * e * y * y],
    ])


def reduced_h(c: LsCoefficients, lam: float, x1: float, x2: float) -> tuple[float, float]:
    """Cubic truncation of the bifurcation equation at (sigma_k, 0)."""
    g1, g2 = cubic_map(c, x1, x2)
    dl = lam - c.sigma
    return (dl * x1 + g1, dl * x2 + g2)


def reduced_h_jacobian(c: LsCoefficients, lam: float, x1: float, x2: float) -> np.ndarray:
    return (lam - c.sigma) * np.eye(2) + cubic_jacobian(c, x1, x2)


def _f(c, z, w):
    g1, g2 = cubic_map(c, z, w)
    return np.array([g1 - z, g2 - w])


def _polish(c: LsCoefficients, z: float, w: float, iters: int = 50) -> tuple[float, float]:
    x = np.array([z, w], dtype=float)
    for _ in range(iters):
        r = _f(c, x[0], x[1])
        J = cubic_jacobian(c, x[0], x[1]) - np.eye(2)
        dx = np.linalg.solve(J, -r)
        x += dx
        if np.max(np.abs(dx)) <= 4e-16 * max(1.0, np.max(np.abs(x))):
            break
    return float(x[0]), float(x[1])


def _make_root(c: LsCoefficients, index: int, z: float, w: float, family: Family) -> LocalRoot:
    z, w = _polish(c, z, w)
    res = float(np.max(np.abs(_f(c, z, w))))
    det = float(np.linalg.det(cubic_jacobian(c, z, w) - np.eye(2)))
    return LocalRoot(index, z, w, abs(det) > REGULAR_DET_TOL, family, res, det)


def _h_closed_form(c: LsCoefficients) -> list[tuple[float, float]]:
    p = 1.0 / math.sqrt(2.0 * (c.a + 2.0 * c.b))
    m = 1.0 / math.sqrt(2.0 * (c.a - 2.0 * c.b))
    return [(p, p), (-p, -p), (m, -m), (-m, m)]


def _even_closed_form(a: float, cc: float, e: float) -> list[tuple[float, float]]:
    det = a * e - 9.0 * cc * cc
    zm = math.sqrt((e - 3.0 * cc) / det)
    wm = math.sqrt((a - 3.0 * cc) / det)
    return [(0.0, 1.0 / math.sqrt(e)), (0.0, -1.0 / math.sqrt(e)),
            (1.0 / math.sqrt(a), 0.0), (-1.0 / math.sqrt(a), 0.0),
            (zm, wm), (-zm, -wm), (zm, -wm), (-zm, wm)]


def solve_local_roots(c: LsCoefficients, rtol: float = STRUCTURE_RTOL) -> list[LocalRoot]:
    """Nontrivial zeros of -(z, w) + C(z, w), in the usual index order.

    (H) gives four roots on the diagonals. The 8-branch inequalities with
    vanishing b_k, d_k give eight roots in closed form; with small nonzero
    b_k, d_k the eight roots are followed from the b = d = 0 model by a
    homotopy in (b_k, d_k).
    """
    rep = classify_structure(c, rtol)
    if rep.all_H:
        starts = _h_closed_form(c)
        return [_make_root(c, i + 1, z, w, Family.FOUR_BRANCH_H) for i, (z, w) in enumerate(starts)]
    if not rep.satisfies_8branch:
        raise StructureError(
            f"k={c.k}: neither (H) nor the 8-branch inequalities hold; no local root solver")
    starts = _even_closed_form(c.a, c.c, c.e)
    if rep.even_like:
        return [_make_root(c, i + 1, z, w, Family.EIGHT_BRANCH_EVEN) for i, (z, w) in enumerate(starts)]
    roots = []
    n_hom = 64
    for i, (z, w) in enumerate(starts):
        for j in range(1, n_hom + 1):
            s = j / n_hom
            cs = LsCoefficients(c.k, c.a, s * c.b, c.c, s * c.d, c.e, c.period)
            z, w = _polish(cs, z, w, iters=20)
        roots.append(_make_root(c, i + 1, z, w, Family.EIGHT_BRANCH_PERTURBED))
    pts = np.array([(r.z, r.w) for r in roots])
    dist = np.linalg.norm(pts[:, None, :] - pts[None, :, :], axis=-1) + np.eye(len(pts))
    if dist.min() < 1e-6 or not all(r.regular for r in roots):
        raise StructureError("homotopy from the even model lost or merged roots")
    return roots


def unit_circle_min(c: LsCoefficients, family: Family = Family.FULL) -> float:
    """min over |(x, y)| = 1 of |C(x, y)|; positive iff C has no nontrivial zero."""
    def g(th):
        return math.hypot(*cubic_map(c, math.cos(th), math.sin(th), family))

    th = np.linspace(0.0, 2.0 * math.pi, 2049)
    vals = np.array([g(t) for t in th])
    i = int(np.argmin(vals))
    lo, hi = th[max(i - 1, 0)], th[min(i + 1, len(th) - 1)]
    res = optimize.minimize_scalar(g, bounds=(lo, hi), method="bounded", options={"xatol": 1e-12})
    return float(min(res.fun, vals.min()))


def local_predictor(c: LsCoefficients, root: LocalRoot, lam: float,
                    period: float | None = None) -> OrbitPoint:
    """Leading-order solution sqrt(sigma_k - lam) * (z phi_k + w vphi_k) as a shooting point."""
    T = c.period if period is None else period
    sig = ((2.0 * math.pi / T) * c.k) ** 2
    if lam > sig:
        raise ValueError(f"no nontrivial branch for lam={lam} > sigma_{c.k}={sig}")
    s = math.sqrt(sig - lam)
    x, y = s * root.z, s * root.w
    nrm = math.sqrt(2.0 / T)
    om = (2.0 * math.pi / T) * c.k
    return OrbitPoint(lam=lam, u0=nrm * x, v0=nrm * y * om,
                      amplitude=nrm * math.hypot(x, y), phase=math.atan2(y, x))


def predictor_profile(c: LsCoefficients, root: LocalRoot, lam: float, t) -> np.ndarray:
    s = math.sqrt(c.sigma - lam)
    nrm = math.sqrt(2.0 / c.period)
    t = np.asarray(t, dtype=float)
    return s * nrm * (root.z * np.cos(c.omega * t) + root.w * np.sin(c.omega * t))

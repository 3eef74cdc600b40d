"""Shooting representation of a candidate periodic solution."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace


class Parity(str, enum.Enum):
    EVEN = "Even"
    ODD = "Odd"


@dataclass(frozen=True)
class OrbitPoint:
    """(lambda, u(0), u'(0)) plus diagnostics filled in once the point is accepted."""

    lam: float
    u0: float
    v0: float
    zeros: int | None = None
    winding: int | None = None
    parity: Parity | None = None
    linf_u: float | None = None
    linf_du: float | None = None
    h2_norm: float | None = None
    residual: float | None = None
    amplitude: float | None = None
    phase: float | None = None

    @property
    def is_trivial(self) -> bool:
        return self.u0 == 0.0 and self.v0 == 0.0

    def negated(self) -> "OrbitPoint":
        return replace(self, u0=-self.u0, v0=-self.v0,
                       phase=None if self.phase is None else math.remainder(self.phase + math.pi, 2 * math.pi))

    def state(self) -> tuple[float, float, float]:
        return (self.lam, self.u0, self.v0)

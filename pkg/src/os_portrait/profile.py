"""Quadratic velocity profile q(x) = a x^2 + b x + c on the interval [-1, 1].

Complex spectral parameters and complex points of the x-plane are plain
Python ``complex`` values throughout the package.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

from .errors import ConstantProfile

DEDUP_TOL = 1e-12


@dataclass(frozen=True)
class QuadraticProfile:
    a: float
    b: float
    c: float

    def __post_init__(self):
        for name in ("a", "b", "c"):
            value = float(getattr(self, name))
            if not math.isfinite(value):
                raise ValueError(f"profile coefficient {name} must be finite, got {value!r}")
            object.__setattr__(self, name, value)

    @classmethod
    def parse(cls, text: str) -> "QuadraticProfile":
        """Parse the CLI form ``a,b,c``."""
        parts = text.split(",")
        if len(parts) != 3 or any(p.strip() != p or not p for p in parts):
            raise ValueError(f"profile must be three comma-separated numbers, got {text!r}")
        return cls(*(float(p) for p in parts))

    def __call__(self, x):
        return evaluate(self, x)

    @property
    def vertex(self) -> float | None:
        """Abscissa of the extremum, or None for a linear/constant profile."""
        if self.a == 0.0:
            return None
        return -self.b / (2.0 * self.a)

    @property
    def is_constant(self) -> bool:
        return self.a == 0.0 and self.b == 0.0

    def reflected(self) -> "QuadraticProfile":
        """Profile of x -> -x."""
        return QuadraticProfile(self.a, -self.b, self.c)

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.a, self.b, self.c)


@dataclass(frozen=True)
class TurningPair:
    """Roots of q(x) = lambda ordered by (real part, imaginary part)."""

    x1: complex
    x2: complex
    degenerate: bool


def evaluate(p: QuadraticProfile, x):
    """a x^2 + b x + c in Horner form; works for scalars and numpy arrays."""
    return (p.a * x + p.b) * x + p.c


def _order(z1: complex, z2: complex) -> tuple[complex, complex]:
    if (z1.real, z1.imag) <= (z2.real, z2.imag):
        return z1, z2
    return z2, z1


def _polish(p: QuadraticProfile, lam: complex, x: complex) -> complex:
    # one Newton step; skipped near the double root where q' vanishes
    dq = 2.0 * p.a * x + p.b
    if abs(dq) > 1e-8 * max(1.0, abs(p.a) + abs(p.b)):
        x = x - (evaluate(p, x) - lam) / dq
    return x


def turning_points(p: QuadraticProfile, lam: complex) -> TurningPair:
    lam = complex(lam)
    if p.is_constant:
        raise ConstantProfile("q is constant: q(x) - lambda has no roots")
    if p.a == 0.0:
        x0 = (lam - p.c) / p.b
        return TurningPair(x0, x0, True)
    c0 = p.c - lam
    disc = p.b * p.b - 4.0 * p.a * c0
    sq = cmath.sqrt(disc)
    # pick the sign that avoids cancellation between -b and sqrt(disc)
    s = p.b + sq if abs(p.b + sq) >= abs(p.b - sq) else p.b - sq
    qq = -0.5 * s
    if qq == 0:
        r1 = r2 = 0j
    else:
        r1 = complex(qq / p.a)
        r2 = complex(c0 / qq)
    r1, r2 = _polish(p, lam, r1), _polish(p, lam, r2)
    x1, x2 = _order(r1, r2)
    degenerate = disc == 0 or abs(x2 - x1) <= DEDUP_TOL * max(1.0, abs(x1))
    return TurningPair(x1, x2, degenerate)


def critical_lambdas(p: QuadraticProfile) -> tuple[float, ...]:
    """Values of lambda where a turning point meets an end of [-1, 1] or the other turning point."""
    values = [evaluate(p, -1.0), evaluate(p, 1.0)]
    v = p.vertex
    if v is not None and -1.0 <= v <= 1.0:
        values.append(evaluate(p, v))
    out: list[float] = []
    for val in sorted(values):
        if not out or abs(val - out[-1]) > DEDUP_TOL * max(1.0, abs(val)):
            out.append(val)
    return tuple(out)


def range_on_interval(p: QuadraticProfile) -> tuple[float, float]:
    values = [evaluate(p, -1.0), evaluate(p, 1.0)]
    v = p.vertex
    if v is not None and -1.0 <= v <= 1.0:
        values.append(evaluate(p, v))
    return min(values), max(values)

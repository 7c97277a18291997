"""Complex action integrals S = integral of sqrt(q(x) - lambda) dx along paths in the x-plane.

The square root has no global branch, so every integral carries a branch value
at its starting point and the sign is propagated by continuity from sample to
sample. Panels are 32-point Gauss-Legendre, halved until the branch is
unambiguous (|delta arg| < pi/4 between consecutive samples) and two levels of
refinement agree.

Endpoints sitting on a turning point x_t are integrable square-root
singularities. They are removed exactly with the substitution
x = x_t + (z0 - x_t) u^2, after which the integrand is analytic in u.
"""

from __future__ import annotations

import cmath
import hashlib
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import (
    BranchAmbiguity,
    BranchMismatch,
    DegenerateTurningPoints,
    PathThroughTurningPoint,
)
from .profile import QuadraticProfile, TurningPair, evaluate, turning_points

GL_ORDER = 32
_GL_X, _GL_W = np.polynomial.legendre.leggauss(GL_ORDER)
PANEL_TOL = 1e-13
MAX_DEPTH = 48
ARG_STEP = math.pi / 4
TURNING_CLEARANCE = 1e-10

PRINCIPAL = "principal"


@dataclass(frozen=True)
class PathSpec:
    """Piecewise-linear path; ``initial_branch`` is "principal" or the value of
    sqrt(q - lambda) at the first waypoint (only its sign is used)."""

    waypoints: tuple[complex, ...]
    initial_branch: object = PRINCIPAL

    def __post_init__(self):
        pts = tuple(complex(w) for w in self.waypoints)
        if len(pts) < 2:
            raise ValueError("a path needs at least two waypoints")
        for z0, z1 in zip(pts, pts[1:]):
            if z0 == z1:
                raise ValueError("consecutive waypoints must be distinct")
        object.__setattr__(self, "waypoints", pts)


@dataclass(frozen=True)
class ActionValue:
    value: complex
    lam: complex
    path_hash: str
    end_branch: complex | None = None


def _hash(*items) -> str:
    return hashlib.sha1(repr(items).encode()).hexdigest()[:16]


def _choose(root: complex, reference: complex) -> complex:
    """The square root (root or -root) closest to ``reference``."""
    return root if abs(root - reference) <= abs(root + reference) else -root


def _propagate(roots: np.ndarray, start: complex):
    """Fix the signs of principal roots by continuity from ``start``.

    Returns the signed roots and whether every step turned by less than ARG_STEP.
    """
    roots = np.asarray(roots, dtype=complex)
    chain = np.concatenate(([complex(start)], roots))
    # choosing the root nearest the previous one flips sign when Re(r_k conj r_{k-1}) < 0
    flips = (chain[1:] * np.conj(chain[:-1])).real < 0
    signs = np.cumprod(np.where(flips, -1.0, 1.0))
    out = signs * roots
    signed = np.concatenate(([complex(start)], out))
    prev, cur = signed[:-1], signed[1:]
    mask = (prev != 0) & (cur != 0)
    ok = bool(np.all(np.abs(np.angle(cur[mask] / prev[mask])) < ARG_STEP))
    return out, ok


def _panel(radicand: Callable, weight: Callable, t0: float, t1: float, f0: complex):
    mid, half = 0.5 * (t0 + t1), 0.5 * (t1 - t0)
    t = np.append(mid + half * _GL_X, t1)
    roots = np.sqrt(radicand(t).astype(complex))
    signed, ok = _propagate(roots, f0)
    val = half * np.sum(_GL_W * weight(t[:-1]) * signed[:-1])
    return complex(val), complex(signed[-1]), ok


def _adaptive(radicand, weight, t0, t1, f0, depth=0):
    """Integral of weight(t) * sqrt(radicand(t)) for t from t0 to t1, sqrt = f0 at t0.

    Returns (value, branch value at t1).
    """
    whole, fe_whole, ok_whole = _panel(radicand, weight, t0, t1, f0)
    tm = 0.5 * (t0 + t1)
    left, fm, ok_left = _panel(radicand, weight, t0, tm, f0)
    right, fe, ok_right = _panel(radicand, weight, tm, t1, fm)
    if (
        ok_whole
        and ok_left
        and ok_right
        and abs(fe - fe_whole) <= 1e-8 * max(1.0, abs(fe))
        and abs(whole - (left + right)) <= PANEL_TOL * max(1.0, abs(left + right))
    ):
        return left + right, fe
    if depth >= MAX_DEPTH:
        raise BranchAmbiguity(
            "could not resolve the square-root branch along the path; it passes too close to a turning point"
        )
    left, fm = _adaptive(radicand, weight, t0, tm, f0, depth + 1)
    right, fe = _adaptive(radicand, weight, tm, t1, fm, depth + 1)
    return left + right, fe


def _start_branch(p: QuadraticProfile, lam: complex, z: complex, branch) -> complex:
    root = cmath.sqrt(complex(evaluate(p, z)) - lam)
    if branch is None or (isinstance(branch, str) and branch == PRINCIPAL):
        return root
    return _choose(root, complex(branch))


def segment_action(p: QuadraticProfile, lam: complex, z0: complex, z1: complex, branch=PRINCIPAL):
    """Straight segment z0 -> z1 clear of turning points. Returns (value, branch at z1)."""
    lam, z0, z1 = complex(lam), complex(z0), complex(z1)
    f0 = _start_branch(p, lam, z0, branch)
    dz = z1 - z0
    return _adaptive(
        lambda t: evaluate(p, z0 + t * dz) - lam,
        lambda t: np.full(t.shape, dz),
        0.0,
        1.0,
        f0,
    )


def _cofactor(p: QuadraticProfile, lam: complex, xt: complex) -> Callable:
    """m(x) with q(x) - lambda = (x - xt) m(x)."""
    if p.a == 0.0:
        return lambda x: np.full(np.shape(x), complex(p.b))
    pair = turning_points(p, lam)
    other = pair.x2 if abs(pair.x1 - xt) <= abs(pair.x2 - xt) else pair.x1
    return lambda x: p.a * (x - other)


def action_to_turning_point(p: QuadraticProfile, lam: complex, z0: complex, xt: complex, branch=PRINCIPAL) -> complex:
    """Integral from a regular point z0 to the turning point xt along the straight segment."""
    lam, z0, xt = complex(lam), complex(z0), complex(xt)
    if z0 == xt:
        return 0j
    f0 = _start_branch(p, lam, z0, branch)
    m = _cofactor(p, lam, xt)
    d = z0 - xt
    # x(u) = xt + d u^2, sqrt(q - lam) = u * sqrt(d m(x(u))), dx = 2 d u du
    val, _ = _adaptive(
        lambda u: d * m(xt + d * u * u),
        lambda u: 2.0 * d * u * u,
        1.0,
        0.0,
        f0,
    )
    return val


def _distance_to_segment(z: complex, a: complex, b: complex) -> float:
    ab = b - a
    t = ((z - a) * ab.conjugate()).real / (abs(ab) ** 2)
    t = min(1.0, max(0.0, t))
    return abs(z - (a + t * ab))


def _check_clearance(p: QuadraticProfile, lam: complex, path: PathSpec, pair: TurningPair | None):
    if pair is None:
        if p.is_constant:
            return
        pair = turning_points(p, lam)
    for z0, z1 in zip(path.waypoints, path.waypoints[1:]):
        for xt in {pair.x1, pair.x2}:
            if _distance_to_segment(xt, z0, z1) < TURNING_CLEARANCE:
                raise PathThroughTurningPoint(f"path segment {z0}->{z1} passes within {TURNING_CLEARANCE} of {xt}")


def integrate_action(p: QuadraticProfile, lam: complex, path: PathSpec, pair: TurningPair | None = None) -> ActionValue:
    lam = complex(lam)
    _check_clearance(p, lam, path, pair)
    branch = path.initial_branch
    total = 0j
    for z0, z1 in zip(path.waypoints, path.waypoints[1:]):
        val, branch = segment_action(p, lam, z0, z1, branch)
        total += val
    return ActionValue(total, lam, _hash(p.as_tuple(), lam, path.waypoints, str(path.initial_branch)), branch)


def action_between_turning_points(p: QuadraticProfile, lam: complex) -> ActionValue:
    """Integral from x1 to x2 along the straight segment, normalized to Im >= 0."""
    lam = complex(lam)
    pair = turning_points(p, lam)
    if pair.degenerate:
        raise DegenerateTurningPoints(f"turning points coincide at lambda={lam}")
    zm = 0.5 * (pair.x1 + pair.x2)
    fm = cmath.sqrt(complex(evaluate(p, zm)) - lam)
    value = action_to_turning_point(p, lam, zm, pair.x2, fm) - action_to_turning_point(p, lam, zm, pair.x1, fm)
    if value.imag < 0 or (value.imag == 0 and value.real < 0):
        value = -value
    return ActionValue(value, lam, _hash(p.as_tuple(), lam, "x1->x2"))


# ---------------------------------------------------------------------------
# closed-form oracle


def _antiderivative(p: QuadraticProfile, lam: complex) -> Callable:
    """G(x, f, log_term) for the branch value f = sqrt(q(x) - lam)."""
    a, b, c = p.a, p.b, p.c
    if a != 0.0:
        sa = cmath.sqrt(a)
        shift = b / (2.0 * a)
        d2 = (b * b - 4.0 * a * (c - lam)) / (4.0 * a * a)

        def g(x, f, log_term):
            return (x + shift) * f / 2.0 - sa * d2 / 2.0 * log_term

        def log_arg(x, f):
            return (x + shift) + f / sa

        return g, log_arg, d2 != 0
    if b != 0.0:
        return (lambda x, f, log_term: 2.0 / (3.0 * b) * f**3), None, False
    return (lambda x, f, log_term: f * x), None, False


def closed_form_action_oracle(
    p: QuadraticProfile,
    lam: complex,
    x_from: complex,
    x_to: complex,
    branch=PRINCIPAL,
    max_samples: int = 1 << 16,
) -> complex:
    """Elementary antiderivative of sqrt(q - lam) across the segment x_from -> x_to.

    The square root and the logarithm are continued along dense samples of the
    segment; no quadrature is involved.
    """
    lam, x_from, x_to = complex(lam), complex(x_from), complex(x_to)
    if x_from == x_to:
        return 0j
    g, log_arg, has_log = _antiderivative(p, lam)
    f0 = _start_branch(p, lam, x_from, branch)
    samples = 257
    while samples <= max_samples:
        t = np.linspace(0.0, 1.0, samples)
        x = x_from + t * (x_to - x_from)
        roots = np.sqrt((evaluate(p, x) - lam).astype(complex))
        f, ok = _propagate(roots, f0)
        log_end = log_start = 0j
        if ok and has_log:
            w = log_arg(x, f)
            if np.any(w == 0):
                ok = False
            else:
                arg = np.angle(w)
                steps = np.diff(arg)
                steps = (steps + np.pi) % (2 * np.pi) - np.pi
                if np.max(np.abs(steps)) >= np.pi / 2:
                    ok = False
                else:
                    log_start = complex(np.log(abs(w[0])), arg[0])
                    log_end = complex(np.log(abs(w[-1])), arg[0] + np.sum(steps))
        if ok:
            return complex(g(x[-1], f[-1], log_end) - g(x[0], f[0], log_start))
        samples = 2 * samples - 1
    raise BranchMismatch("no consistent branch assignment reproduces continuity along the segment")

"""Quantization-condition registry, curve tracing and the limit spectral graph.

A registry file declares *phases* and *curves*. Both are composite actions

    F(lambda) = sum_k coeff_k * S_{a_k, b_k}(lambda)

over endpoint tokens ``x1``, ``x2``, ``left_end`` (-1) and ``right_end`` (+1).
A phase is the real number Re F and may be gated by ``requires`` flags. A curve
is the zero set of Re F (or another constraint) restricted to the region where
one of its ``between`` phase pairs are the two largest active phases. Without a
``between`` key a curve is the full zero set inside its domain.

Actions are read off a primitive Phi along the real segment: Phi(left_end) = 0,
Phi(right_end) = the integral over [-1, 1] (continuous principal branch for
Im lambda <= 0), Phi(x1) = Phi(-1) + straight integral -1 -> x1 and
Phi(x2) = Phi(1) + straight integral 1 -> x2. S_{a,b} = Phi(b) - Phi(a).

Profiles with a < 0 (or a = 0, b < 0) are evaluated in the mirrored frame
q -> -q, lambda -> -conj(lambda) and mapped back with F -> -conj(F).
"""

from __future__ import annotations

import cmath
import math
import re
import sys
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from . import action
from .errors import (
    DegenerateTurningPoints,
    EmptyGraph,
    IndexOutOfRange,
    NoTraceableCurve,
    PortraitError,
    RegistryError,
    SeedNotOnCurve,
    SingularGradient,
)
from .profile import QuadraticProfile, critical_lambdas, evaluate, turning_points

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

TOKENS = ("x1", "x2", "left_end", "right_end")
CONSTRAINTS = ("real_part_zero", "imag_part_zero", "real_part_equals", "imag_part_equals")
REQUIREMENTS = ("x1_inside", "x2_inside", "quadratic")
PARTS = ("modulus", "imag", "real")

DEFAULT_DOMAIN = (-100.0, 100.0, -100.0, 0.0)
DEFAULT_STEP = 0.01
SEED_RADIUS = 0.05
SEED_COUNT = 8
VERTEX_TOL = 1e-6
DEGENERATE_GAP = 1e-4
NEWTON_TOL = 1e-10
NEWTON_MAX = 20
SLOW_NEWTON = 5
GRAD_MIN = 1e-12
ACTIVE_TOL = 1e-9

Rect = tuple[float, float, float, float]


# ---------------------------------------------------------------------------
# registry types


@dataclass(frozen=True)
class Term:
    a: str
    b: str
    coeff: complex


@dataclass(frozen=True)
class Phase:
    id: str
    terms: tuple[Term, ...]
    requires: tuple[str, ...] = ()


@dataclass(frozen=True)
class CurveCondition:
    id: str
    terms: tuple[Term, ...] = ()
    constraint: str = "real_part_zero"
    target: float = 0.0
    domain: Rect = DEFAULT_DOMAIN
    between: tuple[tuple[str, str], ...] = ()
    # injected zero-set function lambda -> complex, replacing the action terms (tests, synthetic curves)
    function: Callable[[complex], complex] | None = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        if not self.terms and self.function is None:
            raise RegistryError(f"curve {self.id!r} needs at least one action term")
        for t in self.terms:
            if t.a not in TOKENS or t.b not in TOKENS:
                raise RegistryError(f"curve {self.id!r}: unknown endpoint token in {t}")
            if not cmath.isfinite(t.coeff):
                raise RegistryError(f"curve {self.id!r}: coefficient must be finite")
        if self.constraint not in CONSTRAINTS:
            raise RegistryError(f"curve {self.id!r}: unknown constraint {self.constraint!r}")


@dataclass(frozen=True)
class CountingLaw:
    condition_id: str
    kappa: float = 1.0 / math.pi
    part: str = "imag"
    # N grows like (1/eps)**exponent
    exponent: float = 0.5

    def __post_init__(self):
        if not self.kappa > 0:
            raise RegistryError(f"count {self.condition_id!r}: kappa must be positive")
        if self.part not in PARTS:
            raise RegistryError(f"count {self.condition_id!r}: part must be one of {PARTS}")


@dataclass(frozen=True)
class Registry:
    phases: tuple[Phase, ...]
    curves: tuple[CurveCondition, ...]
    counts: tuple[CountingLaw, ...]
    source: str = ""

    def curve(self, cid: str) -> CurveCondition:
        for c in self.curves:
            if c.id == cid:
                return c
        raise KeyError(cid)

    def law(self, cid: str) -> CountingLaw:
        for c in self.counts:
            if c.condition_id == cid:
                return c
        raise KeyError(cid)


_NUM = r"(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?"
_COMPLEX_RE = re.compile(rf"^([+-]?{_NUM})?(?:([+-])({_NUM})?i)?$")
_IMAG_RE = re.compile(rf"^([+-]?)({_NUM})?i$")


def parse_complex(text) -> complex:
    """Complex literal ``"<re>+<im>i"``; plain numbers and ``"2i"``-style forms are accepted."""
    if isinstance(text, (int, float)):
        return complex(text)
    s = re.sub(r"\s+", "", str(text))
    m = _IMAG_RE.match(s)
    if m:
        mag = float(m.group(2)) if m.group(2) else 1.0
        return complex(0.0, -mag if m.group(1) == "-" else mag)
    m = _COMPLEX_RE.match(s)
    if not s or not m or not (m.group(1) or m.group(2)):
        raise RegistryError(f"bad complex literal {text!r}")
    re_part = float(m.group(1)) if m.group(1) else 0.0
    im_part = 0.0
    if m.group(2):
        mag = float(m.group(3)) if m.group(3) else 1.0
        im_part = mag if m.group(2) == "+" else -mag
    return complex(re_part, im_part)


def _terms(raw, where) -> tuple[Term, ...]:
    out = []
    for item in raw or ():
        if not isinstance(item, list) or len(item) != 3:
            raise RegistryError(f"{where}: each term is [endpoint_a, endpoint_b, coefficient]")
        out.append(Term(str(item[0]), str(item[1]), parse_complex(item[2])))
    return tuple(out)


def parse_registry(text: str, source: str = "") -> Registry:
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as err:
        raise RegistryError(f"{source or 'registry'}: {err}") from err

    phases = []
    for pid, body in (data.get("phase") or {}).items():
        req = tuple(body.get("requires", ()))
        bad = [r for r in req if r not in REQUIREMENTS]
        if bad:
            raise RegistryError(f"phase {pid!r}: unknown requirement {bad}")
        terms = _terms(body.get("terms"), f"phase {pid!r}")
        if not terms:
            raise RegistryError(f"phase {pid!r} needs at least one term")
        phases.append(Phase(pid, terms, req))
    known = {p.id for p in phases}

    curves = []
    for cid, body in (data.get("curve") or {}).items():
        constraint = body.get("constraint", "real_part_zero")
        target = float(body.get("value", 0.0))
        dom = body.get("domain", list(DEFAULT_DOMAIN))
        if len(dom) != 4:
            raise RegistryError(f"curve {cid!r}: domain is [re_min, re_max, im_min, im_max]")
        between = tuple(tuple(pair) for pair in body.get("between", ()))
        for pair in between:
            if len(pair) != 2 or not set(pair) <= known:
                raise RegistryError(f"curve {cid!r}: 'between' must name pairs of declared phases")
        curves.append(
            CurveCondition(cid, _terms(body.get("terms"), f"curve {cid!r}"), constraint, target,
                           tuple(float(v) for v in dom), between)
        )

    counts = []
    for cid, body in (data.get("count") or {}).items():
        counts.append(
            CountingLaw(cid, float(body.get("kappa", 1.0 / math.pi)), body.get("part", "imag"),
                        float(body.get("exponent", 0.5)))
        )
    return Registry(tuple(phases), tuple(curves), tuple(counts), source)


def load_registry(path: str | Path | None = None) -> Registry:
    if path is None:
        text = resources.files("os_portrait").joinpath("data/default_registry.toml").read_text()
        return parse_registry(text, "default_registry.toml")
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as err:
        raise RegistryError(f"cannot read registry {path}: {err}") from err
    return parse_registry(text, str(path))


def default_registry_path() -> Path:
    return Path(str(resources.files("os_portrait").joinpath("data/default_registry.toml")))


# ---------------------------------------------------------------------------
# composite actions


def _mirrored(p: QuadraticProfile) -> bool:
    return p.a < 0 or (p.a == 0 and p.b < 0)


@dataclass(frozen=True)
class _Frame:
    """Primitive values and turning-point data at one lambda, in the canonical frame."""

    phi: Mapping[str, complex]
    x1: complex | None
    x2: complex | None
    gap: float  # |x1 - x2| for genuine pairs, inf otherwise
    quadratic: bool

    @property
    def x1_inside(self) -> bool:
        return self.x1 is not None and self.x1.real > -1.0

    @property
    def x2_inside(self) -> bool:
        return self.x2 is not None and self.x2.real < 1.0

    def flag(self, name: str) -> bool:
        return {"x1_inside": self.x1_inside, "x2_inside": self.x2_inside, "quadratic": self.quadratic}[name]


def _real_segment(p: QuadraticProfile, lam: complex, stops: Sequence[complex]):
    """Integral over -1 -> 1 through ``stops`` (turning points lying on the segment)."""
    pts = [complex(-1.0)] + sorted(stops, key=lambda z: z.real) + [complex(1.0)]
    total = 0j
    for u, v in zip(pts, pts[1:]):
        if u == v:
            continue
        m = 0.5 * (u + v)
        fm = cmath.sqrt(complex(evaluate(p, m)) - lam)
        right = action.action_to_turning_point(p, lam, m, v, fm) if v in stops else action.segment_action(p, lam, m, v, fm)[0]
        left = action.action_to_turning_point(p, lam, m, u, fm) if u in stops else action.segment_action(p, lam, m, u, fm)[0]
        total += right - left
    return total


def _frame(p: QuadraticProfile, lam: complex) -> _Frame:
    lam = complex(lam)
    quadratic = p.a != 0.0
    x1 = x2 = None
    gap = math.inf
    if not p.is_constant:
        pair = turning_points(p, lam)
        if quadratic:
            x1, x2 = pair.x1, pair.x2
            gap = abs(x2 - x1)
        else:
            x2 = pair.x1  # a single root, x1 sits at -infinity for b > 0
    roots = [z for z in (x1, x2) if z is not None]
    # turning points on (or numerically on) the real segment are integrated through exactly
    stops = []
    for z in roots:
        if abs(z.imag) <= 1e-9 and -1.0 <= z.real <= 1.0 and z not in stops:
            stops.append(complex(z.real, 0.0) if z.imag == 0 else z)
    s_tot = _real_segment(p, lam, stops)
    phi = {"left_end": 0j, "right_end": s_tot}
    if x1 is not None:
        phi["x1"] = action.action_to_turning_point(p, lam, -1.0, x1) if x1 != -1 else 0j
    if x2 is not None:
        f1 = cmath.sqrt(complex(evaluate(p, 1.0)) - lam)
        phi["x2"] = s_tot + (action.action_to_turning_point(p, lam, 1.0, x2, f1) if x2 != 1 else 0j)
    return _Frame(phi, x1, x2, gap, quadratic)


class Evaluator:
    """Evaluates composite actions and phase dominance for one profile; results cached per lambda."""

    def __init__(self, p: QuadraticProfile, phases: Sequence[Phase] = ()):
        self.profile = p
        self.mirror = _mirrored(p)
        self.canonical = QuadraticProfile(-p.a, -p.b, -p.c) if self.mirror else p
        self.phases = tuple(phases)
        self._cache: dict[complex, _Frame] = {}

    def _to_frame(self, lam: complex) -> complex:
        lam = complex(lam)
        return -lam.conjugate() if self.mirror else lam

    def frame(self, lam: complex) -> _Frame:
        key = self._to_frame(lam)
        fr = self._cache.get(key)
        if fr is None:
            if len(self._cache) > 4096:
                self._cache.clear()
            fr = _frame(self.canonical, key)
            self._cache[key] = fr
        return fr

    def composite(self, terms: Sequence[Term], lam: complex) -> complex:
        fr = self.frame(lam)
        total = 0j
        for t in terms:
            if t.a not in fr.phi or t.b not in fr.phi:
                raise DegenerateTurningPoints(f"endpoint {t.a if t.a not in fr.phi else t.b} is undefined for this profile")
            total += t.coeff * (fr.phi[t.b] - fr.phi[t.a])
        return -total.conjugate() if self.mirror else total

    def condition(self, cond: CurveCondition, lam: complex) -> complex:
        if cond.function is not None:
            return complex(cond.function(complex(lam)))
        return self.composite(cond.terms, lam)

    def phase_values(self, lam: complex) -> dict[str, float]:
        fr = self.frame(lam)
        out = {}
        for ph in self.phases:
            if all(fr.flag(r) for r in ph.requires):
                total = sum((t.coeff * (fr.phi[t.b] - fr.phi[t.a]) for t in ph.terms), 0j)
                out[ph.id] = total.real
        return out

    def active(self, cond: CurveCondition, lam: complex) -> bool:
        if not cond.between or not self.phases:
            return True
        vals = self.phase_values(lam)
        scale = max([1.0] + [abs(v) for v in vals.values()])
        for pa, pb in cond.between:
            if pa not in vals or pb not in vals:
                continue
            rest = [v for k, v in vals.items() if k not in (pa, pb)]
            if not rest or min(vals[pa], vals[pb]) >= max(rest) - ACTIVE_TOL * scale:
                return True
        return False


def _g(value: complex, cond: CurveCondition) -> float:
    if cond.constraint == "real_part_zero":
        return value.real
    if cond.constraint == "imag_part_zero":
        return value.imag
    if cond.constraint == "real_part_equals":
        return value.real - cond.target
    return value.imag - cond.target


def condition_value(cond: CurveCondition, p: QuadraticProfile, lam: complex, evaluator: Evaluator | None = None) -> complex:
    ev = evaluator or Evaluator(p)
    return ev.condition(cond, lam)


def constraint_residual(cond: CurveCondition, p: QuadraticProfile, lam: complex, evaluator: Evaluator | None = None) -> float:
    return _g(condition_value(cond, p, lam, evaluator), cond)


# ---------------------------------------------------------------------------
# curves


@dataclass(frozen=True)
class LimitCurve:
    condition_id: str
    points: tuple[complex, ...]
    arclength: tuple[float, ...]
    action_along: tuple[complex, ...]
    condition_ids: tuple[str, ...] = ()
    multiplicity: int = 1

    def __post_init__(self):
        if not self.condition_ids:
            object.__setattr__(self, "condition_ids", (self.condition_id,))

    def __len__(self):
        return len(self.points)

    @property
    def array(self) -> np.ndarray:
        return np.asarray(self.points, dtype=complex)


@dataclass(frozen=True)
class LimitGraph:
    curves: tuple[LimitCurve, ...] = ()
    vertices: tuple[complex, ...] = ()

    @property
    def is_empty(self) -> bool:
        return not self.curves


def _in_rect(z: complex, r: Rect) -> bool:
    return r[0] <= z.real <= r[1] and r[2] <= z.imag <= r[3]


def _cumulative(points: Sequence[complex]) -> tuple[float, ...]:
    z = np.asarray(points, dtype=complex)
    if len(z) == 0:
        return ()
    return tuple(np.concatenate(([0.0], np.cumsum(np.abs(np.diff(z))))).tolist())


def _make_curve(cond: CurveCondition, points: Sequence[complex], ev: Evaluator) -> LimitCurve:
    pts = [complex(z) for z in points]
    clean = [pts[0]]
    for z in pts[1:]:
        if z != clean[-1]:
            clean.append(z)
    # orient so that the curve starts at its highest point
    if (clean[-1].imag, -clean[-1].real) > (clean[0].imag, -clean[0].real):
        clean.reverse()
    vals = tuple(ev.condition(cond, z) for z in clean)
    return LimitCurve(cond.id, tuple(clean), _cumulative(clean), vals)


class _Tracer:
    def __init__(self, cond: CurveCondition, ev: Evaluator, step: float, max_points: int,
                 stops: Sequence[complex], bounds: Rect):
        self.cond, self.ev, self.step = cond, ev, step
        self.max_points = max_points
        self.stops = tuple(complex(s) for s in stops)
        self.bounds = bounds

    def g(self, lam: complex) -> float:
        return _g(self.ev.condition(self.cond, lam), self.cond)

    def grad(self, lam: complex) -> np.ndarray:
        h = 1e-7 * max(1.0, abs(lam))
        gx = (self.g(lam + h) - self.g(lam - h)) / (2 * h)
        gy = (self.g(lam + 1j * h) - self.g(lam - 1j * h)) / (2 * h)
        gr = np.array([gx, gy])
        if np.hypot(gx, gy) < GRAD_MIN:
            raise SingularGradient(f"gradient vanishes at lambda={lam}")
        return gr

    def project(self, lam: complex) -> tuple[complex, int]:
        """Newton onto g = 0 along the gradient; returns (point, iterations)."""
        for it in range(NEWTON_MAX + 1):
            val = self.g(lam)
            if abs(val) <= NEWTON_TOL:
                return lam, it
            if it == NEWTON_MAX:
                break
            gr = self.grad(lam)
            d = -val * gr / gr.dot(gr)
            lam = lam + complex(d[0], d[1])
        raise SeedNotOnCurve(f"Newton did not reach |g| <= {NEWTON_TOL} from lambda={lam}")

    def corrector(self, pred: complex, tangent: np.ndarray) -> tuple[complex, int]:
        """Newton on g = 0 constrained to the line normal to ``tangent`` through ``pred``."""
        lam = pred
        for it in range(NEWTON_MAX + 1):
            val = self.g(lam)
            if abs(val) <= NEWTON_TOL:
                return lam, it
            if it == NEWTON_MAX:
                break
            gr = self.grad(lam)
            off = np.array([(lam - pred).real, (lam - pred).imag])
            J = np.array([gr, tangent])
            rhs = -np.array([val, tangent.dot(off)])
            try:
                d = np.linalg.solve(J, rhs)
            except np.linalg.LinAlgError:
                break
            lam = lam + complex(d[0], d[1])
        raise SeedNotOnCurve("corrector failed")

    def tangent(self, lam: complex, ref: np.ndarray | None) -> np.ndarray:
        gr = self.grad(lam)
        t = np.array([-gr[1], gr[0]]) / np.hypot(*gr)
        if ref is not None and t.dot(ref) < 0:
            t = -t
        return t

    def usable(self, lam: complex) -> bool:
        if not _in_rect(lam, self.cond.domain) or not _in_rect(lam, self.bounds):
            return False
        if self.cond.function is None and self.ev.frame(lam).gap < DEGENERATE_GAP:
            return False
        return self.ev.active(self.cond, lam)

    def _boundary(self, good: complex, bad: complex, tangent: np.ndarray) -> complex | None:
        """Bisect between an admissible point and an inadmissible one; returns the last admissible point."""
        lo, hi = 0.0, abs(bad - good)
        direction = (bad - good) / abs(bad - good)
        best = None
        for _ in range(40):
            mid = 0.5 * (lo + hi)
            try:
                z, _ = self.corrector(good + mid * direction, np.array([direction.real, direction.imag]))
            except PortraitError:
                hi = mid
                continue
            if self.usable(z):
                lo, best = mid, z
            else:
                hi = mid
            if hi - lo < 1e-12:
                break
        return best

    def march(self, start: complex, direction: np.ndarray) -> list[complex]:
        pts = [start]
        t_prev = direction
        h = self.step
        h_min = self.step * 1e-4
        while len(pts) < self.max_points:
            lam = pts[-1]
            t = self.tangent(lam, t_prev)
            # stop at a critical value within reach
            hit = [s for s in self.stops if 0 < abs(s - lam) <= h and (s - lam).real * t[0] + (s - lam).imag * t[1] > 0]
            if hit:
                s = min(hit, key=lambda z: abs(z - lam))
                try:
                    if abs(self.g(s)) <= 1e-8:
                        pts.append(s)
                except PortraitError:
                    pass
                break
            pred = lam + h * complex(t[0], t[1])
            try:
                new, its = self.corrector(pred, t)
            except PortraitError:
                its, new = NEWTON_MAX + 1, None
            if new is not None:
                t_new = self.tangent(new, t) if abs(self.g(new)) <= NEWTON_TOL else t
                turn = math.acos(max(-1.0, min(1.0, float(t_new.dot(t)))))
            if new is None or its > SLOW_NEWTON or turn > math.pi / 8 or abs(new - lam) > 2 * h:
                h *= 0.5
                if h < h_min:
                    break  # curvature blow-up or corrector breakdown
                continue
            if not self.usable(new):
                edge = self._boundary(lam, new, t)
                if edge is not None and abs(edge - lam) > 0:
                    pts.append(edge)
                break
            pts.append(new)
            t_prev = t_new
            h = min(self.step, h * 1.5)
        return pts


def trace_curve(
    cond: CurveCondition,
    seed: complex,
    step: float = DEFAULT_STEP,
    max_points: int = 2000,
    p: QuadraticProfile | None = None,
    *,
    evaluator: Evaluator | None = None,
    stops: Sequence[complex] | None = None,
    bounds: Rect | None = None,
) -> LimitCurve:
    """Trace the zero set of ``cond`` through ``seed`` in both directions."""
    if evaluator is None:
        if p is None:
            if cond.function is None:
                raise ValueError("a profile is needed to evaluate action terms")
            p = QuadraticProfile(0.0, 0.0, 0.0)
        evaluator = Evaluator(p)
    if stops is None:
        stops = () if evaluator.profile.is_constant and cond.function is not None else critical_lambdas(evaluator.profile)
    tr = _Tracer(cond, evaluator, step, max_points, stops, bounds or cond.domain)
    start, _ = tr.project(complex(seed))
    return _trace_from(tr, start, seed)


def _trace_from(tr: _Tracer, start: complex, seed: complex) -> LimitCurve:
    if not tr.usable(start):
        raise SeedNotOnCurve(f"seed {seed} projects to {start}, outside the admissible region of {tr.cond.id!r}")
    t0 = tr.tangent(start, None)
    fwd = tr.march(start, t0)
    bwd = tr.march(start, -t0)
    pts = bwd[::-1] + fwd[1:]
    if len(pts) < 2:
        raise SeedNotOnCurve(f"no curve could be followed from {seed}")
    return _make_curve(tr.cond, pts, tr.ev)


# ---------------------------------------------------------------------------
# geometry helpers


def point_segment_distances(z: np.ndarray, poly: np.ndarray) -> np.ndarray:
    """Distance from each point of ``z`` to the polyline ``poly``."""
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    poly = np.asarray(poly, dtype=complex)
    if len(poly) == 1:
        return np.abs(z - poly[0])
    a, b = poly[:-1], poly[1:]
    ab = b - a
    denom = np.abs(ab) ** 2
    t = ((z[:, None] - a[None, :]) * np.conj(ab)[None, :]).real / np.where(denom > 0, denom, 1.0)
    t = np.clip(t, 0.0, 1.0)
    return np.min(np.abs(z[:, None] - (a[None, :] + t * ab[None, :])), axis=1)


def nearest_on_polyline(z: complex, poly: np.ndarray) -> tuple[float, int, float]:
    """(distance, segment index, parameter in [0, 1]) of the closest polyline point."""
    poly = np.asarray(poly, dtype=complex)
    if len(poly) == 1:
        return abs(z - poly[0]), 0, 0.0
    a, b = poly[:-1], poly[1:]
    ab = b - a
    denom = np.abs(ab) ** 2
    t = np.clip(((z - a) * np.conj(ab)).real / np.where(denom > 0, denom, 1.0), 0.0, 1.0)
    d = np.abs(z - (a + t * ab))
    k = int(np.argmin(d))
    return float(d[k]), k, float(t[k])


def hausdorff(p1: Sequence[complex], p2: Sequence[complex]) -> float:
    a, b = np.asarray(p1, dtype=complex), np.asarray(p2, dtype=complex)
    if len(a) == 0 or len(b) == 0:
        return math.inf
    return float(max(point_segment_distances(a, b).max(), point_segment_distances(b, a).max()))


def _segment_intersections(c1: np.ndarray, c2: np.ndarray) -> list[complex]:
    out = []
    if len(c1) < 2 or len(c2) < 2:
        return out
    p, r = c1[:-1], np.diff(c1)
    q, s = c2[:-1], np.diff(c2)
    # boxes first to keep this cheap
    lo1 = np.minimum(c1[:-1], c1[1:])
    hi1 = np.maximum(c1[:-1].real, c1[1:].real)
    for j in range(len(q)):
        qj, sj = q[j], s[j]
        xlo, xhi = min(qj.real, (qj + sj).real), max(qj.real, (qj + sj).real)
        ylo, yhi = min(qj.imag, (qj + sj).imag), max(qj.imag, (qj + sj).imag)
        cand = np.flatnonzero(
            (hi1 >= xlo - VERTEX_TOL)
            & (lo1.real <= xhi + VERTEX_TOL)
            & (np.maximum(c1[:-1].imag, c1[1:].imag) >= ylo - VERTEX_TOL)
            & (np.minimum(c1[:-1].imag, c1[1:].imag) <= yhi + VERTEX_TOL)
        )
        for i in cand:
            rxs = (np.conj(r[i]) * sj).imag
            if rxs == 0:
                continue
            d = qj - p[i]
            t = (np.conj(d) * sj).imag / rxs
            u = (np.conj(d) * r[i]).imag / rxs
            if -1e-12 <= t <= 1 + 1e-12 and -1e-12 <= u <= 1 + 1e-12:
                out.append(complex(p[i] + t * r[i]))
    return out


def _dedupe_points(points: Iterable[complex], tol: float) -> list[complex]:
    out: list[complex] = []
    for z in sorted(points, key=lambda w: (round(w.real, 9), round(w.imag, 9))):
        if all(abs(z - w) > tol for w in out):
            out.append(z)
    return out


def _clip(curve: LimitCurve, window: Rect) -> list[LimitCurve]:
    pts = curve.points
    runs, cur = [], []
    for k, z in enumerate(pts):
        if _in_rect(z, window):
            cur.append(k)
        elif cur:
            runs.append(cur)
            cur = []
    if cur:
        runs.append(cur)
    out = []
    for run in runs:
        if len(run) < 2:
            continue
        sel = [pts[k] for k in run]
        out.append(replace(curve, points=tuple(sel), arclength=_cumulative(sel),
                           action_along=tuple(curve.action_along[k] for k in run)))
    return out


# ---------------------------------------------------------------------------
# assembly


def _seed_ring(center: complex, radius: float, count: int = SEED_COUNT) -> list[complex]:
    return [center + radius * cmath.exp(2j * math.pi * (k + 0.5) / count) for k in range(count)]


def _trace_all(cond, ev, seeds, step, max_points, stops, bounds, existing: list[LimitCurve]):
    found = list(existing)
    tr = _Tracer(cond, ev, step, max_points, stops, bounds)
    for s in seeds:
        try:
            start, _ = tr.project(complex(s))
            # a seed landing on an already traced curve adds nothing
            if any(point_segment_distances(np.array([start]), c.array)[0] < step / 2 for c in found):
                continue
            cur = _trace_from(tr, start, s)
        except PortraitError:
            continue
        if cur.arclength[-1] < step / 2:
            continue  # sliver squeezed between competing phases at a junction
        if any(hausdorff(cur.points, c.points) < step / 2 for c in found):
            continue
        found.append(cur)
    return found


def assemble_graph(
    conds: Iterable[CurveCondition],
    p: QuadraticProfile,
    *,
    phases: Sequence[Phase] = (),
    seeds: Sequence[complex] = (),
    critical: Sequence[complex] | None = None,
    step: float = DEFAULT_STEP,
    max_points: int = 2000,
    window: Rect | None = None,
    passes: int = 3,
) -> LimitGraph:
    """Trace every condition from seeds around the critical values, merge duplicates, find vertices."""
    conds = list(conds)
    if not conds:
        return LimitGraph()
    crit = [complex(z) for z in (critical_lambdas(p) if critical is None else critical)]
    ev = Evaluator(p, phases)
    bounds = window or (-math.inf, math.inf, -math.inf, math.inf)
    base_seeds = [z for c in crit for z in _seed_ring(c, SEED_RADIUS)] + [complex(s) for s in seeds]

    traced: dict[str, list[LimitCurve]] = {c.id: [] for c in conds}
    seed_set = base_seeds
    tried: list[complex] = []
    for _ in range(max(1, passes)):
        for cond in conds:
            traced[cond.id] = _trace_all(cond, ev, seed_set, step, max_points, crit, bounds, traced[cond.id])
        tried.extend(seed_set)
        # junctions found so far become new seed centres
        ends = [z for cs in traced.values() for c in cs for z in (c.points[0], c.points[-1])]
        ends = [z for z in _dedupe_points(ends, 1e-6) if all(abs(z - c) > SEED_RADIUS / 2 for c in crit + tried)]
        if not ends:
            break
        seed_set = [w for z in ends for w in _seed_ring(z, SEED_RADIUS)] + ends
        tried.extend(ends)

    curves: list[LimitCurve] = []
    for cond in conds:
        for cur in traced[cond.id]:
            for k, other in enumerate(curves):
                if hausdorff(cur.points, other.points) < step / 2:
                    ids = other.condition_ids + tuple(i for i in cur.condition_ids if i not in other.condition_ids)
                    curves[k] = replace(other, condition_ids=ids, multiplicity=other.multiplicity + cur.multiplicity)
                    break
            else:
                curves.append(cur)
    if not curves:
        raise NoTraceableCurve(f"no condition could be traced for profile {p.as_tuple()}")
    if window is not None:
        curves = [piece for c in curves for piece in _clip(c, window)]

    cand = list(crit)
    arrays = [c.array for c in curves]
    for i in range(len(arrays)):
        for j in range(i + 1, len(arrays)):
            cand.extend(_segment_intersections(arrays[i], arrays[j]))
    ends = [z for a in arrays for z in (a[0], a[-1])]
    for i, z in enumerate(ends):
        if any(abs(z - w) <= VERTEX_TOL for j, w in enumerate(ends) if j // 2 != i // 2):
            cand.append(complex(z))
    vertices = [
        z for z in _dedupe_points(cand, VERTEX_TOL)
        if any(point_segment_distances(np.array([z]), a)[0] <= VERTEX_TOL for a in arrays)
    ]
    return LimitGraph(tuple(curves), tuple(vertices))


def assemble_from_registry(reg: Registry, p: QuadraticProfile, **kw) -> LimitGraph:
    return assemble_graph(reg.curves, p, phases=reg.phases, **kw)


# ---------------------------------------------------------------------------
# counting


def _part(z: complex, part: str) -> float:
    if part == "imag":
        return z.imag
    if part == "real":
        return z.real
    return abs(z)


def predicted_count(law: CountingLaw, curve: LimitCurve, from_idx: int, to_idx: int, epsilon: float) -> float:
    """multiplicity * kappa * (1/eps)**exponent * |part(F[to]) - part(F[from])|."""
    n = len(curve.action_along)
    if not (0 <= from_idx < n and 0 <= to_idx < n) or from_idx > to_idx:
        raise IndexOutOfRange(f"arc [{from_idx}, {to_idx}] on a curve with {n} points")
    delta = abs(_part(curve.action_along[to_idx], law.part) - _part(curve.action_along[from_idx], law.part))
    return curve.multiplicity * law.kappa * (1.0 / epsilon) ** law.exponent * delta


def require_nonempty(graph: LimitGraph):
    if graph.is_empty:
        raise EmptyGraph("the limit graph has no curves")

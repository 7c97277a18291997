"""Reynolds sweeps and the two measurements made on them: how far eigenvalues sit
from the limit graph, and how many of them lie along an arc compared with the
counting law."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Mapping, Sequence

import numpy as np

from . import persist
from .discretize import Scheme, build
from .eigensolve import Spectrum, compute_spectrum, filter_spurious, worker_count
from .errors import EmptyGraph, PortraitError
from .graph import CountingLaw, LimitCurve, LimitGraph, nearest_on_polyline, point_segment_distances, predicted_count
from .profile import QuadraticProfile, range_on_interval

Rect = tuple[float, float, float, float]

FILTER_TOL = 1e-6
TUBE_RADII = (0.025, 0.05, 0.1)
DEFAULT_TUBE = 0.05


def default_n(reynolds: float, scheme) -> int:
    root = math.ceil(math.sqrt(reynolds))
    if Scheme(scheme) is Scheme.CHEBYSHEV:
        return max(300, 4 * root)
    return max(2000, 40 * root)


def default_window(p: QuadraticProfile) -> Rect:
    lo, hi = range_on_interval(p)
    return (lo - 0.1, hi + 0.1, -1.5 * (hi - lo) - 0.1, 0.0)


def in_window(values: np.ndarray, window: Rect) -> np.ndarray:
    v = np.asarray(values, dtype=complex)
    return (v.real >= window[0]) & (v.real <= window[1]) & (v.imag >= window[2]) & (v.imag <= window[3])


@dataclass(frozen=True)
class SweepConfig:
    profile: QuadraticProfile
    reynolds_list: tuple[float, ...]
    scheme: Scheme = Scheme.CHEBYSHEV
    n_for: Mapping[float, int] | Callable[[float], int] | None = None
    window: Rect | None = None
    filter_tol: float = FILTER_TOL

    def __post_init__(self):
        rs = tuple(float(r) for r in self.reynolds_list)
        if not rs or any(not r > 0 for r in rs):
            raise ValueError("reynolds_list must hold positive values")
        if any(b <= a for a, b in zip(rs, rs[1:])):
            raise ValueError("reynolds_list must be strictly increasing")
        object.__setattr__(self, "reynolds_list", rs)
        object.__setattr__(self, "scheme", Scheme(self.scheme))
        if self.window is None:
            object.__setattr__(self, "window", default_window(self.profile))
        ns = [self.size(r) for r in rs]
        if any(b < a for a, b in zip(ns, ns[1:])):
            raise ValueError("n_for must be non-decreasing in R")

    def size(self, reynolds: float) -> int:
        if self.n_for is None:
            return default_n(reynolds, self.scheme)
        if callable(self.n_for):
            return int(self.n_for(reynolds))
        return int(self.n_for[reynolds])


def _annotate(err: PortraitError, reynolds: float) -> PortraitError:
    err.args = (f"R={reynolds:g}: {err.args[0] if err.args else ''}",) + tuple(err.args[1:])
    return err


def _solve_one(cfg: SweepConfig, reynolds: float) -> Spectrum:
    n = cfg.size(reynolds)
    eps = 1.0 / reynolds
    try:
        low = compute_spectrum(build(cfg.profile, eps, n, cfg.scheme))
        high = compute_spectrum(build(cfg.profile, eps, math.ceil(1.5 * n), cfg.scheme))
        return filter_spurious(low, high, cfg.filter_tol)
    except PortraitError as err:
        raise _annotate(err, reynolds)


def _matches(s: Spectrum, cfg: SweepConfig, reynolds: float) -> bool:
    return (s.profile, s.epsilon, s.scheme, s.n) == (cfg.profile, 1.0 / reynolds, cfg.scheme, cfg.size(reynolds))


def run_sweep(cfg: SweepConfig, out_dir: str | Path | None = None) -> list[Spectrum]:
    """One filtered spectrum per R. With ``out_dir`` each result is written as soon as it
    is known, and spectra already on disk for the same problem are reused."""
    out = Path(out_dir) if out_dir is not None else None
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
    results: dict[float, Spectrum] = {}
    todo = []
    for r in cfg.reynolds_list:
        path = out / persist.spectrum_filename(r) if out is not None else None
        if path is not None and path.exists():
            try:
                s = persist.read_spectrum_json(path)
            except (PortraitError, ValueError, KeyError):
                s = None
            if s is not None and _matches(s, cfg, r):
                results[r] = s
                continue
        todo.append(r)

    def task(r):
        s = _solve_one(cfg, r)
        if out is not None:
            persist.write_spectrum_json(s, out / persist.spectrum_filename(r))
        return r, s

    workers = min(worker_count(), max(1, len(todo)))
    if workers == 1:
        done = [task(r) for r in todo]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            done = list(pool.map(task, todo))
    results.update(done)
    return [results[r] for r in cfg.reynolds_list]


# ---------------------------------------------------------------------------
# concentration


@dataclass(frozen=True)
class ConcentrationStats:
    reynolds: float
    max_distance: float | None
    mean_distance: float | None
    counted: int


def _distances(values: np.ndarray, graph: LimitGraph) -> np.ndarray:
    return np.min([point_segment_distances(values, c.array) for c in graph.curves], axis=0)


def distance_to_graph(spec: Spectrum, graph: LimitGraph, window: Rect) -> ConcentrationStats:
    if graph.is_empty:
        raise EmptyGraph("distance to an empty graph is undefined")
    v = spec.values
    v = v[in_window(v, window)]
    if len(v) == 0:
        return ConcentrationStats(spec.reynolds, None, None, 0)
    d = _distances(v, graph)
    return ConcentrationStats(spec.reynolds, float(d.max()), float(d.mean()), int(len(v)))


# ---------------------------------------------------------------------------
# counting


def empirical_count(spec: Spectrum, curve: LimitCurve, from_idx: int, to_idx: int, tube_radius: float) -> int:
    """Eigenvalues within ``tube_radius`` of the curve whose nearest curve point lies on the arc."""
    if not tube_radius >= 0:
        raise ValueError("tube_radius must be non-negative")
    poly = curve.array
    count = 0
    for lam in spec.values:
        d, k, t = nearest_on_polyline(lam, poly)
        if d > tube_radius:
            continue
        pos = k + t
        if len(poly) == 1:
            pos = 0.0
        if from_idx <= pos <= to_idx:
            count += 1
    return count


@dataclass(frozen=True)
class CountingReport:
    condition_id: str
    arc: tuple[int, int]
    rows: tuple[tuple[float, int, float], ...]
    tube_radius: float = DEFAULT_TUBE
    fit_slope: float | None = None
    fit_intercept: float | None = None
    fit_r2: float | None = None
    # the slope the counting law predicts against the regression abscissa (1/eps)**exponent
    expected_slope: float | None = None
    exponent: float = 1.0


def linear_fit(x: Sequence[float], y: Sequence[float]) -> tuple[float, float, float]:
    """Least squares y = slope * x + intercept; returns (slope, intercept, R^2)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    A = np.column_stack([x, np.ones_like(x)])
    (slope, intercept), *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = y - (slope * x + intercept)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid**2)) / ss_tot if ss_tot > 0 else (1.0 if np.allclose(resid, 0) else 0.0)
    return float(slope), float(intercept), r2


def counting_report(
    sweep: Sequence[Spectrum],
    curve: LimitCurve,
    law: CountingLaw,
    arc: tuple[int, int],
    tube_radius: float = DEFAULT_TUBE,
) -> CountingReport:
    """Empirical vs predicted counts per R, with a regression of the counts on (1/eps)**law.exponent."""
    if not sweep:
        raise ValueError("counting needs at least one spectrum")
    i, j = arc
    rows = []
    for s in sorted(sweep, key=lambda s: s.reynolds):
        rows.append((s.reynolds, empirical_count(s, curve, i, j, tube_radius), predicted_count(law, curve, i, j, s.epsilon)))
    expected = predicted_count(law, curve, i, j, 1.0)
    report = CountingReport(law.condition_id, (i, j), tuple(rows), tube_radius, expected_slope=expected, exponent=law.exponent)
    if len(rows) >= 3:
        x = [(1.0 / s.epsilon) ** law.exponent for s in sorted(sweep, key=lambda s: s.reynolds)]
        slope, intercept, r2 = linear_fit(x, [r[1] for r in rows])
        report = CountingReport(law.condition_id, (i, j), tuple(rows), tube_radius, slope, intercept, r2, expected, law.exponent)
    return report


def default_arc(curve: LimitCurve, vertices: Sequence[complex], margin: float = 0.1) -> tuple[int, int]:
    """Longest run of curve points at least ``margin`` away from every vertex; the whole curve if none."""
    pts = curve.array
    if len(vertices) == 0:
        return 0, len(pts) - 1
    far = np.min(np.abs(pts[:, None] - np.asarray(vertices, dtype=complex)[None, :]), axis=1) >= margin
    best, start = (0, len(pts) - 1), None
    best_len = -1
    for k, ok in enumerate(list(far) + [False]):
        if ok and start is None:
            start = k
        elif not ok and start is not None:
            if k - 1 - start > best_len and k - 1 > start:
                best, best_len = (start, k - 1), k - 1 - start
            start = None
    return best


# ---------------------------------------------------------------------------
# trajectories


@dataclass(frozen=True)
class Trajectory:
    label: int
    reynolds: tuple[float, ...]
    values: tuple[complex, ...]


def _greedy_match(a: np.ndarray, b: np.ndarray) -> list[tuple[int, int]]:
    if len(a) == 0 or len(b) == 0:
        return []
    d = np.abs(a[:, None] - b[None, :])
    order = np.argsort(d, axis=None, kind="stable")
    used_a, used_b, pairs = set(), set(), []
    for flat in order:
        i, j = divmod(int(flat), len(b))
        if i in used_a or j in used_b:
            continue
        used_a.add(i)
        used_b.add(j)
        pairs.append((i, j))
        if len(pairs) == min(len(a), len(b)):
            break
    return pairs


def track_trajectories(
    sweep: Sequence[Spectrum], window: Rect | None = None, scaled: bool = False
) -> list[Trajectory]:
    """Greedy nearest-neighbour matching between consecutive spectra.

    With ``scaled`` the distance is measured between lambda * R values, which
    follows eigenvalues whose positions scale with eps.
    """
    if len(sweep) < 2:
        raise ValueError("tracking needs at least two spectra")
    if len({(s.profile, s.scheme) for s in sweep}) != 1:
        raise ValueError("spectra must share profile and scheme")
    sweep = sorted(sweep, key=lambda s: s.reynolds)

    def pick(s):
        v = s.values
        return v[in_window(v, window)] if window is not None else v

    paths: list[list[tuple[float, complex]]] = []
    live: dict[int, int] = {}
    first = pick(sweep[0])
    for k, lam in enumerate(first):
        live[k] = len(paths)
        paths.append([(sweep[0].reynolds, complex(lam))])
    prev, prev_s = first, sweep[0]
    for s in sweep[1:]:
        cur = pick(s)
        a = prev * prev_s.reynolds if scaled else prev
        b = cur * s.reynolds if scaled else cur
        nxt: dict[int, int] = {}
        for i, j in _greedy_match(a, b):
            pid = live[i]
            paths[pid].append((s.reynolds, complex(cur[j])))
            nxt[j] = pid
        for j in range(len(cur)):
            if j not in nxt:
                nxt[j] = len(paths)
                paths.append([(s.reynolds, complex(cur[j]))])
        live, prev, prev_s = nxt, cur, s
    return [Trajectory(k, tuple(r for r, _ in p), tuple(z for _, z in p)) for k, p in enumerate(paths)]

"""Acceptance criteria 1-8, each at its pinned tolerance.

Every test records one ``criterion k: PASS|FAIL`` line (printed again in the
terminal summary). Run just this file with

    pytest -v tests/test_acceptance.py

or ``python tests/test_acceptance.py``.
"""

import filecmp
import math
import time

import numpy as np
import pytest
from scipy.optimize import linear_sum_assignment

from oracles import zero_profile_eigenvalues
from os_portrait import persist
from os_portrait.action import PathSpec, closed_form_action_oracle, integrate_action
from os_portrait.cli import main
from os_portrait.discretize import Scheme, build
from os_portrait.eigensolve import compute_spectrum, filter_spurious
from os_portrait.graph import assemble_from_registry, predicted_count, trace_curve
from os_portrait.portrait import (
    SweepConfig,
    counting_report,
    default_arc,
    default_window,
    distance_to_graph,
    empirical_count,
    in_window,
    linear_fit,
    run_sweep,
)
from os_portrait.profile import QuadraticProfile, turning_points

PARABOLA = QuadraticProfile(1, 0, 0)
COUNT_RS = (500, 1000, 2000, 4000, 8000)
CONC_RS = (500, 2000, 8000)


def matched_distances(a, b):
    d = np.abs(np.asarray(a)[:, None] - np.asarray(b)[None, :])
    rows, cols = linear_sum_assignment(d)
    return d[rows, cols], np.asarray(a)[rows]


@pytest.fixture(scope="module")
def sweep():
    return {s.reynolds: s for s in run_sweep(SweepConfig(PARABOLA, COUNT_RS))}


@pytest.fixture(scope="module")
def graph(registry):
    return assemble_from_registry(registry, PARABOLA, window=default_window(PARABOLA))


def test_criterion_1_zero_profile(verdict):
    t0 = time.perf_counter()
    s = compute_spectrum(build(QuadraticProfile(0, 0, 0), 0.01, 200, Scheme.CHEBYSHEV))
    elapsed = time.perf_counter() - t0
    ev = s.values[np.argsort(np.abs(s.values))][:10]
    exact = zero_profile_eigenvalues(0.01, 10)
    rel = float(np.max(np.abs(ev - exact) / np.abs(exact)))
    lam1_err = abs(ev[0] - (-0.0246740110j))
    ok = rel <= 1e-8 and lam1_err <= 5e-11 and elapsed < 10
    verdict("1", ok, f"max rel err {rel:.2e}, lambda_1 = {ev[0]:.10f}, {elapsed:.2f} s")


def test_criterion_2_matrix_identities(verdict):
    # fd2, n = 1000, R = 500; the literal statement is an absolute 1e-10 over the whole spectrum
    eps, n = 1 / 500, 1000
    base = compute_spectrum(build(QuadraticProfile(1, 0.3, 0), eps, n, Scheme.FD2)).values
    refl = compute_spectrum(build(QuadraticProfile(1, -0.3, 0), eps, n, Scheme.FD2)).values
    shifted = compute_spectrum(build(QuadraticProfile(1, 0.3, 0.7), eps, n, Scheme.FD2)).values
    d_shift, at_shift = matched_distances(base + 0.7, shifted)
    d_refl, at_refl = matched_distances(base, refl)
    rel = max((d_shift / np.maximum(1, np.abs(at_shift))).max(), (d_refl / np.maximum(1, np.abs(at_refl))).max())
    inside = in_window(at_refl, default_window(QuadraticProfile(1, 0.3, 0)))
    window_err = d_refl[inside].max()
    ok = d_shift.max() <= 1e-10 and d_refl.max() <= 1e-10
    verdict(
        "2",
        ok,
        f"shift {d_shift.max():.2e}, reflection {d_refl.max():.2e} (worst at |lambda| = "
        f"{abs(at_refl[np.argmax(d_refl)]):.0f}); relative to max(1,|lambda|) {rel:.1e}; "
        f"inside the default window {window_err:.1e}",
    )


def test_criterion_3_numerical_range(verdict):
    details, ok = [], True
    for R in CONC_RS:
        op = build(PARABOLA, 1 / R, 2000, Scheme.FD2)
        v = compute_spectrum(op).values
        tol = 1e-12 * np.linalg.norm(op.matrix, 2)
        viol = max(float(np.max(v.imag)), float(np.max(-v.real)), float(np.max(v.real - 1)), 0.0)
        ok &= viol <= tol
        details.append(f"R={R}: max Im {np.max(v.imag):.2e}, violation {viol:.1e} (tol {tol:.1e})")
    verdict("3", ok, "; ".join(details))


def test_criterion_4_cross_scheme(verdict):
    eps = 1 / 100
    cheb = compute_spectrum(build(PARABOLA, eps, 300, Scheme.CHEBYSHEV))
    cheb_hi = compute_spectrum(build(PARABOLA, eps, 450, Scheme.CHEBYSHEV))
    cheb = filter_spurious(cheb, cheb_hi, 1e-6).values
    fd = compute_spectrum(build(PARABOLA, eps, 2000, Scheme.FD2)).values
    a = cheb[np.argsort(np.abs(cheb.imag), kind="stable")][:30]
    b = fd[np.argsort(np.abs(fd.imag), kind="stable")][:30]
    d, at = matched_distances(a, b)
    ok = d.max() <= 1e-4
    verdict(
        "4",
        ok,
        f"max |chebyshev - fd2| over 30 least-damped = {d.max():.2e} at {at[np.argmax(d)]:.4f}; "
        f"{int(np.sum(d <= 1e-4))}/30 within 1e-4",
    )


def test_criterion_5_action_oracle(verdict):
    rng = np.random.default_rng(20260)
    worst, samples = 0.0, 0
    while samples < 100:
        a = rng.uniform(-2, 2)
        if abs(a) < 0.05:
            continue
        p = QuadraticProfile(a, rng.uniform(-2, 2), rng.uniform(-1, 1))
        lam = complex(rng.uniform(-1, 2), rng.uniform(-2, -0.05))
        z0 = complex(rng.uniform(-1.5, 1.5), rng.uniform(-0.5, 0.5))
        z1 = complex(rng.uniform(-1.5, 1.5), rng.uniform(-0.5, 0.5))
        pair = turning_points(p, lam)
        seg = z1 - z0
        if abs(seg) < 0.1:
            continue
        # keep turning points off the segment
        clear = True
        for xt in (pair.x1, pair.x2):
            t = min(1, max(0, ((xt - z0) * seg.conjugate()).real / abs(seg) ** 2))
            clear &= abs(xt - (z0 + t * seg)) > 0.05
        if not clear:
            continue
        v = integrate_action(p, lam, PathSpec((z0, z1))).value
        w = closed_form_action_oracle(p, lam, z0, z1)
        worst = max(worst, abs(v - w))
        samples += 1

    lam = 0.3 - 0.2j
    straight = integrate_action(PARABOLA, lam, PathSpec((-1, 1))).value
    detour = integrate_action(PARABOLA, lam, PathSpec((-1, -0.6 + 0.1j, 0.2j, 0.6 - 0.1j, 1))).value
    exact = integrate_action(PARABOLA, -1, PathSpec((-1, 1))).value
    closed = math.sqrt(2) + math.log(1 + math.sqrt(2))
    ok = worst <= 1e-9 and abs(straight - detour) <= 1e-9 and abs(exact - closed) <= 1e-10
    verdict(
        "5",
        ok,
        f"100 samples max err {worst:.1e}; detour {abs(straight - detour):.1e}; "
        f"int sqrt(x^2+1) = {exact.real:.13f} (err {abs(exact - closed):.1e})",
    )


def test_criterion_6_concentration(verdict, sweep, graph):
    window = default_window(PARABOLA)
    stats = [distance_to_graph(sweep[R], graph, window) for R in CONC_RS]
    d = [s.max_distance for s in stats]
    decreasing = d[0] > d[1] > d[2]
    ok = decreasing and d[2] <= 0.05
    parts = ", ".join(f"R={R}: {x:.5f} ({s.counted} eigenvalues)" for R, x, s in zip(CONC_RS, d, stats))
    verdict("6", ok, f"max_distance {parts}; strictly decreasing: {decreasing}; R=8000 <= 0.05: {d[2] <= 0.05}")


def _ray(graph, registry):
    ray = next(c for c in graph.curves if c.condition_id == "ray")
    return ray, registry.law("ray"), default_arc(ray, graph.vertices)


def _zero_profile_count(eps, M):
    k = np.arange(1, 100000)
    return int(np.sum(eps * (np.pi * k / 2) ** 2 <= M))


def test_criterion_7_counting_law(verdict, sweep, graph, registry):
    ray, law, (i, j) = _ray(graph, registry)
    counts = [empirical_count(sweep[R], ray, i, j, 0.05) for R in COUNT_RS]
    # literal form: counts linear in 1/eps with slope kappa |delta Im F|
    slope, _, r2 = linear_fit(COUNT_RS, counts)
    unit = predicted_count(law, ray, i, j, 1.0)
    fit_ok = r2 >= 0.99 and abs(slope - unit) / unit <= 0.1
    calib = []
    for M in (0.5, 1.0, 2.0):
        for eps in (1e-2, 1e-3):
            calib.append((M, eps, math.floor(2 / (math.pi * eps) * math.sqrt(M)), _zero_profile_count(eps, M)))
    calib_ok = all(abs(f - e) <= 1 for _, _, f, e in calib)
    bad = [(M, eps, f, e) for M, eps, f, e in calib if abs(f - e) > 1]
    verdict(
        "7",
        fit_ok and calib_ok,
        f"counts {dict(zip(COUNT_RS, counts))} on ray arc [{i},{j}]; fit vs 1/eps: slope {slope:.4f}, "
        f"R^2 {r2:.3f}, expected slope {unit:.3f}; calibration floor(2/(pi eps) sqrt M) vs exact "
        f"(M, eps, formula, exact) mismatches: {bad[:3]}{'...' if len(bad) > 3 else ''}",
    )


def test_counting_law_sqrt_scaling(sweep, graph, registry):
    """The counting law in the form the eigenvalue asymptotics support: N ~ kappa |delta Im F| / sqrt(eps)."""
    ray, law, arc = _ray(graph, registry)
    rep = counting_report([sweep[R] for R in COUNT_RS], ray, law, arc, 0.05)
    print(f"sqrt-scaling fit: slope {rep.fit_slope:.4f} vs {rep.expected_slope:.4f}, R^2 {rep.fit_r2:.4f}, rows {rep.rows}")
    assert rep.fit_r2 >= 0.99
    assert abs(rep.fit_slope - rep.expected_slope) / rep.expected_slope <= 0.1

    # q = 0 calibration through the traced ray: floor(predicted) = exact count to within one
    zero = QuadraticProfile(0, 0, 0)
    for M in (0.5, 1.0, 2.0):
        c = trace_curve(registry.curve("ray"), -0.5j * M, p=zero, bounds=(-1, 1, -M, 0))
        assert abs(c.points[-1].imag + M) <= 1e-9
        for eps in (1e-2, 1e-3, 1e-4):
            pred = predicted_count(law, c, 0, len(c) - 1, eps)
            assert abs(math.floor(pred) - _zero_profile_count(eps, M)) <= 1


def test_criterion_8_determinism(verdict, tmp_path):
    argv = ["portrait", "--profile", "1,0,0", "--reynolds-list", "100,200,400", "--n", "60"]
    assert main(argv + ["--out", str(tmp_path / "a")]) == 0
    assert main(argv + ["--out", str(tmp_path / "b")]) == 0
    names = sorted(p.name for p in (tmp_path / "a").iterdir())
    match, mismatch, errors = filecmp.cmpfiles(tmp_path / "a", tmp_path / "b", names, shallow=False)
    kinds = {p.rsplit(".", 1)[-1] for p in names}

    s = compute_spectrum(build(PARABOLA, 1 / 500, 80, Scheme.CHEBYSHEV), want_vectors=True)
    back = persist.spectrum_from_text(persist.spectrum_to_text(s))
    same = back.values.tolist() == s.values.tolist() and [p.residual for p in back.pairs] == [p.residual for p in s.pairs]
    text_same = persist.spectrum_to_text(back) == persist.spectrum_to_text(s)
    ok = not mismatch and not errors and {"json", "csv", "svg"} <= kinds and same and text_same
    verdict("8", ok, f"{len(match)}/{len(names)} files byte-identical ({', '.join(sorted(kinds))}); round-trip exact: {same}")


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-v"]))

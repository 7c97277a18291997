"""``portrait`` command line: spectrum, curves, counts, sweep, portrait.

Exit status is 0 on success, 2 for usage errors and 1 for computational
failures (the error class name is printed on stderr).
"""

from __future__ import annotations

import argparse
import math
import sys
from dataclasses import dataclass
from pathlib import Path

from . import persist
from .discretize import Scheme, build
from .eigensolve import compute_spectrum
from .errors import PortraitError
from .graph import DEFAULT_STEP, LimitGraph, assemble_from_registry, default_registry_path, load_registry
from .portrait import (
    DEFAULT_TUBE,
    TUBE_RADII,
    SweepConfig,
    counting_report,
    default_arc,
    default_n,
    default_window,
    distance_to_graph,
    run_sweep,
)
from .profile import QuadraticProfile
from .svg import emit_svg

COMMANDS = ("spectrum", "curves", "counts", "sweep", "portrait")


class UsageError(Exception):
    pass


@dataclass(frozen=True)
class RunConfig:
    command: str
    profile: QuadraticProfile
    scheme: Scheme = Scheme.CHEBYSHEV
    n: int | None = None
    reynolds: float | None = None
    reynolds_list: tuple[float, ...] = ()
    registry_path: Path | None = None
    out_path: Path | None = None
    window: tuple[float, float, float, float] | None = None
    conjugate: bool = False
    want_vectors: bool = False
    step: float = DEFAULT_STEP
    tube: float = DEFAULT_TUBE


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: error: {message}")


def _profile(text: str) -> QuadraticProfile:
    try:
        return QuadraticProfile.parse(text)
    except ValueError as err:
        raise argparse.ArgumentTypeError(str(err)) from None


def _positive(text: str) -> float:
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not (v > 0 and math.isfinite(v)):
        raise argparse.ArgumentTypeError(f"must be a positive number, got {text!r}")
    return v


def _float_list(count: int | None):
    def parse(text: str) -> tuple[float, ...]:
        try:
            vals = tuple(float(t) for t in text.split(","))
        except ValueError:
            raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None
        if count is not None and len(vals) != count:
            raise argparse.ArgumentTypeError(f"expected {count} comma-separated numbers, got {text!r}")
        if not all(math.isfinite(v) for v in vals):
            raise argparse.ArgumentTypeError(f"values must be finite: {text!r}")
        return vals

    return parse


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="portrait", description="Spectral portraits of i eps y'' + q(x) y on [-1, 1].")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    def common(p, reynolds: str | None):
        p.add_argument("--profile", type=_profile, required=True, help="a,b,c for q(x) = a x^2 + b x + c")
        if reynolds == "single":
            p.add_argument("--reynolds", type=_positive, required=True)
        elif reynolds == "list":
            p.add_argument("--reynolds-list", type=_float_list(None), required=True, help="e.g. 500,2000,8000")
        if reynolds is not None:
            p.add_argument("--scheme", choices=[s.value for s in Scheme], default=Scheme.CHEBYSHEV.value)
            p.add_argument("--n", type=int, help="matrix size (default grows with R)")
        p.add_argument("--conjugate", action="store_true", help="report eigenvalues in the upper half-plane")

    def graph_opts(p):
        p.add_argument("--registry", type=Path, help="registry TOML (default: the bundled one)")
        p.add_argument("--window", type=_float_list(4), help="re_min,re_max,im_min,im_max")
        p.add_argument("--step", type=_positive, default=DEFAULT_STEP)

    sp = sub.add_parser("spectrum", help="eigenvalues at one Reynolds number")
    common(sp, "single")
    sp.add_argument("--want-vectors", action="store_true", help="compute eigenvectors and residuals")
    sp.add_argument("--out", type=Path, help="spectrum JSON (default: stdout)")

    cp = sub.add_parser("curves", help="trace the limit graph")
    common(cp, None)
    graph_opts(cp)
    cp.add_argument("--out", type=Path, default=Path("graph.json"))

    for name, text in (("sweep", "filtered spectra over a Reynolds sweep"),
                       ("counts", "sweep plus counting tables"),
                       ("portrait", "sweep, graph, statistics and SVG portrait")):
        p = sub.add_parser(name, help=text)
        common(p, "list")
        if name != "sweep":
            graph_opts(p)
            p.add_argument("--tube", type=_positive, default=DEFAULT_TUBE)
        p.add_argument("--out", type=Path, required=True, help="output directory")
    return parser


def parse_args(argv) -> RunConfig:
    ns = build_parser().parse_args(list(argv))
    rl = tuple(getattr(ns, "reynolds_list", None) or ())
    if rl:
        if any(not (r > 0) for r in rl):
            raise UsageError("--reynolds-list: values must be positive")
        if any(b <= a for a, b in zip(rl, rl[1:])):
            raise UsageError("--reynolds-list: values must be strictly increasing")
    n = getattr(ns, "n", None)
    if n is not None and n < 4:
        raise UsageError("--n: need at least 4 interior nodes")
    window = getattr(ns, "window", None)
    if window is not None and (window[0] >= window[1] or window[2] >= window[3]):
        raise UsageError("--window: need re_min < re_max and im_min < im_max")
    registry = getattr(ns, "registry", None)
    if ns.command in ("curves", "counts", "portrait") and registry is None:
        registry = default_registry_path()
    return RunConfig(
        command=ns.command,
        profile=ns.profile,
        scheme=Scheme(getattr(ns, "scheme", Scheme.CHEBYSHEV.value)),
        n=n,
        reynolds=getattr(ns, "reynolds", None),
        reynolds_list=rl,
        registry_path=registry,
        out_path=ns.out,
        window=window,
        conjugate=ns.conjugate,
        want_vectors=getattr(ns, "want_vectors", False),
        step=getattr(ns, "step", DEFAULT_STEP),
        tube=getattr(ns, "tube", DEFAULT_TUBE),
    )


# ---------------------------------------------------------------------------


def _sweep(cfg: RunConfig):
    n_for = (lambda r: cfg.n) if cfg.n is not None else None
    sc = SweepConfig(cfg.profile, cfg.reynolds_list, cfg.scheme, n_for, cfg.window)
    return sc, run_sweep(sc, cfg.out_path)


def _graph(cfg: RunConfig) -> tuple[LimitGraph, object]:
    reg = load_registry(cfg.registry_path)
    window = cfg.window or default_window(cfg.profile)
    return assemble_from_registry(reg, cfg.profile, window=window, step=cfg.step), reg


def _counting_files(cfg: RunConfig, spectra, graph: LimitGraph, reg, out: Path):
    seen: dict[str, int] = {}
    for curve in graph.curves:
        try:
            law = reg.law(curve.condition_id)
        except KeyError:
            continue
        k = seen.get(curve.condition_id, 0) + 1
        seen[curve.condition_id] = k
        stem = curve.condition_id if k == 1 else f"{curve.condition_id}_{k}"
        arc = default_arc(curve, graph.vertices)
        if arc[1] <= arc[0]:
            continue
        radii = sorted(set(TUBE_RADII) | {cfg.tube})
        for r in radii:
            rep = counting_report(spectra, curve, law, arc, r)
            name = f"counting_{stem}.csv" if r == cfg.tube else f"counting_{stem}_tube{format(r, 'g')}.csv"
            persist.write_counting_csv(out / name, rep)


def run(cfg: RunConfig) -> int:
    if cfg.command == "spectrum":
        n = cfg.n or default_n(cfg.reynolds, cfg.scheme)
        spec = compute_spectrum(build(cfg.profile, 1.0 / cfg.reynolds, n, cfg.scheme), cfg.want_vectors)
        if cfg.out_path is None:
            sys.stdout.write(persist.spectrum_to_text(spec, cfg.conjugate))
        else:
            persist.write_spectrum_json(spec, cfg.out_path, cfg.conjugate)
        return 0
    if cfg.command == "curves":
        graph, _ = _graph(cfg)
        persist.write_graph_json(graph, cfg.out_path, cfg.profile)
        return 0
    if cfg.command == "sweep":
        _sweep(cfg)
        return 0

    sc, spectra = _sweep(cfg)
    graph, reg = _graph(cfg)
    out = cfg.out_path
    persist.write_graph_json(graph, out / "graph.json", cfg.profile)
    _counting_files(cfg, spectra, graph, reg, out)
    if cfg.command == "portrait":
        stats = [distance_to_graph(s, graph, sc.window) for s in spectra]
        persist.write_concentration_csv(out / "concentration.csv", stats)
        emit_svg(spectra, graph, out / "portrait.svg", sc.window, cfg.conjugate)
    return 0


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    try:
        cfg = parse_args(argv)
    except UsageError as err:
        sys.stderr.write(build_parser().format_usage())
        sys.stderr.write(f"{err}\n")
        return 2
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    try:
        return run(cfg)
    except PortraitError as err:
        sys.stderr.write(f"{type(err).__name__}: {err}\n")
        return 1
    except OSError as err:
        sys.stderr.write(f"IoError: {err}\n")
        return 1


if __name__ == "__main__":
    sys.exit(main())

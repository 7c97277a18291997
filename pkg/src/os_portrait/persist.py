"""On-disk formats: spectrum and graph JSON, sweep CSV tables.

Every float is written with 17 significant digits, so binary64 values read
back bit-for-bit. The writers build the text themselves instead of going
through ``json.dumps`` to keep that formatting fixed.
"""

from __future__ import annotations

import json
import math
import os
import tempfile
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .discretize import Scheme
from .eigensolve import EigenPair, Spectrum, flag_clusters
from .errors import SchemaMismatch
from .graph import LimitCurve, LimitGraph
from .profile import QuadraticProfile

SPECTRUM_SCHEMA = "os-portrait/spectrum/1"
GRAPH_SCHEMA = "os-portrait/graph/1"


def fmt(x) -> str:
    if x is None:
        return "null"
    x = float(x)
    if not math.isfinite(x):
        raise ValueError(f"cannot serialize non-finite value {x}")
    return format(x, ".17g")


def _cfmt(z: complex) -> str:
    return f"[{fmt(z.real)}, {fmt(z.imag)}]"


def _atomic_write(path: Path, text: str):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=".tmp-", suffix=path.suffix)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def spectrum_filename(reynolds: float) -> str:
    return f"spectrum_R{format(float(reynolds), '.17g')}.json"


def _profile_text(p: QuadraticProfile) -> str:
    return f'{{"a": {fmt(p.a)}, "b": {fmt(p.b)}, "c": {fmt(p.c)}}}'


def spectrum_to_text(s: Spectrum, conjugate: bool = False) -> str:
    lines = [
        "{",
        f'  "schema": "{SPECTRUM_SCHEMA}",',
        f'  "profile": {_profile_text(s.profile)},',
        f'  "epsilon": {fmt(s.epsilon)},',
        f'  "reynolds": {fmt(1.0 / s.epsilon)},',
        f'  "scheme": "{Scheme(s.scheme).value}",',
        f'  "n": {int(s.n)},',
    ]
    pairs = s.pairs
    if conjugate:
        pairs = sorted((EigenPair(p.lam.conjugate(), p.residual, None, p.cluster) for p in pairs),
                       key=lambda p: (p.lam.real, p.lam.imag))
    if not pairs:
        lines.append('  "eigenvalues": []')
    else:
        lines.append('  "eigenvalues": [')
        body = [
            f'    {{"re": {fmt(p.lam.real)}, "im": {fmt(p.lam.imag)}, "residual": {fmt(p.residual)}}}'
            for p in pairs
        ]
        lines.append(",\n".join(body))
        lines.append("  ]")
    lines.append("}")
    return "\n".join(lines) + "\n"


def write_spectrum_json(s: Spectrum, path, conjugate: bool = False):
    _atomic_write(Path(path), spectrum_to_text(s, conjugate))


def spectrum_from_text(text: str) -> Spectrum:
    data = json.loads(text)
    if not isinstance(data, dict) or data.get("schema") != SPECTRUM_SCHEMA:
        raise SchemaMismatch(f"unsupported spectrum schema {data.get('schema') if isinstance(data, dict) else None!r}")
    prof = data["profile"]
    p = QuadraticProfile(prof["a"], prof["b"], prof["c"])
    vals = [complex(e["re"], e["im"]) for e in data["eigenvalues"]]
    res = [None if e.get("residual") is None else float(e["residual"]) for e in data["eigenvalues"]]
    flags = flag_clusters(np.array(vals, dtype=complex))
    pairs = [EigenPair(v, r, None, bool(f)) for v, r, f in zip(vals, res, flags)]
    pairs.sort(key=lambda pr: (pr.lam.real, pr.lam.imag))
    return Spectrum(tuple(pairs), float(data["epsilon"]), Scheme(data["scheme"]), int(data["n"]), p)


def read_spectrum_json(path) -> Spectrum:
    return spectrum_from_text(Path(path).read_text(encoding="utf-8"))


# ---------------------------------------------------------------------------
# graph


def graph_to_text(g: LimitGraph, p: QuadraticProfile | None = None) -> str:
    lines = ["{", f'  "schema": "{GRAPH_SCHEMA}",']
    if p is not None:
        lines.append(f'  "profile": {_profile_text(p)},')
    curve_texts = []
    for c in g.curves:
        ids = ", ".join(f'"{i}"' for i in c.condition_ids)
        curve_texts.append(
            "    {\n"
            f'      "condition_id": "{c.condition_id}",\n'
            f'      "condition_ids": [{ids}],\n'
            f'      "multiplicity": {int(c.multiplicity)},\n'
            f'      "points": [{", ".join(_cfmt(z) for z in c.points)}],\n'
            f'      "arclength": [{", ".join(fmt(s) for s in c.arclength)}],\n'
            f'      "action_along": [{", ".join(_cfmt(z) for z in c.action_along)}]\n'
            "    }"
        )
    lines.append('  "curves": [' + ("\n" + ",\n".join(curve_texts) + "\n  ]," if curve_texts else "],"))
    lines.append(f'  "vertices": [{", ".join(_cfmt(z) for z in g.vertices)}]')
    lines.append("}")
    return "\n".join(lines) + "\n"


def write_graph_json(g: LimitGraph, path, p: QuadraticProfile | None = None):
    _atomic_write(Path(path), graph_to_text(g, p))


def graph_from_text(text: str) -> LimitGraph:
    data = json.loads(text)
    if not isinstance(data, dict) or data.get("schema") != GRAPH_SCHEMA:
        raise SchemaMismatch(f"unsupported graph schema {data.get('schema') if isinstance(data, dict) else None!r}")
    curves = []
    for c in data["curves"]:
        curves.append(
            LimitCurve(
                c["condition_id"],
                tuple(complex(x, y) for x, y in c["points"]),
                tuple(float(s) for s in c["arclength"]),
                tuple(complex(x, y) for x, y in c["action_along"]),
                tuple(c.get("condition_ids", (c["condition_id"],))),
                int(c.get("multiplicity", 1)),
            )
        )
    return LimitGraph(tuple(curves), tuple(complex(x, y) for x, y in data["vertices"]))


def read_graph_json(path) -> LimitGraph:
    return graph_from_text(Path(path).read_text(encoding="utf-8"))


# ---------------------------------------------------------------------------
# tables


def write_csv(path, header: Sequence[str], rows: Iterable[Sequence]):
    out = [",".join(header)]
    for row in rows:
        cells = []
        for v in row:
            if v is None:
                cells.append("")
            elif isinstance(v, (int,)) and not isinstance(v, bool):
                cells.append(str(v))
            else:
                cells.append(fmt(v))
        out.append(",".join(cells))
    _atomic_write(Path(path), "\n".join(out) + "\n")


def write_concentration_csv(path, stats):
    write_csv(path, ("reynolds", "max_distance", "mean_distance", "counted"),
              ((s.reynolds, s.max_distance, s.mean_distance, int(s.counted)) for s in stats))


def write_counting_csv(path, report):
    write_csv(path, ("reynolds", "empirical", "predicted"),
              ((r, int(e), pr) for r, e, pr in report.rows))

"""All eigenvalues of a dense complex non-Hermitian matrix, with residuals and
two-resolution filtering of discretization artifacts.

The dense work is delegated to LAPACK ``zgeev`` through :func:`scipy.linalg.eig`
(balancing, Hessenberg reduction, shifted QR). What the package guarantees is
the contract checked here: residual bounds, trace identity, sorting, cluster
flags.
"""

from __future__ import annotations

import os
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.linalg

from .discretize import DiscretizedOperator, Scheme
from .errors import MismatchedProblem, MissingVector, NoConvergence
from .profile import QuadraticProfile

WORKERS_ENV = "OS_PORTRAIT_WORKERS"
CLUSTER_TOL = 1e-14
RESIDUAL_BOUND = 1e-8


@dataclass(frozen=True, eq=False)
class EigenPair:
    lam: complex
    residual: float | None = None
    vector: np.ndarray | None = field(default=None, repr=False)
    cluster: bool = False

    def __eq__(self, other):
        if not isinstance(other, EigenPair):
            return NotImplemented
        same_vec = (self.vector is None and other.vector is None) or (
            self.vector is not None and other.vector is not None and np.array_equal(self.vector, other.vector)
        )
        return (self.lam, self.residual, self.cluster) == (other.lam, other.residual, other.cluster) and same_vec


@dataclass(frozen=True)
class Spectrum:
    pairs: tuple[EigenPair, ...]
    epsilon: float
    scheme: Scheme
    n: int
    profile: QuadraticProfile

    @property
    def values(self) -> np.ndarray:
        return np.array([p.lam for p in self.pairs], dtype=complex)

    @property
    def reynolds(self) -> float:
        return 1.0 / self.epsilon

    def __len__(self):
        return len(self.pairs)

    def same_problem(self, other: "Spectrum") -> bool:
        return (self.profile, self.epsilon, Scheme(self.scheme)) == (other.profile, other.epsilon, Scheme(other.scheme))


def sort_key(lam: complex):
    return (lam.real, lam.imag)


def flag_clusters(values: np.ndarray) -> np.ndarray:
    """Boolean mask of eigenvalues lying within CLUSTER_TOL * scale of another one."""
    flags = np.zeros(len(values), dtype=bool)
    if len(values) < 2:
        return flags
    scale = max(1.0, float(np.max(np.abs(values))))
    order = np.argsort(values.real, kind="stable")
    v = values[order]
    tol = CLUSTER_TOL * scale
    for i in range(len(v)):
        j = i + 1
        while j < len(v) and v[j].real - v[i].real <= tol:
            if abs(v[j] - v[i]) <= tol:
                flags[order[i]] = flags[order[j]] = True
            j += 1
    return flags


def make_spectrum(values, op_like, residuals=None, vectors=None) -> Spectrum:
    """Assemble a sorted, cluster-flagged Spectrum from raw eigenvalues."""
    values = np.asarray(values, dtype=complex)
    flags = flag_clusters(values)
    pairs = []
    for k, lam in enumerate(values):
        res = None if residuals is None else float(residuals[k])
        vec = None if vectors is None else vectors[:, k]
        pairs.append(EigenPair(complex(lam), res, vec, bool(flags[k])))
    pairs.sort(key=lambda pr: sort_key(pr.lam))
    return Spectrum(tuple(pairs), op_like.epsilon, Scheme(op_like.scheme), op_like.n, op_like.profile)


def _failed_indices(err: Exception, n: int) -> list[int]:
    m = re.search(r"(\d+)", str(err))
    return list(range(int(m.group(1)))) if m else list(range(n))


def compute_spectrum(op: DiscretizedOperator, want_vectors: bool = False) -> Spectrum:
    A = op.matrix
    if not np.all(np.isfinite(A)):
        raise ValueError("matrix has non-finite entries")
    try:
        if want_vectors:
            w, V = scipy.linalg.eig(A, right=True, check_finite=False)
        else:
            w = scipy.linalg.eigvals(A, check_finite=False)
            V = None
    except np.linalg.LinAlgError as err:
        raise NoConvergence(f"QR iteration failed for N={op.n}: {err}", _failed_indices(err, op.n)) from err

    residuals = None
    if V is not None:
        V = V / np.linalg.norm(V, axis=0)
        residuals = np.linalg.norm(A @ V - V * w, axis=0)
        bound = RESIDUAL_BOUND * np.linalg.norm(A, "fro")
        bad = np.flatnonzero(residuals > bound)
        if bad.size:
            raise NoConvergence(f"{bad.size} eigenpairs exceed the residual bound {bound:.3g}", bad)
    return make_spectrum(w, op, residuals, V)


def residual(op: DiscretizedOperator, pair: EigenPair) -> float:
    if pair.vector is None:
        raise MissingVector("eigenpair carries no vector")
    v = np.asarray(pair.vector)
    return float(np.linalg.norm(op.matrix @ v - pair.lam * v) / np.linalg.norm(v))


def filter_spurious(low: Spectrum, high: Spectrum, tol: float) -> Spectrum:
    """Keep the eigenvalues of ``low`` confirmed by ``high`` within ``tol * max(1, |lam|)``."""
    if not low.same_problem(high):
        raise MismatchedProblem("spectra belong to different (profile, epsilon, scheme)")
    if high.n < 1.5 * low.n and not (high.n == low.n and high.values.tolist() == low.values.tolist()):
        raise MismatchedProblem(f"high resolution n={high.n} must be at least 1.5 * {low.n}")
    lv, hv = low.values, high.values
    if len(lv) == 0 or len(hv) == 0:
        return replace(low, pairs=())
    keep = []
    for pr in low.pairs:
        if np.min(np.abs(hv - pr.lam)) <= tol * max(1.0, abs(pr.lam)):
            keep.append(pr)
    return replace(low, pairs=tuple(keep))


def worker_count() -> int:
    raw = os.environ.get(WORKERS_ENV)
    if raw is None or raw == "":
        return os.cpu_count() or 1
    try:
        n = int(raw)
    except ValueError:
        raise ValueError(f"{WORKERS_ENV} must be a positive integer, got {raw!r}") from None
    if n < 1:
        raise ValueError(f"{WORKERS_ENV} must be a positive integer, got {raw!r}")
    return n


def compute_many(ops, want_vectors: bool = False) -> list[Spectrum]:
    """Eigensolve several operators, at most ``OS_PORTRAIT_WORKERS`` at a time; order preserved."""
    ops = list(ops)
    workers = min(worker_count(), max(1, len(ops)))
    if workers == 1:
        return [compute_spectrum(op, want_vectors) for op in ops]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda op: compute_spectrum(op, want_vectors), ops))

"""End-to-end polyconvexification: lattice, lift, convexify, evaluate.

Four variants are available.  ``svpc-*`` works on signed singular values
lifted to ``R^3`` / ``R^7``; ``pc-*`` is the full-matrix baseline on a
lattice of matrix entries lifted to ``R^5`` / ``R^19``.  ``*-qh`` builds one
lower envelope by Quickhull and interpolates, ``*-lp`` solves one linear
program per query.
"""

from __future__ import annotations

import os
import time
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Union

import numpy as np
from joblib import Parallel, delayed

from .densities import DensityParams, get_density
from .exceptions import EmptyGraphError
from .hull import EnvelopeValue, build_lower_envelope
from .lattice import DEFAULT_CAP, LatticeSpec, SampledGraph, generate_lattice, sample_density
from .linalg import canonicalize, matrix_minors, minors_vector, signed_singular_values
from .lp import pointwise_envelope_lp

METHODS = ("svpc-qh", "svpc-lp", "pc-qh", "pc-lp")
THREADS_ENV = "POLYRELAX_THREADS"
DEFAULT_THRESHOLD = 1e-5


def worker_count(n_jobs=None) -> int:
    """Explicit ``n_jobs``, else ``$POLYRELAX_THREADS``, else the CPU count."""
    if n_jobs is not None:
        return max(1, int(n_jobs))
    env = os.environ.get(THREADS_ENV)
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise ValueError(f"{THREADS_ENV} must be an integer, got {env!r}") from None
    return os.cpu_count() or 1


def _check_method(method):
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}; choose from {', '.join(METHODS)}")
    return method.split("-")


def query_nu(query, d) -> np.ndarray:
    """Canonical signed singular values of a matrix or a ``nu`` query."""
    q = np.asarray(query, dtype=float)
    if not np.all(np.isfinite(q)):
        raise ValueError("query entries must be finite")
    if q.shape == (d, d):
        return signed_singular_values(q)
    if q.shape == (d,):
        return canonicalize(q)
    raise ValueError(f"query must have shape ({d},) or ({d}, {d}), got {q.shape}")


def lift_query(query, d, lifting) -> np.ndarray:
    """Lifted coordinates of a query for the given lifting."""
    q = np.asarray(query, dtype=float)
    if lifting == "svpc":
        return minors_vector(query_nu(q, d))
    query_nu(q, d)  # validates shape and finiteness
    F = q if q.ndim == 2 else np.diag(q)
    return matrix_minors(F)


@dataclass
class PipelineConfig:
    """One Algorithm run.  ``lattice.d`` is the density dimension; pc methods
    square it internally (a lattice already given in ``d**2`` is accepted too)."""

    method: str
    density: DensityParams
    lattice: LatticeSpec
    queries: list = field(default_factory=list)
    cap: int = DEFAULT_CAP
    n_jobs: Optional[int] = None

    def __post_init__(self):
        _check_method(self.method)
        d = self.density.d
        if self.lattice.d not in (d, d * d):
            raise ValueError(f"lattice dimension {self.lattice.d} does not fit density dimension {d}")
        if self.method.startswith("svpc") and self.lattice.d != d:
            raise ValueError("svpc methods need a lattice in the density dimension")

    @property
    def lifting(self) -> str:
        return self.method.split("-")[0]

    @property
    def backend(self) -> str:
        return self.method.split("-")[1]

    def lattice_spec(self) -> LatticeSpec:
        d = self.density.d
        if self.lifting == "pc" and self.lattice.d == d:
            return LatticeSpec(d * d, self.lattice.delta, self.lattice.radius)
        return self.lattice


@dataclass
class PipelineResult:
    values: list
    nus: np.ndarray
    timings: dict
    lattice_count: int
    retained: int

    @property
    def wall_seconds(self) -> float:
        return float(sum(self.timings.values()))

    def as_array(self) -> np.ndarray:
        return np.array([v.value for v in self.values])


def _lp_value(graph, x):
    sol = pointwise_envelope_lp(graph, x)
    if not sol.optimal:
        return EnvelopeValue(np.inf)
    idx = np.array(sorted(sol.weights), dtype=np.intp)
    w = np.array([sol.weights[i] for i in idx])
    return EnvelopeValue(sol.value, None, w, idx)


def _map(fn, items, workers):
    if workers <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    return Parallel(n_jobs=min(workers, len(items)), prefer="threads")(delayed(fn)(x) for x in items)


def run(config: PipelineConfig) -> PipelineResult:
    """Run the four Algorithm steps and evaluate every query."""
    d = config.density.d
    phi, _ = get_density(config.density)
    timings = {}
    t = time.perf_counter()
    lattice = generate_lattice(config.lattice_spec(), cap=config.cap)
    timings["lattice"] = time.perf_counter() - t

    nus = np.array([query_nu(q, d) for q in config.queries]).reshape(-1, d)
    lifted = [lift_query(q, d, config.lifting) for q in config.queries]

    t = time.perf_counter()
    try:
        graph = sample_density(lattice, phi, lifting=config.lifting)
    except EmptyGraphError:
        graph = None
    timings["lift"] = time.perf_counter() - t

    workers = worker_count(config.n_jobs)
    if graph is None:
        timings["convexify"] = timings["evaluate"] = 0.0
        values = [EnvelopeValue(np.inf) for _ in lifted]
        return PipelineResult(values, nus, timings, lattice.count, 0)

    t = time.perf_counter()
    env = build_lower_envelope(graph.lifted, graph.values) if config.backend == "qh" else None
    timings["convexify"] = time.perf_counter() - t

    t = time.perf_counter()
    if env is not None:
        values = _map(env.evaluate, lifted, workers)
    else:
        values = _map(lambda x: _lp_value(graph, x), lifted, workers)
    timings["evaluate"] = time.perf_counter() - t
    return PipelineResult(values, nus, timings, lattice.count, len(graph))


@dataclass
class ConvergenceRow:
    delta: float
    n_lattice: int
    value: float
    abs_error: float
    seconds: float


@dataclass
class ConvergenceTable:
    rows: list
    slope: Optional[float]

    @property
    def errors(self):
        return np.array([r.abs_error for r in self.rows])


def default_method(d) -> str:
    # the 8-dimensional hull of a 3-D lattice has too many facets to be practical
    return "svpc-qh" if d == 2 else "svpc-lp"


def loglog_slope(deltas, errors) -> Optional[float]:
    """Least-squares slope of ``log(error)`` against ``log(delta)`` over positive errors."""
    x = np.asarray(deltas, dtype=float)
    y = np.asarray(errors, dtype=float)
    ok = (y > 0) & np.isfinite(y)
    if np.count_nonzero(ok) < 2 or np.unique(x[ok]).size < 2:
        return None
    return float(np.polyfit(np.log(x[ok]), np.log(y[ok]), 1)[0])


def convergence_study(density: DensityParams, deltas: Sequence[float], radius: float, query,
                      method: Optional[str] = None, exact_pc: Optional[Callable] = None,
                      cap: int = DEFAULT_CAP) -> ConvergenceTable:
    """Envelope error at one query for a ladder of lattice spacings."""
    if exact_pc is None:
        exact_pc = get_density(density)[1]
    if exact_pc is None:
        raise ValueError(f"density {density.name!r} has no known exact envelope")
    method = method or default_method(density.d)
    rows = []
    for delta in deltas:
        cfg = PipelineConfig(method, density, LatticeSpec(density.d, float(delta), float(radius)),
                             [query], cap=cap, n_jobs=1)
        res = run(cfg)
        value = res.values[0].value
        exact = float(exact_pc(res.nus[0]))
        rows.append(ConvergenceRow(float(delta), res.lattice_count, value, abs(value - exact), res.wall_seconds))
    slope = loglog_slope([r.delta for r in rows], [r.abs_error for r in rows])
    return ConvergenceTable(rows, slope)


def envelope_gaps(graph: SampledGraph, env=None) -> np.ndarray:
    """``h_i - envelope(x_i)`` at every retained row; zero at support vertices."""
    if env is None:
        env = build_lower_envelope(graph.lifted, graph.values)
    gaps = np.zeros(len(graph))
    on_hull = np.zeros(len(graph), dtype=bool)
    on_hull[env.support_indices] = True
    for i in np.flatnonzero(~on_hull):
        gaps[i] = graph.values[i] - env.evaluate(graph.lifted[i]).value
    return gaps


def polyconvexity_indicator(density: Union[DensityParams, Callable], spec: LatticeSpec,
                            threshold: float = DEFAULT_THRESHOLD, cap: int = DEFAULT_CAP):
    """``(max_gap < threshold, max_gap)`` with ``max_gap = max |phi - envelope|`` over the lattice."""
    phi = get_density(density)[0] if isinstance(density, DensityParams) else density
    graph = sample_density(generate_lattice(spec, cap=cap), phi)
    gap = float(np.abs(envelope_gaps(graph)).max())
    return gap < threshold, gap


def hencky_probe(k, ell, spec: LatticeSpec, threshold=DEFAULT_THRESHOLD, mu=1.0, kappa=1.0):
    """Polyconvexity indicator of the 2-D Hencky density at one ``(k, ell)`` pair."""
    params = DensityParams("hencky", spec.d, mu=mu, kappa=kappa, k=k, ell=ell)
    return polyconvexity_indicator(params, spec, threshold)


def sweep(pairs, spec: LatticeSpec, threshold=DEFAULT_THRESHOLD, mu=1.0, kappa=1.0, n_jobs=None):
    """Run :func:`hencky_probe` for every ``(k, ell)``, one process per pair."""
    pairs = [(float(k), float(ell)) for k, ell in pairs]
    workers = min(worker_count(n_jobs), max(1, len(pairs)))
    if workers == 1:
        return [hencky_probe(k, ell, spec, threshold, mu, kappa) for k, ell in pairs]
    return Parallel(n_jobs=workers)(delayed(hencky_probe)(k, ell, spec, threshold, mu, kappa)
                                    for k, ell in pairs)


def lattice_count(d, delta, radius, lifting="svpc") -> int:
    dim = d if lifting == "svpc" else d * d
    return LatticeSpec(dim, delta, radius).count


__all__ = [
    "METHODS", "PipelineConfig", "PipelineResult", "run", "convergence_study", "ConvergenceTable",
    "ConvergenceRow", "polyconvexity_indicator", "envelope_gaps", "sweep", "hencky_probe",
    "loglog_slope", "worker_count", "query_nu", "lift_query", "default_method", "lattice_count",
]

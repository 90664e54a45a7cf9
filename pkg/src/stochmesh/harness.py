"""Study orchestration: sampling sweeps, the mesh pipeline and diagnostics.

The only parallel region is the sample-and-solve loop. Sample indices are
split into fixed-size chunks; each chunk is solved into a private
:class:`~stochmesh.moments.PointCloud` and the chunks are merged in
ascending order, so results do not depend on the number of workers.
"""

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
import logging
import time
from typing import NamedTuple

import numpy as np

from ._validation import check_positive_int
from .discretize import assemble_second_derivative
from .exceptions import NonlinearSolverError, SampleFailureError, SingularOperatorError
from .mesh import MeshMapping, SamplingConfig, apply_mapping, max_gap, sample_sorted_mesh, uniform_mesh
from .moments import DEFAULT_BINS, PointCloud, average_variance, finalize_moments
from .qbuild import QCriterion, build_q
from .solvers import exact_error

logger = logging.getLogger(__name__)

CHUNK_SIZE = 250
MAX_FAILURE_RATE = 0.01
DEFAULT_EVAL_NS = (10, 20, 40, 80, 160)
DEFAULT_MAPPINGS = ("uniform", "computed")


# -- sampling ---------------------------------------------------------------

def _solve_range(problem, sampling, start, stop, n_bins, retain_points):
    cloud = PointCloud(n_bins, retain_points=retain_points)
    failures = []
    for idx in range(start, stop):
        mesh = sample_sorted_mesh(sampling, idx)
        try:
            sol = problem.solve(mesh)
        except (NonlinearSolverError, SingularOperatorError) as exc:
            failures.append((idx, str(exc)))
            continue
        cloud.accumulate(sol)
    return cloud, failures


def _chunk_bounds(m, chunk_size, extra_cuts=()):
    cuts = set(range(0, m, chunk_size)) | {c for c in extra_cuts if 0 < c < m} | {m}
    cuts = sorted(cuts)
    if cuts[0] != 0:
        cuts.insert(0, 0)
    return list(zip(cuts[:-1], cuts[1:]))


def _run_chunks(problem, sampling, bounds, n_bins, retain_points, workers):
    if workers <= 1 or len(bounds) == 1:
        return [_solve_range(problem, sampling, a, b, n_bins, retain_points) for a, b in bounds]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        futures = [pool.submit(_solve_range, problem, sampling, a, b, n_bins, retain_points)
                   for a, b in bounds]
        return [f.result() for f in futures]


def _check_failures(failures, attempted, max_failure_rate):
    for idx, msg in failures:
        logger.warning("dropped sample %d: %s", idx, msg)
    if attempted and len(failures) > max_failure_rate * attempted:
        raise SampleFailureError(
            f"{len(failures)} of {attempted} sampled solves failed "
            f"(limit {max_failure_rate:.1%})")


def sample_cloud(problem, sampling, n_bins=DEFAULT_BINS, retain_points=False, workers=1,
                 chunk_size=CHUNK_SIZE, max_failure_rate=MAX_FAILURE_RATE):
    """Solve ``problem`` on all ``sampling.m`` random meshes and pool the values.

    Returns ``(cloud, failures)`` where ``failures`` lists ``(index, message)``
    for dropped samples.

    Raises
    ------
    SampleFailureError
        If more than ``max_failure_rate`` of the solves fail.
    """
    bounds = _chunk_bounds(sampling.m, chunk_size)
    parts = _run_chunks(problem, sampling, bounds, n_bins, retain_points, workers)
    cloud = PointCloud(n_bins, retain_points=retain_points)
    failures = []
    for part, fails in parts:
        cloud = cloud.merge(part)
        failures.extend(fails)
    _check_failures(failures, sampling.m, max_failure_rate)
    return cloud, failures


# -- pipeline ---------------------------------------------------------------

@dataclass(frozen=True)
class StudyConfig:
    """Everything needed to run :func:`run_pipeline`.

    ``mappings`` holds mapping ids: ``"uniform"``, ``"computed"`` (the
    mapping built from the sampled moments) or ``"power:<exponent>"``.
    """

    problem: object
    sampling: SamplingConfig
    criterion: QCriterion = field(default_factory=QCriterion)
    eval_ns: tuple = DEFAULT_EVAL_NS
    mappings: tuple = DEFAULT_MAPPINGS
    norm: str = "max"
    n_bins: int = DEFAULT_BINS

    def __post_init__(self):
        ns = tuple(check_positive_int(n, "eval_ns entry") for n in self.eval_ns)
        if not ns or any(b <= a for a, b in zip(ns, ns[1:])):
            raise ValueError("eval_ns must be a non-empty strictly increasing sequence")
        object.__setattr__(self, "eval_ns", ns)
        object.__setattr__(self, "mappings", tuple(self.mappings))
        for mid in self.mappings:
            _parse_mapping_id(mid)
        if self.norm not in ("max", "rms"):
            raise ValueError(f"norm must be 'max' or 'rms', got {self.norm!r}")
        check_positive_int(self.n_bins, "n_bins")


@dataclass(frozen=True)
class StudyRecord:
    mapping_id: str
    n: int
    error_max: float
    error_rms: float
    runtime_ms: float = field(default=float("nan"), compare=False)
    norm: str = "max"

    @property
    def error(self):
        return self.error_max if self.norm == "max" else self.error_rms


class PipelineResult(NamedTuple):
    moments: object
    mapping: MeshMapping
    records: list
    cloud: PointCloud
    failures: list
    stage_seconds: dict


def _parse_mapping_id(mapping_id):
    if mapping_id in ("uniform", "identity", "computed"):
        return mapping_id, None
    if mapping_id.startswith("power:"):
        try:
            exponent = float(mapping_id.split(":", 1)[1])
        except ValueError:
            raise ValueError(f"bad power mapping id {mapping_id!r}") from None
        if exponent <= 0:
            raise ValueError(f"bad power mapping id {mapping_id!r}")
        return "power", exponent
    raise ValueError(f"unknown mapping id {mapping_id!r}")


def resolve_mapping(mapping_id, computed=None):
    kind, exponent = _parse_mapping_id(mapping_id)
    if kind in ("uniform", "identity"):
        return MeshMapping.identity()
    if kind == "power":
        return MeshMapping.power(exponent)
    if computed is None:
        raise ValueError("the computed mapping is not available")
    return computed


def evaluate_mapping(problem, mapping, ns, mapping_id=None, norm="max"):
    """Solve on ``Q(uniform_mesh(n))`` for each ``n`` and record the errors."""
    mapping_id = mapping_id or mapping.label
    records = []
    for n in ns:
        t0 = time.perf_counter()
        sol = problem.solve(apply_mapping(mapping, uniform_mesh(n)))
        elapsed = 1e3 * (time.perf_counter() - t0)
        records.append(StudyRecord(mapping_id, n, exact_error(problem, sol, "max"),
                                   exact_error(problem, sol, "rms"), elapsed, norm))
    return records


def run_pipeline(cfg, workers=1, retain_points=False):
    """Sample, pool moments, build the mapping and run the convergence study.

    Returns a :class:`PipelineResult`. Solver failures on the sparse
    meshes are dropped (and logged) up to the 1% limit; a failure while
    solving on an evaluation mesh propagates.
    """
    stages = {}
    t0 = time.perf_counter()
    cloud, failures = sample_cloud(cfg.problem, cfg.sampling, cfg.n_bins,
                                   retain_points=retain_points, workers=workers)
    stages["sampling"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    field_ = finalize_moments(cloud)
    mapping = build_q(field_, cfg.criterion)
    stages["mapping"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    records = []
    for mid in cfg.mappings:
        q = resolve_mapping(mid, mapping)
        records.extend(evaluate_mapping(cfg.problem, q, cfg.eval_ns, mid, cfg.norm))
    stages["evaluation"] = time.perf_counter() - t0
    return PipelineResult(field_, mapping, records, cloud, failures, stages)


# -- diagnostics ------------------------------------------------------------

def inverse_spectrum_magnitudes(mesh):
    """Sorted magnitudes of the eigenvalues of the inverse second-difference operator."""
    ev = assemble_second_derivative(mesh).eigenvalues()
    return np.sort(1.0 / np.abs(ev))


def spectral_diagnostic(sampling, ns):
    """Extreme eigenvalue magnitudes of ``A^{-1}`` over random meshes.

    For every ``n`` in ``ns``, ``sampling.m`` meshes are drawn. Returns a
    list of row dicts with keys ``n, min_mag, max_mag, uniform_min_mag,
    uniform_max_mag``.
    """
    rows = []
    for n in ns:
        n = check_positive_int(n, "n")
        if n > 256:
            raise ValueError("spectral diagnostic is limited to n <= 256")
        cfg = replace(sampling, n=n)
        lo, hi = np.inf, 0.0
        for idx in range(cfg.m):
            mags = inverse_spectrum_magnitudes(sample_sorted_mesh(cfg, idx))
            lo = min(lo, mags[0])
            hi = max(hi, mags[-1])
        ref = inverse_spectrum_magnitudes(uniform_mesh(n))
        rows.append(dict(n=n, min_mag=float(lo), max_mag=float(hi),
                         uniform_min_mag=float(ref[0]), uniform_max_mag=float(ref[-1])))
    return rows


def gap_samples(sampling, n, samples):
    cfg = SamplingConfig(samples, n, sampling.master_seed)
    return np.array([max_gap(sample_sorted_mesh(cfg, i)) for i in range(samples)])


def gap_diagnostic(sampling, ns, samples_per_n=1000):
    """Distribution of the largest step of random meshes, per ``n``.

    Rows carry ``n, median_max_gap, p90_max_gap, mean_max_gap, uniform_gap``.
    """
    samples_per_n = check_positive_int(samples_per_n, "samples_per_n")
    rows = []
    for n in ns:
        n = check_positive_int(n, "n")
        g = gap_samples(sampling, n, samples_per_n)
        rows.append(dict(n=n, median_max_gap=float(np.median(g)),
                         p90_max_gap=float(np.quantile(g, 0.9)),
                         mean_max_gap=float(g.mean()), uniform_gap=1.0 / (n + 1)))
    return rows


class VbarSweep(NamedTuple):
    rows: list
    needed_m: dict


def samples_needed(ms, rel_errors, tol):
    """Smallest ``m`` from which every larger tested ``m`` stays within ``tol``.

    Returns ``None`` when even the largest tested ``m`` misses ``tol``.
    """
    needed = None
    for m, err in sorted(zip(ms, rel_errors), reverse=True):
        if err > tol:
            break
        needed = m
    return needed


def vbar_sweep(problem, ms, ns, reference_m=3000, master_seed=0, n_bins=DEFAULT_BINS,
               workers=1, tol=1e-3):
    """Average variance ``vbar(m, n)`` and its error relative to ``vbar(reference_m, n)``.

    Estimates for different ``m`` are nested: ``vbar(m, n)`` uses sample
    indices ``0 .. m-1`` of the same stream as the reference. Rows hold
    ``m, n, vbar, rel_error_vs_reference``; ``needed_m[n]`` is the smallest
    tested ``m`` whose relative error, and that of every larger tested
    ``m``, is at most ``tol`` (``None`` if no such ``m``).
    """
    ms = sorted({check_positive_int(m, "m") for m in ms})
    reference_m = check_positive_int(reference_m, "reference_m")
    if ms and ms[-1] > reference_m:
        raise ValueError("reference_m must be at least max(ms)")
    rows, needed = [], {}
    for n in ns:
        sampling = SamplingConfig(reference_m, n, master_seed)
        bounds = _chunk_bounds(reference_m, CHUNK_SIZE, ms)
        parts = _run_chunks(problem, sampling, bounds, n_bins, False, workers)
        cloud = PointCloud(n_bins)
        failures = []
        snap = {}
        for (a, b), (part, fails) in zip(bounds, parts):
            cloud = cloud.merge(part)
            failures.extend(fails)
            if b in ms or b == reference_m:
                snap[b] = average_variance(finalize_moments(cloud), b).vbar
        _check_failures(failures, reference_m, MAX_FAILURE_RATE)
        ref = snap[reference_m]
        errs = []
        for m in ms:
            err = abs(snap[m] - ref) / ref if ref > 0 else abs(snap[m] - ref)
            errs.append(err)
            rows.append(dict(m=m, n=n, vbar=snap[m], rel_error_vs_reference=err))
        needed[n] = samples_needed(ms, errs, tol)
    return VbarSweep(rows, needed)

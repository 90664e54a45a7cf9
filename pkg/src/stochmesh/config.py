"""TOML experiment configuration.

A config file has up to five tables::

    [problem]    kind = "singular" | "hamilton-jacobi" | "oscillatory" | "poisson-generic"
                 plus that problem's parameters; hamilton-jacobi also
                 accepts a [problem.bfgs] sub-table
    [sampling]   m, n, master_seed, distribution
    [criterion]  kind, smoothing_window, epsilon_floor,
                 derivative_power, variance_power
    [study]      eval_ns, mappings, norm, n_bins, density_u_bins
    [diag]       ns, spectra_m, samples_per_n, ms, reference_m, tol

Every key is optional except ``problem.kind`` and ``sampling.m`` /
``sampling.n`` (required by ``study``). Unknown tables and keys are
errors.
"""

from dataclasses import dataclass, field, fields

try:
    import tomllib
except ModuleNotFoundError:   # Python < 3.11
    import tomli as tomllib

from .harness import DEFAULT_EVAL_NS, DEFAULT_MAPPINGS, StudyConfig
from .mesh import SamplingConfig
from .moments import DEFAULT_BINS
from .qbuild import QCriterion
from .solvers import BFGSOptions, make_problem

PROBLEM_KEYS = {
    "poisson-generic": {"forcing", "left", "right"},
    "singular": {"alpha", "beta"},
    "hamilton-jacobi": {"hamiltonian_scale", "bfgs"},
    "oscillatory": {"frequency", "a"},
}
SAMPLING_KEYS = {"m", "n", "master_seed", "distribution"}
CRITERION_KEYS = {f.name for f in fields(QCriterion)}
STUDY_KEYS = {"eval_ns", "mappings", "norm", "n_bins", "density_u_bins"}
DIAG_KEYS = {"ns", "spectra_m", "samples_per_n", "ms", "reference_m", "tol"}
BFGS_KEYS = {f.name for f in fields(BFGSOptions)}
TABLES = {"problem", "sampling", "criterion", "study", "diag"}

DIAG_DEFAULT_NS = {"spectra": (8, 16, 32, 64), "gaps": (8, 16, 32, 64), "vbar": (5, 10, 20)}


class ConfigError(ValueError):
    """The configuration file is missing, malformed or invalid."""


@dataclass(frozen=True)
class DiagSettings:
    ns: tuple = None
    spectra_m: int = 12000
    samples_per_n: int = 1000
    ms: tuple = (100, 200, 500, 1000, 2000, 3000)
    reference_m: int = 3000
    tol: float = 1e-3

    def ns_for(self, kind):
        return tuple(self.ns) if self.ns is not None else DIAG_DEFAULT_NS[kind]


@dataclass
class RunConfig:
    raw: dict
    problem: object = None
    sampling: SamplingConfig = None
    criterion: QCriterion = field(default_factory=QCriterion)
    study: dict = field(default_factory=dict)
    diag: DiagSettings = field(default_factory=DiagSettings)

    @property
    def master_seed(self):
        return self.raw.get("sampling", {}).get("master_seed", 0)

    def study_config(self):
        if self.problem is None:
            raise ConfigError("study needs a [problem] table")
        if self.sampling is None:
            raise ConfigError("study needs [sampling] m and n")
        st = dict(self.study)
        st.pop("density_u_bins", None)
        try:
            return StudyConfig(problem=self.problem, sampling=self.sampling,
                               criterion=self.criterion, **st)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"[study]: {exc}") from None

    @property
    def density_u_bins(self):
        return int(self.study.get("density_u_bins", 0))


def _check_keys(table, allowed, where):
    if not isinstance(table, dict):
        raise ConfigError(f"{where} must be a table")
    unknown = sorted(set(table) - set(allowed))
    if unknown:
        raise ConfigError(f"unknown key(s) in {where}: {', '.join(unknown)}")


def _build(where, builder, **kwargs):
    try:
        return builder(**kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{where}: {exc}") from None


def parse_config(raw, seed=None):
    """Validate a parsed TOML document and build the run objects.

    ``seed`` overrides ``sampling.master_seed``.
    """
    _check_keys(raw, TABLES, "config")
    raw = {k: dict(v) if isinstance(v, dict) else v for k, v in raw.items()}
    if seed is not None:
        raw.setdefault("sampling", {})["master_seed"] = seed
    cfg = RunConfig(raw=raw)

    if "problem" in raw:
        prob = dict(raw["problem"])
        _check_keys(prob, {"kind"} | set().union(*PROBLEM_KEYS.values()), "[problem]")
        kind = prob.pop("kind", None)
        if kind not in PROBLEM_KEYS:
            raise ConfigError(f"[problem] kind must be one of {sorted(PROBLEM_KEYS)}, got {kind!r}")
        _check_keys(prob, PROBLEM_KEYS[kind], f"[problem] for kind {kind!r}")
        if "bfgs" in prob:
            bfgs = prob.pop("bfgs")
            _check_keys(bfgs, BFGS_KEYS, "[problem.bfgs]")
            prob["options"] = _build("[problem.bfgs]", BFGSOptions, **bfgs)
        if kind == "poisson-generic" and not isinstance(prob.get("forcing", 0.0), (int, float)):
            raise ConfigError("[problem] forcing must be a number")
        cfg.problem = _build("[problem]", make_problem, kind=kind, **prob)

    samp = raw.get("sampling", {})
    _check_keys(samp, SAMPLING_KEYS, "[sampling]")
    if "m" in samp or "n" in samp:
        cfg.sampling = _build("[sampling]", SamplingConfig, **samp)

    crit = raw.get("criterion", {})
    _check_keys(crit, CRITERION_KEYS, "[criterion]")
    cfg.criterion = _build("[criterion]", QCriterion, **crit)

    study = raw.get("study", {})
    _check_keys(study, STUDY_KEYS, "[study]")
    study.setdefault("eval_ns", list(DEFAULT_EVAL_NS))
    study.setdefault("mappings", list(DEFAULT_MAPPINGS))
    study.setdefault("n_bins", DEFAULT_BINS)
    dub = study.get("density_u_bins", 0)
    if not isinstance(dub, int) or isinstance(dub, bool) or dub < 0:
        raise ConfigError("[study] density_u_bins must be a non-negative integer")
    cfg.study = study

    diag = raw.get("diag", {})
    _check_keys(diag, DIAG_KEYS, "[diag]")
    for key in ("ns", "ms"):
        if key in diag:
            if not isinstance(diag[key], list) or not diag[key]:
                raise ConfigError(f"[diag] {key} must be a non-empty list")
            diag[key] = tuple(diag[key])
    cfg.diag = _build("[diag]", DiagSettings, **diag)
    return cfg


def load_config(path, seed=None):
    """Read and validate a TOML config file; raises :class:`ConfigError`."""
    try:
        with open(path, "rb") as fh:
            raw = tomllib.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror or exc}") from None
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"malformed config {path}: {exc}") from None
    return parse_config(raw, seed=seed)

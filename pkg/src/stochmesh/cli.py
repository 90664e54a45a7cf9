"""Command-line interface.

    stochmesh study --config run.toml --out results/
    stochmesh diag spectra|gaps|vbar --config run.toml --out results/

Exit codes: 0 success, 2 usage or configuration error, 3 numerical failure.
"""

import argparse
from dataclasses import replace
import json
import logging
import os
import platform
import sys
import time
from datetime import datetime, timezone

import numpy as np

from . import __version__
from .config import ConfigError, load_config
from .exceptions import StochMeshError
from .harness import gap_diagnostic, run_pipeline, spectral_diagnostic, vbar_sweep
from .mesh import SamplingConfig
from .moments import average_variance, density_grid

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3

CONVERGENCE_HEADER = ("mapping", "n", "error_max", "error_rms", "runtime_ms")
SPECTRA_HEADER = ("n", "min_mag", "max_mag", "uniform_min_mag", "uniform_max_mag")
GAPS_HEADER = ("n", "median_max_gap", "p90_max_gap", "uniform_gap")
VBAR_HEADER = ("m", "n", "vbar", "rel_error_vs_reference")

log = logging.getLogger("stochmesh")


def fmt(value):
    """Round-trip text for a CSV cell: 17 significant digits for floats."""
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return str(int(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".17g")
    return str(value)


def write_csv(path, header, rows):
    with open(path, "w", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(fmt(v) for v in row) + "\n")


def _now():
    return datetime.now(timezone.utc).isoformat()


def _write_manifest(path, manifest):
    with open(path, "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True, default=str)
        fh.write("\n")


def _base_manifest(cfg, command, threads):
    # the seed goes into the manifest before any sampling starts
    return {
        "tool": "stochmesh",
        "version": __version__,
        "command": command,
        "config": cfg.raw,
        "master_seed": cfg.master_seed,
        "threads": threads,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "started": _now(),
    }


def cmd_study(cfg, out, threads=1, record_timings=False):
    study = cfg.study_config()
    manifest = _base_manifest(cfg, "study", threads)
    _write_manifest(os.path.join(out, "manifest.json"), manifest)

    u_bins = cfg.density_u_bins
    res = run_pipeline(study, workers=threads, retain_points=u_bins > 0)

    f = res.moments
    write_csv(os.path.join(out, "moments.csv"), ("x", "mu", "var", "count", "filled"),
              zip(f.grid, f.mu, f.var, f.count, f.filled))
    write_csv(os.path.join(out, "mapping.csv"), ("s", "q"), res.mapping.knots())
    write_csv(os.path.join(out, "convergence.csv"), CONVERGENCE_HEADER,
              ((r.mapping_id, r.n, r.error_max, r.error_rms,
                r.runtime_ms if record_timings else None) for r in res.records))
    if u_bins:
        dg = density_grid(res.cloud, u_bins)
        rows = []
        for i in range(dg.density.shape[0]):
            for j in range(dg.density.shape[1]):
                rows.append((dg.x_edges[i], dg.x_edges[i + 1], dg.u_edges[j],
                             dg.u_edges[j + 1], dg.density[i, j]))
        write_csv(os.path.join(out, "density.csv"),
                  ("x_lo", "x_hi", "u_lo", "u_hi", "density"), rows)

    manifest.update(
        finished=_now(),
        stage_seconds=res.stage_seconds,
        samples_dropped=len(res.failures),
        vbar=average_variance(f, res.cloud.n_solutions).vbar,
        record_runtime_ms=[{"mapping": r.mapping_id, "n": r.n, "runtime_ms": r.runtime_ms}
                           for r in res.records],
    )
    _write_manifest(os.path.join(out, "manifest.json"), manifest)
    return EXIT_OK


def cmd_diag(kind, cfg, out, threads=1):
    d = cfg.diag
    ns = d.ns_for(kind)
    seed = cfg.master_seed
    manifest = _base_manifest(cfg, f"diag {kind}", threads)
    t0 = time.perf_counter()
    if kind == "spectra":
        rows = spectral_diagnostic(SamplingConfig(d.spectra_m, ns[0], seed), ns)
        write_csv(os.path.join(out, "spectra.csv"), SPECTRA_HEADER,
                  ([r[k] for k in SPECTRA_HEADER] for r in rows))
    elif kind == "gaps":
        rows = gap_diagnostic(SamplingConfig(1, ns[0], seed), ns, d.samples_per_n)
        write_csv(os.path.join(out, "gaps.csv"), GAPS_HEADER,
                  ([r[k] for k in GAPS_HEADER] for r in rows))
    elif kind == "vbar":
        if cfg.problem is None:
            raise ConfigError("vbar diagnostic needs a [problem] table")
        n_bins = cfg.study.get("n_bins")
        sweep = vbar_sweep(cfg.problem, d.ms, ns, d.reference_m, seed, n_bins,
                           workers=threads, tol=d.tol)
        write_csv(os.path.join(out, "vbar.csv"), VBAR_HEADER,
                  ([r[k] for k in VBAR_HEADER] for r in sweep.rows))
        write_csv(os.path.join(out, "vbar_needed.csv"), ("n", "needed_m"),
                  sorted(sweep.needed_m.items()))
    else:
        raise ConfigError(f"unknown diagnostic {kind!r}")
    manifest.update(finished=_now(), stage_seconds={kind: time.perf_counter() - t0})
    _write_manifest(os.path.join(out, "manifest.json"), manifest)
    return EXIT_OK


def _seed(text):
    try:
        v = int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid seed {text!r}") from None
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


def _threads(text):
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid thread count {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError("thread count must be at least 1")
    return v


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, metavar="PATH", help="TOML config file")
    common.add_argument("--out", default=".", metavar="DIR", help="output directory")
    common.add_argument("--threads", type=_threads, default=os.cpu_count() or 1, metavar="N",
                        help="worker processes for sampling (default: CPU count)")
    common.add_argument("--seed", type=_seed, default=None, metavar="U64",
                        help="override sampling.master_seed")
    common.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")

    parser = argparse.ArgumentParser(prog="stochmesh",
                                     description="Non-uniform 1-D meshes from random-mesh statistics.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    study = sub.add_parser("study", parents=[common], help="run the full mesh pipeline")
    study.add_argument("--record-timings", action="store_true",
                       help="fill the runtime_ms column of convergence.csv "
                            "(makes the file run-dependent)")
    diag = sub.add_parser("diag", parents=[common], help="run a diagnostic sweep")
    diag.add_argument("kind", choices=("spectra", "gaps", "vbar"))
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        cfg = load_config(args.config, seed=args.seed)
        os.makedirs(args.out, exist_ok=True)
        if args.command == "study":
            return cmd_study(cfg, args.out, args.threads, args.record_timings)
        return cmd_diag(args.kind, cfg, args.out, args.threads)
    except ConfigError as exc:
        print(f"stochmesh: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except StochMeshError as exc:
        print(f"stochmesh: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"stochmesh: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())

"""Command line: ``bergman-lab <subcommand> [flags]``.

Verification subcommands exit 0 exactly when every pass/fail row passes.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from .. import functional as fn
from .. import spectra as sp
from ..gaf import configurations_to_csv
from . import experiments as ex
from .config import NORM_MODES, ExperimentConfig, parse_config_text

log = logging.getLogger("bergman_lab")


def _region(text):
    """``cx,cy,r`` or ``r`` (centred at 0)."""
    parts = [float(p) for p in text.split(",")]
    if len(parts) == 1:
        return 0j, parts[0]
    if len(parts) == 3:
        return complex(parts[0], parts[1]), parts[2]
    raise argparse.ArgumentTypeError("region must be 'r' or 'cx,cy,r'")


def _grid(text):
    try:
        a, b = text.lower().split("x")
        return int(a), int(b)
    except ValueError as exc:
        raise argparse.ArgumentTypeError("grid must look like 12x24") from exc


def _common(p):
    p.add_argument("--config", help="key = value configuration file; flags override it")
    p.add_argument("--seed", type=int, help="master seed")
    p.add_argument("--samples", type=int, help="number of GAF samples")
    p.add_argument("--degree", type=int, help="GAF truncation degree N")
    p.add_argument("--window", type=float, help="observation window radius r_cut")
    p.add_argument("--region", type=_region, help="region B as 'r' or 'cx,cy,r'")
    p.add_argument("--grid", type=_grid, help="quadrature grid on B, e.g. 12x24")
    p.add_argument("--norm-mode", choices=NORM_MODES, help="normalization constant")
    p.add_argument("--cache-dir", help="directory for cached GAF samples")
    p.add_argument("--out", help="write the report here instead of stdout")
    p.add_argument("--format", choices=("json", "csv"), help="report format")
    p.add_argument("-v", "--verbose", action="store_true")


def build_parser():
    parser = argparse.ArgumentParser(prog="bergman-lab", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_ in (
        ("sample-gaf", "sample GAF zero sets inside the window"),
        ("intensity", "first and second intensities against the Bergman kernel"),
        ("psi", "expectation of the regularized functional and its normalization"),
        ("conditional", "conditional L-ensemble against radial-spectrum oracles"),
        ("identities", "deterministic identities"),
        ("verify-all", "every suite"),
    ):
        _common(sub.add_parser(name, help=help_))
    p = sub.add_parser("det2", help="Carleman determinant of 1 +/- K1")
    p.add_argument("--sign", choices=("plus", "minus"), default="minus")
    p.add_argument("--k-max", type=int, default=10**6)
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--out")
    p = sub.add_parser("hole-prob", help="probability of no zero in |z| < r")
    p.add_argument("--r", type=float, required=True)
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--out")
    return parser


def config_from_args(args):
    cfg = ExperimentConfig(name=args.command)
    if args.config:
        cfg = parse_config_text(Path(args.config).read_text(), cfg)
    changes = {}
    for flag, key in (
        ("seed", "master_seed"), ("samples", "samples"), ("degree", "degree"), ("window", "window"),
        ("norm_mode", "norm_mode"), ("out", "out"), ("format", "format"), ("cache_dir", "cache_dir"),
    ):
        v = getattr(args, flag, None)
        if v is not None:
            changes[key] = v
    if getattr(args, "region", None) is not None:
        changes["region_center"], changes["region_radius"] = args.region
    if getattr(args, "grid", None) is not None:
        changes["grid_radial"], changes["grid_angular"] = args.grid
    if "samples" in changes:
        changes["conditional_samples"] = min(cfg.conditional_samples, changes["samples"])
    return cfg.replace(**changes)


def _emit(text, out):
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")


def _emit_report(rep, cfg):
    text = rep.to_csv() if cfg.format == "csv" else rep.to_json()
    _emit(text, cfg.out)
    for line in rep.summary_lines():
        print(line, file=sys.stderr)
    return 0 if rep.passed else 1


def _flat(d, fmt):
    if fmt == "json":
        return json.dumps(d, indent=2)
    return "key,value\n" + "".join(f"{k},{v!r}\n" for k, v in d.items())


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if getattr(args, "verbose", False) else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "det2":
            sign = -1 if args.sign == "minus" else 1
            res = sp.det2(sp.radial_eigenvalues("one_minus_s", args.k_max), sign)
            _emit(_flat(res.to_dict(), args.format), args.out)
            return 0
        if args.command == "hole-prob":
            _emit(_flat({"r": args.r, "hole_probability": sp.hole_probability_disc(args.r)}, args.format), args.out)
            return 0
        cfg = config_from_args(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    if args.command == "sample-gaf":
        configs = ex.load_or_sample(cfg.master_seed, cfg.samples, cfg.degree, cfg.window, cfg.cache_dir)
        if cfg.format == "csv":
            text = configurations_to_csv(configs)
        else:
            text = json.dumps({"config": cfg.to_dict(), "samples": [c.to_dict() for c in configs]})
        _emit(text, cfg.out)
        counts = np.array([len(c) for c in configs])
        print(f"{len(configs)} samples, mean zeros in window {counts.mean():.1f}", file=sys.stderr)
        return 0
    runners = {
        "intensity": ex.run_intensity_check,
        "psi": ex.run_psi_expectation,
        "conditional": ex.run_conditional_verification,
        "identities": ex.run_identity_suite,
        "verify-all": ex.run_verify_all,
    }
    return _emit_report(runners[args.command](cfg), cfg)


def psi_trace_csv(q, configuration, method="extrapolate"):
    """Gnuplot-friendly ``R, partial`` trace for one configuration."""
    return fn.psi_limit(q, configuration, method=method).to_csv()


if __name__ == "__main__":
    sys.exit(main())

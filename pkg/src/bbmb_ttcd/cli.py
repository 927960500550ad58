"""Two-grid and single-grid compact difference solvers for the periodic BBM-Burgers equation.

    bbmb-ttcd [--serial] [--out DIR] run --config FILE
    bbmb-ttcd converge --axis {time,space} --config FILE
    bbmb-ttcd invariant --config FILE
    bbmb-ttcd perturb --config FILE [--zeta-amp REAL]
    bbmb-ttcd presets

``--config`` also accepts the name of a bundled preset (see ``presets``).
On failure a single JSON object is written to stderr and the exit code is
nonzero (2 for configuration problems, 3 for solver failures).
"""

import argparse
import json
import sys
from importlib import resources

from . import experiments
from .config import load_config, parse_config
from .errors import ConfigError, SolverError


def preset_names():
    root = resources.files("bbmb_ttcd") / "presets"
    return sorted(p.name[:-4] for p in root.iterdir() if p.name.endswith(".ini"))


def read_config(name):
    """Load a config file, falling back to a bundled preset of that name."""
    try:
        return load_config(name)
    except FileNotFoundError:
        if name in preset_names():
            text = (resources.files("bbmb_ttcd") / "presets" / f"{name}.ini").read_text(encoding="utf-8")
            return parse_config(text)
        raise


def build_parser():
    parser = argparse.ArgumentParser(prog="bbmb-ttcd", description=__doc__.split("\n\n")[0])
    parser.add_argument("--serial", action="store_true", help="run one job at a time (for timing comparisons)")
    parser.add_argument("--out", metavar="DIR", help="output directory (overrides [output] dir)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="single run or configured sweep")
    p.add_argument("--config", required=True)

    p = sub.add_parser("converge", help="convergence ladder along one axis")
    p.add_argument("--axis", choices=("time", "space"), required=True)
    p.add_argument("--config", required=True)

    p = sub.add_parser("invariant", help="discrete energy along each run")
    p.add_argument("--config", required=True)

    p = sub.add_parser("perturb", help="response to a perturbed initial condition")
    p.add_argument("--config", required=True)
    p.add_argument("--zeta-amp", type=float, default=None)

    sub.add_parser("presets", help="list bundled presets")
    return parser


def _fail(kind, exc, code):
    payload = {"status": "error", "kind": kind, "type": type(exc).__name__, "message": str(exc)}
    context = getattr(exc, "context", None)
    if context:
        payload["context"] = {k: (v if isinstance(v, (int, float, str, bool)) or v is None else str(v))
                              for k, v in context.items()}
    print(json.dumps(payload, sort_keys=True), file=sys.stderr)
    return code


def main(argv=None):
    args = build_parser().parse_args(argv)
    if args.command == "presets":
        for name in preset_names():
            print(name)
        return 0
    try:
        cfg = read_config(args.config)
        if args.command == "run":
            report = experiments.run_experiment(cfg, args.out, args.serial)
        elif args.command == "converge":
            report = experiments.run_convergence(cfg, args.axis, args.out, args.serial)
        elif args.command == "invariant":
            report = experiments.run_invariant(cfg, args.out, args.serial)
        else:
            report = experiments.run_perturbation(cfg, args.zeta_amp, args.out, args.serial)
    except (ConfigError, ValueError) as exc:
        return _fail("config", exc, 2)
    except OSError as exc:
        return _fail("io", exc, 2)
    except SolverError as exc:
        return _fail("solver", exc, 3)
    for line in report.summary_lines():
        print(line)
    for path in report.files:
        print(f"wrote {path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())

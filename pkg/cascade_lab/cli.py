"""
cascade-lab command line.

Exit codes: 0 success, 1 invalid configuration or arguments, 2 a --check
gate failed, 3 the integrator underflowed its minimum step.
"""
import argparse
import csv
from dataclasses import asdict, replace
import json
import logging
from pathlib import Path
import sys
from typing import List, Optional

import numpy as np

from cascade_lab.core.errors import ConfigValidationError, DomainError, FitError, StepUnderflow
from cascade_lab.analysis.fits import blowup_rate_fit, last_decade, powerlaw_fit
from cascade_lab.analysis.observables import SpectrumSnapshot
from cascade_lab.scenarios.emit import write_summary
from cascade_lab.scenarios.runner import emit_result, run_scenario
from cascade_lab.scenarios.scenario import PIPELINES, find_scenario, load_scenario, parse_scenario, scenario_to_dict
from cascade_lab.scenarios.sweep import classification_sweep
from cascade_lab.systems.couplings import FamilyKind
from cascade_lab.systems.manifold import classify_motion

logger = logging.getLogger("CLI")

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_CHECK = 2
EXIT_UNDERFLOW = 3


def _add_common(p: argparse.ArgumentParser):
    p.add_argument("--config", help="scenario TOML file")
    p.add_argument("--out", help="output directory")
    p.add_argument("--check", action="store_true", help="exit 2 if any acceptance gate fails")
    p.add_argument("--seed", type=int, help="override the scenario seed")
    p.add_argument("--threads", type=int, default=1, help="worker threads (sweep)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cascade-lab",
                                     description="Resonant quartic systems: cascades, manifolds, closed forms")
    parser.add_argument("-v", "--verbose", action="store_true", help="log run milestones")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run a scenario and emit its tables")
    p.add_argument("scenario", nargs="?", help="scenario file or bundled scenario name")
    p.add_argument("--pipeline", choices=PIPELINES, help="override the scenario pipeline")
    _add_common(p)

    p = sub.add_parser("classify", help="classify manifold motion from (N, E, S)")
    p.add_argument("--family", choices=["Z", "Y"], required=True)
    p.add_argument("--s", type=float, required=True)
    p.add_argument("--N", type=float, required=True)
    p.add_argument("--E", type=float, required=True)
    p.add_argument("--S", type=float, required=True)
    _add_common(p)

    p = sub.add_parser("compare", help="full system against the closed-form cascade")
    p.add_argument("--scenario", help="scenario file or bundled scenario name")
    p.add_argument("--s", type=float, help="override s")
    p.add_argument("--L", type=int, help="override the truncation")
    _add_common(p)

    p = sub.add_parser("fit", help="fit an emitted spectrum or time series")
    p.add_argument("--spectra", help="spectra CSV (fits the last or --t snapshot)")
    p.add_argument("--t", type=float, help="snapshot time to fit")
    p.add_argument("--family", choices=[k.value for k in FamilyKind], default="Z")
    p.add_argument("--s", type=float, default=2.0)
    p.add_argument("--mu", type=float, help="log(xc/x) for geometric compensation")
    p.add_argument("--n-min", type=int, default=32)
    p.add_argument("--n-max", type=int, default=200)
    p.add_argument("--corrections", type=int, default=0)
    p.add_argument("--timeseries", help="time-series CSV")
    p.add_argument("--column", default="H^1")
    p.add_argument("--T", type=float, help="blow-up time")
    p.add_argument("--kind", choices=["power", "log"], default="power")
    _add_common(p)

    p = sub.add_parser("sweep", help="classification table over (E, S)")
    p.add_argument("--s", type=float, default=2.0)
    p.add_argument("--N", type=float, default=2.0)
    p.add_argument("--grid", type=int, default=50)
    _add_common(p)
    return parser


def _load(args, name: Optional[str]):
    source = args.config or name
    if source is None:
        raise ConfigValidationError("config", "no scenario given (positional name or --config)")
    cfg = load_scenario(find_scenario(source))
    if args.seed is not None:
        cfg = replace(cfg, seed=args.seed)
    return cfg


def _finish(result, args) -> int:
    out_dir = Path(args.out) if args.out else Path("out") / result.config.name
    emit_result(result, out_dir)
    summary = result.summary
    print(f"{result.config.name}: {result.config.pipeline} pipeline, stop={summary.get('stop_reason')}, "
          f"classification={summary.get('classification')}")
    for key in ("T_estimate", "gamma", "max_deviation"):
        if summary.get(key) is not None:
            print(f"  {key} = {summary[key]:.10g}")
    for xi, rate in summary.get("sobolev_exponents", {}).items():
        print(f"  H^{xi} rate = {rate:.6g}")
    failed = [name for name, ok in result.checks.items() if not ok]
    for name in failed:
        print(f"  check failed: {name}")
    print(f"  outputs in {out_dir}")
    if result.record.stop_reason == "step_underflow":
        return EXIT_UNDERFLOW
    if args.check and failed:
        return EXIT_CHECK
    return EXIT_OK


def cmd_run(args) -> int:
    cfg = _load(args, args.scenario)
    return _finish(run_scenario(cfg, pipeline=args.pipeline), args)


def cmd_classify(args) -> int:
    motion = classify_motion(args.family, args.N, args.E, args.S, args.s)
    print(motion.kind)
    details = {k: v for k, v in motion.details.items() if k != "intervals"}
    if details:
        print(json.dumps(details, sort_keys=True, default=float))
    return EXIT_OK


def cmd_compare(args) -> int:
    cfg = _load(args, args.scenario)
    data = scenario_to_dict(cfg)
    if args.s is not None:
        data["s"] = args.s
    if args.L is not None:
        data["L"] = args.L
    data["pipeline"] = "compare"
    cfg = parse_scenario(data)
    return _finish(run_scenario(cfg), args)


def _read_csv(path) -> List[dict]:
    with open(path, newline="") as f:
        return list(csv.DictReader(f))


def cmd_fit(args) -> int:
    if bool(args.spectra) == bool(args.timeseries):
        raise ConfigValidationError("fit", "give exactly one of --spectra and --timeseries")
    if args.spectra:
        rows = _read_csv(args.spectra)
        times = sorted({float(r["t"]) for r in rows})
        t = times[-1] if args.t is None else min(times, key=lambda v: abs(v - args.t))
        chosen = sorted((int(r["n"]), float(r["modsq"])) for r in rows if float(r["t"]) == t)
        snap = SpectrumSnapshot(t=t, modsq=np.array([v for _, v in chosen]), family=args.family, s=args.s,
                                mu=args.mu)
        fit = powerlaw_fit(snap, n_min=args.n_min, n_max=args.n_max, corrections=args.corrections)
    else:
        if args.T is None:
            raise ConfigValidationError("T", "rate fits need --T")
        rows = _read_csv(args.timeseries)
        if not rows or args.column not in rows[0]:
            raise ConfigValidationError("column", f"no column {args.column!r} in {args.timeseries}")
        times = np.array([float(r["t"]) for r in rows])
        values = np.array([float(r[args.column]) for r in rows])
        before = times < args.T
        times, values = times[before], values[before]
        mask = last_decade(args.T - times) if times.size else before[:0]
        fit = blowup_rate_fit(times[mask], values[mask], args.T, kind=args.kind)
    print(json.dumps(asdict(fit), sort_keys=True))
    if args.out:
        Path(args.out).mkdir(parents=True, exist_ok=True)
        write_summary(asdict(fit), Path(args.out) / "fit.json")
    return EXIT_OK


def cmd_sweep(args) -> int:
    result = classification_sweep(s=args.s, N=args.N, n_E=args.grid, n_S=args.grid, threads=args.threads)
    components = result.cascade_components()
    mismatches = result.sign_mismatches()
    print(f"sweep s={args.s:g} N={args.N:g}: {result.counts()}")
    print(f"  cascade components = {components}, V(Fc) sign mismatches = {mismatches}")
    if args.out:
        out_dir = Path(args.out)
        out_dir.mkdir(parents=True, exist_ok=True)
        rows = result.rows()
        with open(out_dir / "classification.csv", "w", newline="") as f:
            writer = csv.DictWriter(f, fieldnames=list(rows[0].keys()))
            writer.writeheader()
            writer.writerows(rows)
        print(f"  table written to {out_dir / 'classification.csv'}")
    if args.check and (components != 1 or mismatches != 0):
        return EXIT_CHECK
    return EXIT_OK


COMMANDS = {
    "run": cmd_run,
    "classify": cmd_classify,
    "compare": cmd_compare,
    "fit": cmd_fit,
    "sweep": cmd_sweep,
}


def run_cli(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (ConfigValidationError, DomainError, FitError) as e:
        logger.error(f"{args.command}: {e}")
        print(f"Error: {e}", file=sys.stderr)
        return EXIT_INVALID
    except StepUnderflow as e:
        print(f"Error: {e}", file=sys.stderr)
        return EXIT_UNDERFLOW
    except Exception as e:
        print(f"Critical Error: {e}", file=sys.stderr)
        return EXIT_INVALID


def main():
    sys.exit(run_cli())


if __name__ == "__main__":
    main()

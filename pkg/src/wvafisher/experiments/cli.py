"""Command line entry point.

Exit codes: 0 success, 2 configuration error, 3 numerical diagnostic failure
(Poisson tail mass above the configured budget).
"""

from __future__ import annotations

import argparse
import json
import sys
from contextlib import contextmanager
from pathlib import Path

from wvafisher.beam import conventional
from wvafisher.estimators import Setup, benchmark
from wvafisher.experiments import config as cfgmod
from wvafisher.experiments.config import make_scheme
from wvafisher.experiments.presets import PRESETS, preset_dict
from wvafisher.experiments.runner import (
    find_optimal_aw,
    render_profiles,
    run_aw_scan,
    run_effect_matrix,
    run_fi_sweep,
)
from wvafisher.fisher import ConfigError, fisher_total

EXIT_CONFIG = 2
EXIT_NUMERIC = 3

COMMANDS = ("fi-sweep", "aw-scan", "optimal-aw", "effect-matrix", "profiles", "estimate")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="wvafisher", description=__doc__.splitlines()[0])
    p.add_argument("--dump-preset", metavar="NAME", help="print a preset configuration and exit")
    p.add_argument("--list-presets", action="store_true")
    sub = p.add_subparsers(dest="command")
    for name in COMMANDS:
        s = sub.add_parser(name)
        src = s.add_mutually_exclusive_group()
        src.add_argument("--config", metavar="PATH")
        src.add_argument("--preset", metavar="NAME", choices=sorted(PRESETS))
        s.add_argument("--out", metavar="PATH", help="output file (default: config output.csv or stdout)")
        s.add_argument("--seed", type=int)
        s.add_argument("--threads", type=int, default=1)
        s.add_argument("--json", action="store_true", help="emit JSON records instead of CSV")
        if name == "optimal-aw":
            s.add_argument("--tol", type=float, default=1e-3)
        if name == "estimate":
            s.add_argument("--frames", type=int)
            s.add_argument("--estimator", choices=("MLE", "CoM"))
    return p


def _load(args) -> cfgmod.ExperimentConfig:
    if args.config:
        raw = json.loads(Path(args.config).read_text(encoding="utf-8")) if Path(args.config).exists() else None
        if raw is None:
            raise ConfigError(f"config file {args.config} not found")
    elif args.preset:
        raw = preset_dict(args.preset)
    else:
        raise ConfigError("give --config PATH or --preset NAME")
    if args.seed is not None:
        raw["seed"] = args.seed
    return cfgmod.from_dict(raw)


@contextmanager
def _output(path):
    if path is None:
        yield sys.stdout
    else:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            yield fh


def _run(args) -> int:
    try:
        conf = _load(args)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    out_path = args.out or conf.csv
    threads = max(1, args.threads)
    tail_bad = False
    cmd = args.command

    if cmd == "fi-sweep":
        result = run_fi_sweep(conf, threads)
        tail_bad = result.max_tail_mass() > conf.policy.tail_epsilon
    elif cmd == "aw-scan":
        result = run_aw_scan(conf, threads)
        tail_bad = result.max_tail_mass() > conf.policy.tail_epsilon
        if result.argmax:
            print(f"argmax A_w = {result.argmax[0]:.17g}, FI = {result.argmax[1]:.17g}", file=sys.stderr)
    elif cmd == "optimal-aw":
        opt = find_optimal_aw(conf, tol=args.tol)
        text = (
            json.dumps({"A_w": opt.A_w, "fi": opt.fi, "flag": opt.flag})
            if args.json
            else f"A_w,fi,flag\n{opt.A_w:.17g},{opt.fi:.17g},{opt.flag}\n"
        )
        with _output(out_path) as fh:
            fh.write(text)
        return 0
    elif cmd == "effect-matrix":
        result = run_effect_matrix(conf, threads)
        print(result.render(), file=sys.stderr)
    elif cmd == "profiles":
        result = render_profiles(conf)
    elif cmd == "estimate":
        spec = conf.raw.get("estimate", {})
        nb = float(spec.get("n_bar", 2000.0))
        scheme = make_scheme(spec["scheme"]) if "scheme" in spec else conventional()
        setup = Setup(conf.beam_at(nb), scheme, conf.grid, conf.detector_for(nb), conf.policy)
        fr = fisher_total(*setup)
        tail_bad = not fr.tail_ok(conf.policy)
        half = spec.get("interval_halfwidth")
        result = benchmark(
            args.estimator or spec.get("estimator", "MLE"),
            setup,
            args.frames or spec.get("n_frames", 1000),
            conf.seed,
            interval=(-half, half) if half else None,
        )
    else:
        raise ConfigError(f"unknown command {cmd}")

    with _output(out_path) as fh:
        fh.write(result.to_json() + "\n" if args.json else result.to_csv())
    if tail_bad:
        print("numerical diagnostic failure: Poisson tail mass above budget", file=sys.stderr)
        return EXIT_NUMERIC
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.list_presets:
        print("\n".join(sorted(PRESETS)))
        return 0
    if args.dump_preset:
        try:
            print(json.dumps(preset_dict(args.dump_preset), indent=2, sort_keys=True))
        except KeyError as exc:
            print(exc.args[0], file=sys.stderr)
            return EXIT_CONFIG
        return 0
    if args.command is None:
        parser.print_help(sys.stderr)
        return EXIT_CONFIG
    try:
        return _run(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())

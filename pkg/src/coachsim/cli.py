"""Command-line entry point: run a preset or a config file and write CSV tables."""

from __future__ import annotations

import argparse
import csv
import io
import os
import sys
from typing import Sequence

from . import __version__
from .churn_sim import SimError, run_experiment, run_opt_compare
from .greepair import RepairError
from .presets import PRESETS, ConfigError, ExperimentPreset, load_experiment, with_overrides

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_IO = 3
EXIT_INTERNAL = 4

BASE_COLUMNS = [
    "preset", "code_family", "n", "k", "m", "d", "dv", "dc", "delta", "rho_d2d", "rho_bs",
    "tau_mean", "tau_ci95", "phi_mean", "phi_ci95", "gamma_mean", "gamma_ci95", "gamma_theory",
    "lost_nodes_mean", "starved_windows",
]
OPT_COLUMNS = BASE_COLUMNS + [
    "symbols_per_node", "greepair_tau", "greepair_phi", "greepair_gamma", "opt1_tau", "opt1_phi",
    "opt2_gamma", "opt1_tau_improvement_pct", "opt1_phi_improvement_pct", "improvement_pct",
]


class _ArgError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with status 2 on its own; route errors through our codes
    def error(self, message):
        raise _ArgError(message)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="coachsim", description="Simulate node repair cost in coded caching cells.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--preset", help="one of: " + ", ".join(PRESETS))
    src.add_argument("--config", help="INI experiment file")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--seed", type=int, help="root RNG seed (default: preset seed)")
    p.add_argument("--trials", type=int, help="trials per point, overriding every series")
    p.add_argument("--format", choices=["csv"], default="csv")
    return p


def _cell(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


def render_csv(preset: str, rows: Sequence[dict], columns: Sequence[str]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        full = {"preset": preset, **row}
        w.writerow([_cell(full[c]) for c in columns])
    return buf.getvalue()


def run_preset(preset: ExperimentPreset) -> tuple[str, str]:
    """Run ``preset``; returns (file name, CSV text)."""
    configs = preset.configs()
    if preset.kind == "opt-compare":
        rows, columns = run_opt_compare(configs), OPT_COLUMNS
    else:
        rows, columns = run_experiment(configs), BASE_COLUMNS
    return f"{preset.name}.csv", render_csv(preset.name, rows, columns)


def main(argv: Sequence[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    if argv[:1] == ["run"]:
        argv = argv[1:]  # `coachsim run --preset ...` reads the same as `coachsim --preset ...`
    try:
        args = build_parser().parse_args(argv)
    except _ArgError as exc:
        print(f"coachsim: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    try:
        if args.preset is not None:
            if args.preset not in PRESETS:
                raise ConfigError(f"unknown preset {args.preset!r}; choose from {', '.join(PRESETS)}")
            preset = PRESETS[args.preset]
        else:
            preset = load_experiment(args.config)
        preset = with_overrides(preset, args.trials, args.seed)
    except OSError as exc:
        print(f"coachsim: cannot read config: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"coachsim: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    try:
        os.makedirs(args.out, exist_ok=True)
        if not os.access(args.out, os.W_OK):
            raise PermissionError(f"output directory {args.out!r} is not writable")
    except OSError as exc:
        print(f"coachsim: {exc}", file=sys.stderr)
        return EXIT_IO

    try:
        name, text = run_preset(preset)
    except (SimError, RepairError, AssertionError) as exc:
        print(f"coachsim: internal check failed: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    except ValueError as exc:
        print(f"coachsim: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    path = os.path.join(args.out, name)
    try:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        print(f"coachsim: cannot write {path}: {exc}", file=sys.stderr)
        return EXIT_IO
    print(path)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())

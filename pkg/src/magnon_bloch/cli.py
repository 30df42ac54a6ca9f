"""Command-line entry point: ``magnon-bloch {evolve,spectrum,effective,symmetry,analyze}``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import workflows
from .config import PROFILES, ConfigError, RunConfig, load_config

COMMANDS = ("evolve", "spectrum", "effective", "symmetry", "analyze")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="magnon-bloch",
        description="Two-magnon Bloch oscillations in an XXZ chain with a gradient field.",
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, needs_config=True):
        p.add_argument("--config", type=Path, required=needs_config, help="TOML run configuration")
        p.add_argument("--out", type=Path, required=True, help="output directory")
        p.add_argument("--profile", choices=sorted(PROFILES), default="desk",
                       help="defaults for keys the config leaves out (default: desk)")
        p.add_argument("--propagator", choices=("spectral", "krylov"), help="override propagator.method")
        p.add_argument("--window", choices=("none", "hann"), help="override analysis.window")

    common(sub.add_parser("evolve", help="real-time dynamics: distribution, C, Gamma, fidelity, D^x"))
    common(sub.add_parser("spectrum", help="momentum-resolved spectrum on the periodic field-free chain"))
    common(sub.add_parser("effective", help="full dynamics against the effective bound-pair model"))
    p = sub.add_parser("symmetry", help="paired (Delta, B) / (-Delta, B) correlation check")
    common(p)
    p.add_argument("--variant", choices=("reflect", "flip-field"), default="reflect",
                   help="compare with (-Delta, B) reflected, or with (-Delta, -B) unreflected")
    p = sub.add_parser("analyze", help="DFT peaks and gradient estimate of a stored series")
    common(p, needs_config=False)
    p.add_argument("--input", type=Path, help="CSV time table (overrides analysis.input)")
    p.add_argument("--column", help="column to analyze (overrides analysis.column)")
    p.add_argument("--mode", choices=("auto", "fundamental", "doubled"), help="override analysis.mode")
    return parser


def _overrides(args) -> dict:
    out = {}
    if args.propagator:
        out["propagator"] = args.propagator
    if args.window:
        out["window"] = args.window
    return out


def _analyze(args, cfg: RunConfig | None) -> dict:
    input_path = args.input or (cfg.analysis_input if cfg else None)
    column = args.column or (cfg.analysis_column if cfg else None)
    if input_path is None or column is None:
        raise ConfigError("analyze needs an input table and a column (--input/--column or [analysis])")
    if cfg is not None and args.input is None and not Path(input_path).is_absolute():
        input_path = Path(cfg.source).parent / input_path
    window = args.window or (cfg.window if cfg else "none")
    mode = args.mode or (cfg.mode if cfg else "auto")
    frac = cfg.min_prominence_fraction if cfg else 0.05
    return workflows.run_analyze(cfg, args.out, Path(input_path), column, window, mode, frac)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = None
        if args.config is not None:
            cfg = load_config(args.config, args.profile, _overrides(args))
        if args.command == "evolve":
            result = workflows.run_evolve(cfg, args.out)
        elif args.command == "spectrum":
            result = workflows.run_spectrum(cfg, args.out)
        elif args.command == "effective":
            result = workflows.run_effective(cfg, args.out)
        elif args.command == "symmetry":
            result = workflows.run_symmetry(cfg, args.out, args.variant)
        else:
            result = _analyze(args, cfg)
    except (ConfigError, ValueError, OSError) as exc:
        print(f"magnon-bloch {args.command}: error: {exc}", file=sys.stderr)
        return 2
    json.dump(result, sys.stdout, indent=2, sort_keys=True, default=str)
    sys.stdout.write("\n")
    return 0


if __name__ == "__main__":
    sys.exit(main())

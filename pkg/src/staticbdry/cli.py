"""Command-line entry point: ``staticbdry <command> [--example NAME ...] [--config FILE]``."""

from __future__ import annotations

import argparse
import inspect
import sys

from . import catalog
from .config import ConfigError, RunConfig, from_dict, read_document
from .report import COMMANDS, dumps, run

# CLI flag -> constructor keyword
_PARAM_FLAGS = {"n": "n", "m": "m", "lam": "lam", "V0": "V0", "vol": "vol", "r_inner": "r_inner",
                "fiber_flat": "fiber_flat"}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="staticbdry",
                                 description="Static potentials, boundary geometry and flux integrals.")
    ap.add_argument("command", choices=sorted(COMMANDS))
    ap.add_argument("--config", help="JSON run configuration")
    ap.add_argument("--example", choices=sorted(catalog.EXAMPLES))
    ap.add_argument("--n", type=int)
    ap.add_argument("--m", type=float)
    ap.add_argument("--lambda", dest="lam", type=float)
    ap.add_argument("--V0", type=float)
    ap.add_argument("--vol", type=float)
    ap.add_argument("--r-inner", dest="r_inner", type=float)
    ap.add_argument("--fiber-flat", dest="fiber_flat", action="store_true", default=None)
    ap.add_argument("--rmax", type=float, help="outer radius of flux scans")
    ap.add_argument("--out", help="CSV path for flux scans")
    ap.add_argument("--tol", type=float, help="static residual tolerance")
    ap.add_argument("--samples", type=int, help="interior sample count")
    return ap


def config_from_args(args) -> RunConfig:
    if args.config:
        if args.example:
            raise ConfigError("give either --config or --example, not both")
        cfg_doc = read_document(args.config)
    else:
        if not args.example:
            raise ConfigError("an --example or a --config file is required")
        ctor = catalog.EXAMPLES[args.example]
        accepted = set(inspect.signature(ctor).parameters)
        params = {}
        for flag, kw in _PARAM_FLAGS.items():
            val = getattr(args, flag)
            if val is None:
                continue
            if kw not in accepted:
                raise ConfigError(f"--{flag.replace('_', '-')} does not apply to {args.example}")
            params[kw] = val
        cfg_doc = {"metric": {"example": args.example, "params": params}}
    # flags override the document
    if args.rmax is not None:
        cfg_doc.setdefault("quadrature", {})["r_max"] = args.rmax
    if args.out is not None:
        cfg_doc.setdefault("output", {})["csv"] = args.out
    if args.tol is not None:
        cfg_doc["tolerance"] = args.tol
    if args.samples is not None:
        cfg_doc.setdefault("samples", {})["interior"] = args.samples
    return from_dict(cfg_doc)


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        cfg = None if args.command == "selftest" and not (args.config or args.example) else config_from_args(args)
    except ConfigError as exc:
        print(f"staticbdry: config error: {exc}", file=sys.stderr)
        return 2
    try:
        report, code = run(args.command, cfg)
    except (ValueError, ArithmeticError) as exc:
        print(f"staticbdry: {args.command} failed: {exc}", file=sys.stderr)
        return 1
    sys.stdout.write(dumps(report))
    return code


if __name__ == "__main__":
    sys.exit(main())

"""Command-line front end: sweep execution and LDPC code utilities.

Exit codes follow sysexits-style buckets: 0 on success, 2 for anything
wrong with the configuration or input files, 3 for failures during the
simulation itself. The default output directory comes from the PNRX_OUT
environment variable, falling back to ./results.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path
from typing import List, Optional

import numpy as np

from .ldpc import construct_regular, has_4_cycles, load_matrix, save_matrix
from .presets import PRESET_NAMES, build_preset, preset_config
from .simkit import PointResult, RunConfig, run_sweep

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_RUNTIME = 3

OUT_ENV_VAR = "PNRX_OUT"


class ConfigError(ValueError):
    """Anything wrong with flags, config files, or input artifacts."""


def parse_ebn0_grid(text: str) -> tuple:
    """Parse 'start:step:stop' (inclusive) or a comma-separated list."""
    try:
        if ":" in text:
            start, step, stop = (float(x) for x in text.split(":"))
            if step <= 0:
                raise ValueError("step must be > 0")
            if stop < start:
                raise ValueError("stop must be >= start")
            n = int(round((stop - start) / step))
            # guard against a non-integral span silently dropping the stop
            if abs(start + n * step - stop) > 1e-9:
                n = int((stop - start) / step)
            return tuple(round(start + i * step, 9) for i in range(n + 1))
        return tuple(float(x) for x in text.split(","))
    except ValueError as exc:
        raise ConfigError(f"bad --ebn0 grid {text!r}: {exc}") from None


def _resolve_out_dir(arg: Optional[str]) -> Path:
    if arg:
        return Path(arg)
    return Path(os.environ.get(OUT_ENV_VAR, "results"))


def _select_configs(args) -> List[RunConfig]:
    if args.config and args.preset:
        raise ConfigError("--config and --preset are mutually exclusive")
    if args.config:
        if args.variant:
            raise ConfigError("--variant applies to presets, not config files")
        try:
            with open(args.config) as fh:
                raw = json.load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from None
        raw.pop("config_hash", None)  # sidecars replay directly
        try:
            return [RunConfig.from_dict(raw)]
        except (ValueError, TypeError, KeyError) as exc:
            raise ConfigError(str(exc)) from None
    if args.preset:
        try:
            if args.variant:
                return [preset_config(args.preset, args.variant)]
            return list(build_preset(args.preset).values())
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
    raise ConfigError("one of --config or --preset is required")


def _apply_overrides(cfg: RunConfig, args) -> RunConfig:
    import dataclasses

    repl = {}
    if args.ebn0:
        repl["ebn0_grid"] = parse_ebn0_grid(args.ebn0)
    if args.seed is not None:
        repl["base_seed"] = args.seed
    return dataclasses.replace(cfg, **repl) if repl else cfg


def _point_line(cfg: RunConfig, pt: PointResult) -> str:
    return (
        f"{cfg.scenario}/{cfg.variant} {pt.ebn0_db:6.2f} dB  "
        f"ber={pt.ber:.3e} fer={pt.fer:.3e} frames={pt.frames} "
        f"frame_errors={pt.frame_errors} ({pt.wall_seconds:.1f}s)"
    )


def cmd_simulate(args) -> int:
    configs = _select_configs(args)
    configs = [_apply_overrides(c, args) for c in configs]
    out_dir = _resolve_out_dir(args.out)
    for cfg in configs:
        path = run_sweep(
            cfg,
            out_dir,
            on_point=lambda pt, c=cfg: print(_point_line(c, pt), flush=True),
            workers=args.workers,
        )
        print(f"wrote {path}")
    return EXIT_OK


def cmd_gencode(args) -> int:
    if args.n % 2:
        raise ConfigError("code length must be even for a (3,6) construction")
    code = construct_regular(args.n, 3, 6, rng=np.random.default_rng(args.seed))
    save_matrix(code, args.out)
    girth_note = "girth > 4" if not has_4_cycles(code) else "has 4-cycles"
    print(f"wrote {args.out}: n={code.n} checks={code.m} k={code.k} ({girth_note})")
    return EXIT_OK


def cmd_validate_code(args) -> int:
    try:
        code = load_matrix(args.path)
    except OSError as exc:
        raise ConfigError(f"cannot read {args.path}: {exc}") from None
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    cols = sorted({len(a) for a in code.var_adj})
    rows = sorted({len(a) for a in code.chk_adj})
    print(
        f"{args.path}: n={code.n} checks={code.m} rank={code.rank} k={code.k} "
        f"column weights {cols}, row weights {rows}"
    )
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pnrx",
        description="Phase-noise receiver benchmarks: BER sweeps and code tools.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run a BER/FER sweep")
    sim.add_argument("--config", help="JSON sweep configuration (strict keys)")
    sim.add_argument(
        "--preset", choices=PRESET_NAMES, help="named scenario with baked-in defaults"
    )
    sim.add_argument("--variant", help="single preset variant (default: all)")
    sim.add_argument(
        "--ebn0", help="grid override: start:step:stop (inclusive) or v1,v2,..."
    )
    sim.add_argument("--seed", type=int, help="base seed override")
    sim.add_argument("--out", help=f"output directory (default ${OUT_ENV_VAR} or results)")
    sim.add_argument(
        "--workers", type=int, default=1,
        help="process pool size across grid points (affects wall time only)",
    )
    sim.set_defaults(func=cmd_simulate)

    gen = sub.add_parser("gencode", help="construct a (3,6)-regular code, write alist")
    gen.add_argument("--n", type=int, required=True, help="code length")
    gen.add_argument("--seed", type=int, default=0, help="construction seed")
    gen.add_argument("--out", required=True, help="alist output path")
    gen.set_defaults(func=cmd_gencode)

    val = sub.add_parser("validate-code", help="parse and summarize an alist file")
    val.add_argument("path", help="alist file to check")
    val.set_defaults(func=cmd_validate_code)

    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except KeyboardInterrupt:
        return EXIT_RUNTIME
    except Exception as exc:  # noqa: BLE001 - last-resort runtime bucket
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())

"""Command line entry point: ``repagesim run|compare|sweep|plot``."""

from __future__ import annotations

import argparse
import dataclasses
import sys
from pathlib import Path
from typing import List, Optional, Sequence

from .engine import ConfigError, SimConfig, coerce_config_value, derive_seeds, make_config, read_config_file, simulate
from .metrics import compare_levels, emit_compare_csv, emit_csv, sweep_cheaters
from .plotting import FIGURES, PlotError, emit_plot_script, render_figure

DEFAULT_FRACTIONS = "0,0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9,1.0"

# seed is handled by the shared --seed flag
CONFIG_KEYS = [f.name for f in dataclasses.fields(SimConfig) if f.name != "seed"]

EXIT_CONFIG = 2
EXIT_IO = 1


def _add_config_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("simulation settings (override --config)")
    defaults = SimConfig()
    for key in CONFIG_KEYS:
        default = getattr(defaults, key)
        default = getattr(default, "value", default)
        g.add_argument(f"--{key.replace('_', '-')}", dest=key, metavar="V",
                       help=f"default {default}")
    p.add_argument("--config", metavar="FILE", help="flat key=value settings file")
    p.add_argument("--seed", help="master seed (default 0)")
    p.add_argument("--seeds", type=int, metavar="N",
                   help="run N seeds derived from the master seed")
    p.add_argument("--out", default=".", metavar="DIR", help="output directory")
    p.add_argument("--no-figures", action="store_true", help="write CSV only")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="repagesim", description=__doc__)
    sub = parser.add_subparsers(dest="verb", required=True)

    p = sub.add_parser("run", help="single scenario, per-turn CSV")
    _add_config_flags(p)
    p.add_argument("--dump-memory", type=int, action="append", default=[], metavar="BUYER",
                   help="write the final memory graph of this buyer")

    for verb, text in (("compare", "L1 against L2 on a shared seed set"),
                       ("sweep", "steady quality across cheater fractions")):
        p = sub.add_parser(verb, help=text)
        _add_config_flags(p)
        p.add_argument("--workers", type=int, default=1, help="parallel runs (default 1)")
        if verb == "sweep":
            p.add_argument("--fractions", default=DEFAULT_FRACTIONS,
                           help="comma separated cheater fractions")

    p = sub.add_parser("plot", help="emit a gnuplot script for a result CSV")
    p.add_argument("csv")
    p.add_argument("--kind", required=True, help=f"one of {', '.join(sorted(FIGURES))}")
    p.add_argument("--out", metavar="DIR", help="output directory (default: next to the CSV)")
    p.add_argument("--render", action="store_true", help="also render <kind>.png with matplotlib")
    return parser


def config_from_args(args) -> SimConfig:
    file_values = read_config_file(args.config) if args.config else {}
    overrides = {}
    for key in CONFIG_KEYS + ["seed"]:
        raw = getattr(args, key, None)
        if raw is not None:
            overrides[key] = coerce_config_value(key, raw)
    return make_config(file_values, **overrides)


def seeds_from_args(args, config: SimConfig) -> List[int]:
    if args.seeds is None:
        return [config.seed]
    if args.seeds < 1:
        raise ConfigError(f"--seeds must be >= 1, got {args.seeds}")
    return derive_seeds(config.seed, args.seeds)


def parse_fractions(text: str) -> List[float]:
    try:
        fractions = [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise ConfigError(f"--fractions: expected comma separated numbers, got {text!r}") from None
    bad = [f for f in fractions if not 0.0 <= f <= 1.0]
    if not fractions or bad:
        raise ConfigError(f"--fractions: values must lie in [0, 1], got {text!r}")
    return fractions


def _figures(csv_path: Path, kinds: Sequence[str], args) -> List[Path]:
    if args.no_figures:
        return []
    return [render_figure(csv_path, k, csv_path.with_name(f"{csv_path.stem}-{k}.png")) for k in kinds]


def cmd_run(args) -> List[Path]:
    config = config_from_args(args)
    seeds = seeds_from_args(args, config)
    for b in args.dump_memory:
        if not 0 <= b < config.n_buyers:
            raise ConfigError(f"--dump-memory {b}: buyer ids are 0..{config.n_buyers - 1}")
    out = Path(args.out)
    written = []
    for seed in seeds:
        stem = "run" if len(seeds) == 1 else f"run-{seed}"
        world, records, _ = simulate(config.replace(seed=seed))
        path = emit_csv(records, out / f"{stem}.csv")
        written.append(path)
        written += _figures(path, ("fig2", "fig3", "fig4"), args)
        for b in args.dump_memory:
            dump = out / f"{stem}-memory-{b}.txt"
            try:
                dump.write_text(world.buyer(b).memory.dump())
            except OSError as exc:
                raise OSError(f"cannot write {dump}: {exc.strerror or exc}") from exc
            written.append(dump)
    return written


def cmd_compare(args) -> List[Path]:
    config = config_from_args(args)
    results = compare_levels(config, seeds_from_args(args, config), workers=args.workers)
    path = emit_compare_csv(results, Path(args.out) / "compare.csv")
    return [path] + _figures(path, ("fig2", "fig3", "fig4"), args)


def cmd_sweep(args) -> List[Path]:
    config = config_from_args(args)
    fractions = parse_fractions(args.fractions)
    rows = sweep_cheaters(config, fractions, seeds_from_args(args, config), workers=args.workers)
    path = emit_csv(rows, Path(args.out) / "sweep.csv")
    return [path] + _figures(path, ("fig5",), args)


def cmd_plot(args) -> List[Path]:
    script = emit_plot_script(args.csv, args.kind, args.out)
    written = [script, script.with_suffix(".dat")]
    if args.render:
        written.append(render_figure(args.csv, args.kind, script.with_suffix(".png")))
    return written


COMMANDS = {"run": cmd_run, "compare": cmd_compare, "sweep": cmd_sweep, "plot": cmd_plot}


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "workers", 1) < 1:
        parser.error("--workers must be >= 1")
    try:
        written = COMMANDS[args.verb](args)
    except (ConfigError, PlotError) as exc:
        print(f"repagesim: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"repagesim: error: {exc}", file=sys.stderr)
        return EXIT_IO
    for path in written:
        print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())

"""Command line entry point: ``aoiq run <config>`` and ``aoiq trace <config>``."""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import harness
from .errors import AoIError, ConfigError
from .sim import simulate_trace

EXIT_OK, EXIT_CASE_FAILURE, EXIT_CONFIG = 0, 1, 2


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="aoiq", description="Age-of-information closed forms versus slotted simulation.")
    sub = p.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run an experiment file and write a results CSV")
    run.add_argument("config", help="YAML experiment file")
    run.add_argument("--out", help="results CSV (default: the file's 'output' key, else stdout)")
    run.add_argument("--seed", type=int, help="override the global seed")
    run.add_argument("--list-cases", action="store_true", help="print the expanded case names and exit")
    run.add_argument("--jobs", type=int, default=1, help="cases to run concurrently (default 1)")
    run.add_argument("--quiet", action="store_true", help="suppress the summary on stderr")

    tr = sub.add_parser("trace", help="export per-slot and per-packet CSVs for one case")
    tr.add_argument("config", help="YAML experiment file")
    tr.add_argument("--case", required=True, help="case name as printed by --list-cases")
    tr.add_argument("--slots", type=int, default=100, help="slots to simulate (default 100)")
    tr.add_argument("--seed", type=int, help="override the global seed")
    tr.add_argument("--out-dir", default=".", help="directory for slots.csv and packets.csv")
    return p


def _cmd_run(args) -> int:
    cfg = harness.load_config(args.config, args.seed)
    if args.list_cases:
        for case in cfg.cases:
            print(case.name)
        return EXIT_OK
    rows = harness.run_experiments(cfg, jobs=max(1, args.jobs))
    out = args.out or cfg.output
    if out:
        if not Path(out).is_absolute() and not args.out:
            out = Path(args.config).parent / out
        harness.emit_csv(rows, out)
    else:
        sys.stdout.write(harness.csv_text(rows))
    if not args.quiet:
        print(harness.emit_summary(rows), file=sys.stderr)
    return EXIT_OK if all(r.ok for r in rows) else EXIT_CASE_FAILURE


def _cmd_trace(args) -> int:
    cfg = harness.load_config(args.config, args.seed)
    by_name = {c.name: c for c in cfg.cases}
    if args.case not in by_name:
        raise ConfigError(f"no case named {args.case!r}", field="--case")
    if args.slots < 1:
        raise ConfigError("--slots must be positive", field="--slots")
    case = by_name[args.case]
    sim_cfg = harness.SimConfig(case.spec, args.slots, 0, case.seed, True, case.generation_lag)
    trace = simulate_trace(sim_cfg)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    trace.write_slot_csv(out / "slots.csv")
    trace.write_packet_csv(out / "packets.csv")
    print(f"wrote {out / 'slots.csv'} and {out / 'packets.csv'}", file=sys.stderr)
    return EXIT_OK


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        if args.command == "run":
            return _cmd_run(args)
        return _cmd_trace(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except FileNotFoundError as exc:
        print(f"config error: {exc.filename}: no such file", file=sys.stderr)
        return EXIT_CONFIG
    except AoIError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CASE_FAILURE
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CASE_FAILURE


if __name__ == "__main__":
    sys.exit(main())

"""Command line interface.

Exit codes: 0 all requested properties hold (or the run completed), 1 a
violation was found, 2 error or budget overrun.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import asdict
from pathlib import Path

from .harness import (SUITES, UNKNOWN, ConfigError, RunConfig, render_report, run_cell,
                      run_matrix)
from .lts import StateSpaceExceeded
from .scenario import OVERLAP_NAMES, overlap_example
from .threads import list_algorithms

log = logging.getLogger(__name__)

OK, VIOLATION, ERROR = 0, 1, 2


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="justcheck", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="count", default=0)
    sub = p.add_subparsers(dest="command", required=True)

    v = sub.add_parser("verify", help="check one algorithm under one memory model")
    v.add_argument("--algorithm", required=True)
    v.add_argument("--variant", default="base")
    v.add_argument("--threads", type=int)
    v.add_argument("--registers", default="atomic",
                   choices=["safe", "regular", "atomic", "blocking_a", "blocking_i", "blocking_s"])
    v.add_argument("--conc", default="T", choices=["T", "S", "I", "A"])
    v.add_argument("--property", default="all",
                   choices=["mutex", "deadlock", "starvation", "all"])
    v.add_argument("--witness", action="store_true", help="print the counterexample")
    v.add_argument("--max-states", type=int)
    v.add_argument("--timeout", type=float, help="seconds")
    v.add_argument("--format", default="text", choices=["text", "json"])

    m = sub.add_parser("matrix", help="run a suite of the verdict table")
    m.add_argument("--suite", choices=SUITES)
    m.add_argument("--config", type=Path, help="JSON document with suite, cells, jobs, timeout")
    m.add_argument("--jobs", type=int)
    m.add_argument("--timeout", type=float, help="per-cell seconds")
    m.add_argument("--out", type=Path)
    m.add_argument("--format", default=None, choices=["text", "json"])

    s = sub.add_parser("scenario", help="enumerate read outcomes of the overlap example")
    s.add_argument("--appendix-a", action="store_true", required=True,
                   help="the three-thread write/read overlap schedule")
    s.add_argument("--registers", default="atomic", choices=["safe", "regular", "atomic"])
    s.add_argument("--format", default="text", choices=["text", "json"])

    sub.add_parser("list", help="print the supported algorithms")
    return p


def _verify(args) -> int:
    props = ("mutex", "deadlock", "starvation") if args.property == "all" else (args.property,)
    cfg = RunConfig(args.algorithm, args.variant, args.threads, args.registers, args.conc,
                    props, max_states=args.max_states, timeout=args.timeout,
                    witness=args.witness or args.format == "json")
    cell = run_cell(cfg)
    if args.format == "json":
        print(json.dumps(asdict(cell), indent=2, default=str))
    else:
        print(f"{cfg.algorithm}/{cfg.variant} N={cfg.threads} registers={cfg.registers} "
              f"conc={cfg.conc}")
        for name in props:
            held = cell.properties.get(name)
            print(f"  {name}: {'?' if held is None else 'holds' if held else 'violated'}")
        if len(props) == 3:
            print(f"  verdict: {cell.verdict_letter}")
        print(f"  states: {cell.stats.get('states', '?')}")
        if cell.error:
            print(f"  error: {cell.error}")
        if args.witness and cell.witness:
            print(_render_witness(cell.witness), end="")
    if cell.error:
        return ERROR
    return VIOLATION if any(cell.properties.get(p) is False for p in props) else OK


def _render_witness(w: dict) -> str:
    lines = [f"witness ({w['property']}):"]
    steps = w.get("path", w.get("prefix", []))
    lines += [f"{k}: {a}" for k, a in enumerate(steps)]
    if "cycle" in w:
        lines.append("--- cycle ---")
        lines += [f"{len(steps) + k}: {a}" for k, a in enumerate(w["cycle"])]
    return "\n".join(lines) + "\n"


def _matrix(args) -> int:
    doc = json.loads(args.config.read_text()) if args.config else {}
    suite = args.suite or doc.get("suite")
    cells = doc.get("cells")
    if suite is None and cells is None:
        raise ConfigError("matrix needs --suite or a config file listing cells")
    jobs = args.jobs or doc.get("jobs", 1)
    timeout = args.timeout if args.timeout is not None else doc.get("timeout")
    if cells is not None and args.suite is None:
        rows = [(c["algorithm"], c.get("variant", "base"), c.get("threads")) for c in cells]
        rows = [(a, v, RunConfig(a, v, n).threads) for a, v, n in rows]
        report = run_matrix(rows, jobs, timeout)
    else:
        report = run_matrix(suite, jobs, timeout)
    fmt = args.format or ("json" if args.out and args.out.suffix == ".json" else "text")
    text = render_report(report, fmt)
    if args.out:
        args.out.write_text(text)
        if fmt == "json":
            print(render_report(report, "text"), end="")
    else:
        print(text, end="")
    return ERROR if any(c.verdict_letter == UNKNOWN for c in report.cells) else OK


def _scenario(args) -> int:
    outcomes = sorted(overlap_example(args.registers))
    if args.format == "json":
        print(json.dumps({"registers": args.registers, "names": list(OVERLAP_NAMES),
                          "outcomes": [list(o) for o in outcomes]}))
    else:
        print(f"registers={args.registers}: {len(outcomes)} outcomes of "
              f"({', '.join(OVERLAP_NAMES)})")
        for o in outcomes:
            print("  " + " ".join(map(str, o)))
    return OK


def _list(args) -> int:
    for name, variant, threads, title, table_n in list_algorithms():
        ns = ",".join(map(str, threads))
        ref = f"reference row N={table_n}" if table_n else "no reference row"
        print(f"{name:<16} {variant:<16} N∈{{{ns}}}  {title}  ({ref})")
    return OK


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    handler = {"verify": _verify, "matrix": _matrix, "scenario": _scenario, "list": _list}
    try:
        return handler[args.command](args)
    except (ConfigError, StateSpaceExceeded, KeyError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return ERROR


if __name__ == "__main__":
    sys.exit(main())

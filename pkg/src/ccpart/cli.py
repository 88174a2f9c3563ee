"""Command line: generate, solve, oracle, export-mps, bench.

Exit codes: 0 solved, 1 usage or I/O error, 2 proven infeasible, 3 limit hit.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Optional, Sequence

from . import cuts
from .bench import parse_configs, run_bench, to_csv, to_markdown
from .colgen import dump_pool
from .instance import Instance, InstanceFormatError, generate, read_instance, write_instance
from .model import build, write_mps
from .oracle import brute_force_partition
from .solve import EXIT_INFEASIBLE, EXIT_OK, EXIT_USAGE, MODELS, exit_code, solve


class UsageError(Exception):
    pass


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ccpart", description="Partition a graph into k connected parts of size >= alpha at minimum internal edge cost.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="cmd", required=True)

    g = sub.add_parser("generate", help="write a random connected instance")
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--m", type=int, required=True)
    g.add_argument("--k", type=int, required=True)
    g.add_argument("--alpha", type=int, required=True)
    g.add_argument("--cost-min", type=int, default=1)
    g.add_argument("--cost-max", type=int, default=10)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", required=True)

    s = sub.add_parser("solve", help="solve one instance")
    s.add_argument("file")
    s.add_argument("--model", choices=MODELS, default="m1")
    s.add_argument("--cuts", default="none", help="comma list of lc,spc,lset,ngh,sc,art,sep,lbc,clq (m1/m2) or cgc (colgen)")
    s.add_argument("--time-limit", type=float, default=3600.0)
    s.add_argument("--node-limit", type=int, default=None)
    s.add_argument("--lp", choices=("highs", "simplex"), default="highs", help="node LP engine for m1/m2")
    s.add_argument("--heuristic-only", action="store_true", help="colgen: skip exact pricing")
    s.add_argument("--subset", action="append", default=[], metavar="NODES:ELL",
                   help="colgen: subset row, e.g. 0,1,2,3:2 (repeatable)")
    s.add_argument("--pool-out", help="colgen: write the final column pool here")
    s.add_argument("--json", action="store_true")

    o = sub.add_parser("oracle", help="brute-force optimum (n <= 12)")
    o.add_argument("file")
    o.add_argument("--json", action="store_true")

    e = sub.add_parser("export-mps", help="write M1/M2 as MPS (plus a .names sidecar)")
    e.add_argument("file")
    e.add_argument("--model", choices=("m1", "m2"), default="m1")
    e.add_argument("--cuts", default="none")
    e.add_argument("--out", required=True)

    b = sub.add_parser("bench", help="run a suite and write CSV plus a markdown table")
    b.add_argument("--suite", required=True, help="directory of .inst files")
    b.add_argument("--configs", default="none;lbc", help="file with one cut list per line, or ';'-separated lists")
    b.add_argument("--models", default=",".join(MODELS))
    b.add_argument("--out", required=True)
    b.add_argument("--markdown", help="markdown path (default: OUT with .md suffix)")
    b.add_argument("--time-limit", type=float, default=60.0)
    b.add_argument("--node-limit", type=int, default=None)
    b.add_argument("--deterministic", action="store_true", help="omit wall times and ignore the time limit")
    b.add_argument("--jobs", type=int, default=1)
    return p


def _parse_subset(text: str) -> tuple[tuple[int, ...], int]:
    try:
        nodes, ell = text.rsplit(":", 1)
        return tuple(int(v) for v in nodes.split(",")), int(ell)
    except ValueError:
        raise UsageError(f"bad --subset {text!r}; expected NODES:ELL") from None


def cmd_generate(a) -> int:
    g = generate(a.n, a.m, a.cost_min, a.cost_max, a.seed)
    write_instance(Instance(g, a.k, a.alpha), a.out)
    return EXIT_OK


def cmd_solve(a) -> int:
    inst = read_instance(a.file)
    tags = cuts.parse_tags(a.cuts)
    subsets = [_parse_subset(t) for t in a.subset]
    if subsets and a.model != "colgen":
        raise UsageError("--subset only applies to colgen")
    out = solve(inst, a.model, tags, time_limit=a.time_limit, node_limit=a.node_limit,
                exact=not a.heuristic_only, subsets=subsets, lp_method=a.lp)
    if a.pool_out and a.model == "colgen" and out.detail is not None:
        Path(a.pool_out).write_text(dump_pool(out.detail.pool), encoding="utf-8")
    if a.json:
        print(json.dumps(out.to_json()))
    else:
        print(f"status {out.status}")
        if out.obj is not None:
            print(f"objective {out.obj:g}")
            for block in out.partition or []:
                print(" ".join(map(str, block)))
    return exit_code(out.status)


def cmd_oracle(a) -> int:
    inst = read_instance(a.file)
    res = brute_force_partition(inst)
    if a.json:
        print(json.dumps({"status": res.status, "obj": res.objective,
                          "partition": res.partition, "examined": res.examined}))
    elif res.status == "infeasible":
        print("infeasible")
    else:
        print(f"optimal {res.objective}")
        for block in res.partition:
            print(" ".join(map(str, block)))
    return EXIT_INFEASIBLE if res.status == "infeasible" else EXIT_OK


def cmd_export(a) -> int:
    inst = read_instance(a.file)
    m, ix = build(inst, a.model, check=False)
    tags = cuts.parse_tags(a.cuts)
    if "cgc" in tags:
        raise UsageError("cgc rows belong to colgen, which has no MPS export")
    m = cuts.apply_cuts(m, cuts.generate(inst, ix, a.model, tags))
    write_mps(m, a.out)
    return EXIT_OK


def cmd_bench(a) -> int:
    models = [m.strip() for m in a.models.split(",") if m.strip()]
    bad = [m for m in models if m not in MODELS]
    if bad:
        raise UsageError(f"unknown model(s) {bad}")
    rows = run_bench(a.suite, parse_configs(a.configs), models, a.time_limit, a.node_limit, a.deterministic, a.jobs)
    Path(a.out).write_text(to_csv(rows), encoding="utf-8")
    md = a.markdown or str(Path(a.out).with_suffix(".md"))
    Path(md).write_text(to_markdown(rows), encoding="utf-8")
    return EXIT_OK


COMMANDS = {"generate": cmd_generate, "solve": cmd_solve, "oracle": cmd_oracle,
            "export-mps": cmd_export, "bench": cmd_bench}


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = _parser()
    try:
        a = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_OK
    logging.basicConfig(level=logging.DEBUG if a.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[a.cmd](a)
    except (UsageError, InstanceFormatError, OSError, ValueError) as exc:
        print(f"ccpart: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())

"""Experiment harness: run every (instance, configuration, model) triple, emit CSV and markdown."""

from __future__ import annotations

import csv
import io
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

from . import cuts
from .instance import read_instance
from .solve import MODELS, solve, tags_for

CSV_FIELDS = ["instance", "n", "m", "alpha", "k", "model", "cuts", "lb", "obj", "gap", "nodes", "columns", "time_s", "status"]


@dataclass
class BenchRow:
    instance: str
    n: int
    m: int
    alpha: int
    k: int
    model: str
    cuts: str
    lb: Optional[float]
    obj: Optional[float]
    gap: Optional[float]
    nodes: Optional[int]
    columns: Optional[int]
    time_s: Optional[float]
    status: str


def parse_configs(text: str) -> list[list[str]]:
    """A file with one configuration per line, or an inline ``;``-separated list."""
    if os.path.isfile(text):
        with open(text, encoding="utf-8") as fh:
            lines = [ln.split("#", 1)[0].strip() for ln in fh]
    else:
        lines = [part.strip() for part in text.split(";")]
    configs = [cuts.parse_tags(ln) for ln in lines if ln]
    if not configs:
        raise ValueError("no configurations given")
    return configs


def suite_files(suite: str | os.PathLike) -> list[Path]:
    files = sorted(p for p in Path(suite).iterdir() if p.suffix == ".inst")
    if not files:
        raise FileNotFoundError(f"no .inst files in {suite}")
    return files


def _run(task) -> BenchRow:
    path, model, tags, time_limit, node_limit, deterministic = task
    inst = read_instance(path)
    out = solve(inst, model, tags, time_limit=time_limit, node_limit=node_limit)
    return BenchRow(
        Path(path).stem, inst.n, inst.graph.m, inst.alpha, inst.k, model, out.cuts,
        out.lb, out.obj, out.gap, out.nodes, out.columns,
        None if deterministic else out.time_s, out.status,
    )


def run_bench(
    suite: str | os.PathLike,
    configs: Sequence[Sequence[str]],
    models: Sequence[str] = MODELS,
    time_limit: float = 60.0,
    node_limit: Optional[int] = None,
    deterministic: bool = False,
    jobs: int = 1,
) -> list[BenchRow]:
    """One row per (instance, configuration, model); each model sees only the tags it accepts.

    ``deterministic`` drops wall times from the output and disables the time
    limit, so node limits are the only budget and reruns match byte for byte.
    """
    if deterministic:
        time_limit = math.inf
    tasks = [
        (str(path), model, tags_for(model, cfg), time_limit, node_limit, deterministic)
        for path in suite_files(suite)
        for cfg in configs
        for model in models
    ]
    if jobs <= 1:
        return [_run(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(_run, tasks))


def _num(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        if v == int(v) and abs(v) < 1e15:
            return str(int(v))
        return repr(v)  # shortest text that reads back to the same float
    return str(v)


def to_csv(rows: Sequence[BenchRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_FIELDS)
    for r in rows:
        w.writerow([_num(getattr(r, f)) for f in CSV_FIELDS])
    return buf.getvalue()


def _md_num(v, digits: int = 2) -> str:
    if v is None:
        return "---"
    if isinstance(v, float) and v != int(v):
        return f"{v:.{digits}f}"
    return str(int(v)) if isinstance(v, float) else str(v)


def to_markdown(rows: Sequence[BenchRow]) -> str:
    """Table in the column order Instance (n,|E|), (alpha,k), model, cuts, LB, Obj, Gap, nodes, columns, Time."""
    head = "| Instance (n,\\|E\\|) | (α,k) | Model | Cuts | LB | Obj | Gap | Nodes | Columns | Time |"
    out = [head, "|" + "---|" * 10]
    for r in rows:
        if r.status == "time-limit":
            t = "×"
        elif r.time_s is None:
            t = ""
        else:
            t = f"{r.time_s:.2f}"
        obj = "---" if r.obj is None else _md_num(r.obj)
        gap = "---" if r.gap is None else _md_num(r.gap)
        cells = [
            f"{r.instance} ({r.n},{r.m})", f"({r.alpha},{r.k})", r.model, r.cuts,
            _md_num(r.lb), obj, gap,
            "" if r.nodes is None else str(r.nodes),
            "" if r.columns is None else str(r.columns),
            t,
        ]
        out.append("| " + " | ".join(cells) + " |")
    return "\n".join(out) + "\n"

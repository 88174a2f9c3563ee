"""One entry point for the three solvers, returning flat result records."""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Optional, Sequence

from . import cuts
from .bnb import BnbConfig, bnb_solve
from .colgen import ColgenConfig, cg_loop
from .instance import Instance, precheck
from .model import InfeasibleInstanceError, build

MODELS = ("m1", "m2", "colgen")


@dataclass
class Outcome:
    model: str
    cuts: str
    lb: Optional[float]
    obj: Optional[float]
    gap: Optional[float]
    nodes: Optional[int]
    columns: Optional[int]
    time_s: float
    status: str
    partition: Optional[list] = None
    detail: object = None

    def to_json(self) -> dict:
        if self.model == "colgen":
            rep = self.detail.report.to_json() if self.detail is not None else {
                "lp_bound": None, "certified": False, "obj": None, "columns": 0, "iters": 0,
                "time_s": self.time_s, "status": self.status}
            return rep
        return {"lb": self.lb, "obj": self.obj, "gap": self.gap, "nodes": self.nodes,
                "time_s": self.time_s, "status": self.status}


def check_tags(model: str, tags: Sequence[str]) -> None:
    """cgc belongs to colgen only; every other family to the flow models only."""
    for t in tags:
        if model == "colgen" and t != "cgc":
            raise ValueError(f"cut family {t!r} is not defined for colgen")
        if model != "colgen" and t == "cgc":
            raise ValueError(f"cut family 'cgc' is only defined for colgen, not {model}")


def tags_for(model: str, tags: Sequence[str]) -> list[str]:
    """The part of a bench configuration that applies to ``model``."""
    return [t for t in tags if (t == "cgc") == (model == "colgen")]


def solve(
    inst: Instance,
    model: str,
    tags: Sequence[str] = (),
    time_limit: float = 3600.0,
    node_limit: Optional[int] = None,
    exact: bool = True,
    subsets: Sequence = (),
    lp_method: str = "highs",
) -> Outcome:
    if model not in MODELS:
        raise ValueError(f"unknown model {model!r}")
    tags = list(tags)
    check_tags(model, tags)
    label = ",".join(tags) or "none"
    start = time.perf_counter()

    def infeasible() -> Outcome:
        return Outcome(model, label, None, None, None, 0, 0 if model == "colgen" else None,
                       round(time.perf_counter() - start, 6), "infeasible")

    if precheck(inst).infeasible:
        return infeasible()
    if model == "colgen":
        cfg = ColgenConfig(exact=exact, cgc="cgc" in tags, subsets=tuple(subsets), time_limit=time_limit)
        res = cg_loop(inst, cfg)
        rep = res.report
        lb = rep.lp_bound if rep.certified else rep.heuristic_lp
        gap = None
        if rep.obj is not None and lb is not None:
            gap = max(0.0, 100.0 * (rep.obj - lb) / max(abs(rep.obj), 1e-9))
        return Outcome(model, label, lb, rep.obj, gap, None, rep.columns, rep.time_s, rep.status,
                       res.partition, res)
    m, ix = build(inst, model, check=False)
    try:
        m = cuts.apply_cuts(m, cuts.generate(inst, ix, model, tags))
    except InfeasibleInstanceError:
        return infeasible()
    cfg = BnbConfig(time_limit=time_limit, node_limit=node_limit, lp_method=lp_method)
    res = bnb_solve(m, ix, cfg)
    r = res.report
    partition = None
    if res.incumbent is not None:
        from .encoding import canonical, decode

        partition = canonical(b for b in decode(inst, ix, res.incumbent) if b)
    return Outcome(model, label, r.lb, r.obj, r.gap, r.nodes, None, r.time_s, r.status, partition, res)


EXIT_OK, EXIT_USAGE, EXIT_INFEASIBLE, EXIT_LIMIT = 0, 1, 2, 3


def exit_code(status: str) -> int:
    if status in ("optimal", "heuristic"):
        return EXIT_OK
    if status == "infeasible":
        return EXIT_INFEASIBLE
    return EXIT_LIMIT

"""Batch trials for cover uniqueness and order/cover equivalence."""
from __future__ import annotations

import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

from .arrangement import build_arrangement, check_invariants
from .errors import DeformationRejected, GenerationError
from .io import graph_to_dict
from .synth import SceneParams, crossing_swap, free_lanes, gen_random_scene
from .topology import check_lemma2, duplicate_covers

DEFAULT_MAGNITUDES = (0.002, 0.01, 0.02, 0.05, 0.1, 0.15)


@dataclass
class SceneOutcome:
    seed: int
    generated: bool = True
    n_cycles: int = 0
    partition_error: float = 0.0
    euler: int = 2
    duplicate_covers: list = field(default_factory=list)
    trials: list = field(default_factory=list)  # dicts: kind, magnitude, orders_same, ...
    rejected: int = 0
    graph: object = None  # kept only when something interesting happened


def _swap_pairs(g) -> list[tuple[int, int]]:
    fl = free_lanes(g)
    return [(fl[i], fl[i + 1]) for i in range(0, len(fl) - 1, 2)]


def run_scene(seed: int, magnitudes: Sequence[float] = DEFAULT_MAGNITUDES,
              swaps: bool = True, params: SceneParams | None = None) -> SceneOutcome:
    """Generate one scene, check its covers, then run deformation trials."""
    base = params or SceneParams()
    p = SceneParams(seed, base.min_lanes, base.max_lanes, base.curvature, base.connection_prob)
    out = SceneOutcome(seed)
    try:
        g = gen_random_scene(p)
    except GenerationError:
        out.generated = False
        return out
    arr = build_arrangement(g)
    inv = check_invariants(arr)
    out.n_cycles = len(arr.cycles)
    out.partition_error = inv["partition_error"]
    out.euler = inv["euler"]
    out.duplicate_covers = [sorted(c) for c in duplicate_covers(arr)]

    jobs: list[tuple[str, float | None, float | Callable, int]] = [
        ("deform", m, m, seed * 1000 + k) for k, m in enumerate(magnitudes)
    ]
    if swaps:
        for a, b in _swap_pairs(g):
            jobs.append(("swap", None, lambda h, s, a=a, b=b: crossing_swap(h, a, b), 0))
    keep = bool(out.duplicate_covers)
    for kind, mag, deformation, s in jobs:
        try:
            r = check_lemma2(g, deformation, s)
        except DeformationRejected:
            out.rejected += 1
            continue
        rec = {"kind": kind, "magnitude": mag, **r.to_dict()}
        if not r.consistent:
            keep = True
            rec["deformed"] = graph_to_dict(r.deformed)
        out.trials.append(rec)
    if keep:
        out.graph = graph_to_dict(g)
    return out


def _run_one(args):
    seed, magnitudes, swaps, params = args
    logging.disable(logging.WARNING)
    return run_scene(seed, magnitudes, swaps, params)


def run_suite(seeds: Iterable[int], magnitudes: Sequence[float] = DEFAULT_MAGNITUDES,
              swaps: bool = True, params: SceneParams | None = None,
              jobs: int | None = None) -> list[SceneOutcome]:
    """``run_scene`` over ``seeds`` with a process pool; results keep seed order."""
    tasks = [(s, tuple(magnitudes), swaps, params) for s in seeds]
    jobs = jobs or os.cpu_count() or 1
    if jobs == 1:
        return [run_scene(*t) for t in tasks]
    with ProcessPoolExecutor(max_workers=jobs) as ex:
        return list(ex.map(_run_one, tasks, chunksize=8))


def summarize(outcomes: Sequence[SceneOutcome]) -> dict:
    trials = [t for o in outcomes for t in o.trials]
    bad = [t for t in trials if not t["consistent"]]
    return {
        "scenes": sum(o.generated for o in outcomes),
        "generation_failures": [o.seed for o in outcomes if not o.generated],
        "lemma1_counterexamples": [
            {"seed": o.seed, "covers": o.duplicate_covers, "graph": o.graph}
            for o in outcomes if o.duplicate_covers
        ],
        "max_partition_error": max((o.partition_error for o in outcomes if o.generated), default=0.0),
        "euler_failures": [o.seed for o in outcomes if o.generated and o.euler != 2],
        "trials_accepted": len(trials),
        "trials_rejected": sum(o.rejected for o in outcomes),
        "trials_consistent": len(trials) - len(bad),
        "trials_cycles_match_orders": sum(t["cycles_same"] == t["orders_same"] for t in trials),
        "lemma2_counterexamples": [
            {"seed": o.seed, "graph": o.graph, **t}
            for o in outcomes for t in o.trials if not t["consistent"]
        ],
    }

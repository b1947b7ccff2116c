"""Topology structure T(C, I) and the cover/order equivalence checks."""
from __future__ import annotations

import logging
from collections import Counter
from dataclasses import dataclass
from typing import Callable, Iterable, Mapping

from .arrangement import Arrangement, MinimalCycle, build_arrangement, intersection_order_tokens
from .errors import AmbiguousCover, CoverNotFound, DeformationRejected, ParameterError
from .geometry import GEOM_TOL
from .lanegraph import LaneGraph
from .synth import deform, screen

log = logging.getLogger(__name__)

Token = tuple[int, ...]


@dataclass(frozen=True)
class Topology:
    """Curve ids plus, per curve, the vertex tokens in traffic direction.

    A token is the sorted tuple of the *other* curve ids meeting at a vertex.
    """

    curves: frozenset
    orders: Mapping[int, tuple[Token, ...]]

    @classmethod
    def from_arrangement(cls, arr: Arrangement) -> "Topology":
        ids = arr.graph.curve_ids
        return cls(frozenset(ids), {c: tuple(intersection_order_tokens(arr, c)) for c in ids})


@dataclass(frozen=True)
class CurveCorrespondence:
    """Bijection between the curve ids of two graphs."""

    mapping: Mapping[int, int]

    def __post_init__(self):
        m = dict(self.mapping)
        if len(set(m.values())) != len(m):
            raise ParameterError("correspondence is not injective")
        object.__setattr__(self, "mapping", m)

    @classmethod
    def identity(cls, g1: LaneGraph, g2: LaneGraph) -> "CurveCorrespondence":
        """Lanes by id, boundaries by side."""
        if set(g1.lane_ids) != set(g2.lane_ids):
            raise ParameterError("graphs have different lane id sets")
        m = {i: i for i in g1.lane_ids}
        m.update(zip(g1.boundary_ids, g2.boundary_ids))
        return cls(m)

    def __getitem__(self, cid: int) -> int:
        return self.mapping[cid]

    def inverse(self) -> "CurveCorrespondence":
        return CurveCorrespondence({v: k for k, v in self.mapping.items()})

    def compose(self, other: "CurveCorrespondence") -> "CurveCorrespondence":
        """``other`` after ``self``."""
        return CurveCorrespondence({k: other[v] for k, v in self.mapping.items()})

    def check_total(self, src: Iterable[int], dst: Iterable[int]) -> None:
        src, dst = set(src), set(dst)
        if set(self.mapping) != src or set(self.mapping.values()) != dst:
            raise ParameterError("correspondence is not total over the compared curve sets")

    def map_token(self, tok: Iterable[int]) -> Token:
        return tuple(sorted(self.mapping[c] for c in tok))


def orders_equal(t1: Topology, t2: Topology, corr: CurveCorrespondence) -> bool:
    """True iff every curve has the same mapped token sequence in both structures."""
    corr.check_total(t1.curves, t2.curves)
    for c in t1.curves:
        mapped = tuple(corr.map_token(tok) for tok in t1.orders[c])
        if mapped != tuple(t2.orders[corr[c]]):
            return False
    return True


def cover_sets_equal(c1: Iterable, c2: Iterable, corr: CurveCorrespondence) -> bool:
    """Multiset equality of covers after mapping the first list through ``corr``."""
    try:
        a = Counter(frozenset(corr[x] for x in cov) for cov in c1)
    except KeyError as e:
        raise ParameterError(f"curve {e.args[0]} missing from correspondence") from None
    return a == Counter(frozenset(cov) for cov in c2)


def duplicate_covers(arr: Arrangement) -> list[frozenset]:
    """Covers shared by two or more minimal cycles of ``arr``."""
    counts = Counter(c.cover for c in arr.cycles)
    return sorted((cov for cov, k in counts.items() if k > 1), key=sorted)


def cycle_from_cover(arr: Arrangement, cover: Iterable[int]) -> MinimalCycle:
    """The unique minimal cycle whose cover equals ``cover``.

    Raises:
        CoverNotFound: no cycle has this cover.
        AmbiguousCover: several do. On a validated graph this contradicts the
            uniqueness of covers and is logged as a counterexample.
    """
    key = frozenset(cover)
    hits = [c for c in arr.cycles if c.cover == key]
    if not hits:
        raise CoverNotFound(sorted(key))
    if len(hits) > 1:
        log.error("cover uniqueness counterexample: %d cycles share cover %s", len(hits), sorted(key))
        raise AmbiguousCover(f"{len(hits)} cycles share cover {sorted(key)}")
    return hits[0]


def cycle_signatures(arr: Arrangement, corr: CurveCorrespondence | None = None) -> Counter:
    """Multiset of minimal cycles described segment by segment.

    A cycle becomes the cyclic sequence of its boundary segments, each given
    as ``(curve, start vertex, end vertex)`` with vertices named by the set of
    curves meeting there (unique, since two curves meet at most once). The
    sequence is rotated to its smallest form. Unlike a cover, this keeps
    track of which side of a face each curve bounds.
    """
    m = (lambda c: c) if corr is None else corr.__getitem__
    names = [frozenset(m(c) for c in p.curve_ids) for p in arr.points]
    out: Counter = Counter()
    for cyc in arr.cycles:
        seq = []
        for sid, sense in cyc.boundary:
            s = arr.segments[sid]
            a, b = (s.from_pt, s.to_pt) if sense > 0 else (s.to_pt, s.from_pt)
            seq.append((m(s.curve), tuple(sorted(names[a])), tuple(sorted(names[b]))))
        out[min(tuple(seq[i:] + seq[:i]) for i in range(len(seq)))] += 1
    return out


@dataclass(frozen=True)
class Lemma2Report:
    """Outcome of one deformation trial.

    ``consistent`` compares order equality with cover equality;
    ``cycles_same`` is the segment-level cycle comparison.
    """

    orders_same: bool
    covers_same: bool
    deformed: LaneGraph
    cycles_same: bool | None = None

    @property
    def consistent(self) -> bool:
        return self.orders_same == self.covers_same

    def to_dict(self) -> dict:
        return {
            "orders_same": self.orders_same,
            "covers_same": self.covers_same,
            "consistent": self.consistent,
            "cycles_same": self.cycles_same,
        }


def compare_graphs(g1: LaneGraph, g2: LaneGraph, tol: float = GEOM_TOL,
                   corr: CurveCorrespondence | None = None) -> tuple[bool, bool, bool]:
    """``(orders_same, covers_same, cycles_same)`` for two valid graphs."""
    a1, a2 = build_arrangement(g1, tol), build_arrangement(g2, tol)
    corr = corr or CurveCorrespondence.identity(g1, g2)
    t1, t2 = Topology.from_arrangement(a1), Topology.from_arrangement(a2)
    return (
        orders_equal(t1, t2, corr),
        cover_sets_equal([c.cover for c in a1.cycles], [c.cover for c in a2.cycles], corr),
        cycle_signatures(a1, corr) == cycle_signatures(a2),
    )


def check_lemma2(
    g: LaneGraph,
    deformation: float | Callable[[LaneGraph, int], LaneGraph],
    seed: int = 0,
    tol: float = GEOM_TOL,
) -> Lemma2Report:
    """Deform ``g`` and test whether order equality and cover equality agree.

    ``deformation`` is either a magnitude for :func:`lanetopo.synth.deform`
    or a callable ``(graph, seed) -> graph``.

    Raises:
        DeformationRejected: the deformed graph is invalid or ill-conditioned.
    """
    if callable(deformation):
        h = deformation(g, seed)
        arr, issues = screen(h, tol)
        if arr is None:
            raise DeformationRejected("; ".join(issues))
    else:
        h = deform(g, float(deformation), seed, tol)
    orders_same, covers_same, cycles_same = compare_graphs(g, h, tol)
    if orders_same != covers_same:
        log.warning("order/cover disagreement (orders_same=%s) at seed %s", orders_same, seed)
    return Lemma2Report(orders_same, covers_same, h, cycles_same)

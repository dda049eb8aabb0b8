"""Dynamic residual-graph sparsifier: weight buckets over expander hierarchies.

Arcs are bucketed by the binary exponent of their approximate weight.  Each
bucket keeps a hierarchy of expander decompositions of its (undirected,
self-loop padded) image: level 0 is the whole bucket, level j+1 the arcs
crossing level j's clusters.  A query samples every level at a rate tuned so
that any cut whose out-weight is a beta-fraction of its boundary weight keeps
at least one sampled out-arc with high probability.

Hierarchies go stale as weights drift; a bucket is rebuilt once enough of its
arcs changed, and until then changed arcs are force-included in every sample,
which can only strengthen the guarantee.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InputError, InvariantViolation
from .expander import LoopedGraph, Partition, decompose
from .graph import DirectedMultigraph


def bucket_index(w: float) -> int:
    """Floor of log2(w) via exact binary exponent extraction."""
    if not (w > 0.0) or not math.isfinite(w):
        raise InputError(f"weight must be positive and finite, got {w}")
    mantissa, exponent = math.frexp(w)  # w = mantissa * 2**exponent, mantissa in [0.5, 1)
    return exponent - 1


@dataclass
class SparsifierConfig:
    phi: float = 0.1
    c: float = 3.0  # union-bound exponent; per-query failure ~ n^-(c-1)
    max_depth: int = 4
    rebuild_threshold: float = 0.1
    rng_seed: int = 0

    def quality(self, n: int) -> int:
        """Oversampling rate q = ceil(2 c t / phi * ln n)."""
        t_max = self.max_depth + 1
        return math.ceil(2.0 * self.c * t_max / self.phi * math.log(max(n, 2)))


@dataclass
class Level:
    """One hierarchy level: its arc set, partition, and intra-cluster arcs."""

    depth: int
    arc_ids: np.ndarray
    partition: Partition | None
    intra: np.ndarray
    residue: bool = False


@dataclass
class WeightBucket:
    index: int
    arcs: set[int] = field(default_factory=set)
    hierarchy: list[Level] = field(default_factory=list)
    dirty: bool = True
    dirty_arcs: set[int] = field(default_factory=set)


class SparsifierState:
    """Per-solve sparsifier bookkeeping over a fixed graph's arc ids."""

    def __init__(self, graph: DirectedMultigraph, config: SparsifierConfig):
        self.graph = graph
        self.config = config
        self.q = config.quality(graph.n)
        self.buckets: dict[int, WeightBucket] = {}
        self.arc_bucket: dict[int, int] = {}
        self.query_index = 0
        self.rebuild_count = 0
        self.query_stats: list[dict] = []
        # one row per decomposition level: the boundary-budget statistic
        self.rebuild_log: list[dict] = []

    # -- maintenance -------------------------------------------------------

    def insert_arc(self, arc_id: int, w: float) -> None:
        if arc_id in self.arc_bucket:
            raise InvariantViolation(f"arc {arc_id} inserted twice")
        idx = bucket_index(w)
        bucket = self.buckets.get(idx)
        if bucket is None:
            bucket = self.buckets[idx] = WeightBucket(index=idx)
        bucket.arcs.add(arc_id)
        bucket.dirty = True
        bucket.dirty_arcs.add(arc_id)
        self.arc_bucket[arc_id] = idx

    def delete_arc(self, arc_id: int) -> None:
        idx = self.arc_bucket.pop(arc_id, None)
        if idx is None:
            raise InvariantViolation(f"delete of arc {arc_id} not in the sparsifier")
        bucket = self.buckets[idx]
        bucket.arcs.discard(arc_id)
        bucket.dirty = True
        bucket.dirty_arcs.add(arc_id)

    def change_weight(self, arc_id: int, w: float) -> None:
        """A weight change is delete plus insert."""
        self.delete_arc(arc_id)
        self.insert_arc(arc_id, w)

    def bucket_of(self, arc_id: int) -> int | None:
        return self.arc_bucket.get(arc_id)

    # -- hierarchy ----------------------------------------------------------

    def rebuild_bucket(self, bucket: WeightBucket) -> None:
        """Recompute the bucket's level hierarchy from its current arc set."""
        if not bucket.dirty:
            raise InvariantViolation("rebuild of a clean bucket")
        g = self.graph
        n = g.n
        cfg = self.config
        levels: list[Level] = []
        current = np.asarray(sorted(bucket.arcs), dtype=np.int64)
        depth = 0
        while current.size and depth < cfg.max_depth:
            tails = g.tails[current].astype(np.int64)
            heads = g.heads[current].astype(np.int64)
            nonloop = tails != heads
            per_vertex = max(1, math.ceil(current.size / n))
            undirected = LoopedGraph(
                n=n,
                edges=np.column_stack([tails[nonloop], heads[nonloop]]),
                loops=np.full(n, per_vertex, dtype=np.int64),
            )
            loop_arcs = current[~nonloop]
            if loop_arcs.size:
                np.add.at(undirected.loops, tails[~nonloop], 1)
            partition = decompose(undirected, cfg.phi)
            crossing = np.zeros(current.size, dtype=bool)
            crossing[np.flatnonzero(nonloop)[partition.boundary]] = True
            intra = current[~crossing]
            levels.append(
                Level(depth=depth, arc_ids=current, partition=partition, intra=intra)
            )
            self.rebuild_log.append(
                {
                    "bucket": bucket.index,
                    "depth": depth,
                    "m": int(current.size),
                    "boundary": int(partition.boundary.size),
                    "phi": cfg.phi,
                    "slack": partition.slack,
                }
            )
            current = current[crossing]
            depth += 1
        if current.size:
            levels.append(
                Level(depth=depth, arc_ids=current, partition=None, intra=current,
                      residue=True)
            )
        bucket.hierarchy = levels
        bucket.dirty = False
        bucket.dirty_arcs.clear()
        self.rebuild_count += 1

    # -- queries -------------------------------------------------------------

    def sparsify(self, beta: float) -> np.ndarray:
        """Sampled arc ids covering every beta-unbalanced cut's out-arcs whp."""
        if beta < 1.0:
            raise InputError("beta must be at least 1")
        cfg = self.config
        rng = np.random.default_rng((cfg.rng_seed, self.query_index))
        self.query_index += 1
        n = self.graph.n
        out: list[np.ndarray] = []
        levels_used = 0
        rebuilds = 0
        nonempty = 0
        for bucket in self.buckets.values():
            if not bucket.arcs:
                continue
            nonempty += 1
            stale = bucket.dirty
            if not bucket.hierarchy or len(bucket.dirty_arcs) > cfg.rebuild_threshold * max(
                1, len(bucket.arcs)
            ):
                self.rebuild_bucket(bucket)
                rebuilds += 1
                stale = False
            t_used = len(bucket.hierarchy)
            live = bucket.arcs
            for level in bucket.hierarchy:
                levels_used += 1
                if level.residue:
                    p = 1.0
                else:
                    p = min(1.0, self.q * 2.0 * beta / (2.0 * t_used) * n / level.arc_ids.size)
                take = sample_level(level, p, rng)
                if stale and take.size:
                    # drop ids that left the bucket since the last rebuild
                    take = take[[int(a) in live for a in take]]
                out.append(take)
            if stale and bucket.dirty_arcs:
                forced = np.asarray(
                    sorted(a for a in bucket.dirty_arcs if a in live), dtype=np.int64
                )
                out.append(forced)
        sample = (
            np.unique(np.concatenate(out)) if out else np.empty(0, dtype=np.int64)
        )
        bound = self.q * beta * n * max(nonempty, 1)
        if sample.size > bound:
            raise InvariantViolation(
                f"sample size {sample.size} exceeds the q*beta*n bound {bound}"
            )
        self.query_stats.append(
            {
                "query": self.query_index - 1,
                "buckets": nonempty,
                "levels": levels_used,
                "sample_size": int(sample.size),
                "rebuilds": rebuilds,
            }
        )
        return sample


def sample_level(level: Level, p: float, rng: np.random.Generator) -> np.ndarray:
    """Binomial-count uniform subset of the level's intra arcs.

    Drawing the count first and then a uniform subset gives every arc an
    inclusion probability of exactly ``p``.
    """
    if not (0.0 < p <= 1.0):
        raise InputError("sampling probability must lie in (0, 1]")
    ids = level.intra
    if ids.size == 0:
        return ids
    if p >= 1.0:
        return ids
    count = int(rng.binomial(ids.size, p))
    if count == 0:
        return np.empty(0, dtype=np.int64)
    return np.sort(rng.choice(ids, size=count, replace=False))

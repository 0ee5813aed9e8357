"""Virtual-cache reduction from m caches of size k to one larger cache.

A virtual cache runs LRU or marking. Its pages sit in numbered slots;
each physical cache is a fixed set of slots, so physical contents are
projections of the virtual cache and the two always agree on hit/miss.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

from .core import MissLog, is_miss, is_miss_distributed
from .policies import LRUPolicy, MarkingPolicy, PolicyKind, make_rng, InstanceTooLarge


class EquivalenceError(AssertionError):
    pass


@dataclass(frozen=True)
class VirtualCacheLayout:
    """l+1 caches; cache i drops the i-th block of g*l slots, g = k // l**2."""

    k: int
    l: int

    @property
    def g(self):
        return self.k // self.l ** 2

    @property
    def block_size(self):
        return self.g * self.l

    @property
    def virtual_capacity(self):
        return self.k + self.g * self.l

    @property
    def num_caches(self):
        return self.l + 1

    def blocks(self):
        b = self.block_size
        return [range(i * b, (i + 1) * b) for i in range(self.l + 1)]

    def members(self):
        """Slot sets held by each physical cache."""
        v = self.virtual_capacity
        return [frozenset(range(v)) - frozenset(blk) for blk in self.blocks()]


@dataclass(frozen=True)
class DenseFamily:
    n: int
    k: int
    r: int
    members: tuple

    def __len__(self):
        return len(self.members)

    def is_dense(self):
        return not uncovered_subsets(self)


def uncovered_subsets(family: DenseFamily):
    sets = [frozenset(m) for m in family.members]
    return [c for c in itertools.combinations(range(1, family.n + 1), family.r)
            if not any(set(c) <= s for s in sets)]


def greedy_dense_family(n, k, r, max_subsets=10**6) -> DenseFamily:
    """Greedy cover of all r-subsets of 1..n by k-subsets.

    Each member is grown one page at a time, picking the page that
    completes the most uncovered r-subsets, then the page with the most
    uncovered r-subsets through it, then the smaller id.
    """
    if not (0 < r < k < n):
        raise ValueError(f"need 0 < r < k < n, got r={r} k={k} n={n}")
    total = math.comb(n, r)
    if total > max_subsets:
        raise InstanceTooLarge(f"C({n},{r})={total} r-subsets exceeds {max_subsets}")
    uncovered = set(itertools.combinations(range(1, n + 1), r))
    members = []
    while uncovered:
        degree = {p: 0 for p in range(1, n + 1)}
        for c in uncovered:
            for p in c:
                degree[p] += 1
        chosen = set()
        while len(chosen) < k:
            best, best_key = None, None
            for p in range(1, n + 1):
                if p in chosen:
                    continue
                trial = chosen | {p}
                gain = sum(1 for c in uncovered if p in c and trial.issuperset(c))
                key = (gain, degree[p], -p)
                if best_key is None or key > best_key:
                    best, best_key = p, key
            chosen.add(best)
        covered = {c for c in uncovered if chosen.issuperset(c)}
        uncovered -= covered
        members.append(tuple(sorted(chosen)))
    return DenseFamily(n, k, r, tuple(members))


def general_reduction(kstar, k, l):
    """l-dense family of k-subsets over virtual slots 1..kstar; returns (family, m)."""
    if not (l < k < kstar):
        raise ValueError(f"need l < k < kstar, got l={l} k={k} kstar={kstar}")
    fam = greedy_dense_family(kstar, k, l)
    return fam, len(fam)


def check_equivalence(derived, virtual, query) -> bool:
    return is_miss_distributed(derived, query) == is_miss(virtual, query)


class DistributedSimulator:
    """Runs a virtual policy and projects its slots onto physical caches.

    ``members`` are 0-based slot sets, one per physical cache. A page
    inserted on a miss takes the slot freed by a page it replaced (both
    paired in ascending order); while the cache fills, the smallest free
    slot is used.
    """

    def __init__(self, members, virtual_capacity, policy="lru", seed=0, check=True):
        self.members = [frozenset(s) for s in members]
        self.virtual_capacity = virtual_capacity
        kind = PolicyKind(policy)
        if kind is PolicyKind.LRU:
            self.policy = LRUPolicy(virtual_capacity)
        elif kind is PolicyKind.MARKING:
            self.policy = MarkingPolicy(virtual_capacity, make_rng(seed))
        else:
            raise ValueError("virtual policy must be lru or marking")
        self.slot_of = {}
        self.page_at = [None] * virtual_capacity
        self.check = check

    @classmethod
    def from_layout(cls, layout: VirtualCacheLayout, policy="lru", seed=0, **kw):
        return cls(layout.members(), layout.virtual_capacity, policy, seed, **kw)

    @classmethod
    def from_family(cls, family: DenseFamily, policy="lru", seed=0, **kw):
        members = [frozenset(p - 1 for p in m) for m in family.members]
        return cls(members, family.n, policy, seed, **kw)

    @property
    def virtual_pages(self):
        return frozenset(self.slot_of)

    def derived_caches(self):
        return [frozenset(self.page_at[s] for s in m if self.page_at[s] is not None)
                for m in self.members]

    def step(self, query):
        derived = self.derived_caches()
        virtual = self.virtual_pages
        dist_miss = is_miss_distributed(derived, query)
        if self.check and dist_miss != is_miss(virtual, query):
            raise EquivalenceError(f"distributed and virtual verdicts differ on {sorted(query)}")
        miss, evicted = self.policy.step(query)
        freed = sorted(self.slot_of.pop(p) for p in evicted)
        for s in freed:
            self.page_at[s] = None
        inserted = sorted(p for p in query if p not in self.slot_of)
        empty = iter(s for s in range(self.virtual_capacity) if self.page_at[s] is None)
        for i, p in enumerate(inserted):
            s = freed[i] if i < len(freed) else next(empty)
            self.slot_of[p] = s
            self.page_at[s] = p
        return dist_miss, evicted


def virtual_reduction_step(sim: DistributedSimulator, query):
    """Advance one query; returns (miss, derived caches after the update)."""
    miss, _ = sim.step(query)
    return miss, sim.derived_caches()


def run_distributed(trace, k, l=None, policy="lru", seed=0, family=None):
    """Run the l+1-cache reduction (or a dense-family one) over a trace."""
    l = trace.query_len if l is None else l
    longest = max((len(q) for q in trace), default=0)
    if longest > (l if family is None else family.r):
        raise ValueError(f"trace has queries of {longest} pages; the reduction covers at most "
                         f"{l if family is None else family.r}")
    if family is None:
        layout = VirtualCacheLayout(k, l)
        sim = DistributedSimulator.from_layout(layout, policy, seed)
    else:
        sim = DistributedSimulator.from_family(family, policy, seed)
    log = MissLog()
    for q in trace:
        log.record(*sim.step(q))
    return log, sim

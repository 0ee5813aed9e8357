"""Eviction policies for file-bundle caches.

Online policies are small stateful objects with ``step(query) -> (miss,
evicted)``; they never see the trace, only the current query. Offline
baselines take the whole trace. ``run_policy`` is the uniform entry
point that turns any of them into a :class:`MissLog`.
"""
from __future__ import annotations

import enum
import heapq
import itertools
import math
import random
from collections import OrderedDict

from .core import CacheState, MissLog


class InfeasibleCapacity(ValueError):
    pass


class InstanceTooLarge(ValueError):
    pass


class PhaseInvariantError(RuntimeError):
    """Marking ran out of unmarked pages to evict; the phase counter is wrong."""


class PolicyKind(str, enum.Enum):
    LRU = "lru"
    MARKING = "marking"
    RANDOM = "random"
    FF = "ff"
    OPT = "opt"

    @property
    def online(self):
        return self in (PolicyKind.LRU, PolicyKind.MARKING, PolicyKind.RANDOM)

    @property
    def randomized(self):
        return self in (PolicyKind.MARKING, PolicyKind.RANDOM)


def make_rng(seed):
    return random.Random(seed)


class IndexedSet:
    """Set with O(1) add/remove and uniform random removal."""

    def __init__(self, items=()):
        self._items = []
        self._pos = {}
        for x in items:
            self.add(x)

    def __len__(self):
        return len(self._items)

    def __contains__(self, x):
        return x in self._pos

    def __iter__(self):
        return iter(self._items)

    def add(self, x):
        if x not in self._pos:
            self._pos[x] = len(self._items)
            self._items.append(x)

    def discard(self, x):
        i = self._pos.pop(x, None)
        if i is None:
            return
        last = self._items.pop()
        if i < len(self._items):
            self._items[i] = last
            self._pos[last] = i

    def _swap(self, i, j):
        a, b = self._items[i], self._items[j]
        self._items[i], self._items[j] = b, a
        self._pos[a], self._pos[b] = j, i

    def pop_random(self, rng, n, exclude=frozenset()):
        """Remove and return ``n`` distinct items chosen uniformly, never from ``exclude``."""
        # park excluded items at the tail, then draw from the prefix
        tail = len(self._items)
        for x in exclude:
            i = self._pos.get(x)
            if i is not None:
                tail -= 1
                self._swap(i, tail)
        if n > tail:
            raise ValueError(f"cannot draw {n} items from {tail} eligible")
        out = []
        for _ in range(n):
            i = rng.randrange(tail)
            tail -= 1
            self._swap(i, tail)
            out.append(self._items[tail])
        for x in out:
            self.discard(x)
        return out


# -- online policies ---------------------------------------------------------

class LRUPolicy:
    """Query-wise LRU. All pages of query t share stamp t; ties evict the smaller id."""

    randomized = False

    def __init__(self, k, pages=(), recency=None):
        self.k = k
        recency = recency or {}
        order = sorted(pages, key=lambda p: (recency.get(p, -math.inf), p))
        self._order = OrderedDict((p, recency.get(p)) for p in order)
        self.now = 0

    @property
    def pages(self):
        return self._order.keys()

    def step(self, query, now=None):
        self.now = self.now + 1 if now is None else now
        od = self._order
        miss = not query <= od.keys()
        for p in sorted(query):
            if p in od:
                od.move_to_end(p)
            od[p] = self.now
        evicted = []
        while len(od) > self.k:
            evicted.append(od.popitem(last=False)[0])
        return miss, evicted

    def state(self):
        return CacheState(self.k, self._order.keys(),
                          recency={p: t for p, t in self._order.items() if t is not None})


class MarkingPolicy:
    """Query-wise marking with its own online phase counter."""

    randomized = True

    def __init__(self, k, rng=None, pages=(), marks=(), distinct_in_phase=None):
        self.k = k
        self.rng = rng if rng is not None else make_rng(None)
        self._pages = set(pages)
        self.marked = set(marks)
        self._unmarked = IndexedSet(sorted(self._pages - self.marked))
        self.distinct_in_phase = set(self.marked if distinct_in_phase is None else distinct_in_phase)
        self.phase = 1

    @property
    def pages(self):
        return self._pages

    def _start_phase(self, query):
        self.marked.clear()
        self._unmarked = IndexedSet(sorted(self._pages))
        self.distinct_in_phase = set(query)
        self.phase += 1

    def step(self, query):
        if len(self.distinct_in_phase | query) > self.k:
            self._start_phase(query)
        else:
            self.distinct_in_phase |= query
        missing = query - self._pages
        for p in query:
            self._unmarked.discard(p)
        self.marked |= query
        if not missing:
            return False, []
        need = len(self._pages) + len(missing) - self.k
        evicted = []
        if need > 0:
            if len(self._unmarked) < need:
                raise PhaseInvariantError(
                    f"need {need} evictions but only {len(self._unmarked)} unmarked pages")
            evicted = self._unmarked.pop_random(self.rng, need)
            self._pages.difference_update(evicted)
        self._pages |= missing
        return True, evicted

    def state(self):
        return CacheState(self.k, self._pages, self.marked)


class RandomEvictPolicy:
    """Evicts uniformly random non-requested resident pages."""

    randomized = True

    def __init__(self, k, rng=None, pages=()):
        self.k = k
        self.rng = rng if rng is not None else make_rng(None)
        self._resident = IndexedSet(sorted(pages))

    @property
    def pages(self):
        return self._resident._pos.keys()

    def step(self, query):
        missing = [p for p in query if p not in self._resident]
        if not missing:
            return False, []
        need = len(self._resident) + len(missing) - self.k
        evicted = self._resident.pop_random(self.rng, need, exclude=query) if need > 0 else []
        for p in sorted(missing):
            self._resident.add(p)
        return True, evicted

    def state(self):
        return CacheState(self.k, self.pages)


# -- functional single-step API ------------------------------------------------

def lru_step(state: CacheState, query, now):
    pol = LRUPolicy(state.capacity, state.pages, dict(state.recency))
    miss, evicted = pol.step(query, now)
    return pol.state(), miss, evicted


def marking_step(state: CacheState, query, rng, distinct_in_phase=None):
    """One step of query-wise marking from a snapshot.

    ``distinct_in_phase`` defaults to the marked pages, which is what a
    phase has touched unless pages were requested and then evicted (they
    cannot be: marked pages are pinned). Returns the new state, the miss
    flag, the evicted pages and the updated phase page set.
    """
    pol = MarkingPolicy(state.capacity, rng, state.pages, state.marks, distinct_in_phase)
    miss, evicted = pol.step(query)
    return pol.state(), miss, evicted, frozenset(pol.distinct_in_phase)


def random_eviction_step(state: CacheState, query, rng):
    pol = RandomEvictPolicy(state.capacity, rng, state.pages)
    miss, evicted = pol.step(query)
    return pol.state(), miss, evicted


# -- offline baselines -------------------------------------------------------

def _next_uses(queries):
    """For each t, map page -> index of the next query containing it (or len)."""
    never = len(queries)
    last = {}
    out = [None] * len(queries)
    for t in range(len(queries) - 1, -1, -1):
        q = queries[t]
        out[t] = {p: last.get(p, never) for p in q}
        for p in q:
            last[p] = t
    return out


def ff_offline(trace, k) -> MissLog:
    """Farthest-in-future. Pages never used again go first, then the
    farthest next use; equal keys evict the smaller id."""
    _check_capacity(trace, k)
    queries = trace.queries
    nxt = _next_uses(queries)
    cache = set()
    cur = {}
    heap = []  # (-next_use, page); stale entries skipped lazily
    log = MissLog()
    for t, q in enumerate(queries):
        for p in q:
            cur[p] = nxt[t][p]
        miss = not q <= cache
        evicted = []
        if miss:
            need = len(cache | q) - k
            held = []
            while len(evicted) < need:
                negn, p = heapq.heappop(heap)
                if p not in cache or -negn != cur[p]:
                    continue
                if p in q:
                    held.append((negn, p))
                    continue
                evicted.append(p)
                cache.discard(p)
            for e in held:
                heapq.heappush(heap, e)
            cache |= q
        for p in q:
            heapq.heappush(heap, (-cur[p], p))
        log.record(miss, evicted)
    return log


def _bruteforce_guard(trace, k, max_states, max_queries):
    n = len(trace.distinct_pages())
    bound = math.comb(n, min(k, n))
    if max_states is not None and bound > max_states:
        raise InstanceTooLarge(f"C({n},{k})={bound} cache states exceeds {max_states}")
    if max_queries is not None and len(trace) > max_queries:
        raise InstanceTooLarge(f"T={len(trace)} exceeds {max_queries}")


def opt_offline_bruteforce(trace, k, max_states=10**5, max_queries=50, return_log=False):
    """Exact offline optimum by forward DP over reachable cache states.

    A superset state dominates its subsets (it hits whenever they do and
    can shrink to any of their successors), so on a miss only successors
    of maximal size min(k, |C u Q|) are kept.
    """
    _check_capacity(trace, k)
    _bruteforce_guard(trace, k, max_states, max_queries)
    layer = {frozenset(): 0}
    parents = []
    for q in trace.queries:
        nxt = {}
        back = {}
        for s, c in layer.items():
            if q <= s:
                succ, cost = (s,), c
            else:
                cost = c + 1
                if len(s | q) <= k:
                    succ = (s | q,)
                else:
                    rest = sorted(s - q)
                    succ = (q | frozenset(keep)
                            for keep in itertools.combinations(rest, k - len(q)))
            for s2 in succ:
                if cost < nxt.get(s2, math.inf):
                    nxt[s2] = cost
                    back[s2] = s
        layer = nxt
        if return_log:
            parents.append(back)
    best = min(layer.values())
    if not return_log:
        return best
    # walk back from any optimal final state
    s = min((st for st, c in layer.items() if c == best), key=sorted)
    path = [s]
    for back in reversed(parents):
        s = back[s]
        path.append(s)
    path.reverse()
    log = MissLog()
    for t, q in enumerate(trace.queries):
        before, after = path[t], path[t + 1]
        log.record(not q <= before, before - after)
    return best, log


# -- runner ------------------------------------------------------------------

def _check_capacity(trace, k):
    if k < trace.query_len or k < max((len(q) for q in trace.queries), default=0):
        raise InfeasibleCapacity(f"cache size k={k} is smaller than query length l={trace.query_len}")


def make_policy(kind, k, seed=None):
    kind = PolicyKind(kind)
    if kind is PolicyKind.LRU:
        return LRUPolicy(k)
    if kind is PolicyKind.MARKING:
        return MarkingPolicy(k, make_rng(seed))
    if kind is PolicyKind.RANDOM:
        return RandomEvictPolicy(k, make_rng(seed))
    raise ValueError(f"{kind.value} is an offline policy")


def run_online(policy, queries) -> MissLog:
    log = MissLog()
    for q in queries:
        log.record(*policy.step(q))
    return log


def run_policy(kind, trace, k, seed=0, **opt_kwargs) -> MissLog:
    kind = PolicyKind(kind)
    _check_capacity(trace, k)
    if kind is PolicyKind.FF:
        return ff_offline(trace, k)
    if kind is PolicyKind.OPT:
        return opt_offline_bruteforce(trace, k, return_log=True, **opt_kwargs)[1]
    return run_online(make_policy(kind, k, seed), iter(trace))

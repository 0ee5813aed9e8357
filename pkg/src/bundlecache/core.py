"""Pages, queries, traces and the query-wise cost model.

A query is a frozenset of page ids. It is a hit only if every page is
resident in one cache at the same time.
"""
from __future__ import annotations

import io
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Iterable, Mapping, Sequence

Query = frozenset


class TraceError(ValueError):
    pass


class EvictionCountError(ValueError):
    """Update would leave more than ``capacity`` pages resident."""


class IllegalEvictionError(ValueError):
    """Update evicts a page that is not resident or was just requested."""


def make_query(pages: Iterable[int]) -> frozenset:
    return frozenset(int(p) for p in pages)


@dataclass(frozen=True)
class Trace:
    queries: tuple
    universe_size: int
    query_len: int

    def __post_init__(self):
        qs = tuple(make_query(q) for q in self.queries)
        object.__setattr__(self, "queries", qs)
        if self.universe_size < 1 or self.query_len < 1:
            raise TraceError("universe_size and query_len must be positive")
        for i, q in enumerate(qs):
            if not q:
                raise TraceError(f"query {i + 1} is empty")
            if len(q) > self.query_len:
                raise TraceError(f"query {i + 1} has {len(q)} pages > l={self.query_len}")
            if min(q) < 1 or max(q) > self.universe_size:
                raise TraceError(f"query {i + 1} has a page outside 1..{self.universe_size}")

    def __len__(self):
        return len(self.queries)

    def __iter__(self):
        return iter(self.queries)

    def __getitem__(self, i):
        return self.queries[i]

    def distinct_pages(self) -> set:
        out = set()
        for q in self.queries:
            out |= q
        return out

    def prefix(self, n: int) -> "Trace":
        return Trace(self.queries[:n], self.universe_size, self.query_len)


@dataclass(frozen=True)
class CacheState:
    """Immutable cache snapshot; ``marks`` and ``recency`` are optional."""

    capacity: int
    pages: frozenset = frozenset()
    marks: frozenset = frozenset()
    recency: Mapping[int, int] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "pages", frozenset(self.pages))
        object.__setattr__(self, "marks", frozenset(self.marks))
        object.__setattr__(self, "recency", MappingProxyType(dict(self.recency)))
        if len(self.pages) > self.capacity:
            raise EvictionCountError(
                f"{len(self.pages)} resident pages exceed capacity {self.capacity}")
        if not self.marks <= self.pages or not set(self.recency) <= self.pages:
            raise ValueError("marks/recency keys must be resident pages")

    def __contains__(self, page):
        return page in self.pages

    def __len__(self):
        return len(self.pages)


@dataclass
class MissLog:
    """Per-query outcome of one policy run."""

    misses: list = field(default_factory=list)
    evicted: list = field(default_factory=list)

    def record(self, miss: bool, evicted: Iterable[int] = ()):
        self.misses.append(bool(miss))
        self.evicted.append(tuple(sorted(evicted)))

    @property
    def total_misses(self) -> int:
        return sum(self.misses)

    @property
    def total_queries(self) -> int:
        return len(self.misses)

    @property
    def miss_ratio(self) -> float:
        return self.total_misses / self.total_queries if self.misses else 0.0

    def to_csv(self, trailer: Sequence[str] = ()) -> str:
        buf = io.StringIO()
        buf.write("query_index,miss,evicted_pages\n")
        for i, (m, ev) in enumerate(zip(self.misses, self.evicted), start=1):
            buf.write(f"{i},{int(m)},{';'.join(map(str, ev))}\n")
        buf.write(f"# total_misses={self.total_misses}\n")
        for line in trailer:
            buf.write(f"# {line}\n")
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "MissLog":
        log = cls()
        lines = text.splitlines()
        if not lines or lines[0] != "query_index,miss,evicted_pages":
            raise ValueError("missing MissLog header")
        for line in lines[1:]:
            if line.startswith("#") or not line:
                continue
            _, miss, ev = line.split(",")
            log.record(miss == "1", [int(p) for p in ev.split(";") if p])
        return log


def is_miss(cache, query) -> bool:
    pages = cache.pages if isinstance(cache, CacheState) else cache
    return not query <= pages


def is_miss_distributed(caches, query) -> bool:
    """Miss iff no single cache holds the whole query."""
    if not caches:
        raise ValueError("need at least one cache")
    return all(is_miss(c, query) for c in caches)


def apply_update(cache: CacheState, query, evictions) -> CacheState:
    """Evict ``evictions`` and load ``query``; marks and recency are dropped for evicted pages."""
    evictions = frozenset(evictions)
    if not evictions <= cache.pages:
        raise IllegalEvictionError(f"pages {sorted(evictions - cache.pages)} are not resident")
    if evictions & query:
        raise IllegalEvictionError(f"cannot evict requested pages {sorted(evictions & query)}")
    new_pages = (cache.pages - evictions) | query
    if len(new_pages) > cache.capacity:
        raise EvictionCountError(
            f"{len(new_pages)} pages after update exceed capacity {cache.capacity}")
    return CacheState(
        cache.capacity,
        new_pages,
        cache.marks - evictions,
        {p: t for p, t in cache.recency.items() if p not in evictions},
    )


# -- trace file format -------------------------------------------------------

def format_trace(trace: Trace) -> str:
    lines = [f"N={trace.universe_size} l={trace.query_len} T={len(trace)}"]
    lines.extend(" ".join(map(str, sorted(q))) for q in trace.queries)
    return "\n".join(lines) + "\n"


def parse_trace(text: str) -> Trace:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise TraceError("empty trace file")
    try:
        header = dict(tok.split("=", 1) for tok in lines[0].split())
        n, l, t = int(header["N"]), int(header["l"]), int(header["T"])
    except (KeyError, ValueError) as e:
        raise TraceError(f"bad header line {lines[0]!r}") from e
    queries = [make_query(ln.split()) for ln in lines[1:]]
    if len(queries) != t:
        raise TraceError(f"header says T={t} but file has {len(queries)} queries")
    return Trace(tuple(queries), n, l)


def read_trace(path) -> Trace:
    with open(path) as f:
        return parse_trace(f.read())


def write_trace(trace: Trace, path):
    with open(path, "w") as f:
        f.write(format_trace(trace))

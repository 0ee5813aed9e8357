"""Phase partitioning by the distinct-page counting rule."""
from __future__ import annotations

from dataclasses import dataclass


class InvalidThreshold(ValueError):
    pass


@dataclass(frozen=True)
class PhasePartition:
    threshold: int
    starts: tuple  # 1-based query indices
    num_queries: int
    new_pages: tuple = ()

    def bounds(self):
        """Yield (start, end) pairs, 1-based and inclusive."""
        ends = [s - 1 for s in self.starts[1:]] + [self.num_queries]
        return list(zip(self.starts, ends))

    def __len__(self):
        return len(self.starts)


def partition_phases(trace, threshold: int) -> PhasePartition:
    """A new phase opens at the first query that brings the distinct-page
    count since the current phase began to ``threshold``. That query
    belongs to the new phase, and counting restarts with its pages.
    """
    if threshold <= trace.query_len:
        raise InvalidThreshold(
            f"threshold {threshold} must exceed query length {trace.query_len}")
    if len(trace) == 0:
        return PhasePartition(threshold, (), 0)
    starts = [1]
    seen = set()
    for t, q in enumerate(trace.queries, start=1):
        if len(seen | q) >= threshold:
            starts.append(t)
            seen = set(q)
        else:
            seen |= q
    return PhasePartition(threshold, tuple(starts), len(trace))


def phase_pages(trace, partition: PhasePartition) -> list:
    if partition.num_queries != len(trace):
        raise ValueError("partition was built for a different trace")
    out = []
    for a, b in partition.bounds():
        pages = set()
        for q in trace.queries[a - 1:b]:
            pages |= q
        out.append(pages)
    return out


def new_pages_per_phase(trace, partition: PhasePartition) -> list:
    """m_i: pages of phase i that were not requested in phase i-1."""
    pages = phase_pages(trace, partition)
    return [len(p) if i == 0 else len(p - pages[i - 1]) for i, p in enumerate(pages)]


def phase_table(trace, threshold: int) -> list:
    """Rows of (phase_index, start, end, distinct_pages, new_pages)."""
    part = partition_phases(trace, threshold)
    pages = phase_pages(trace, part)
    news = new_pages_per_phase(trace, part)
    return [(i + 1, a, b, len(pages[i]), news[i])
            for i, (a, b) in enumerate(part.bounds())]

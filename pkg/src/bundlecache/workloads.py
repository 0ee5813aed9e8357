"""Query-sequence generators: Zipf and uniform bundles, the cyclic
adversarial trace, and the two lower-bound adversaries."""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .core import MissLog, Trace
from .policies import LRUPolicy, MarkingPolicy, PolicyKind, make_rng


class WorkloadError(ValueError):
    pass


class WorkloadKind(str, enum.Enum):
    ZIPF = "zipf"
    UNIFORM = "uniform"
    CYCLIC = "cyclic"
    DETERMINISTIC_ADVERSARY = "det-adversary"
    RANDOMIZED_ADVERSARY = "rand-adversary"


@dataclass
class WorkloadSpec:
    kind: WorkloadKind = WorkloadKind.ZIPF
    n: int = 10_000
    l: int = 10
    t: int = 40_000
    s: float = 1.0
    candidates: int = 2000
    k: int | None = None
    h: int | None = None
    m: int | None = None
    ensemble_size: int = 2000
    seed: int = 0

    def __post_init__(self):
        self.kind = WorkloadKind(self.kind)
        if self.s <= 0:
            raise WorkloadError("zipf exponent must be positive")
        if self.candidates < 1:
            raise WorkloadError("need at least one candidate query")
        if self.t < 1:
            raise WorkloadError("T must be at least 1")


def zipf_weights(n, s):
    w = 1.0 / np.arange(1, n + 1, dtype=float) ** s
    return w / w.sum()


def gen_zipf_trace(spec: WorkloadSpec) -> Trace:
    """Two-level Zipf: candidate bundles whose pages are drawn by Zipf
    popularity (without replacement), then T requests drawn from the
    candidates by a second Zipf over candidate rank."""
    if spec.l > spec.n:
        raise WorkloadError(f"l={spec.l} > N={spec.n}")
    rng = np.random.default_rng(spec.seed)
    page_p = zipf_weights(spec.n, spec.s)
    cands = [frozenset((rng.choice(spec.n, size=spec.l, replace=False, p=page_p) + 1).tolist())
             for _ in range(spec.candidates)]
    ranks = rng.choice(spec.candidates, size=spec.t, p=zipf_weights(spec.candidates, spec.s))
    return Trace(tuple(cands[r] for r in ranks), spec.n, spec.l)


def gen_uniform_trace(spec: WorkloadSpec) -> Trace:
    if spec.l > spec.n:
        raise WorkloadError(f"l={spec.l} > N={spec.n}")
    rng = np.random.default_rng(spec.seed)
    qs = tuple(frozenset((rng.choice(spec.n, size=spec.l, replace=False) + 1).tolist())
               for _ in range(spec.t))
    return Trace(qs, spec.n, spec.l)


def gen_cyclic_adversarial(k, l, t, n=None) -> Trace:
    """l-1 fixed pages (the top ids of the universe) plus one page cycling
    through 1..k-l+2, so the working set is exactly k+1 pages."""
    if k < l:
        raise WorkloadError(f"k={k} < l={l}")
    cycle = k - l + 2
    n = cycle + l - 1 if n is None else n
    if n < cycle + l - 1:
        raise WorkloadError(f"N={n} too small for a cycle of {cycle} plus {l - 1} fixed pages")
    fixed = frozenset(range(n - l + 2, n + 1))
    qs = tuple(fixed | {i % cycle + 1} for i in range(t))
    return Trace(qs, n, l)


def deterministic_adversary(policy, k, l, t):
    """Feed ``policy`` queries it is guaranteed to miss.

    Every query is the fixed pages 1..l-1 plus the smallest page of a pool
    of k-l+2 extra pages that is absent from the policy's cache; one always
    is, since at most k-l+1 pool pages fit alongside the fixed ones.
    """
    if policy in (PolicyKind.LRU, "lru"):
        policy = LRUPolicy(k)
    if isinstance(policy, (str, PolicyKind)) or getattr(policy, "randomized", True):
        raise WorkloadError("the deterministic adversary needs a deterministic policy instance")
    fixed = frozenset(range(1, l))
    pool = range(l, k + 2)
    log = MissLog()
    qs = []
    for _ in range(t):
        resident = policy.pages
        page = next(p for p in pool if p not in resident)
        q = fixed | {page}
        qs.append(q)
        log.record(*policy.step(q))
    return Trace(tuple(qs), k + 1, l), log


def phase_scenario(k, m, l=1):
    """Two phases: pages 1..k, then m new pages followed by k-m old ones.

    New pages come first, the order that maximizes marking's expected
    misses in the second phase. Returns the trace and the 1-based index
    of the second phase's first query.
    """
    if not 1 <= m <= k or l > k:
        raise WorkloadError(f"need 1 <= m <= k and l <= k, got m={m} k={k} l={l}")

    def chunk(pages):
        return [frozenset(pages[i:i + l]) for i in range(0, len(pages), l)]

    first = chunk(list(range(1, k + 1)))
    second = chunk(list(range(k + 1, k + m + 1)) + list(range(k - m, 0, -1)))
    return Trace(tuple(first + second), k + m, l), len(first) + 1


# -- randomized adversary ----------------------------------------------------

def choose_segment_m(k, h, l):
    """Smallest positive m >= c ln(b/c) - c with (k-h+m) divisible by l,
    where b = k+1 and c = k-h+l+1."""
    b, c = k + 1, k - h + l + 1
    m = max(1, math.ceil(c * math.log(b / c) - c))
    while (k - h + m) % l:
        m += 1
    return m


@dataclass(frozen=True)
class AdversarySegmentPlan:
    k: int
    h: int
    l: int
    m: int

    def __post_init__(self):
        if not (1 <= self.l <= self.h < self.k):
            raise WorkloadError(f"need 1 <= l <= h < k, got l={self.l} h={self.h} k={self.k}")
        if self.m < 1:
            raise WorkloadError("m must be positive")
        if (self.k - self.h + self.m) % self.l:
            raise WorkloadError(f"k-h+m={self.k - self.h + self.m} is not divisible by l={self.l}")

    @property
    def stage1_count(self):
        return (self.k - self.h + self.m) // self.l

    @property
    def stage3_count(self):
        return self.h - self.l

    @property
    def stage_lengths(self):
        return (self.stage1_count, 1, self.stage3_count)

    @property
    def candidate_pool_size(self):
        return self.k + self.m

    @property
    def opt_misses(self):
        return self.stage1_count + 1

    def stage3_lower_bound(self):
        k, h, l, m = self.k, self.h, self.l, self.m
        return m * math.log((k + m + 1) / (k + m - h + l + 1))


@dataclass
class AdversaryRun:
    plan: AdversarySegmentPlan
    trace: Trace
    warmup_queries: int
    # one entry per segment
    stage_means: list = field(default_factory=list)
    stage3_per_copy: list = field(default_factory=list)
    stage3_queries: list = field(default_factory=list)


def randomized_adversary_segment(k, h, l, m=None, ensemble_size=2000, segments=1,
                                 seed=0, policy_factory=None) -> AdversaryRun:
    """Build segments against an ensemble of ``ensemble_size`` policy copies.

    Residency probabilities are estimated as the fraction of copies that
    hold a page; every copy sees the identical prefix. A warm-up of h
    fresh pages seeds the offline cache the candidates are drawn from.
    """
    if ensemble_size < 100:
        raise WorkloadError("ensemble_size must be at least 100")
    plan = AdversarySegmentPlan(k, h, l, choose_segment_m(k, h, l) if m is None else m)
    if policy_factory is None:
        def policy_factory(s):
            return MarkingPolicy(k, make_rng(s))
    seeds = np.random.SeedSequence(seed).generate_state(ensemble_size).tolist()
    copies = [policy_factory(s) for s in seeds]
    certain = 1.0 - 1.0 / (2 * ensemble_size)

    queries = []
    counter = iter(range(1, 10**9))

    def fresh(n):
        return frozenset(next(counter) for _ in range(n))

    def feed(q):
        queries.append(q)
        return np.fromiter((c.step(q)[0] for c in copies), dtype=np.int64, count=len(copies))

    def residency(p):
        return sum(p in c.pages for c in copies) / len(copies)

    opt_cache = set()
    while len(opt_cache) < h:
        q = fresh(min(l, h - len(opt_cache)))
        feed(q)
        opt_cache |= q
    run = AdversaryRun(plan, None, len(queries))

    for _ in range(segments):
        per_stage = [np.zeros(len(copies), dtype=np.int64) for _ in range(3)]
        stage1_pages = set()
        for _ in range(plan.stage1_count):
            q = fresh(l)
            stage1_pages |= q
            per_stage[0] += feed(q)
        s2 = fresh(l)
        per_stage[1] += feed(s2)
        fixed = frozenset(sorted(s2)[:l - 1])
        candidates = sorted(opt_cache | stage1_pages)
        probed = []
        n3 = 0
        for _ in range(plan.stage3_count):
            # re-request earlier probes until every copy holds them again
            for _ in range(10 * plan.stage3_count):
                low = [p for p in probed if residency(p) < certain]
                if not low:
                    break
                per_stage[2] += feed(fixed | {low[0]})
                n3 += 1
            pool = [p for p in candidates if p not in probed]
            probs = [residency(p) for p in pool]
            p_i = pool[int(np.argmin(probs))]
            probed.append(p_i)
            per_stage[2] += feed(fixed | {p_i})
            n3 += 1
        opt_cache = set(probed) | s2
        run.stage_means.append(tuple(float(a.mean()) for a in per_stage))
        run.stage3_per_copy.append(per_stage[2])
        run.stage3_queries.append(n3)

    n = max(max(q) for q in queries)
    run.trace = Trace(tuple(queries), n, l)
    return run


def generate(spec: WorkloadSpec) -> Trace:
    if spec.kind is WorkloadKind.ZIPF:
        return gen_zipf_trace(spec)
    if spec.kind is WorkloadKind.UNIFORM:
        return gen_uniform_trace(spec)
    if spec.kind is WorkloadKind.CYCLIC:
        return gen_cyclic_adversarial(spec.k, spec.l, spec.t, spec.n)
    if spec.kind is WorkloadKind.DETERMINISTIC_ADVERSARY:
        return deterministic_adversary(PolicyKind.LRU, spec.k, spec.l, spec.t)[0]
    if spec.kind is WorkloadKind.RANDOMIZED_ADVERSARY:
        return randomized_adversary_segment(spec.k, spec.h, spec.l, spec.m,
                                            spec.ensemble_size, seed=spec.seed).trace
    raise WorkloadError(f"unknown workload kind {spec.kind}")

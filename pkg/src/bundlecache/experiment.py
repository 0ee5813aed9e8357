"""Experiment configs, figure presets, sweeps and instance-wise bound checks."""
from __future__ import annotations

import dataclasses
import itertools
import logging
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import bounds
from .core import Trace
from .distributed import run_distributed
from .policies import PolicyKind, opt_offline_bruteforce, run_policy
from .workloads import WorkloadKind, WorkloadSpec, generate

log = logging.getLogger(__name__)

SEED_ENV = "BUNDLECACHE_SEED"


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    name: str = "custom"
    workload: WorkloadKind = WorkloadKind.ZIPF
    n: list = field(default_factory=lambda: [10_000])
    l: list = field(default_factory=lambda: [10])
    k: list = field(default_factory=lambda: [600])
    k_per_l: list = field(default_factory=list)  # overrides k when set
    t: int = 40_000
    s: float = 1.0
    candidates: int = 2000
    policies: list = field(default_factory=lambda: ["lru", "marking", "random", "ff"])
    repetitions: int = 5
    seed: int = 0
    distributed: bool = False
    virtual_policy: str = "marking"
    dist_k_per_l: int | None = None
    csv: str | None = None
    svg: str | None = None
    x_field: str = "k"

    def __post_init__(self):
        self.workload = WorkloadKind(self.workload)
        for name in ("n", "l", "k"):
            if not getattr(self, name):
                raise ConfigError(f"sweep list {name!r} is empty")
        if self.repetitions < 1:
            raise ConfigError("repetitions must be at least 1")
        try:
            self.policies = [PolicyKind(p).value for p in self.policies]
        except ValueError as e:
            raise ConfigError(str(e)) from None
        if self.distributed and PolicyKind(self.virtual_policy) not in (PolicyKind.LRU, PolicyKind.MARKING):
            raise ConfigError("virtual_policy must be lru or marking")

    def points(self):
        """(n, l, k) triples; k comes from k_per_l when that is set."""
        for n, l in itertools.product(self.n, self.l):
            ks = [int(f * l) for f in self.k_per_l] if self.k_per_l else self.k
            for k in ks:
                yield n, l, k


@dataclass
class ResultRow:
    preset: str
    policy: str
    k: int
    l: int
    N: int
    seed: int
    total_misses: int
    miss_ratio: float
    runtime_ms: float

    FIELDS = ("preset", "policy", "k", "l", "N", "seed", "total_misses", "miss_ratio", "runtime_ms")

    def sort_key(self):
        return (self.preset, self.policy, self.N, self.l, self.k, self.seed)


# -- config files --------------------------------------------------------------

_LIST_KEYS = {"n", "l", "k", "k_per_l", "policies"}
_INT_KEYS = {"t", "candidates", "repetitions", "seed", "dist_k_per_l"}


def parse_config(text: str) -> ExperimentConfig:
    """Flat ``key = value`` lines. ``sweep.<name>`` keys may repeat and
    accumulate; commas also separate list values."""
    values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value")
        key, val = (x.strip() for x in line.split("=", 1))
        if key.startswith("sweep."):
            key = key[len("sweep."):]
        if key in _LIST_KEYS:
            values.setdefault(key, []).extend(v.strip() for v in val.split(",") if v.strip())
        else:
            values[key] = val
    fields = {f.name for f in dataclasses.fields(ExperimentConfig)}
    unknown = set(values) - fields
    if unknown:
        raise ConfigError(f"unknown keys: {sorted(unknown)}")
    kw = {}
    try:
        for key, val in values.items():
            if key in ("n", "l", "k"):
                kw[key] = [int(v) for v in val]
            elif key == "k_per_l":
                kw[key] = [float(v) for v in val]
            elif key == "policies":
                kw[key] = val
            elif key in _INT_KEYS:
                kw[key] = int(val)
            elif key == "s":
                kw[key] = float(val)
            elif key == "distributed":
                kw[key] = val.lower() in ("1", "true", "yes", "on")
            else:
                kw[key] = val
    except ValueError as e:
        raise ConfigError(str(e)) from None
    cfg = ExperimentConfig(**kw)
    env = os.environ.get(SEED_ENV)
    if env is not None:
        cfg.seed = int(env)
    return cfg


def load_config(path) -> ExperimentConfig:
    with open(path) as f:
        return parse_config(f.read())


# -- presets -------------------------------------------------------------------

def presets(name, t=None):
    """Configs reproducing one figure; fig1 to fig4 give a zipf and a uniform config."""
    t40 = 40_000 if t is None else t
    if name == "fig5":
        return [ExperimentConfig(name="fig5", workload="cyclic", n=[10_000], l=[10], k=[500],
                                 t=100_000 if t is None else t,
                                 policies=["lru", "marking", "ff"], x_field="k")]
    base = {
        "fig1": dict(n=[10_000], l=[10], k=[200, 400, 600, 800, 1000, 1200], x_field="k"),
        "fig2": dict(n=[10_000], l=[5, 10, 15, 20, 25, 30], k=[600], x_field="l"),
        "fig3": dict(n=[800, 1000, 2000, 5000, 10_000, 20_000, 50_000, 100_000], l=[10],
                     k=[800], x_field="N"),
        "fig4": dict(n=[10_000], l=list(range(4, 41, 4)), k_per_l=[160], k=[160],
                     policies=["marking", "ff"], distributed=True, virtual_policy="marking",
                     dist_k_per_l=80, x_field="l"),
    }
    if name not in base:
        raise ConfigError(f"unknown preset {name!r}")
    return [ExperimentConfig(name=f"{name}-{wl}", workload=wl, t=t40, **base[name])
            for wl in ("zipf", "uniform")]


# -- running -------------------------------------------------------------------

def build_trace(cfg: ExperimentConfig, n, l, k) -> Trace:
    spec = WorkloadSpec(kind=cfg.workload, n=n, l=l, t=cfg.t, s=cfg.s,
                        candidates=cfg.candidates, k=k, seed=cfg.seed)
    return generate(spec)


def _timed(fn):
    t0 = time.perf_counter()
    out = fn()
    return out, round((time.perf_counter() - t0) * 1000.0, 3)


def _run_point(cfg: ExperimentConfig, n, l, k):
    trace = build_trace(cfg, n, l, k)
    rows = []
    for pol in cfg.policies:
        kind = PolicyKind(pol)
        seeds = [cfg.seed + r for r in range(cfg.repetitions)] if kind.randomized else [cfg.seed]
        for seed in seeds:
            mlog, ms = _timed(lambda: run_policy(kind, trace, k, seed))
            rows.append(ResultRow(cfg.name, pol, k, l, n, seed, mlog.total_misses,
                                  mlog.total_misses / len(trace), ms))
    if cfg.distributed:
        dk = cfg.dist_k_per_l * l if cfg.dist_k_per_l else k
        vp = PolicyKind(cfg.virtual_policy)
        seeds = [cfg.seed + r for r in range(cfg.repetitions)] if vp.randomized else [cfg.seed]
        for seed in seeds:
            (mlog, _), ms = _timed(lambda: run_distributed(trace, dk, l, vp.value, seed))
            rows.append(ResultRow(cfg.name, f"dist-{vp.value}", dk, l, n, seed, mlog.total_misses,
                                  mlog.total_misses / len(trace), ms))
    return rows


def run_experiment(cfg: ExperimentConfig, jobs=1, errors=None) -> list:
    """One row per (policy, point, seed). Each point's trace is shared by all
    its policies. Rows come back sorted regardless of ``jobs``."""
    points = []
    for n, l, k in cfg.points():
        need = min(k, cfg.dist_k_per_l * l if cfg.distributed and cfg.dist_k_per_l else k)
        if need < l or l > n:
            msg = f"{cfg.name}: skipping N={n} l={l} k={k} (needs l <= k and l <= N)"
            log.warning(msg)
            if errors is not None:
                errors.append(msg)
            continue
        points.append((n, l, k))
    if not cfg.policies and not cfg.distributed:
        return []
    if jobs > 1 and len(points) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            chunks = list(ex.map(_run_point, [cfg] * len(points), *zip(*points)))
    else:
        chunks = [_run_point(cfg, *p) for p in points]
    rows = [r for chunk in chunks for r in chunk]
    rows.sort(key=ResultRow.sort_key)
    return rows


def summarize(rows):
    """Mean and sample std of miss ratio per (preset, policy, N, l, k)."""
    groups = {}
    for r in rows:
        groups.setdefault((r.preset, r.policy, r.N, r.l, r.k), []).append(r.miss_ratio)
    out = {}
    for key, vals in groups.items():
        a = np.asarray(vals)
        out[key] = (float(a.mean()), float(a.std(ddof=1)) if len(a) > 1 else 0.0, len(a))
    return out


# -- instance-wise verification ----------------------------------------------------

@dataclass
class VerifyConfig:
    instances: int = 1000
    n_max: int = 8
    k_max: int = 4
    l_max: int = 2
    t_max: int = 12
    hk_instances: int = 200
    marking_seeds: int = 200
    distributed_instances: int = 200
    seed: int = 0


@dataclass
class CheckResult:
    name: str
    bound_desc: str
    checked: int = 0
    skipped: int = 0
    violations: list = field(default_factory=list)
    worst_margin: float = -math.inf  # max of (empirical - allowed)

    @property
    def ok(self):
        return not self.violations

    def add(self, empirical, allowed, info):
        self.checked += 1
        self.worst_margin = max(self.worst_margin, empirical - allowed)
        if empirical > allowed + 1e-12:
            self.violations.append((info, empirical, allowed))


@dataclass
class VerificationReport:
    checks: list

    @property
    def ok(self):
        return all(c.ok for c in self.checks)

    def lines(self):
        for c in self.checks:
            status = "PASS" if c.ok else "FAIL"
            yield (f"{status} {c.name}: {c.checked} instances, {c.skipped} skipped, "
                   f"{len(c.violations)} violations, worst margin {c.worst_margin:+.4f} ({c.bound_desc})")


def random_instance(rng, n_max, k_max, l_max, t_max, min_k=None):
    l = int(rng.integers(1, l_max + 1))
    k = int(rng.integers(max(l, min_k or l), k_max + 1))
    n = int(rng.integers(max(l, 2), n_max + 1))
    t = int(rng.integers(1, t_max + 1))
    qs = tuple(frozenset((rng.choice(n, size=l, replace=False) + 1).tolist()) for _ in range(t))
    return Trace(qs, n, l), k


def _mean_and_se(vals):
    a = np.asarray(vals, dtype=float)
    return float(a.mean()), float(a.std(ddof=1) / math.sqrt(len(a))) if len(a) > 1 else 0.0


def check_lru_ff(vc: VerifyConfig, rng):
    lru = CheckResult("lru_vs_opt", "LRU <= k * OPT")
    ff = CheckResult("ff_vs_opt", "FF <= 2l * OPT")
    for i in range(vc.instances):
        trace, k = random_instance(rng, vc.n_max, vc.k_max, vc.l_max, vc.t_max)
        try:
            opt = opt_offline_bruteforce(trace, k)
        except ValueError as e:
            log.info("instance %d skipped: %s", i, e)
            lru.skipped += 1
            ff.skipped += 1
            continue
        info = (i, k, trace.query_len)
        lru.add(run_policy("lru", trace, k).total_misses, k * opt, info)
        ff.add(run_policy("ff", trace, k).total_misses, 2 * trace.query_len * opt, info)
    return [lru, ff]


def check_marking_hk(vc: VerifyConfig, rng):
    chk = CheckResult("marking_hk_vs_opt_h", "mean MARK_k / OPT_h <= marking_hk_upper + 3 SE")
    for i in range(vc.hk_instances):
        trace, k = random_instance(rng, vc.n_max, vc.k_max, vc.l_max, vc.t_max, min_k=2)
        l = trace.query_len
        if k <= l:
            k = l + 1
        h = int(rng.integers(l, k))
        opt = opt_offline_bruteforce(trace, h)
        ratios = [run_policy("marking", trace, k, seed).total_misses / opt
                  for seed in range(vc.marking_seeds)]
        mean, se = _mean_and_se(ratios)
        chk.add(mean, bounds.marking_hk_upper(k, h, l) + 3 * se, (i, k, h, l))
    return [chk]


def check_distributed(vc: VerifyConfig, rng):
    det = CheckResult("dist_lru_vs_opt", "DLRU (l+1 caches) <= (l^2+l) * OPT")
    rnd = CheckResult("dist_marking_vs_opt", "mean DMARK / OPT <= distributed_rand_upper(l) + 3 SE")
    for i in range(vc.distributed_instances):
        trace, k = random_instance(rng, vc.n_max, vc.k_max, vc.l_max, vc.t_max)
        l = trace.query_len
        opt = opt_offline_bruteforce(trace, k)
        det.add(run_distributed(trace, k, l, "lru")[0].total_misses,
                bounds.distributed_det_upper(l) * opt, (i, k, l))
        if l < 2:
            rnd.skipped += 1
            continue
        ratios = [run_distributed(trace, k, l, "marking", seed)[0].total_misses / opt
                  for seed in range(vc.marking_seeds // 4)]
        mean, se = _mean_and_se(ratios)
        rnd.add(mean, bounds.distributed_rand_upper(l) + 3 * se, (i, k, l))
    return [det, rnd]


def verify_bounds(vc: VerifyConfig | None = None) -> VerificationReport:
    vc = vc or VerifyConfig()
    rng = np.random.default_rng(vc.seed)
    checks = check_lru_ff(vc, rng) + check_marking_hk(vc, rng) + check_distributed(vc, rng)
    return VerificationReport(checks)

"""Closed-form competitive-ratio bounds and their numeric envelope checks."""
from __future__ import annotations

import math
from fractions import Fraction


class BoundError(ValueError):
    pass


class NotApplicable(BoundError):
    pass


def _check_kl(k, l):
    if not 1 <= l <= k:
        raise BoundError(f"need 1 <= l <= k, got l={l} k={k}")


def lru_upper(k, l=1):
    _check_kl(k, l)
    return k


def det_lower(k, l):
    _check_kl(k, l)
    return k - l + 1


def lemma_phase_bound(m, k, exact=False):
    """Expected marking misses in a phase with m new pages: m + m * sum_{j=m+1..k} 1/j."""
    if not 1 <= m <= k:
        raise BoundError(f"need 1 <= m <= k, got m={m} k={k}")
    if exact:
        return m + m * sum(Fraction(1, j) for j in range(m + 1, k + 1))
    return m + m * math.fsum(1.0 / j for j in range(m + 1, k + 1))


def _loglog_ratio(s, l):
    """2l(ln s - ln ln s + 1/2) for s >= e, else 2l."""
    if s >= math.e:
        return 2 * l * (math.log(s) - math.log(math.log(s)) + 0.5)
    return 2 * l


def marking_hk_upper(k, h, l):
    if not 1 <= l <= h <= k:
        raise BoundError(f"need 1 <= l <= h <= k, got l={l} h={h} k={k}")
    if h == k:
        raise BoundError("h = k makes k/(k-h) unbounded")
    return _loglog_ratio(k / (k - h), l)


def randomized_lower(k, h, l, clamp=True):
    """l ln x - l ln ln x - 2l + 1 with x = (k+1)/(k-h+l+1), clamped at 1."""
    if not 1 <= l <= h < k:
        raise BoundError(f"need 1 <= l <= h < k, got l={l} h={h} k={k}")
    if k / (k - h) < math.e:
        raise NotApplicable(f"k/(k-h)={k / (k - h):.4f} < e")
    x = (k + 1) / (k - h + l + 1)
    if x <= 1:
        raise NotApplicable(f"(k+1)/(k-h+l+1)={x:.4f} <= 1")
    raw = l * math.log(x) - l * math.log(math.log(x)) - 2 * l + 1
    return max(1.0, raw) if clamp else raw


def t_of_m(m, k, h, l):
    return (m + m * math.log(k / m)) / ((k - h + m) / l)


def tmax_bound(k, h, l):
    """Envelope for max over m of t_of_m."""
    if not 1 <= l <= h < k:
        raise BoundError(f"need 1 <= l <= h < k, got l={l} h={h} k={k}")
    s = k / (k - h)
    if s >= math.e:
        return l * (math.log(s) - math.log(math.log(s)) + 0.5)
    return float(l)


def tmax_numeric(k, h, l):
    return max(t_of_m(m, k, h, l) for m in range(1, k + 1))


def f_of_m(m, k, h, l):
    c = k - h + l + 1
    return m / (c + m) * math.log((k + 1) / (c + m))


def f_segment_lower(k, h, l):
    """ln(b/c) - ln ln(b/c) - 2 with b = k+1, c = k-h+l+1."""
    if not 1 <= l <= h < k:
        raise BoundError(f"need 1 <= l <= h < k, got l={l} h={h} k={k}")
    if k / (k - h) < math.e:
        raise NotApplicable(f"k/(k-h)={k / (k - h):.4f} < e")
    x = (k + 1) / (k - h + l + 1)
    if x <= 1:
        raise NotApplicable(f"(k+1)/(k-h+l+1)={x:.4f} <= 1")
    return math.log(x) - math.log(math.log(x)) - 2


def f_numeric_max(k, h, l):
    return max(f_of_m(m, k, h, l) for m in range(1, k + 1))


def distributed_det_upper(l):
    if l < 1:
        raise BoundError("l must be positive")
    return l * l + l


def distributed_rand_upper(l):
    if l < 2:
        raise NotApplicable("ln ln l is undefined for l < 2")
    return 2 * l * (math.log(2 * l + 1) - math.log(math.log(l)) + 0.5)


def dense_family_size_bound(n, k, r):
    if not 0 < r < k < n:
        raise BoundError(f"need 0 < r < k < n, got r={r} k={k} n={n}")
    ckr = math.comb(k, r)
    return math.comb(n, r) / ckr * (1 + math.log(ckr))


def general_distributed_upper(kstar, k, l):
    if not 1 <= l <= k < kstar:
        raise BoundError(f"need 1 <= l <= k < kstar, got l={l} k={k} kstar={kstar}")
    return marking_hk_upper(kstar, k, l)


def bound_table(k, h, l, kstar=None, n=None, r=None):
    """Labelled values of every bound that applies to the given parameters."""
    rows = []

    def add(name, fn, *args):
        try:
            rows.append((name, fn(*args)))
        except BoundError as e:
            rows.append((name, f"n/a ({e})"))

    add("lru_upper", lru_upper, k, l)
    add("det_lower", det_lower, k, l)
    if h is not None:
        add("marking_hk_upper", marking_hk_upper, k, h, l)
        add("randomized_lower", randomized_lower, k, h, l)
        add("tmax_bound", tmax_bound, k, h, l)
        add("f_segment_lower", f_segment_lower, k, h, l)
    add("distributed_det_upper", distributed_det_upper, l)
    add("distributed_rand_upper", distributed_rand_upper, l)
    if kstar is not None:
        add("general_distributed_upper", general_distributed_upper, kstar, k, l)
    if n is not None and r is not None:
        add("dense_family_size_bound", dense_family_size_bound, n, k, r)
    return rows

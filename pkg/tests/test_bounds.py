"""Bounds against an mpmath evaluation at 30 digits, written independently."""
import math
import random
from fractions import Fraction

import mpmath as mp
import pytest
from hypothesis import given, strategies as st

from bundlecache import bounds as B

mp.mp.dps = 30


def mp_loglog(s, l):
    s = mp.mpf(s)
    return 2 * l * (mp.log(s) - mp.log(mp.log(s)) + mp.mpf(1) / 2)


def mp_hk(k, h, l):
    return mp_loglog(mp.mpf(k) / (k - h), l)


def mp_rand_lower(k, h, l):
    x = mp.mpf(k + 1) / (k - h + l + 1)
    return l * mp.log(x) - l * mp.log(mp.log(x)) - 2 * l + 1


def mp_f_envelope(k, h, l):
    x = mp.mpf(k + 1) / (k - h + l + 1)
    return mp.log(x) - mp.log(mp.log(x)) - 2


def mp_drand(l):
    return 2 * l * (mp.log(2 * l + 1) - mp.log(mp.log(l)) + mp.mpf(1) / 2)


def mp_dense(n, k, r):
    return mp.binomial(n, r) / mp.binomial(k, r) * (1 + mp.log(mp.binomial(k, r)))


# frozen from the mpmath oracle above
GOLDEN = [
    (lambda: B.marking_hk_upper(10, 9, 1), "3.93710529549218"),
    (lambda: B.marking_hk_upper(100, 90, 10), "39.3710529549218"),
    (lambda: B.tmax_bound(10, 9, 1), "1.96855264774609"),
    (lambda: B.distributed_rand_upper(2), "9.90380333206306"),
    (lambda: B.dense_family_size_bound(13, 9, 2), "9.93095769998824"),
    (lambda: B.general_distributed_upper(13, 9, 2), "6.05712416630892"),
    (lambda: B.randomized_lower(1000, 990, 5), "4.5819838573954"),
    (lambda: B.f_segment_lower(1000, 990, 5), "0.716396771479079"),
]


@pytest.mark.parametrize("fn,expected", GOLDEN)
def test_golden(fn, expected):
    assert fn() == pytest.approx(float(expected), abs=1e-11)


def test_golden_table_matches_oracle():
    assert float(mp_hk(10, 9, 1)) == pytest.approx(3.93710529549218, abs=1e-13)
    assert float(mp_hk(100, 90, 10)) == pytest.approx(39.3710529549218, abs=1e-12)
    assert float(mp_drand(2)) == pytest.approx(9.90380333206306, abs=1e-13)
    assert float(mp_dense(13, 9, 2)) == pytest.approx(9.93095769998824, abs=1e-13)
    assert float(mp_hk(13, 9, 2)) == pytest.approx(6.05712416630892, abs=1e-13)
    assert float(mp_rand_lower(1000, 990, 5)) == pytest.approx(4.5819838573954, abs=1e-13)
    assert float(mp_f_envelope(1000, 990, 5)) == pytest.approx(0.716396771479079, abs=1e-13)


def test_integer_bounds():
    assert (B.lru_upper(5, 2), B.det_lower(5, 2)) == (5, 4)
    assert B.det_lower(4, 4) == 1
    assert B.det_lower(500, 10) == 491
    assert B.distributed_det_upper(2) == 6
    assert B.distributed_det_upper(10) == 110
    with pytest.raises(B.BoundError):
        B.det_lower(2, 3)


def test_lemma_phase_bound_exact():
    assert B.lemma_phase_bound(1, 3, exact=True) == Fraction(11, 6)
    assert B.lemma_phase_bound(2, 5, exact=True) == Fraction(107, 30)
    assert B.lemma_phase_bound(4, 4, exact=True) == 4
    assert B.lemma_phase_bound(2, 5) == pytest.approx(107 / 30, rel=1e-12)
    with pytest.raises(B.BoundError):
        B.lemma_phase_bound(5, 4)


@given(st.integers(1, 60), st.integers(0, 60))
def test_lemma_phase_bound_float_matches_exact(m, extra):
    k = m + extra
    assert B.lemma_phase_bound(m, k) == pytest.approx(float(B.lemma_phase_bound(m, k, True)),
                                                      rel=1e-12)


def test_hk_branches():
    assert B.marking_hk_upper(4, 2, 2) == 4
    assert B.marking_hk_upper(6, 3, 3) == 6
    with pytest.raises(B.BoundError):
        B.marking_hk_upper(5, 5, 1)


def test_loglog_branch_at_e():
    # at s = e: ln s - ln ln s + 1/2 = 3/2
    assert B._loglog_ratio(math.e, 2) == pytest.approx(6.0)
    assert B._loglog_ratio(math.e - 1e-9, 2) == 4


def test_randomized_lower_clamp_and_applicability():
    assert B.randomized_lower(100, 90, 10) == 1.0
    assert B.randomized_lower(100, 90, 10, clamp=False) < 1
    with pytest.raises(B.NotApplicable):
        B.randomized_lower(10, 5, 2)
    with pytest.raises(B.NotApplicable):
        B.distributed_rand_upper(1)


@pytest.mark.parametrize("k,l", [(1000, 5), (100, 10), (100, 2), (60, 2), (200, 20)])
def test_randomized_lower_nondecreasing_in_h(k, l):
    prev = -math.inf
    for h in range(l, k):
        try:
            v = B.randomized_lower(k, h, l)
        except B.NotApplicable:
            continue
        assert v >= prev - 1e-12
        prev = v


def test_randomized_lower_follows_formula_near_one():
    # when (k+1)/(k-h+l+1) approaches 1 the ln ln term dominates; the value is the raw formula
    v = B.randomized_lower(100, 64, 60)
    assert v == pytest.approx(float(mp_rand_lower(100, 64, 60)), rel=1e-12)


def test_tmax_envelope_is_sound():
    rng = random.Random(0)
    for _ in range(500):
        k = rng.randint(2, 400)
        h = rng.randint(1, k - 1)
        l = rng.randint(1, h)
        assert B.tmax_numeric(k, h, l) <= B.tmax_bound(k, h, l) + 1e-9


def test_tmax_small_s_is_at_most_l():
    for k, h, l in [(10, 5, 1), (20, 10, 3), (30, 12, 4)]:
        assert k / (k - h) < math.e
        assert B.tmax_numeric(k, h, l) <= l


def test_tmax_example_numeric():
    assert B.tmax_numeric(10, 9, 1) <= 1.96855264774609


def test_f_envelope_below_numeric_max():
    assert B.f_numeric_max(1000, 990, 5) >= B.f_segment_lower(1000, 990, 5)
    rng = random.Random(1)
    checked = 0
    while checked < 300:
        k = rng.randint(20, 2000)
        h = rng.randint(1, k - 1)
        l = rng.randint(1, h)
        # the envelope's derivation needs ln((k+1)/(k-h+l+1)) >= 1
        if (k + 1) / (k - h + l + 1) < math.e:
            continue
        assert B.f_numeric_max(k, h, l) >= B.f_segment_lower(k, h, l) - 1e-12
        checked += 1


def test_f_envelope_fails_near_one():
    # outside that regime the closed form overshoots the true maximum
    assert B.f_numeric_max(743, 471, 466) < B.f_segment_lower(743, 471, 466)


def test_randomized_lower_is_one_plus_l_times_envelope():
    for k, h, l in [(1000, 990, 5), (60, 40, 2), (500, 480, 3)]:
        raw = B.randomized_lower(k, h, l, clamp=False)
        assert raw == pytest.approx(1 + l * B.f_segment_lower(k, h, l), rel=1e-12)


def test_hk_upper_dominates_lower():
    for k, h, l in [(1000, 990, 5), (60, 40, 2), (500, 480, 3), (100, 90, 10)]:
        assert B.marking_hk_upper(k, h, l) >= B.randomized_lower(k, h, l)


def test_dense_bound_validation():
    with pytest.raises(B.BoundError):
        B.dense_family_size_bound(9, 9, 2)


def test_bound_table_marks_inapplicable():
    rows = dict(B.bound_table(10, 5, 2, kstar=13, n=13, r=2))
    assert rows["lru_upper"] == 10
    assert str(rows["randomized_lower"]).startswith("n/a")
    assert rows["dense_family_size_bound"] == pytest.approx(float(mp_dense(13, 10, 2)))

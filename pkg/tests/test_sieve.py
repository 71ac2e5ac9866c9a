from __future__ import annotations

import math
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from oracles import inclusion_exclusion as ie_oracle, primes_upto, sift_brute
from strongapprox.errors import SieveInputError
from strongapprox.sieve import (
    PrimeSet,
    SieveParams,
    SieveProblem,
    check_conditions,
    inclusion_exclusion,
    lower_bound_report,
    remainders,
    sift,
    uniform_omega,
)

ALL = PrimeSet.all_primes()


def interval(n, omega_primes=100, z=10.0):
    return SieveProblem(tuple(range(1, n + 1)), ALL, uniform_omega(primes_upto(omega_primes)), z)


def test_sift_examples():
    assert sift(SieveProblem(tuple(range(1, 31)), ALL, {}, 4)) == 10
    for z in (0.5, 1, 2):
        assert sift(SieveProblem(tuple(range(1, 31)), ALL, {}, z)) == 30
    assert sift(SieveProblem((2, 4, 8), PrimeSet.only([2]), {}, 3)) == 0


def test_zero_rejected_and_negatives_folded():
    with pytest.raises(SieveInputError):
        SieveProblem((1, 0, 3), ALL, {}, 5)
    assert SieveProblem((-6, 5), ALL, {}, 5).A == (6, 5)


def test_omega_range_enforced():
    with pytest.raises(SieveInputError):
        SieveProblem((1,), ALL, {2: Fraction(2)}, 5)
    with pytest.raises(SieveInputError):
        SieveProblem((1,), ALL, {3: Fraction(-1)}, 5)


def test_remainder_examples():
    rep = remainders(interval(100), 2)
    rec = {r.d: r for r in rep.records}[2]
    assert (rec.count, rec.main_term, rec.remainder) == (50, 50, 0)
    rec = {r.d: r for r in remainders(interval(101), 2).records}[2]
    assert rec.count == 50 and rec.remainder == Fraction(-1, 2)
    with pytest.raises(SieveInputError):
        remainders(interval(10), 1.5)


def test_remainder_records_squarefree_and_weighted():
    rep = remainders(interval(200), 30)
    ds = [r.d for r in rep.records]
    assert ds == [1, 2, 3, 5, 6, 7, 10, 11, 13, 14, 15, 17, 19, 21, 22, 23, 26, 29, 30]
    assert {r.d: r.weight for r in rep.records}[30] == 27
    assert rep.weighted_sum == sum(r.weight * abs(r.remainder) for r in rep.records)


def test_remainders_respect_admitted_primes():
    prob = SieveProblem(tuple(range(1, 50)), PrimeSet.only([3, 5]), uniform_omega([3, 5]), 10)
    assert [r.d for r in remainders(prob, 30).records] == [1, 3, 5, 15]


def test_mertens_conditions_pass():
    prob = SieveProblem(tuple(range(1, 1001)), ALL, uniform_omega(primes_upto(100)), 50)
    rep = check_conditions(prob, SieveParams(c=0.6, kappa=1))
    assert rep.passed["1"] and rep.passed["2"]
    assert rep.A0 > 1 and rep.A0 >= rep.A0_required


def test_declared_violation_of_condition_one():
    omega = uniform_omega(primes_upto(50))
    omega[2] = Fraction(9, 5)
    prob = SieveProblem(tuple(range(1, 200)), ALL, omega, 50)
    rep = check_conditions(prob, SieveParams(c=0.5))
    assert not rep.passed["1"]
    assert rep.violations["1"] == [2]
    assert rep.witnesses["1"] == 2


def test_condition_two_fails_for_small_kappa():
    prob = SieveProblem(tuple(range(1, 200)), ALL, uniform_omega(primes_upto(100)[2:], 3), 100)
    rep = check_conditions(prob, SieveParams(kappa=0.5, A0=1.01))
    assert not rep.passed["2"]
    assert rep.violations["2"]


def test_condition_three_reports_fit():
    prob = interval(1000, z=10)
    rep = check_conditions(prob)
    assert rep.passed["3"]
    assert rep.A2 >= rep.A2_required
    assert check_conditions(prob, SieveParams(A1=0.5)).passed["3"] is False


def test_lower_bound_interval():
    rep = lower_bound_report(interval(1000, z=10), tau=1, A1=1)
    # integers <= 1000 coprime to 210
    assert rep.S == 228
    assert rep.product == pytest.approx(1000 * (1 / 2) * (2 / 3) * (4 / 5) * (6 / 7))
    assert 0.95 < rep.ratio < 1.05
    assert rep.level_ok and not rep.flagged


def test_lower_bound_flags_empty_sift():
    prob = SieveProblem(tuple(range(2, 200, 2)), ALL, uniform_omega(primes_upto(20)), 5)
    rep = lower_bound_report(prob)
    assert rep.S == 0 and rep.ratio == 0 and rep.flagged
    assert rep.level_ok is None


@given(
    st.lists(st.integers(1, 10**6), min_size=0, max_size=60),
    st.sets(st.sampled_from(primes_upto(23)), max_size=9),
    st.floats(0.5, 30),
)
def test_sift_matches_inclusion_exclusion(A, primes, z):
    prob = SieveProblem(tuple(A), PrimeSet.only(primes), {}, z)
    s = sift(prob)
    assert s == inclusion_exclusion(prob) == ie_oracle(A, sorted(primes), z) == sift_brute(A, sorted(primes), z)


@given(st.lists(st.integers(-10**4, 10**4).filter(bool), max_size=80), st.floats(1, 40), st.floats(1, 40))
def test_sift_monotone_in_z(A, z1, z2):
    lo, hi = sorted((z1, z2))
    assert sift(SieveProblem(tuple(A), ALL, {}, hi)) <= sift(SieveProblem(tuple(A), ALL, {}, lo))


@given(st.integers(1, 500), st.integers(1, 500), st.integers(2, 60))
def test_interval_remainders_below_one(start, length, d_max):
    prob = SieveProblem(tuple(range(start, start + length)), ALL, uniform_omega(primes_upto(60)), 10)
    for r in remainders(prob, d_max).records:
        assert r.count == r.main_term + r.remainder
        assert abs(r.remainder) < 1

from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oracles import naive_points
from strongapprox.enumeration import (
    BallQuery,
    combine_targets,
    count_ball,
    enumerate_array,
    enumerate_ball,
    find_congruent_point,
    fit_counts,
    fit_growth,
    naive_ball,
)
from strongapprox.errors import InsufficientDataError, NotFoundError, PartialResultError, WorkbenchError
from strongapprox.groups import GroupSpec, ResidueElement


def sl2_count_by_divisors(T):
    """Count ad - bc = 1 with |entries| < T by factoring ad - 1 over the box."""
    total = 0
    for a in range(-T + 1, T):
        for d in range(-T + 1, T):
            n = a * d - 1
            if n == 0:
                total += (2 * T - 1) * 2 - 1  # b = 0 or c = 0
                continue
            for b in range(1, min(abs(n), T - 1) + 1):
                if n % b == 0 and abs(n // b) < T:
                    total += 2  # (b, c) and (-b, -c)
    return total


def quat_count_by_solving(T, a=2, b=3):
    total = 0
    for x in range(-T + 1, T):
        for y in range(-T + 1, T):
            for z in range(-T + 1, T):
                r = 1 - x * x + a * y * y + b * z * z
                if r % (a * b):
                    continue
                w2 = r // (a * b)
                if w2 < 0:
                    continue
                w = math.isqrt(w2)
                if w * w == w2 and w < T:
                    total += 1 if w == 0 else 2
    return total


def test_sl2_height_two_has_twenty(sl2):
    assert count_ball(BallQuery(sl2, 2)) == 20
    assert len(list(enumerate_ball(BallQuery(sl2, 2)))) == 20


def test_height_one_is_empty(sl2, quat):
    assert count_ball(BallQuery(sl2, 1)) == 0
    assert count_ball(BallQuery(quat, 1)) == 0


def test_quat_height_two_contains_plus_minus_one(quat):
    pts = {g.coords for g in enumerate_ball(BallQuery(quat, 2))}
    assert (1, 0, 0, 0) in pts and (-1, 0, 0, 0) in pts


def test_sl2_level_two_subset(sl2):
    full = naive_points("sl2", 0, 0, 2)
    expected = [c for c in full if all((ci - ti) % 2 == 0 for ci, ti in zip(c, (1, 0, 0, 1)))]
    assert count_ball(BallQuery.congruence_subgroup(sl2, 2, 2)) == len(expected)


@pytest.mark.parametrize("model", ["sl2", "quat"])
@pytest.mark.parametrize("T", [2, 3, 4, 5, 8])
def test_matches_quadruple_loop(model, T):
    spec = GroupSpec.sl2() if model == "sl2" else GroupSpec.quat(2, 3)
    got = [tuple(r) for r in enumerate_array(BallQuery(spec, T)).tolist()]
    assert got == naive_points(model, 2, 3, T)


@pytest.mark.parametrize("model", ["sl2", "quat"])
@pytest.mark.parametrize("cong", [(2, (1, 0, 0, 1)), (3, (1, 0, 0, 1)), (4, (1, 0, 0, 0)), (5, (2, 1, 1, 1))])
def test_congruence_matches_quadruple_loop(model, cong):
    spec = GroupSpec.sl2() if model == "sl2" else GroupSpec.quat(2, 3)
    if model == "quat" and cong[1] == (1, 0, 0, 1):
        cong = (cong[0], (1, 0, 0, 0))
    got = [tuple(r) for r in enumerate_array(BallQuery(spec, 7, cong)).tolist()]
    assert got == naive_points(model, 2, 3, 7, cong)


def test_vectorised_naive_oracle_agrees_with_pure_loop(quat):
    assert [tuple(r) for r in naive_ball(quat, 5).tolist()] == naive_points("quat", 2, 3, 5)


def test_frozen_sl2_counts_against_divisor_oracle(sl2):
    for T, expected in [(16, None), (32, 9844)]:
        oracle = sl2_count_by_divisors(T)
        assert count_ball(BallQuery(sl2, T)) == oracle
        if expected is not None:
            assert oracle == expected


def test_frozen_quat_count_against_solving_oracle(quat):
    assert quat_count_by_solving(32) == 4302
    assert count_ball(BallQuery(quat, 32)) == 4302


def test_frozen_larger_counts(sl2, quat):
    # values cross-checked once against the oracles above; frozen here
    assert count_ball(BallQuery(sl2, 64)) == 39284
    assert count_ball(BallQuery(quat, 64)) == 16654
    assert count_ball(BallQuery(quat, 128)) == 68350


@settings(max_examples=25)
@given(st.integers(2, 12), st.sampled_from(["sl2", "quat"]))
def test_monotone_in_T(T, model):
    spec = GroupSpec.sl2() if model == "sl2" else GroupSpec.quat(2, 3)
    assert count_ball(BallQuery(spec, T)) <= count_ball(BallQuery(spec, T + 1))
    assert count_ball(BallQuery.congruence_subgroup(spec, T, 3)) <= count_ball(BallQuery(spec, T))


@settings(max_examples=20)
@given(st.integers(3, 20))
def test_crt_consistency(T):
    spec = GroupSpec.sl2()
    joint = enumerate_array(BallQuery.congruence_subgroup(spec, T, 6))
    both = [r for r in enumerate_array(BallQuery.congruence_subgroup(spec, T, 2)).tolist()
            if all((c - t) % 3 == 0 for c, t in zip(r, (1, 0, 0, 1)))]
    assert joint.tolist() == both


def test_worker_count_does_not_change_output(quat):
    q = BallQuery.congruence_subgroup(quat, 40, 4)
    assert np.array_equal(enumerate_array(q, 1), enumerate_array(q, 3))


def test_budget_gives_partial_result(sl2):
    with pytest.raises(PartialResultError) as info:
        enumerate_array(BallQuery(sl2, 32, max_elements=100))
    assert len(info.value.elements) <= 100


def test_invalid_queries(sl2):
    with pytest.raises(WorkbenchError):
        BallQuery(sl2, 0)
    with pytest.raises(WorkbenchError):
        BallQuery(sl2, 4, (0, (1, 0, 0, 1)))


def test_fit_of_exact_power_law():
    Ts = [32, 64, 128, 256, 512]
    rep = fit_counts(Ts, [7 * t * t for t in Ts])
    assert rep.a == pytest.approx(2, abs=1e-9)
    assert rep.b == pytest.approx(0, abs=1e-8)
    assert rep.a_rational == 2


def test_fit_rejects_zero_counts_and_short_lists():
    with pytest.raises(InsufficientDataError):
        fit_counts([4, 8, 16, 32], [0, 1, 2, 3])
    with pytest.raises(InsufficientDataError):
        fit_counts([4, 8, 16], [1, 2, 3])


def test_sl2_growth_exponent(sl2):
    rep = fit_growth(sl2, [32, 64, 128, 256])
    assert 1.7 <= rep.a <= 2.3


def test_find_congruent_point_examples(sl2, quat):
    g = find_congruent_point(sl2, [(3, ResidueElement.identity(sl2, 3))], 10)
    assert g.height <= 3 and all((c - t) % 3 == 0 for c, t in zip(g.coords, (1, 0, 0, 1)))
    assert find_congruent_point(sl2, [], 4).coords == (1, 0, 0, 1)
    h = find_congruent_point(quat, [(2, ResidueElement(quat, 2, (1, 0, 0, 0)))], 10)
    assert all((c - t) % 2 == 0 for c, t in zip(h.coords, (1, 0, 0, 0)))
    assert h.coords == (-1, 0, 0, 0)  # height 1, lexicographically first
    # a non-identity class mod 5 of the quaternion group
    target = ResidueElement(quat, 5, (3, 2, 0, 0))
    k = find_congruent_point(quat, [(5, target)], 20)
    assert tuple(c % 5 for c in k.coords) == target.coords
    brute = [c for c in naive_points("quat", 2, 3, k.height + 1) if tuple(x % 5 for x in c) == target.coords]
    assert min(max(map(abs, c)) for c in brute) == k.height


def test_find_congruent_point_not_found(quat):
    with pytest.raises(NotFoundError):
        find_congruent_point(quat, [(7, ResidueElement(quat, 7, (3, 2, 0, 0)))], 2)


def test_combine_targets_requires_coprime(sl2):
    with pytest.raises(WorkbenchError):
        combine_targets(sl2, [(2, ResidueElement.identity(sl2, 2)), (4, ResidueElement.identity(sl2, 4))])

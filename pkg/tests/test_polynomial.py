from __future__ import annotations

import numpy as np
from hypothesis import given, strategies as st

from strongapprox.groups import GroupSpec, conj_coords, mul_coords
from strongapprox.polynomial import RegularFunction, trace_sl2, variables

coords = st.tuples(*[st.integers(-100, 100)] * 4)
polys = st.dictionaries(
    st.tuples(*[st.integers(0, 2)] * 4), st.integers(-20, 20), max_size=5
).map(RegularFunction.from_dict)


@given(polys, polys, coords)
def test_ring_operations_match_evaluation(f, g, c):
    assert (f + g)(c) == f(c) + g(c)
    assert (f - g)(c) == f(c) - g(c)
    assert (f * g)(c) == f(c) * g(c)
    assert (3 * f)(c) == 3 * f(c)


@given(polys, st.lists(coords, min_size=1, max_size=20), st.integers(1, 10**6))
def test_vectorised_evaluation_matches_exact(f, rows, m):
    arr = np.array(rows, dtype=np.int64)
    got = f.evaluate_mod(arr, m).tolist()
    assert got == [f(r) % m for r in rows]


@given(polys, coords)
def test_substitute_is_composition(f, c):
    x = variables()
    sub = [x[0] + x[1], x[1] * x[2], x[3] - 1, x[0]]
    inner = [s(c) for s in sub]
    assert f.substitute(sub)(c) == f(inner)


@given(polys)
def test_json_round_trip(f):
    assert RegularFunction.from_json(f.to_json()) == f


def test_flagship_quotient_formula():
    spec = GroupSpec.quat(2, 3)
    g = variables()
    i = (0, 1, 0, 0)
    pi = mul_coords(spec, mul_coords(spec, conj_coords(spec, g), i), g)
    # the ij-coefficient of conj(g) i g is 2 x z - 4 y w on B(2, 3)
    assert pi[3] == RegularFunction.from_dict({(1, 0, 1, 0): 2, (0, 1, 0, 1): -4})
    assert pi[0].is_zero


def test_trace_and_constants():
    assert trace_sl2()((2, 3, 1, 2)) == 4
    one = RegularFunction.constant(1)
    assert one.constant_value() == 1 and one.degree == 0
    assert trace_sl2().constant_value() is None
    assert str(RegularFunction.from_dict({(1, 0, 0, 0): 2, (0, 0, 0, 1): -1})) == "-c4 + 2*c1"

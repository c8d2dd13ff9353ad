import math
import warnings
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from qcayley.fusion import (
    BoundaryRegimeWarning,
    FusionParams,
    IndexDomainError,
    ParameterDomainError,
    c_squared,
    chebyshev_qdim,
    qdim,
    s_squared,
    weight_table,
)


def test_qdim_integer_delta():
    assert list(qdim(FusionParams(3), 4)) == [0, 1, 3, 8, 21, 55]
    assert list(qdim(FusionParams(4), 3)) == [0, 1, 4, 15, 56]


def test_qdim_rational_delta_is_exact():
    d = qdim(FusionParams(2.5), 3)
    assert d.d(1) == Fraction(5, 2)
    assert d.d(2) == Fraction(21, 4)
    assert d.d(-1) == 0
    with pytest.raises(IndexError):
        d.d(4)


@pytest.mark.filterwarnings("ignore::qcayley.fusion.BoundaryRegimeWarning")
@pytest.mark.parametrize("delta", [2.0, 2.5, 3.0, 4.0, 7.3])
def test_recursion_matches_closed_form(delta):
    seq = qdim(FusionParams(delta, exact_mode=False), 30)
    for k in range(31):
        assert seq.d(k) == pytest.approx(chebyshev_qdim(delta, k), rel=1e-11)


def test_boundary_delta_warns_and_is_linear():
    with pytest.warns(BoundaryRegimeWarning):
        p = FusionParams(2)
    assert p.is_boundary
    assert list(qdim(p, 4))[1:] == [1, 2, 3, 4, 5]


@pytest.mark.parametrize("bad", [1.5, 0, -3, 1.999])
def test_delta_below_two_rejected(bad):
    with pytest.raises(ParameterDomainError):
        FusionParams(bad)


def test_s_squared_examples():
    p = FusionParams(3)
    assert s_squared(p, 2, 1) == Fraction(1, 8)
    assert s_squared(p, 3, 1) == Fraction(1, 56)
    assert s_squared(p, 5, 0) == 0
    assert s_squared(p, 4, 4) == 1
    assert c_squared(p, 2, 1) == Fraction(7, 8)


@pytest.mark.parametrize("k,l", [(0, 0), (2, 3), (1, -1)])
def test_index_domain(k, l):
    with pytest.raises(IndexDomainError):
        s_squared(FusionParams(3), k, l)


@pytest.mark.parametrize("delta", [3, 4, 2.5])
@pytest.mark.parametrize("l", [0, 1, 2, 3])
def test_float_table_matches_exact(delta, l):
    ex = weight_table(FusionParams(delta), l, 60)
    fl = weight_table(FusionParams(delta, exact_mode=False), l, 60)
    assert ex.levels() == fl.levels()
    for k in ex.levels():
        assert fl[k].s_squared == pytest.approx(float(ex[k].s_squared), rel=1e-12, abs=1e-300)
        assert fl[k].s_squared == pytest.approx(s_squared(FusionParams(delta, exact_mode=False), k, l), rel=1e-12, abs=1e-300)


def test_float_path_survives_large_levels():
    t = weight_table(FusionParams(3.0, exact_mode=False), 2, 2000)
    assert t[2000].s_squared >= 0
    assert t[2000].c_squared == pytest.approx(1.0)
    assert all(math.isfinite(t[k].c) for k in t.levels())


def test_exact_roots():
    e = weight_table(FusionParams(3), 1, 3)[2]
    assert e.c_exact() * e.c_exact() == Fraction(7, 8)
    assert float(e.s_exact()) == pytest.approx(math.sqrt(1 / 8))


def test_records_are_strings_in_exact_mode():
    rec = weight_table(FusionParams(3), 1, 2).to_records()
    assert rec[1]["c_squared"] == "7/8"


@given(
    st.fractions(min_value=2, max_value=12, max_denominator=10),
    st.integers(0, 5),
    st.integers(0, 25),
)
def test_weights_are_a_probability_split(delta, l, extra):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", BoundaryRegimeWarning)
        p = FusionParams(delta)
    k = max(l, 1) + extra
    s2 = s_squared(p, k, l)
    assert 0 <= s2 <= 1
    assert s2 + c_squared(p, k, l) == 1


@given(st.fractions(min_value=Fraction(21, 10), max_value=12, max_denominator=10), st.integers(1, 5))
def test_s_squared_decreases_in_level(delta, l):
    p = FusionParams(delta)
    t = weight_table(p, l, l + 15)
    vals = [t[k].s_squared for k in t.levels()]
    assert all(b < a for a, b in zip(vals, vals[1:]))

import math
import warnings
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qcayley import shift_spectra as ss
from qcayley.fusion import FusionParams

LN2 = math.log(2)


def test_cayley_shift_weights():
    sh = ss.from_cayley(FusionParams(3), 1, 4)
    assert sh.weights_sq == (Fraction(7, 8), Fraction(55, 56), Fraction(384, 385))
    assert sh.exact
    with pytest.raises(ValueError):
        ss.from_cayley(FusionParams(3), 0, 4)


def test_shift_rejects_weights_outside_unit_interval():
    with pytest.raises(ValueError):
        ss.WeightedShift((Fraction(3, 2),))
    with pytest.raises(ValueError):
        ss.WeightedShift((0,))


def test_truncate_bounds():
    sh = ss.WeightedShift.unit(5)
    assert sh.truncate(3).n == 3
    with pytest.raises(ValueError):
        sh.truncate(6)


def test_tridiagonal_matches_dense():
    sh = ss.from_cayley(FusionParams(4), 2, 7)
    d, e = ss.real_part_tridiagonal(sh)
    dense = ss.real_part_dense(sh)
    assert np.allclose(np.diag(dense, -1), e)
    assert np.allclose(np.diag(dense), d)


def test_single_site_is_atom_at_zero():
    mu = ss.spectral_measure(ss.WeightedShift.unit(1))
    assert mu.eigenvalues.tolist() == [0.0]
    assert mu.masses.tolist() == [1.0]
    assert ss.detclass_functional(ss.WeightedShift.unit(1)) == 0.0


def test_measure_mass_and_eigen_residual():
    sh = ss.from_cayley(FusionParams(3, exact_mode=False), 1, 300)
    mu = ss.spectral_measure(sh)
    assert mu.total_mass() == pytest.approx(1.0, abs=1e-12)
    H = ss.real_part_dense(sh)
    lam = mu.eigenvalues
    assert np.max(np.abs(lam)) < 1
    w, V = np.linalg.eigh(H)
    assert np.allclose(np.sort(lam), w, atol=1e-12)


def test_csv_export_columns():
    text = ss.spectral_measure(ss.WeightedShift.unit(3)).to_csv().splitlines()
    assert text[0] == "lambda,mass"
    assert len(text) == 4


def test_unit_moments():
    m = ss.moments_dyck(ss.WeightedShift.unit(7), 6)
    assert m.m(1) == Fraction(1, 4)
    assert m.m(2) == Fraction(1, 8)
    assert m.values == [ss.semicircle_moment(k) for k in range(7)]


def test_half_first_weight():
    sh = ss.WeightedShift.from_weights([0.5, 1, 1, 1])
    assert ss.moments_dyck(sh, 1).m(1) == pytest.approx(1 / 16)
    exact = ss.WeightedShift((Fraction(1, 4), 1, 1, 1))
    assert ss.moments_dyck(exact, 1).m(1) == Fraction(1, 16)


def test_catalan():
    assert [ss.catalan(k) for k in range(6)] == [1, 1, 2, 5, 14, 42]
    for k in range(9):
        assert sum(1 for _ in ss.dyck_paths(k)) == ss.catalan(k)


def test_series_coefficients_are_negative_harmonic_numbers():
    a = ss.series_coefficients_a(5)
    assert a == [0, -1, Fraction(-3, 2), Fraction(-11, 6), Fraction(-25, 12), Fraction(-137, 60)]
    neg_log = [Fraction(0)] + [Fraction(-1, j) for j in range(1, 31)]
    geom = [Fraction(1)] * 31
    assert ss.cauchy_product(neg_log, geom, 30) == ss.series_coefficients_a(30)
    assert all(x <= 0 for x in ss.series_coefficients_a(100))


def test_float_coefficients_match_exact():
    ex = ss.series_coefficients_a(50)
    fl = ss.series_coefficients_a(50, exact=False)
    assert np.allclose([float(x) for x in ex], fl, rtol=1e-14)


def test_semicircle_quadrature_closed_forms():
    # log potential of the semicircle at the edge is 1/2 - ln 2
    assert ss.semicircle_integral(lambda t: 1.0) == pytest.approx(1.0, abs=1e-12)
    assert ss.semicircle_integral(lambda t: t * t) == pytest.approx(0.25, abs=1e-12)
    assert ss.semicircle_functional(weighted=False, prefactor=1.0) == pytest.approx(0.5 - LN2, abs=1e-10)
    assert ss.semicircle_functional(prefactor=1.0) == pytest.approx(-2 * LN2, abs=1e-10)


def test_series_bracket_contains_the_semicircle_limit():
    est = ss.detclass_series(ss.WeightedShift.unit(2001), 2000)
    assert est.unit_limit == pytest.approx(-4 * LN2, abs=1e-10)
    assert est.lower_bound <= -4 * LN2 + 1e-9 <= est.partial_sum
    assert est.partial_sum == pytest.approx(est.unit_partial_sum, rel=1e-14)


def test_series_k0_is_zero():
    est = ss.detclass_series(ss.WeightedShift.unit(3), 0)
    assert est.partial_sum == 0.0


def test_series_needs_enough_positions():
    with pytest.raises(ValueError):
        ss.detclass_series(ss.WeightedShift.unit(5), 10)


def test_fo_series_dominates_unit_series():
    sh = ss.from_cayley(FusionParams(3), 1, 301)
    est = ss.detclass_series(sh, 300)
    assert est.partial_sum >= est.unit_partial_sum
    assert est.lower_bound <= est.partial_sum


def test_detclass_report_fo():
    sh = ss.from_cayley(FusionParams(3, exact_mode=False), 1, 1600)
    rep = ss.detclass_report(sh)
    assert rep.all_finite and rep.converged
    d = rep.differences()
    assert all(b < a for a, b in zip(d, d[1:]))
    assert rep.reference == pytest.approx(-LN2 / 4, abs=1e-10)
    js = rep.to_json()
    assert [t["n"] for t in js["truncations"]] == [100, 200, 400, 800, 1600]


def test_unweighted_functional_tracks_semicircle_for_unit_shift():
    sh = ss.WeightedShift.unit(3200)
    v = ss.detclass_functional(sh, weighted=False)
    assert v == pytest.approx(ss.semicircle_functional(weighted=False), abs=5e-3)


def test_precision_warning_near_one(monkeypatch):
    sh = ss.WeightedShift((1.0,))
    with warnings.catch_warnings():
        warnings.simplefilter("error", ss.PrecisionWarning)
        ss.detclass_functional(sh)  # eigenvalues +-1/2
    near_edge = ss.SpectralMeasure(np.array([-0.5, 1 - 1e-15]), np.array([0.5, 0.5]))
    monkeypatch.setattr(ss, "spectral_measure", lambda _: near_edge)
    with pytest.warns(ss.PrecisionWarning):
        v = ss.detclass_functional(sh)
    assert math.isfinite(v)


def test_weighted_functional_of_unit_shift_approaches_semicircle_value():
    # bounded: tends to -ln2/4 with the (2/pi) sqrt(1-t^2) density
    vals = [ss.detclass_functional(ss.WeightedShift.unit(n)) for n in (800, 1600, 3200)]
    assert abs(vals[-1] - (-LN2 / 4)) < 1e-3
    assert abs(vals[2] - vals[1]) < abs(vals[1] - vals[0])


def test_range_proxy_unit_shift():
    # <delta_0, (1 - H^2)^{-1} delta_0> = 2 for the semicircle law
    assert ss.range_proxy(ss.WeightedShift.unit(2000)) == pytest.approx(2.0, rel=2e-2)


def test_fk_logdet_examples():
    assert ss.fk_logdet(np.eye(3)) == (0.0, 1.0)
    v, det = ss.fk_logdet(np.diag([4.0, 1.0]))
    assert v == pytest.approx(math.log(4) / 2)
    assert det == pytest.approx(2.0)
    v, det = ss.fk_logdet(np.diag([0.0, math.e**2]))
    assert v == pytest.approx(1.0)
    assert det == pytest.approx(math.e)


def test_fk_logdet_vector_state_and_errors():
    v, _ = ss.fk_logdet(np.diag([4.0, 1.0]), state=np.array([1.0, 0.0]))
    assert v == pytest.approx(math.log(4))
    with pytest.raises(ValueError):
        ss.fk_logdet(np.array([[0.0, 1.0], [0.0, 0.0]]))


shift_weights = st.lists(
    st.fractions(min_value=Fraction(1, 16), max_value=1, max_denominator=16), min_size=0, max_size=9
)


@settings(max_examples=60, deadline=None)
@given(shift_weights)
def test_dp_equals_enumeration(ws):
    sh = ss.WeightedShift(tuple(ws))
    assert ss.moments_dyck(sh, 6).values == ss.moments_enumerate(sh, 6).values


@settings(max_examples=60, deadline=None)
@given(shift_weights)
def test_dp_equals_eigen_moments(ws):
    sh = ss.WeightedShift(tuple(ws))
    k = sh.n - 1
    dp = [float(x) for x in ss.moments_dyck(sh, k).values]
    assert np.allclose(dp, ss.eigen_moments(sh, k), atol=1e-10, rtol=0)


@settings(max_examples=60, deadline=None)
@given(shift_weights)
def test_domination_by_semicircle(ws):
    sh = ss.WeightedShift(tuple(ws))
    m = ss.moments_dyck(sh, 12)
    assert all(0 <= m.m(k) <= ss.semicircle_moment(k) for k in range(13))


@settings(max_examples=40, deadline=None)
@given(shift_weights)
def test_float_dp_matches_exact_dp(ws):
    sh = ss.WeightedShift(tuple(ws))
    fl = ss.WeightedShift(tuple(float(w) for w in ws))
    ex = [float(x) for x in ss.moments_dyck(sh, 10).values]
    assert np.allclose(ex, [float(x) for x in ss.moments_dyck(fl, 10).values], rtol=1e-12)


@settings(max_examples=30, deadline=None)
@given(shift_weights, st.integers(1, 40))
def test_series_comparison_inequality(ws, K):
    ws = list(ws) + [Fraction(1)] * (K + 1)
    est = ss.detclass_series(ss.WeightedShift(tuple(ws)), K)
    assert est.partial_sum >= est.unit_partial_sum - 1e-12

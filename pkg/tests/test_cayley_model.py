import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qcayley import cayley_model as cm
from qcayley.exact import Surd
from qcayley.fusion import FusionParams


def spec(delta=3, l=1, k_max=12, exact=True):
    return cm.SectorSpec(FusionParams(delta, exact_mode=exact), l, k_max)


def test_sector_needs_room_above_l():
    with pytest.raises(ValueError):
        spec(l=3, k_max=4)
    with pytest.raises(ValueError):
        spec(l=-1)


def test_cell_layout_l0_has_no_off_corners():
    b = cm.CellBasis(0, 5)
    assert {c for c, _ in b} == {"++", "--"}
    assert b.level_range("++") == (0, 5)
    assert b.level_range("--") == (1, 5)
    with pytest.raises(KeyError):
        b.level_range("+x")


def test_cell_layout_l2():
    b = cm.CellBasis(2, 6)
    assert b.level_range("++") == (1, 6)
    assert b.level_range("+-") == (2, 6)
    assert b.level_range("-+") == (2, 6)
    assert b.level_range("--") == (3, 6)
    assert len(b) == 6 + 5 + 5 + 4


def test_theta_entries_match_weights():
    th = cm.build_theta(spec())
    # +- at level 1 ascends to +- at level 2 with weight -c_{2,1}
    assert th[("+-", 2), ("+-", 1)] == -Surd.sqrt(Fraction(7, 8))
    assert th[("+-", 2), ("++", 1)] == Surd.sqrt(Fraction(1, 8))
    assert float(th[("--", 2), ("+-", 1)]) == pytest.approx(math.sqrt(1 / 8))


def test_bottom_off_corner_cell_has_no_shift_partner():
    # c_{l,l} = 0 and s_{l,l} = 1: the bottom +- cell only talks to --
    th = cm.build_theta(spec())
    assert th[("+-", 1), ("++", 0)] == 1
    assert th[("--", 2), ("+-", 1)] != 0


def test_W_swaps_off_corners_and_fixes_the_rest():
    W = cm.build_W(spec())
    assert W[("-+", 3), ("+-", 3)] == 1
    assert W[("++", 3), ("++", 3)] == 1
    assert W[("+-", 3), ("+-", 3)] == 0


def test_corner_projection_rejects_unknown_label():
    with pytest.raises(KeyError):
        cm.corner_projection(spec(), "+")


def test_lambda_undefined_on_classical_sector():
    with pytest.raises(ValueError):
        cm.build_lambda(spec(l=0))


def test_r_is_a_weighted_shift_on_the_off_corner():
    s = spec(exact=False)
    r = cm.build_r(s).to_dense()
    b = cm.CellBasis(1, s.k_max)
    i, j = b.index("+-", 3), b.index("+-", 2)
    assert r[i, j] == pytest.approx(math.sqrt(55 / 56))
    assert np.count_nonzero(r) == s.k_max - 1


def test_interior_mask_depths():
    b = cm.CellBasis(1, 10)
    assert len(cm.interior_mask(b, 0)) == len(b)
    levels = {k for i in cm.interior_mask(b, 2) for k in [b.cells[i][1]]}
    assert max(levels) == 8


@pytest.mark.parametrize("delta", [3, 4, 2.5])
@pytest.mark.parametrize("l", [0, 1, 2])
def test_all_identities_exact(delta, l):
    rep = cm.verify_identities(spec(delta, l, 14))
    assert rep.passed, rep.failures()
    assert all(c.exact_zero for c in rep.checks)


@pytest.mark.parametrize("delta", [3.0, 4.0, 2.5, 2.0])
@pytest.mark.filterwarnings("ignore::qcayley.fusion.BoundaryRegimeWarning")
def test_all_identities_float(delta):
    rep = cm.verify_identities(spec(delta, 2, 40, exact=False), tol=1e-12)
    assert rep.passed, rep.failures()


def test_classical_sector_is_involutive_and_others_are_not():
    assert cm.verify_identities(spec(l=0))["theta_squared_identity"].passed
    s = spec(l=1)
    th = cm.build_theta(s)
    sq = th @ th - cm.identity(th.basis, True)
    assert not sq.is_zero_on(cm.interior_mask(th.basis, 2))


def test_truncation_edge_is_excluded_by_mask():
    s = spec(exact=False)
    th = cm.build_theta(s)
    gram = th.T @ th - cm.identity(th.basis, False)
    assert gram.max_abs() > 0.1
    assert gram.max_abs(cm.interior_mask(th.basis, 2)) < 1e-14


@pytest.mark.parametrize("block", sorted(cm.DEFAULT_SIGNS))
def test_any_single_sign_flip_breaks_unitarity_or_reflection(block):
    signs = dict(cm.DEFAULT_SIGNS)
    signs[block] = -signs[block]
    rep = cm.verify_identities(spec(exact=False), signs=signs)
    assert not rep.passed


def test_unknown_sign_block_rejected():
    with pytest.raises(KeyError):
        cm.build_theta(spec(), signs={("++", "++"): 1})


def test_sign_search_contains_default():
    found = cm.search_sign_patterns(spec(3, 1, 8))
    assert cm.DEFAULT_SIGNS in found
    # gauge freedom: flipping whole corners gives equivalent conventions
    assert len(found) == 8


def test_re_theta_spectrum_in_unit_interval():
    lam, V = cm.re_theta_spectrum(spec(exact=False, k_max=20))
    assert np.all(np.abs(lam) <= 1 + 1e-12)
    assert np.allclose(V.T @ V, np.eye(len(lam)))


def test_exports():
    th = cm.build_theta(spec(k_max=4))
    mm = th.to_matrix_market()
    assert mm.startswith("%%MatrixMarket matrix coordinate real general")
    assert "% cell 1 ++ 0" in mm
    js = th.to_json()
    assert len(js["entries"]) == th.nnz()
    assert js["cells"][0] == {"corner": "++", "level": 0}


def test_exact_and_float_agree():
    a = cm.build_theta(spec(2.5, 2, 10)).to_dense()
    b = cm.build_theta(spec(2.5, 2, 10, exact=False)).to_dense()
    assert np.allclose(a, b, atol=1e-15)


@settings(max_examples=25, deadline=None)
@given(
    st.fractions(min_value=2, max_value=9, max_denominator=6),
    st.integers(0, 3),
)
@pytest.mark.filterwarnings("ignore::qcayley.fusion.BoundaryRegimeWarning")
def test_identities_hold_for_random_rational_delta(delta, l):
    rep = cm.verify_identities(spec(delta, l, l + 8))
    assert rep.passed, rep.failures()

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gbkp.bilinear import (
    BilinearPoly,
    ExpWave,
    characteristics,
    d_op_on_exp_pair,
    h_hat,
    h_hat_scale,
    h_hat_terms,
    recursion_defect,
    recursion_factor,
    residual_spectrum,
)
from gbkp.errors import DimensionError
from gbkp.solver import WaveParams
from gbkp.theta import PeriodMatrix, Truncation

settings.register_profile("gbkp", max_examples=40, deadline=None)
settings.load_profile("gbkp")


def zero_waves(n):
    return WaveParams(np.zeros(n), np.zeros(n), np.zeros(n), np.zeros(n))


def test_poly_at_origin_is_c():
    assert BilinearPoly(u0=0.7, c=2.5)(0, 0, 0, 0) == 2.5


def test_d_op_examples():
    w = ExpWave(0.3, -1.2, 0.4, 2.0)
    assert d_op_on_exp_pair(BilinearPoly(), w, w) == 0
    assert d_op_on_exp_pair(BilinearPoly(c=5.0), w, w) == 5
    assert d_op_on_exp_pair(BilinearPoly(), ExpWave(1, 1, 0, 1), ExpWave()) == 0


def test_d_op_hand_value():
    # X=2, Y=1, Z=-1, T=3 : 3 + 3*2*(-1) - 8 - 3*0.5*4 + 1
    poly = BilinearPoly(u0=0.5, c=1.0)
    val = d_op_on_exp_pair(poly, ExpWave(2, 1, -1, 3), ExpWave())
    assert val == 3 - 6 - 8 - 6 + 1


@given(st.lists(st.floats(-3, 3), min_size=8, max_size=8), st.floats(-2, 2), st.floats(-2, 2))
def test_d_op_swap_negates_differences(vals, u0, c):
    # every monomial of H has even total degree, so H(-d) = H(d) term by term
    poly = BilinearPoly(u0, c)
    w1, w2 = ExpWave(*vals[:4]), ExpWave(*vals[4:])
    d = w1.vector() - w2.vector()
    assert d_op_on_exp_pair(poly, w2, w1) == pytest.approx(poly(*(-d)), rel=1e-14, abs=1e-12)
    assert d_op_on_exp_pair(poly, w2, w1) == pytest.approx(d_op_on_exp_pair(poly, w1, w2), rel=1e-14, abs=1e-12)


@given(st.lists(st.floats(-3, 3), min_size=4, max_size=4), st.floats(-2, 2), st.floats(-2, 2))
def test_magnitude_bounds_value(d, u0, c):
    poly = BilinearPoly(u0, c)
    assert abs(poly(*d)) <= poly.magnitude(*d) * (1 + 1e-15) + 1e-300


def test_characteristics():
    assert [len(characteristics(n)) for n in (1, 2, 3)] == [2, 4, 8]
    ch3 = {tuple(c) for c in characteristics(3)}
    assert len(ch3) == 8
    with pytest.raises(DimensionError):
        characteristics(4)


def test_h_hat_bare_weight_sum():
    tau = PeriodMatrix([[0.8]])
    tr = Truncation(10)
    for bit in (0, 1):
        n = np.arange(-10, 11)
        ref = np.sum(np.exp(-math.pi * 0.8 * ((n - bit) ** 2 + n**2)))
        assert h_hat(BilinearPoly(c=1.0), zero_waves(1), tau, tr, np.array([bit])) == pytest.approx(ref, rel=1e-14)


def test_h_hat_small_nome_is_c():
    tau = PeriodMatrix.from_nomes([1e-8])
    w = WaveParams([1.0], [1.0], [1.0], [-3.0])
    val = h_hat(BilinearPoly(c=0.37), w, tau, Truncation(3), np.array([0]))
    assert val == pytest.approx(0.37, rel=1e-10)  # n = +-1 terms are O(lambda^2)


def test_h_hat_dimension_checks():
    tau = PeriodMatrix(np.eye(2))
    with pytest.raises(DimensionError):
        h_hat(BilinearPoly(), zero_waves(2), tau, Truncation(3), np.array([0]))
    with pytest.raises(DimensionError):
        h_hat(BilinearPoly(), zero_waves(1), tau, Truncation(3), np.array([0, 0]))


def test_h_hat_scale_positive():
    w = WaveParams([1.0], [1.0], [1.0], [-3.0])
    assert h_hat_scale(BilinearPoly(c=1), w, PeriodMatrix([[1.0]]), Truncation(5), np.array([1])) > 0


def test_solved_n1_closes(sol1):
    w = sol1.waves
    for s in characteristics(1):
        assert abs(h_hat(w.poly(), w, sol1.tau, sol1.truncation, s)) < 1e-10


def test_residual_spectrum_examples(sol1):
    assert residual_spectrum(BilinearPoly(c=0.0), zero_waves(1), PeriodMatrix([[1.0]]), Truncation(4), 3) == 0.0
    w = sol1.waves
    assert residual_spectrum(w.poly(), w, sol1.tau, sol1.truncation, 3) < 1e-9
    bad = WaveParams(w.alpha, w.rho, w.k, w.omega + 1e-3, w.delta, w.u0, w.c)
    assert residual_spectrum(bad.poly(), bad, sol1.tau, sol1.truncation, 3) >= 1e-5


def test_residual_spectrum_return_all(sol1):
    w = sol1.waves
    peak, shifts, values = residual_spectrum(w.poly(), w, sol1.tau, sol1.truncation, 2, return_all=True)
    assert shifts.shape == (5, 1) and values.shape == (5,)
    assert peak == np.max(np.abs(values))


def test_summation_order_robustness(sol2):
    w = sol2.waves
    for s in characteristics(2):
        terms = h_hat_terms(w.poly(), w, sol2.tau, sol2.truncation, s)
        fwd, rev = np.sum(terms), np.sum(terms[::-1])
        assert abs(fwd - rev) <= 1e-13 * np.sum(np.abs(terms))


@st.composite
def n3_cases(draw):
    f = st.floats(-1.5, 1.5)
    vecs = [np.array(draw(st.lists(f, min_size=3, max_size=3))) for _ in range(4)]
    b = np.array(draw(st.lists(st.floats(-0.2, 0.2), min_size=9, max_size=9))).reshape(3, 3)
    diag = np.array(draw(st.lists(st.floats(0.8, 1.6), min_size=3, max_size=3)))
    tau = PeriodMatrix(b @ b.T + np.diag(diag))
    shift = np.array(draw(st.lists(st.integers(-2, 3), min_size=3, max_size=3)), dtype=float)
    j = draw(st.integers(0, 2))
    return WaveParams(*vecs, u0=draw(f), c=draw(f)), tau, shift, j


@given(n3_cases())
def test_recursion_n3(case):
    waves, tau, shift, j = case
    tr = Truncation(4)
    radius = tr.radius + 3
    lhs = np.sum(h_hat_terms(waves.poly(), waves, tau, tr, shift, radius, magnitude=True)[1])
    defect = recursion_defect(waves.poly(), waves, tau, tr, shift, j)
    assert defect <= 1e-12 * max(lhs, 1e-300)


def test_recursion_factor_explicit():
    im = np.array([[1.0, 0.1, 0.2], [0.1, 1.1, 0.3], [0.2, 0.3, 0.9]])
    tau = PeriodMatrix(im)
    m = np.array([2.0, -1.0, 1.0])
    # j = 3 branch in the symmetric form: (tau m)_3 - tau_33
    expected = np.exp(2j * math.pi * 1j * (m[0] * im[2, 0] + m[1] * im[2, 1] + (m[2] - 1) * im[2, 2]))
    assert recursion_factor(tau, m, 2) == pytest.approx(expected, rel=1e-14)

"""Formal series with logarithms: derivatives, monodromy, residues, expansions."""
from fractions import Fraction
from math import comb

import pytest
from hypothesis import given, settings, strategies as st

from twistvoa.errors import IllFormedProduct, LogResidueAmbiguity
from twistvoa.exactalg import ONE, TWO_PI_I, Scalar, binomial, exp_2pii
from twistvoa.logcalc import (Binomial, Exponent, LogSeries, MultiSeries, delta_substitute,
                              full_derivative, inverse_monodromy, iota_expand, monodromy,
                              partial_exponentials, partial_log, partial_x, residue, set_log_zero,
                              translation_eigen_polynomial)

exps = st.fractions(min_value=-4, max_value=4, max_denominator=4)


@st.composite
def series(draw, K=3):
    terms = {}
    for _ in range(draw(st.integers(0, 5))):
        key = (draw(exps), draw(st.integers(0, K)))
        terms[key] = Scalar(draw(st.fractions(min_value=-3, max_value=3, max_denominator=5)))
    return LogSeries(terms, K=K)


def test_exponent_coset():
    e = Exponent.of(Fraction(-3, 2))
    assert (e.coset, e.offset) == (Fraction(1, 2), -2)
    assert (e + 1).value == Fraction(-1, 2)
    with pytest.raises(ValueError):
        Exponent(Fraction(1), 0)


@given(series())
def test_full_derivative_leibniz(s):
    # d/dx (x^n (log x)^k) = n x^{n-1} (log x)^k + k x^{n-1} (log x)^{k-1}
    expected = LogSeries(K=3)
    for (n, k), c in s.terms.items():
        if n:
            expected = expected + LogSeries({(n - 1, k): c * Scalar(n)}, K=3)
        if k:
            expected = expected + LogSeries({(n - 1, k - 1): c * k}, K=3)
    assert full_derivative(s) == expected
    assert full_derivative(s) == partial_x(s) + partial_log(s).shift(-1)


@given(series())
def test_monodromy_expansion(s):
    # e^{2 pi i n} x^n (log x + 2 pi i)^k expanded binomially
    expected = LogSeries(K=3)
    for (n, k), c in s.terms.items():
        for i in range(k + 1):
            coef = c * exp_2pii(n) * Scalar(comb(k, i)) * TWO_PI_I ** (k - i)
            expected = expected + LogSeries({(n, i): coef}, K=3)
    assert monodromy(s) == expected
    assert inverse_monodromy(monodromy(s)) == s


@given(series())
def test_partial_exponentials_compose(s):
    both = partial_exponentials(partial_exponentials(s, "+x"), "+log")
    assert both == monodromy(s)
    assert partial_exponentials(partial_exponentials(s, "+x"), "-x") == s
    assert partial_exponentials(partial_exponentials(s, "+log"), "-log") == s


@given(series())
def test_x_and_log_operators_commute(s):
    # x d/dx and d/dlog x commute, hence so do their exponentials
    a = partial_exponentials(partial_exponentials(s, "+x"), "-log")
    b = partial_exponentials(partial_exponentials(s, "-log"), "+x")
    assert a == b


def test_set_log_zero():
    s = LogSeries({(1, 0): ONE, (1, 2): ONE, (-1, 1): ONE})
    assert set_log_zero(s) == LogSeries({(1, 0): ONE})


def test_residue_and_ambiguity():
    s = LogSeries({(-1, 0): Scalar(3), (0, 0): ONE})
    assert residue(s) == Scalar(3)
    with pytest.raises(LogResidueAmbiguity):
        residue(LogSeries({(-1, 1): ONE}))
    # under the full-derivative convention x^{-1} log x is exact
    assert residue(LogSeries({(-1, 1): ONE, (-1, 0): Scalar(2)}), convention="full_derivative") == Scalar(2)


def test_translation_eigen_polynomial():
    assert translation_eigen_polynomial([5], 1)
    assert not translation_eigen_polynomial([0, 1], 2)
    assert not translation_eigen_polynomial([1, 1], 1)
    assert translation_eigen_polynomial([0], 7)


@given(st.fractions(min_value=-3, max_value=3, max_denominator=3), st.integers(1, 6))
def test_iota_expansion_coefficients(n, terms):
    s = iota_expand(Binomial("x1", "x2"), n, terms)
    for j in range(terms):
        c = s.coefficient((n - j, j))
        b = binomial(n, j)
        assert (c or Scalar(0)) == Scalar(b)


def test_iota_negative_lead():
    s = iota_expand(Binomial("x0", "x1", lead_sign=-1), -2, 3)
    # (-x0 + x1)^{-2} = x0^{-2} (1 - x1/x0)^{-2} = x0^{-2} + 2 x1 x0^{-3} + 3 x1^2 x0^{-4}
    assert s.coefficient((-2, 0)) == Scalar(1)
    assert s.coefficient((-3, 1)) == Scalar(2)
    assert s.coefficient((-4, 2)) == Scalar(3)


def test_polynomial_expansion_is_exact():
    assert iota_expand(Binomial("x1", "x2"), 2, 3).exact
    assert not iota_expand(Binomial("x1", "x2"), Fraction(1, 2), 3).exact


def test_product_of_windows_is_rejected():
    a = iota_expand(Binomial("x1", "x2"), Fraction(1, 2), 2)
    with pytest.raises(IllFormedProduct):
        a.mul(a)


def test_delta_substitute():
    f = MultiSeries(("x1", "x2"), {((2, 0), (0, 0)): ONE, ((0, 1), (0, 0)): Scalar(3)})
    g = delta_substitute(f, "x1", "x2")
    assert g.vars == ("x2",)
    assert g.coefficient((2,)) == ONE and g.coefficient((1,)) == Scalar(3)


def test_multiseries_round_trip():
    s = LogSeries({(Fraction(1, 2), 1): ONE})
    assert MultiSeries.from_logseries(s).to_logseries() == s

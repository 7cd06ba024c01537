"""Exact scalars, vectors and linear algebra, against sympy as an independent oracle."""
from fractions import Fraction
from math import comb, lcm

import pytest
import sympy
from hypothesis import given, settings, strategies as st

from twistvoa.errors import NonInvertible, NonRootOfUnitySpectrum
from twistvoa.exactalg import (ONE, TAU, TWO_PI_I, Echelon, GradedOperator, Scalar, Vec, binomial,
                               binomial_apply, exp_2pii, exp_2pii_nilpotent, exp_2pii_semisimple,
                               exp_nilpotent, jordan_chevalley, log_unipotent, mat_inverse, mat_mul,
                               mat_identity, operator_binomial, scalar_normalize, zeta)

CONDUCTORS = [1, 2, 3, 4, 5, 6, 8, 12]
z = sympy.Symbol("z")

fractions = st.fractions(min_value=-5, max_value=5, max_denominator=6)


@st.composite
def cyclotomic(draw):
    acc = Scalar(0)
    for _ in range(draw(st.integers(1, 3))):
        T = draw(st.sampled_from(CONDUCTORS))
        acc = acc + zeta(T, draw(st.integers(0, T - 1))) * draw(fractions)
    return acc


@st.composite
def scalars(draw):
    acc = Scalar(0)
    for p in draw(st.lists(st.integers(-2, 2), min_size=1, max_size=2, unique=True)):
        acc = acc + draw(cyclotomic()) * (TAU ** p if p >= 0 else TWO_PI_I ** (-p))
    return acc


def to_sympy(s: Scalar, L: int):
    """Scalar with only tau^0 as a polynomial in z = exp(2 pi i / L)."""
    expr = 0
    for p, c in s.terms():
        assert p == 0
        step = L // c.n
        for k, a in enumerate(c.c):
            expr += sympy.Rational(a.numerator, a.denominator) * z ** (k * step)
    return sympy.rem(sympy.expand(expr), sympy.cyclotomic_poly(L, z), z)


def common(*xs):
    L = 1
    for x in xs:
        for _, c in x.terms():
            L = lcm(L, c.n)
    return lcm(L, 24)


@settings(max_examples=60, deadline=None)
@given(cyclotomic(), cyclotomic())
def test_cyclotomic_arithmetic_matches_sympy(a, b):
    L = common(a, b)
    assert to_sympy(a + b, L) == sympy.rem(sympy.expand(to_sympy(a, L) + to_sympy(b, L)),
                                           sympy.cyclotomic_poly(L, z), z)
    assert to_sympy(a * b, L) == sympy.rem(sympy.expand(to_sympy(a, L) * to_sympy(b, L)),
                                           sympy.cyclotomic_poly(L, z), z)


@settings(max_examples=80, deadline=None)
@given(scalars(), scalars(), scalars())
def test_ring_axioms(a, b, c):
    assert (a + b) + c == a + (b + c)
    assert (a * b) * c == a * (b * c)
    assert a * (b + c) == a * b + a * c
    assert a * b == b * a
    assert a - a == Scalar(0)
    for x in (a + b, a * b, a * b + c):
        assert x.is_canonical()


@settings(max_examples=60, deadline=None)
@given(cyclotomic())
def test_inverse(a):
    if a:
        assert a * a.inverse() == ONE
    else:
        with pytest.raises(NonInvertible):
            a.inverse()


def test_minimal_conductor():
    assert zeta(4) * zeta(4) == Scalar(-1)
    assert zeta(4) ** 2 == Scalar(-1) and (zeta(4) ** 2).is_rational()
    assert zeta(3) + zeta(3, 2) == Scalar(-1)
    assert zeta(6).terms()[0][1].n == 3
    assert zeta(8) ** 2 == zeta(4)
    assert zeta(12, 3) == zeta(4)
    assert exp_2pii(Fraction(1, 2)) == Scalar(-1)
    assert scalar_normalize(scalar_normalize(zeta(6))) == zeta(6)


@given(fractions, fractions)
def test_exp_2pii_is_a_character(p, q):
    assert exp_2pii(p) * exp_2pii(q) == exp_2pii(p + q)
    assert exp_2pii(p + 3) == exp_2pii(p)


def test_tau_is_inverse_of_two_pi_i():
    assert TAU * TWO_PI_I == ONE
    assert (TAU ** 2).tau_powers() == (2,)


@given(scalars())
def test_json_round_trip(a):
    assert Scalar.from_json(a.to_json()) == a


@given(st.integers(-6, 8), st.integers(0, 6))
def test_binomial(a, j):
    if a >= 0:
        assert binomial(a, j) == comb(a, j)
    else:
        assert binomial(a, j) == (-1) ** j * comb(-a + j - 1, j)


def test_fractional_binomial():
    assert binomial(Fraction(1, 2), 1) == Fraction(1, 2)
    assert binomial(Fraction(1, 2), 2) == Fraction(-1, 8)


def test_vec_arithmetic():
    v = Vec({0: 1, 2: Fraction(1, 2)})
    w = Vec({0: -1, 1: 3})
    assert (v + w) == Vec({1: 3, 2: Fraction(1, 2)})
    assert v - v == Vec()
    assert (v * zeta(4)) * zeta(4) == v * -1
    assert Vec.from_json(v.to_json()) == v


def test_echelon_rank_matches_sympy():
    rows = [[1, 2, 0, 3], [2, 4, 0, 6], [0, 1, 1, 0], [1, 3, 1, 3], [5, 0, 0, 1]]
    ech = Echelon()
    for r in rows:
        ech.add(Vec({i: x for i, x in enumerate(r) if x}))
    assert ech.rank == sympy.Matrix(rows).rank()
    assert ech.contains(Vec({0: 3, 1: 7, 2: 1, 3: 9}))


def test_matrix_inverse():
    a = [[Scalar(2), Scalar(1)], [Scalar(1), Scalar(1)]]
    assert mat_mul(a, mat_inverse(a)) == mat_identity(2)
    with pytest.raises(NonInvertible):
        mat_inverse([[Scalar(1), Scalar(2)], [Scalar(2), Scalar(4)]])


def _op(mat):
    blocks = {0: tuple(range(len(mat)))}
    return GradedOperator.from_block_matrices(blocks, {0: [[Scalar(x) for x in row] for row in mat]})


def test_jordan_chevalley_reconstructs():
    # g = diag(-1, 1, 1) with a unipotent Jordan block on the last two coordinates
    g = _op([[-1, 0, 0], [0, 1, 1], [0, 0, 1]])
    S, N = jordan_chevalley(g, 2)
    assert S.compose(N) == N.compose(S)
    assert exp_2pii_semisimple(S, [Fraction(0), Fraction(1, 2)]).compose(exp_2pii_nilpotent(N)) == g
    assert N.nilpotency_index() == 2
    # N = tau * log(unipotent part)
    assert N == _op([[0, 0, 0], [0, 0, 1], [0, 0, 0]]).scale(TAU)


def test_jordan_chevalley_cyclotomic_spectrum():
    g = _op([[0, -1], [1, 0]])  # eigenvalues +-i
    S, N = jordan_chevalley(g, 4)
    assert N.is_zero()
    assert exp_2pii_semisimple(S, [Fraction(1, 4), Fraction(3, 4)]) == g


def test_non_root_of_unity():
    with pytest.raises(NonRootOfUnitySpectrum):
        jordan_chevalley(_op([[2]]), 4)


def test_exp_log_inverse():
    n = _op([[0, 1, 0], [0, 0, 1], [0, 0, 0]])
    u = exp_nilpotent(n)
    assert log_unipotent(u) == n


def test_operator_binomial_matches_vector_form():
    a = _op([[Fraction(1, 2), 1], [0, Fraction(1, 2)]])
    v = Vec({0: 1, 1: 2})
    for m in (-2, 0, 3):
        for j in range(4):
            assert operator_binomial(a, m, j)(v) == binomial_apply(a, m, j, v)

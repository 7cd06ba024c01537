from fractions import Fraction

import pytest
from hypothesis import HealthCheck, given, settings, strategies as st

from twistvoa import Scalar, Vec
from twistvoa.errors import CutoffTooSmall, InvalidExponent, NonTerminatingBudget, PreconditionViolated, \
    TableIncomplete
from twistvoa.exactalg import ONE
from twistvoa.rewrite import (ModeExpression, c2_mode_expand, check_conditions, check_L, cn_subspace,
                              commutator_expand, exceptional_set_size, is_normal_form, measure, minimal_L,
                              monomial, normal_order, repeats_reduce, spanning_normalize, spanning_union)
from twistvoa.voa import s_value

from conftest import algebra, instance

H = Vec.basis(1)
HALF = Fraction(1, 2)


def _eigen(alg, wmax):
    return [(alg.intern(v), a) for (wt, a), vs in sorted(alg.aut.eigenbasis.items()) if wt <= wmax
            for v in vs]


def _direct_commutator(alg, u, m, v, n, w):
    W, a, b = alg.W, alg.alpha(u), alg.alpha(v)
    uu, vv = alg.vec(u), alg.vec(v)
    return W.act(uu, a + m, 0, W.act(vv, b + n, 0, w)) - W.act(vv, b + n, 0, W.act(uu, a + m, 0, w))


def _direct_c2(alg, u, m, v, n, w):
    x = alg.V.mode(alg.vec(u), m, alg.vec(v))
    s = s_value(alg.alpha(u), alg.alpha(v))
    return alg.W.act(x, s + n, 0, w) if x else Vec()


# -- worked examples


def test_commutator_half_modes(fock_alg6):
    alg = fock_alg6
    h = alg.intern(H)
    e = commutator_expand(alg, h, 0, h, -1)  # [h(1/2), h(-1/2)]
    canon: dict = {}
    for word, c in e.terms.items():
        alg.canonical(word, c, None, canon)
    assert canon == {((alg.vacuum, Fraction(-1)),): Scalar(HALF)}
    for w in alg.W.basis_upto(2):
        assert e.evaluate(alg, Vec.basis(w)) == Vec.basis(w) * Scalar(HALF)


def test_commutator_with_vacuum_vanishes(fock_alg6):
    alg = fock_alg6
    h = alg.intern(H)
    assert len(commutator_expand(alg, h, 1, alg.vacuum, -3)) == 0
    assert len(commutator_expand(alg, alg.vacuum, -1, h, 0)) == 0


def test_c2_with_vacuum_gives_derivative(fock_alg6):
    # (h(-2)1)(m) = (L(-1)h)(m) = -m h(m-1) on a log-free module
    alg, W = fock_alg6, fock_alg6.W
    h = alg.intern(H)
    for n in range(-3, 2):
        e = c2_mode_expand(alg, h, -2, alg.vacuum, n, 0)
        m = s_value(HALF, 0) + n
        w = Vec.basis(W.generator)
        assert e.evaluate(alg, w) == W.act(H, m - 1, 0, w) * Scalar(-m)


def test_c2_with_vacuum_first_vanishes(lattice_alg6):
    alg = lattice_alg6
    for b in alg.B:
        for n in range(-2, 2):
            e = c2_mode_expand(alg, alg.vacuum, -2, b, n, 0)
            assert e.evaluate(alg, Vec.basis(0)) == Vec()


def test_c2_twisted_vacuum_same_vector(fock_alg6):
    alg, W = fock_alg6, fock_alg6.W
    h = alg.intern(H)
    checked = 0
    for n in range(-4, 2):
        for w in W.basis_upto(1):
            ew = Vec.basis(w)
            try:
                direct = _direct_c2(alg, h, -2, h, n, ew)
            except TableIncomplete:
                continue
            e = c2_mode_expand(alg, h, -2, h, n, W.degrees[w])
            assert e.evaluate(alg, ew) == direct
            checked += 1
    assert checked > 5


def test_filtration(lattice_alg6):
    alg = lattice_alg6
    eig = _eigen(alg, 2)
    for u, _ in eig:
        for v, _ in eig:
            wt = alg.weight(u) + alg.weight(v)
            for word in commutator_expand(alg, u, 0, v, -1).terms:
                assert sum(alg.weight(x) for x, _ in word) < wt
            for m in (-2, -3):
                for word in c2_mode_expand(alg, u, m, v, 0, 0).terms:
                    assert sum(alg.weight(x) for x, _ in word) < wt - m - 1


@settings(max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow])
@given(st.data())
def test_lemmas_match_table(data):
    alg = algebra("lattice_sqrt2", 6)
    eig = _eigen(alg, 2)
    u, _ = data.draw(st.sampled_from(eig))
    v, _ = data.draw(st.sampled_from(eig))
    m = data.draw(st.integers(-3, 2))
    n = data.draw(st.integers(-3, 2))
    w = Vec.basis(data.draw(st.sampled_from(alg.W.basis_upto(1))))
    d0 = alg.W.degrees[next(iter(w))]
    try:
        direct = _direct_commutator(alg, u, m, v, n, w)
        direct2 = _direct_c2(alg, u, m, v, n, w)
    except TableIncomplete:
        return
    assert commutator_expand(alg, u, m, v, n).evaluate(alg, w) == direct
    assert c2_mode_expand(alg, u, m, v, n, d0).evaluate(alg, w) == direct2


def test_lemmas_need_eigenvectors(lattice_alg6):
    alg = lattice_alg6
    mixed = alg.intern(Vec.basis(2))
    with pytest.raises(PreconditionViolated):
        commutator_expand(alg, mixed, 0, alg.B[0], 0)
    with pytest.raises(PreconditionViolated):
        c2_mode_expand(alg, mixed, -2, alg.B[0], 0, 0)


# -- normal ordering and repeats


@pytest.mark.parametrize("k", [1, 2])
def test_normal_order(fock_alg6, k):
    alg = fock_alg6
    for w in alg.W.basis_upto(1):
        chk = normal_order(alg, [H] * k, w, 3)
        assert chk.passed, chk.difference
        assert chk.direct.terms


def _check_repeat(alg, vids, depth, M, d0):
    e = repeats_reduce(alg, vids, depth, M, d0)
    target = tuple((v, alg.alpha(v) - depth) for v in vids)
    wt = sum(alg.weight(v) for v in vids)
    for w in alg.W.by_degree[d0]:
        ew = Vec.basis(w)
        assert e.evaluate(alg, ew) == alg.apply(target, ew)
    # each term is lower weight, a single vector of full weight (in C_2 once
    # the weight reaches M), or same weight with a strictly deeper factor
    for word in e.terms:
        s = sum(alg.weight(v) for v, _ in word)
        if s < wt:
            continue
        assert s == wt
        if len(word) == 1:
            canon: dict = {}
            alg.canonical(word, ONE, None, canon)
            assert wt < M or all(alg.kind[v] == "C2" for w2 in canon for v, _ in w2)
        else:
            assert len(word) == len(vids) and max(alg.depth(f) for f in word) > depth
    return e


@pytest.mark.parametrize("depth", [1, 0, -1])
def test_repeats_lattice(depth):
    alg = algebra("lattice_sqrt2", 6)
    b = alg.B[0]
    _check_repeat(alg, [b] * 3, depth, 3, Fraction(0))


def test_repeats_mixed_run(lattice_alg6):
    alg = lattice_alg6
    _check_repeat(alg, [alg.B[1], alg.B[2], alg.B[1]], 1, 3, Fraction(0))


def test_repeats_nonpositive_depth_on_fock(fock_alg6):
    alg = fock_alg6
    h = alg.intern(H)
    for depth in (0, -1):
        _check_repeat(alg, [h, h], depth, 2, Fraction(0))


def test_repeats_short_run_rejected(lattice_alg6):
    alg = lattice_alg6
    with pytest.raises(PreconditionViolated):
        repeats_reduce(alg, [alg.B[0]] * 2, 1, 3, 0)
    with pytest.raises(PreconditionViolated):
        repeats_reduce(alg, [alg.vacuum] * 3, 1, 3, 0)


# -- the normalizer


def _normalize_and_check(alg, expr, L, M, N):
    cert = spanning_normalize(alg, expr, L, M, N)
    assert cert.expression.evaluate(alg) == expr.evaluate(alg)
    for word in cert.monomials():
        assert all(check_conditions(alg, word, L, M, N).values())
        assert is_normal_form(alg, word, L, M, N)
    again = spanning_normalize(alg, cert.expression, L, M, N)
    assert again.expression == cert.expression and again.steps == 0
    return cert


def test_constants(lattice_alg6):
    assert minimal_L(lattice_alg6) == -2
    assert lattice_alg6.c2.M == 3
    assert check_L(lattice_alg6, -2) and not check_L(lattice_alg6, -1)


def test_normal_input_untouched(lattice_alg6):
    alg = lattice_alg6
    b0, b1 = alg.B[0], alg.B[1]
    e = monomial(alg, [(b1, HALF - 2), (b0, Fraction(-1))])
    assert len(e) == 1
    cert = spanning_normalize(alg, e, -2, 3, 2)
    assert cert.expression == e and cert.steps == 0 and cert.trace == []


def test_reorder(lattice_alg6):
    alg = lattice_alg6
    b1 = alg.B[1]
    e = monomial(alg, [(b1, HALF - 2), (b1, HALF - 5)])
    cert = _normalize_and_check(alg, e, -2, 3, 2)
    assert cert.trace[0]["rule"] == "swap"


def test_long_repeat(lattice_alg6):
    alg = lattice_alg6
    b0 = alg.B[0]
    e = monomial(alg, [(b0, Fraction(-1))] * 4)
    assert e.evaluate(alg)
    cert = _normalize_and_check(alg, e, -2, 3, 2)
    assert "repeats" in {t["rule"] for t in cert.trace}


def test_trace_measures_decrease(lattice_alg6):
    alg = lattice_alg6
    b0, b1 = alg.B[0], alg.B[1]
    e = monomial(alg, [(b0, Fraction(0)), (b1, HALF - 2), (b0, Fraction(-1)), (b1, HALF - 1)])
    cert = _normalize_and_check(alg, e, -2, 3, 2)
    ms = [tuple((m[0], m[1], tuple(m[2]), m[3])) for m in (t["measure"] for t in cert.trace)]
    assert ms and all(a >= b for a, b in zip(ms, ms[1:]))
    assert measure(alg, next(iter(e.terms))) == ms[0]


def test_budget(lattice_alg6):
    alg = lattice_alg6
    b0 = alg.B[0]
    e = monomial(alg, [(b0, Fraction(-1))] * 4)
    with pytest.raises(NonTerminatingBudget):
        spanning_normalize(alg, e, -2, 3, 2, budget=1)


def test_preconditions(lattice_alg6, fock_alg6):
    alg = lattice_alg6
    e = monomial(alg, [(alg.B[0], Fraction(-1))])
    with pytest.raises(PreconditionViolated):
        spanning_normalize(alg, e, -1, 3, 2)
    with pytest.raises(PreconditionViolated):
        spanning_normalize(alg, e, -2, 3, -3)
    with pytest.raises(NotImplementedError):
        spanning_normalize(alg, e, -2, 3, 2, refine=True)
    assert not fock_alg6.c2.stabilized
    f = monomial(fock_alg6, [(H, -HALF)])
    with pytest.raises(PreconditionViolated):
        spanning_normalize(fock_alg6, f, -2, 3, 2)


def test_expression_json(lattice_alg6):
    alg = lattice_alg6
    e = monomial(alg, [(alg.B[1], HALF - 3), (alg.B[0], Fraction(-1))], coef=Fraction(3, 4)) + \
        monomial(alg, [(alg.B[3], Fraction(-2))])
    back = ModeExpression.from_json(e.to_json(alg), alg)
    assert back == e
    raw = [{"monomial": [{"vector": "b1", "coset": "1/2", "offset": -2, "k": 0}]}]
    assert ModeExpression.from_json(raw, alg) == monomial(alg, [(alg.B[1], HALF - 2)])
    with pytest.raises(PreconditionViolated):
        ModeExpression.from_json([{"monomial": [{"vector": "b1", "coset": "1/2", "offset": -2, "k": 1}]}], alg)


def test_spanning_union(lattice_alg6):
    alg = lattice_alg6
    e1 = monomial(alg, [(alg.B[0], Fraction(-1))] * 4)
    e2 = monomial(alg, [(alg.B[1], HALF - 2), (alg.B[1], HALF - 5)])
    certs, words = spanning_union(alg, [e1, e2], -2, 3, 2)
    assert len(certs) == 2
    assert words == {(0, w) for c in certs for w in c.monomials()}


def test_exceptional_set(lattice_alg6):
    alg = lattice_alg6
    assert exceptional_set_size(alg, -2, 3, 0, 2) is None
    per = sum(4 ** r for r in range(4))
    assert exceptional_set_size(alg, -2, 3, 1, 2) == per ** 3
    assert exceptional_set_size(alg, 3, 3, 5, 2) == 1


# -- C_n


def test_cn_trivial(trivial):
    rep = cn_subspace(trivial.W, 2, 0)
    assert rep.total == 1 and rep.residue_form_agrees and rep.log_inclusive_agrees


def test_cn_errors(lattice6):
    with pytest.raises(InvalidExponent):
        cn_subspace(lattice6.W, 0, 2)
    with pytest.raises(CutoffTooSmall):
        cn_subspace(lattice6.W, 1, 7)


def test_cn_lattice_small(lattice6):
    r1 = cn_subspace(lattice6.W, 1, 4)
    r2 = cn_subspace(lattice6.W, 2, 4)
    assert (r1.total, r2.total) == (1, 3)
    assert r2.residue_form_agrees and r2.log_inclusive_agrees
    assert {d: q for d, q in r2.quotient_dims.items() if q} == {0: 1, HALF: 1, 1: 1}


def test_cn_unipotent_log_modes(unipotent3):
    rep = cn_subspace(unipotent3.W, 1, 2)
    assert rep.log_inclusive_agrees and rep.residue_form_agrees


def test_drop_rule_classification(lattice_alg6):
    # on these modules the drop rule coincides with degree pruning, so test it directly
    from twistvoa.rewrite import _rewrite, _violation

    alg = lattice_alg6
    word = ((alg.B[1], HALF - 1), (alg.B[0], Fraction(2)))
    assert _violation(alg, word, -2, 3, 2) == ("drop", 1)
    assert _rewrite(alg, word, ("drop", 1), 0) == {}
    assert not check_conditions(alg, word, -2, 3, 2)["above_L"]
    assert not alg.alive(word, 0)

"""VOA tables, automorphism data and C_2 representatives."""
import json
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from twistvoa.errors import CutoffTooSmall, NotAutomorphism
from twistvoa.exactalg import Echelon, GradedOperator, Vec
from twistvoa.examples import build_free_boson, build_involution
from twistvoa.voa import VOAData, check_automorphism, check_voa_axioms, compute_c2, \
    decompose_automorphism, s_value

from conftest import instance


alphas = st.builds(Fraction, st.integers(0, 7), st.just(8))


@given(alphas, alphas)
def test_s_value(a, b):
    s = s_value(a, b)
    assert 0 <= s < 1 and (s - a - b).denominator == 1


def test_free_boson_axioms():
    V = build_free_boson(4)
    rep = check_voa_axioms(V, 2)
    assert rep.passed and rep.checked > 1000


def test_mutated_product_is_located():
    V = build_free_boson(4)
    h = V.labels.index("h(-1)")
    bad = V.with_override(h, 1, h, Vec.basis(V.vacuum, 2))
    rep = check_voa_axioms(bad, 2)
    assert not rep.passed
    assert rep.failure["u"] == h and rep.failure["v"] == h and "identity" in rep.failure


def test_involution_decomposition():
    V = build_free_boson(4)
    aut = build_involution(V)
    assert aut.spectrum == [Fraction(0), Fraction(1, 2)]
    assert aut.N.is_zero()
    h = Vec.basis(V.labels.index("h(-1)"))
    assert aut.eigenvalue(h) == Fraction(1, 2)
    assert check_automorphism(V, aut, 3).passed


def test_non_automorphism_rejected():
    V = build_free_boson(3)
    # negate h(-1)^2 only: not multiplicative
    images = {i: Vec.basis(i, -1 if lab == "h(-1)h(-1)" else 1) for i, lab in enumerate(V.labels)}
    with pytest.raises(NotAutomorphism):
        decompose_automorphism(V, GradedOperator(V.blocks(), images), 2)


def test_unipotent_automorphism(unipotent3):
    aut = unipotent3.aut
    assert aut.spectrum == [Fraction(0)]
    assert not aut.N.is_zero() and aut.nilpotency_index() >= 2
    assert check_automorphism(unipotent3.V, aut, 2).passed


def _brute_c2_dims(V, top):
    """rank of span{u(-2)v} over all basis pairs, weight by weight"""
    out = {}
    for w in range(top + 1):
        ech = Echelon()
        for u in range(V.dim):
            for v in range(V.dim):
                if V.weights[u] + V.weights[v] + 1 == w:
                    r = V.mode(Vec.basis(u), -2, Vec.basis(v))
                    if r:
                        ech.add(r)
        out[w] = len(V.by_weight[w]) - ech.rank
    return out


@pytest.mark.parametrize("cutoff", [4, 6, 8])
def test_lattice_c2_stabilizes(cutoff):
    ex = instance("lattice_sqrt2", cutoff)
    rep = compute_c2(ex.V, ex.aut)
    nonzero = {w: d for w, d in rep.quotient_dims.items() if d}
    assert nonzero == {0: 1, 1: 3, 2: 1}
    assert rep.M == 3 and rep.stabilized
    assert [w for w, _, _ in rep.B] == [1, 1, 1, 2]
    if cutoff <= 6:
        assert rep.quotient_dims == _brute_c2_dims(ex.V, cutoff)


def test_free_boson_not_c2_cofinite():
    V = build_free_boson(6)
    aut = build_involution(V)
    rep = compute_c2(V, aut)
    assert all(d == 1 for d in rep.quotient_dims.values())
    assert rep.M is None and not rep.stabilized
    assert rep.quotient_dims == _brute_c2_dims(V, 6)


def test_trivial_c2(trivial):
    rep = compute_c2(trivial.V, trivial.aut)
    assert rep.B == [] and rep.total_quotient_dim() == 1


def test_c2_cutoff_guard(lattice6):
    with pytest.raises(CutoffTooSmall):
        compute_c2(lattice6.V, lattice6.aut, 9)


def test_voa_json_round_trip():
    V = build_free_boson(3)
    V2 = VOAData.from_json(json.loads(json.dumps(V.to_json())))
    assert check_voa_axioms(V2, 2).passed
    assert V2.omega == V.omega

from fractions import Fraction

import pytest

from twistvoa import Scalar, Vec
from twistvoa.errors import InvalidExponent, PreconditionViolated, TableIncomplete
from twistvoa.logcalc import partial_x
from twistvoa.twisted import (TwistedModuleData, check_axioms, check_derived, check_equivariance,
                              check_identity, check_L_minus1, check_lower_truncation, check_sum_index,
                              check_twisted_jacobi, lower_mode_rewrite)

from conftest import instance

H = Vec.basis(1)  # h(-1)1 in every Heisenberg-based example
HALF = Fraction(1, 2)


def _all_pass(reports):
    return {r.name: (r.passed, r.failure) for r in reports if not r.passed}


def test_trivial_axioms_and_derived(trivial):
    assert not _all_pass(check_axioms(trivial.W, 3) + check_derived(trivial.W, 3))


def test_twisted_fock_small_window(fock6):
    reps = check_axioms(fock6.W, 2) + check_derived(fock6.W, 2)
    assert not _all_pass(reps)
    assert all(r.checked > 0 for r in reps)


def test_lattice_axioms_and_derived():
    W = instance("lattice_sqrt2", 4).W
    assert not _all_pass(check_axioms(W, 2) + check_derived(W, 2))


def test_unipotent_axioms_and_derived(unipotent3):
    W = unipotent3.W
    assert W.K >= 1
    assert not _all_pass(check_axioms(W, 1) + check_derived(W, 1))


def test_unipotent_has_nonzero_logs(unipotent3):
    W = unipotent3.W
    ks = {k for _, _, k, _, _ in W.table_entries(2)}
    assert max(ks) >= 1


def test_unipotent_partial_only_L_minus1_fails(unipotent3):
    rep = check_L_minus1(unipotent3.W, 1, derivative=partial_x)
    assert not rep.passed
    assert {"u", "w"} <= set(rep.failure)


# -- mutations: each perturbs one stored coefficient and must be located


def test_mutation_jacobi(fock6):
    W = fock6.W
    n = -HALF
    good = W.action(1, n, 0, 0)
    bad = W.with_override(1, n, 0, 0, good * Scalar(2))
    assert check_twisted_jacobi(W, H, H, 2).passed
    rep = check_twisted_jacobi(bad, H, H, 2)
    assert not rep.passed
    assert {"p", "q", "l", "w", "k1", "k2"} <= set(rep.failure)


def test_mutation_lower_truncation(fock6):
    W = fock6.W
    assert W.target_degree(1, HALF, 0) < W.min_degree
    bad = W.with_override(1, HALF, 0, 0, Vec.basis(0))
    assert check_lower_truncation(W, 2).passed
    rep = check_lower_truncation(bad, 2)
    assert not rep.passed
    assert rep.failure["n"] == "1/2" and rep.failure["u"] == 1 and rep.failure["w"] == 0


def test_mutation_identity(fock6):
    bad = fock6.W.with_override(0, -1, 0, 0, Vec.basis(0) * Scalar(2))
    rep = check_identity(bad, 2)
    assert not rep.passed
    assert rep.failure == {"w": 0, "n": "-1", "k": 0}


def test_mutation_wrong_coset(fock6):
    # h lives in the -1 eigenspace, so an integral mode must vanish
    W = fock6.W
    bad = W.with_override(1, -1, 0, 0, Vec.basis(2))
    rep = check_equivariance(bad, 2)
    assert not rep.passed and rep.failure["u"] == 1 and rep.failure["w"] == 0
    si = check_sum_index(bad, H, 2)
    assert not si.passed and si.failure["n"] == "-1"


# -- lower modes


def _rewrite_cases(ex, vectors, ns, window):
    W = ex.W
    count = 0
    for u in vectors:
        for n in ns:
            for j in (1, 2, 3):
                try:
                    rw = lower_mode_rewrite(W.V, W.aut, u, n, j)
                except TableIncomplete:
                    continue
                for w in W.basis_upto(window):
                    ew = Vec.basis(w)
                    try:
                        lhs = W.act(u, n - j, 0, ew)
                        rhs = rw.apply(W, ew)
                    except TableIncomplete:
                        continue
                    assert lhs == rhs, (u, n, j, w)
                    count += 1
    return count


def test_lower_mode_rewrite_fock(fock6):
    assert _rewrite_cases(fock6, [H], [-HALF, HALF, Fraction(3, 2)], 2) > 10


def test_lower_mode_rewrite_lattice():
    ex = instance("lattice_sqrt2", 6)
    eig = [Vec.basis(1), Vec.basis(2) + Vec.basis(3), Vec.basis(2) - Vec.basis(3)]
    for u in eig:
        assert ex.aut.eigenvalue(u) is not None
    assert _rewrite_cases(ex, eig, [Fraction(-1), -HALF, HALF], 1) > 10


def test_lower_mode_rewrite_unipotent(unipotent3):
    f = Vec.basis(3)  # e^{-h}
    assert unipotent3.aut.N(f) and unipotent3.aut.N(H)  # exercises the nilpotent correction
    assert _rewrite_cases(unipotent3, [f, H], [Fraction(-1)], 1) > 2
    ex = instance("unipotent_fragment", 5)
    assert _rewrite_cases(ex, [Vec.basis(3), H], [Fraction(-1)], 1) > 5


def test_lower_mode_rewrite_rejects_bad_input(fock6):
    W = fock6.W
    with pytest.raises(InvalidExponent):
        lower_mode_rewrite(W.V, W.aut, H, 2, 1)
    with pytest.raises(InvalidExponent):
        lower_mode_rewrite(W.V, W.aut, H, -HALF, 0)


def test_jacobi_needs_eigenvector():
    ex = instance("lattice_sqrt2", 4)
    with pytest.raises(PreconditionViolated):
        check_twisted_jacobi(ex.W, Vec.basis(2), H, 1)


def test_module_json_round_trip():
    ex = instance("twisted_fock", 4)
    W2 = TwistedModuleData.from_json(ex.W.to_json(), ex.V, ex.aut)
    assert W2.degrees == ex.W.degrees and W2.labels == ex.W.labels
    a = {e[:4]: e[4] for e in ex.W.table_entries()}
    b = {e[:4]: e[4] for e in W2.table_entries()}
    assert a == b
    assert not _all_pass(check_axioms(W2, 2))

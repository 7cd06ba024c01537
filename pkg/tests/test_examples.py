"""Instance generators: graded dimensions against q-series, determinism, serialization."""
import json
from fractions import Fraction

import sympy

from twistvoa.examples import COCYCLE_CONVENTION, build, build_free_boson
from twistvoa.twisted import TwistedModuleData
from twistvoa.voa import VOAData

from conftest import instance

q = sympy.Symbol("q")


def series_coeffs(expr, n):
    poly = sympy.series(expr, q, 0, n + 1).removeO()
    return [int(poly.coeff(q, k)) for k in range(n + 1)]


def eta_inverse(n):
    expr = 1
    for k in range(1, n + 1):
        expr *= 1 / (1 - q ** k)
    return expr


def voa_dims(V):
    return [len(V.by_weight.get(w, ())) for w in range(V.cutoff + 1)]


def module_dims(W, top2):
    """dimensions indexed by twice the degree"""
    return [len(W.by_degree.get(Fraction(d, 2), ())) for d in range(top2 + 1)]


def test_free_boson_partition_numbers():
    V = build_free_boson(7)
    assert voa_dims(V) == [1, 1, 2, 3, 5, 7, 11, 15]
    assert voa_dims(V) == series_coeffs(eta_inverse(7), 7)


def test_twisted_fock_dimensions(fock6):
    # prod (1 - q^{n-1/2})^{-1}, written in t = q^{1/2}
    expr = 1
    for k in range(1, 13, 2):
        expr *= 1 / (1 - q ** k)
    assert module_dims(fock6.W, 12) == series_coeffs(expr, 12)


def test_lattice_dimensions(lattice6):
    theta = sum(q ** (m * m) for m in range(-3, 4))
    assert voa_dims(lattice6.V) == series_coeffs(theta * eta_inverse(6), 6)


def test_lattice_twisted_module_dimensions(lattice6, fock6):
    assert module_dims(lattice6.W, 12) == module_dims(fock6.W, 12)


def test_lattice_meta_records_conventions(lattice6):
    assert lattice6.V.meta["cocycle"] == COCYCLE_CONVENTION
    assert lattice6.W.meta["conformal_weight_offset"] == "1/16"


def test_unipotent_realizes_nonzero_logs(unipotent3):
    W = unipotent3.W
    K = unipotent3.aut.nilpotency_index() - 1
    assert W.K == K >= 1
    found = {k for u, n, k, w, r in W.table_entries(2) if k}
    assert found == set(range(1, K + 1))


def test_trivial_instance(trivial):
    assert trivial.V.dim == 1 and trivial.W.dim == 1


def test_generation_is_deterministic():
    a = build("lattice_sqrt2", 3)
    b = build("lattice_sqrt2", 3)
    assert json.dumps(a.V.to_json(), sort_keys=True) == json.dumps(b.V.to_json(), sort_keys=True)
    assert json.dumps(a.W.to_json(), sort_keys=True) == json.dumps(b.W.to_json(), sort_keys=True)


def test_json_round_trip():
    ex = instance("unipotent_fragment", 2)
    V2 = VOAData.from_json(json.loads(json.dumps(ex.V.to_json())))
    assert list(V2.table_entries()) == list(ex.V.table_entries())
    W2 = TwistedModuleData.from_json(json.loads(json.dumps(ex.W.to_json())), V2, ex.aut)
    assert list(W2.table_entries()) == list(ex.W.table_entries())

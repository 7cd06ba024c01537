"""Deterministic desk-scale instances of (V, g, W)."""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from math import factorial

from .exactalg import TAU, GradedOperator, Vec, exp_nilpotent
from .fock import LatticeFock, TwistedFock
from .twisted import TwistedModuleData
from .voa import AutomorphismData, VOAData, decompose_automorphism

COCYCLE_CONVENTION = (
    "trivial cocycle eps(m, n) = 1; valid for the rank-one even lattice sqrt(2)Z, "
    "where e^{mh}(k) e^{nh}(l) carries no commutation sign"
)


@dataclass
class ExampleSpec:
    name: str
    cutoff: int
    conductor: int = 1
    options: dict = field(default_factory=dict)


@dataclass
class Example:
    spec: ExampleSpec
    V: VOAData
    aut: AutomorphismData
    W: TwistedModuleData | None = None

    def header(self) -> dict:
        return {"name": self.spec.name, "cutoff": self.spec.cutoff, "conductor": self.spec.conductor,
                "options": self.spec.options}


def _state_label(state) -> str:
    parts, m = state
    osc = "".join(f"h(-{p})" for p in parts)
    if m:
        osc += f"e^{m}h" if m != 1 else "e^h"
    return osc or "1"


def _twisted_label(parts) -> str:
    return "".join(f"h(-{p}/2)" for p in parts) or "w"


def _to_vec(d: dict, index: dict) -> Vec:
    return Vec((index[s], c) for s, c in d.items() if s in index)


# ---------------------------------------------------------------------------
# Fock-type VOAs


def _fock_voa(fock: LatticeFock, cutoff: int, meta: dict) -> tuple[VOAData, list, dict]:
    states = []
    for w in range(cutoff + 1):
        states.extend(fock.states_of_weight(w))
    index = {s: i for i, s in enumerate(states)}
    weights = [fock.weight(s) for s in states]

    def source(u: int, n: int, v: int) -> Vec:
        return _to_vec(fock.mode(states[u], n, states[v]), index)

    omega = Vec.basis(index[((1, 1), 0)], Fraction(1, 2 * fock.kappa)) if cutoff >= 2 else None
    V = VOAData(weights, [_state_label(s) for s in states], index[((), 0)], omega, cutoff,
                source=source, central_charge=1, meta=meta)
    return V, states, index


def _theta(V: VOAData, states: list, index: dict) -> GradedOperator:
    images = {}
    for i, (parts, m) in enumerate(states):
        images[i] = Vec.basis(index[(parts, -m)], -1 if len(parts) % 2 else 1)
    return GradedOperator(V.blocks(), images)


def build_free_boson(cutoff: int) -> VOAData:
    """Heisenberg VOA of rank one with <h, h> = 1."""
    if cutoff < 2:
        raise ValueError("cutoff must be at least 2")
    V, _, _ = _fock_voa(LatticeFock(1, False), cutoff, {"strong_generator_weight": 1, "kind": "free_boson"})
    return V


def build_involution(V: VOAData) -> AutomorphismData:
    """g = -1 on h, extended multiplicatively (h(-p1)...h(-pk) -> (-1)^k)."""
    images = {}
    for i, lab in enumerate(V.labels):
        images[i] = Vec.basis(i, -1 if lab.count("h(") % 2 else 1)
    return decompose_automorphism(V, GradedOperator(V.blocks(), images), 2)


def _twisted_module(V, aut, fock: LatticeFock, states: list, cutoff: int, meta: dict) -> TwistedModuleData:
    tf = TwistedFock(fock, norm_exponent=1, charge_sign=1)
    wstates = []
    for d2 in range(2 * cutoff + 1):
        wstates.extend(tf.states_of_degree2(d2))
    windex = {s: i for i, s in enumerate(wstates)}

    def source(u: int, n: Fraction, k: int, w: int) -> Vec:
        if k:
            return Vec()
        return _to_vec(tf.mode(states[u], n, wstates[w]), windex)

    return TwistedModuleData(V, aut, [tf.degree(s) for s in wstates], [_twisted_label(s) for s in wstates],
                             windex[()], cutoff, source=source, K=0, meta=meta)


def build_twisted_fock(cutoff: int, V: VOAData | None = None, aut: AutomorphismData | None = None) -> Example:
    """Free boson, the involution and its half-integer-moded twisted module."""
    fock = LatticeFock(1, False)
    V0, states, _ = _fock_voa(fock, cutoff, {"strong_generator_weight": 1, "kind": "free_boson"})
    V = V0 if V is None else V
    aut = build_involution(V) if aut is None else aut
    W = _twisted_module(V, aut, fock, states, cutoff,
                        {"kind": "twisted_fock", "conformal_weight_offset": "1/16"})
    return Example(ExampleSpec("twisted_fock", cutoff, 2), V, aut, W)


def build_lattice_sqrt2(cutoff: int) -> Example:
    """Lattice VOA of sqrt(2)Z, g induced by -1, and its twisted module."""
    if cutoff < 3:
        raise ValueError("cutoff must be at least 3")
    fock = LatticeFock(2, True)
    V, states, index = _fock_voa(fock, cutoff, {"strong_generator_weight": 1, "kind": "lattice_sqrt2",
                                                "cocycle": COCYCLE_CONVENTION})
    aut = decompose_automorphism(V, _theta(V, states, index), 2)
    W = _twisted_module(V, aut, fock, states, cutoff, {
        "kind": "lattice_twisted", "conformal_weight_offset": "1/16",
        "normalization": "e^{mh} acts with 2^{-<mh,mh>} and t^m = 1",
    })
    return Example(ExampleSpec("lattice_sqrt2", cutoff, 2, {"lattice_scale": 2}), V, aut, W)


def build_free_boson_untwisted(cutoff: int) -> Example:
    """Free boson with g = id acting on itself (the negative control)."""
    V = build_free_boson(cutoff)
    aut = decompose_automorphism(V, GradedOperator.identity(V.blocks()), 1)
    return Example(ExampleSpec("free_boson_untwisted", cutoff, 1), V, aut, adjoint_module(V, aut))


# ---------------------------------------------------------------------------
# trivial and unipotent


def build_trivial() -> Example:
    def source(u, n, v):
        return Vec.basis(0) if n == -1 else Vec()

    V = VOAData([0], ["1"], 0, Vec(), 0, source=source, central_charge=0,
                meta={"strong_generator_weight": 1, "kind": "trivial"})
    aut = decompose_automorphism(V, GradedOperator.identity(V.blocks()), 1)

    def wsource(u, n, k, w):
        return Vec.basis(0) if (n == -1 and k == 0) else Vec()

    W = TwistedModuleData(V, aut, [0], ["w"], 0, 0, source=wsource, K=0, meta={"kind": "trivial"})
    return Example(ExampleSpec("trivial", 0, 1), V, aut, W)


def adjoint_module(V: VOAData, aut: AutomorphismData, cutoff: int | None = None) -> TwistedModuleData:
    """V acting on itself; a g-twisted module when g = id."""
    cutoff = V.cutoff if cutoff is None else cutoff

    def source(u: int, n: Fraction, k: int, w: int) -> Vec:
        if n.denominator != 1 or k:
            return Vec()
        return V.product(u, int(n), w)

    return TwistedModuleData(V, aut, V.weights, V.labels, V.vacuum, cutoff, source=source, K=0,
                             meta={"kind": "adjoint"})


def delta_twisted_module(V: VOAData, aut: AutomorphismData, a: int) -> TwistedModuleData:
    """V with Y_W(u, x) = Y(Delta(b, x) u, x) for b = -tau a and N = tau a(0).

    Delta(b, x) = x^{b(0)} exp(sum_{k>=1} b(k) (-x)^{-k} / (-k)).  This needs a
    primary weight-one vector a with a(n)a = 0 for n >= 0, so that all modes
    a(k), k >= 0, commute.  The twist is exp(2 pi i N).
    """
    N = aut.N

    def a_mode(k: int, v: Vec) -> Vec:
        return V.mode(Vec.basis(a), k, v)

    def E(u: int) -> list[Vec]:
        # exp of sum_k c_k x^{-k} with c_k = -tau a(k) (-1)^{k+1} / k, via j E_j = sum_k k c_k E_{j-k}
        out = [Vec.basis(u)]
        for j in range(1, V.weights[u] + 1):
            acc = Vec()
            for k in range(1, j + 1):
                c = TAU * Fraction(-1 if k % 2 else 1)  # k * c_k
                acc = acc + a_mode(k, out[j - k]) * c
            out.append(acc * Fraction(1, j))
        return out

    cache: dict = {}

    def source(u: int, n: Fraction, k: int, w: int) -> Vec:
        if n.denominator != 1:
            return Vec()
        if u not in cache:
            cache[u] = E(u)
        acc = Vec()
        for j, ej in enumerate(cache[u]):
            vec = ej
            for _ in range(k):
                vec = N(vec)
            if vec:
                acc = acc + V.mode(vec, int(n) - j, Vec.basis(w))
        return acc * Fraction(-1 if k % 2 else 1, factorial(k))

    return TwistedModuleData(V, aut, V.weights, V.labels, V.vacuum, V.cutoff, source=source,
                             meta={"kind": "delta_twist", "vector": V.labels[a]})


def build_unipotent_fragment(cutoff: int) -> Example:
    """sqrt(2)Z lattice VOA with g = exp(e^h(0)) and N = tau e^h(0).

    e^h(0) is a locally nilpotent derivation fixing omega, so g is a unipotent
    automorphism; the Delta-operator twist of the adjoint module by -tau e^h
    is a g-twisted module whose fields carry genuine log x terms.
    """
    if cutoff < 2:
        raise ValueError("cutoff must be at least 2")
    fock = LatticeFock(2, True)
    V, states, index = _fock_voa(fock, cutoff, {"strong_generator_weight": 1, "kind": "lattice_sqrt2",
                                                "cocycle": COCYCLE_CONVENTION})
    eh = index[((), 1)]
    R = GradedOperator(V.blocks(), {i: V.product(eh, 0, i) for i in range(V.dim)})
    g = exp_nilpotent(R)
    aut = decompose_automorphism(V, g, 1)
    if aut.N != R.scale(TAU):
        raise AssertionError("unexpected nilpotent part")
    W = delta_twisted_module(V, aut, eh)
    return Example(ExampleSpec("unipotent_fragment", cutoff, 1, {"derivation": "e^h(0)"}), V, aut, W)


BUILDERS = {
    "trivial": lambda cutoff: build_trivial(),
    "twisted_fock": build_twisted_fock,
    "lattice_sqrt2": build_lattice_sqrt2,
    "unipotent_fragment": build_unipotent_fragment,
    "free_boson_untwisted": build_free_boson_untwisted,
}


def build(name: str, cutoff: int) -> Example:
    try:
        return BUILDERS[name](cutoff)
    except KeyError:
        raise ValueError(f"unknown example {name!r}; choose from {sorted(BUILDERS)}") from None

"""Finitely tabulated vertex operator algebras with an automorphism."""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from fractions import Fraction
from typing import Callable, Mapping

from .errors import CutoffTooSmall, NotAutomorphism, PreconditionViolated, TableIncomplete
from .exactalg import (
    ONE,
    Echelon,
    GradedOperator,
    Scalar,
    Vec,
    axpy,
    binomial,
    eigenprojection,
    exp_2pii_nilpotent,
    exp_2pii_semisimple,
    jordan_chevalley,
    nullspace,
    mat_add,
    mat_identity,
)
from .report import CheckReport


def sign(k: int) -> int:
    return -1 if k % 2 else 1


def s_value(alpha, beta) -> Fraction:
    """The S-eigenvalue of u(n)v for S-eigenvectors u, v."""
    t = Fraction(alpha) + Fraction(beta)
    return t if t < 1 else t - 1


class VOAData:
    """A vertex operator algebra truncated at weight ``cutoff``.

    Products u(n)v of basis vectors come from ``source`` (a callable
    ``(u, n, v) -> Vec``) or from an explicit ``table``; entries absent from a
    table are zero.  ``overrides`` replace individual entries, which is how
    mutation tests perturb a structure constant.
    """

    def __init__(self, weights, labels, vacuum: int, omega, cutoff: int,
                 source: Callable | None = None, table: Mapping | None = None,
                 central_charge=0, conductor: int = 1, meta: dict | None = None):
        self.weights = list(weights)
        self.labels = list(labels)
        self.vacuum = vacuum
        # the conformal vector, given as a basis index or a Vec
        self.omega = Vec.basis(omega) if isinstance(omega, int) else omega
        self.cutoff = cutoff
        self.central_charge = Fraction(central_charge)
        self.conductor = conductor
        self.meta = dict(meta or {})
        self._source = source
        self._table = dict(table) if table is not None else None
        self._memo: dict = {}
        self.overrides: dict = {}
        self.by_weight: dict[int, tuple] = {}
        for i, w in enumerate(self.weights):
            self.by_weight.setdefault(w, ())
            self.by_weight[w] += (i,)
        for w in range(cutoff + 1):
            self.by_weight.setdefault(w, ())

    @property
    def dim(self) -> int:
        return len(self.weights)

    def blocks(self) -> dict:
        return {w: self.by_weight[w] for w in range(self.cutoff + 1)}

    def weight_of_vec(self, v: Vec):
        ws = {self.weights[i] for i in v.keys()}
        return ws.pop() if len(ws) == 1 else None

    def with_override(self, u: int, n: int, v: int, value: Vec) -> "VOAData":
        out = VOAData(self.weights, self.labels, self.vacuum, self.omega, self.cutoff,
                      self._source, self._table, self.central_charge, self.conductor, self.meta)
        out._memo = self._memo
        out.overrides = dict(self.overrides)
        out.overrides[(u, n, v)] = value
        return out

    # -- products
    def product(self, u: int, n: int, v: int) -> Vec:
        target = self.weights[u] + self.weights[v] - n - 1
        if target < 0:
            return Vec()
        if target > self.cutoff:
            raise TableIncomplete(f"{self.labels[u]}({n}){self.labels[v]} has weight {target} > cutoff")
        key = (u, n, v)
        if key in self.overrides:
            return self.overrides[key]
        if self._table is not None:
            return self._table.get(key, Vec())
        hit = self._memo.get(key)
        if hit is None:
            hit = self._source(u, n, v)
            self._memo[key] = hit
        return hit

    def mode(self, u: Vec, n: int, v: Vec) -> Vec:
        acc: dict = {}
        for i, a in u.items():
            for j, b in v.items():
                axpy(acc, a * b, self.product(i, n, j))
        return Vec.from_acc(acc)

    def L(self, k: int, v: Vec) -> Vec:
        """Virasoro mode L(k) = omega(k+1)."""
        if self.omega is None:
            raise PreconditionViolated("no conformal vector")
        return self.mode(self.omega, k + 1, v)

    # -- serialization
    def table_entries(self, max_weight: int | None = None):
        """All nonzero basis products with output weight within the cutoff."""
        top = self.cutoff if max_weight is None else max_weight
        for u in range(self.dim):
            if self.weights[u] > top:
                continue
            for v in range(self.dim):
                if self.weights[v] > top:
                    continue
                base = self.weights[u] + self.weights[v] - 1
                for n in range(base - top, base + 1):
                    r = self.product(u, n, v)
                    if r:
                        yield u, n, v, r

    def to_json(self) -> dict:
        return {
            "conductor": self.conductor,
            "cutoff": self.cutoff,
            "central_charge": str(self.central_charge),
            "weights": self.weights,
            "basis": self.labels,
            "vacuum": self.vacuum,
            "omega": self.omega.to_json() if self.omega is not None else None,
            "meta": self.meta,
            "products": [
                {"u": u, "v": v, "n": n, "result": r.to_json()} for u, n, v, r in self.table_entries()
            ],
        }

    @classmethod
    def from_json(cls, data: dict) -> "VOAData":
        table = {}
        for e in data["products"]:
            table[(int(e["u"]), int(e["n"]), int(e["v"]))] = Vec.from_json(e["result"])
        om = data.get("omega")
        om = Vec.from_json(om) if isinstance(om, list) else om
        return cls(data["weights"], data["basis"], data["vacuum"], om, data["cutoff"],
                   table=table, central_charge=Fraction(data.get("central_charge", "0")),
                   conductor=data.get("conductor", 1), meta=data.get("meta", {}))


# ---------------------------------------------------------------------------
# automorphisms


@dataclass
class AutomorphismData:
    g: GradedOperator
    T: int
    S: GradedOperator
    N: GradedOperator
    spectrum: list
    eigenbasis: dict = field(default_factory=dict)

    @cached_property
    def L(self) -> GradedOperator:
        return self.S + self.N

    def nilpotency_index(self) -> int:
        return self.N.nilpotency_index() or 0

    def components(self, v: Vec) -> dict:
        """Split v into S-eigencomponents {alpha: Vec}."""
        out = {}
        if len(self.spectrum) == 1:
            return {self.spectrum[0]: v} if v else {}
        for a in self.spectrum:
            c = self._projector(a)(v)
            if c:
                out[a] = c
        return out

    def _projector(self, a):
        cache = self.__dict__.setdefault("_proj", {})
        if a not in cache:
            cache[a] = eigenprojection(self.S, a, self.spectrum)
        return cache[a]

    def eigenvalue(self, v: Vec):
        """alpha if v is an S-eigenvector, else None."""
        comps = self.components(v)
        if len(comps) == 1:
            return next(iter(comps))
        return Fraction(0) if not comps else None

    def to_json(self) -> dict:
        return {"T": self.T, "g": self.g.to_json()}


def _eigenbasis(S: GradedOperator, spectrum) -> dict:
    out = {}
    for w, ix in S.blocks.items():
        if not ix:
            continue
        blk = S.block(w)
        n = len(ix)
        for a in spectrum:
            shifted = mat_add(blk, mat_identity(n), cb=-Scalar(a))
            vecs = []
            for col in nullspace(shifted, n):
                vecs.append(Vec((ix[r], col[r]) for r in range(n)))
            if vecs:
                out[(w, a)] = vecs
    return out


def decompose_automorphism(V: VOAData, g: GradedOperator, T: int, window: int | None = None,
                           check: bool = True) -> AutomorphismData:
    """Jordan-Chevalley split of g plus the automorphism and derivation checks."""
    S, N = jordan_chevalley(g, T)
    spectrum = sorted({Fraction(k, T) for k in range(T)
                       if any(eigenprojection_nonzero(S, Fraction(k, T), T))})
    aut = AutomorphismData(g, T, S, N, spectrum)
    aut.eigenbasis = _eigenbasis(S, spectrum)
    if check:
        rep = check_automorphism(V, aut, window if window is not None else min(V.cutoff, 3))
        if not rep.passed:
            raise NotAutomorphism(f"automorphism check failed at {rep.failure}")
    return aut


def eigenprojection_nonzero(S: GradedOperator, a, T: int):
    for w, ix in S.blocks.items():
        if not ix:
            continue
        blk = S.block(w)
        n = len(ix)
        shifted = mat_add(blk, mat_identity(n), cb=-Scalar(a))
        yield bool(nullspace(shifted, n))


def check_automorphism(V: VOAData, aut: AutomorphismData, window: int) -> CheckReport:
    rep = CheckReport("automorphism")
    g, N = aut.g, aut.N
    one = Vec.basis(V.vacuum)
    rep.tick()
    if g(one) != one:
        return rep.fail(property="g(vacuum)")
    if V.omega is not None:
        om = V.omega
        rep.tick()
        if g(om) != om:
            return rep.fail(property="g(omega)")
        rep.tick()
        if N(om):
            return rep.fail(property="N(omega)")
    rep.tick()
    if not (aut.S.compose(N) - N.compose(aut.S)).is_zero():
        return rep.fail(property="SN = NS")
    rep.tick()
    back = exp_2pii_semisimple(aut.S, aut.spectrum).compose(exp_2pii_nilpotent(N))
    if back != g:
        return rep.fail(property="exp(2 pi i S) exp(2 pi i N) = g")
    idx = [i for i in range(V.dim) if V.weights[i] <= window]
    for u in idx:
        gu, Nu = g(Vec.basis(u)), N(Vec.basis(u))
        for v in idx:
            gv, Nv = g(Vec.basis(v)), N(Vec.basis(v))
            base = V.weights[u] + V.weights[v] - 1
            for n in range(base - V.cutoff, base + 1):
                prod = V.product(u, n, v)
                rep.tick()
                if g(prod) != V.mode(gu, n, gv):
                    return rep.fail(property="g(u(n)v) = (gu)(n)(gv)", u=u, n=n, v=v)
                if N(prod) != V.mode(Nu, n, Vec.basis(v)) + V.mode(Vec.basis(u), n, Nv):
                    return rep.fail(property="N derivation", u=u, n=n, v=v)
    return rep


# ---------------------------------------------------------------------------
# axioms


def check_voa_axioms(V: VOAData, window: int) -> CheckReport:
    """Vacuum, L(-1)-derivative and Borcherds identities on basis triples.

    The Borcherds identity is checked for all basis u, v, w of weight at most
    ``window`` and all (p, q, l) whose every term stays within the cutoff.
    """
    rep = CheckReport("voa_axioms")
    rep.details["window"] = window
    rep.details["cutoff"] = V.cutoff
    low = [i for i in range(V.dim) if V.weights[i] <= window]
    one = V.vacuum
    for v in low:
        for n in range(-V.cutoff - 1, V.cutoff + 1):
            t = V.weights[v] - n - 1
            if t < 0 or t > V.cutoff:
                continue
            rep.tick()
            expect = Vec.basis(v) if n == -1 else Vec()
            if V.product(one, n, v) != expect:
                return rep.fail(identity="vacuum(n)v", n=n, v=v)
            rep.tick()
            got = V.product(v, n, one)
            expect = Vec.basis(v) if n == -1 else Vec()
            if n >= -1 and got != expect:
                return rep.fail(identity="u(n)vacuum", u=v, n=n)
    if V.omega is not None:
        for u in low:
            Lu = V.L(-1, Vec.basis(u))
            for v in low:
                base = V.weights[u] + V.weights[v]
                for n in range(base - V.cutoff, base + 1):
                    rep.tick()
                    lhs = V.mode(Lu, n, Vec.basis(v))
                    rhs = V.product(u, n - 1, v) * (-n) if base - n <= V.cutoff else None
                    if rhs is not None and lhs != rhs:
                        return rep.fail(identity="(L(-1)u)(n) = -n u(n-1)", u=u, v=v, n=n)
    for u in low:
        for v in low:
            for w in low:
                r = _borcherds_triple(V, u, v, w, rep)
                if not r:
                    return rep
    return rep


def _borcherds_triple(V: VOAData, u: int, v: int, w: int, rep: CheckReport) -> bool:
    wu, wv, ww = V.weights[u], V.weights[v], V.weights[w]
    cut = V.cutoff
    for p in range(wu + ww - 1 - cut, wu + ww):
        for q in range(wv + ww - 1 - cut, wv + ww):
            for out in range(0, cut + 1):
                l = ww + wu + wv - p - q - 2 - out
                if wu + wv - l - 1 > cut:
                    continue
                lhs = _borcherds_lhs(V, u, v, w, p, q, l)
                if lhs is None:
                    continue
                rhs: dict = {}
                i = 0
                while wu + wv - (l + i) - 1 >= 0:
                    inner = V.product(u, l + i, v)
                    c = binomial(p, i)
                    if inner and c:
                        axpy(rhs, c, V.mode(inner, p + q - i, Vec.basis(w)))
                    i += 1
                rep.tick()
                if lhs != Vec.from_acc(rhs):
                    rep.fail(identity="Borcherds", u=u, v=v, w=w, p=p, q=q, l=l)
                    return False
    return True


def _borcherds_lhs(V: VOAData, u, v, w, p, q, l):
    wu, wv, ww = V.weights[u], V.weights[v], V.weights[w]
    acc: dict = {}
    j = 0
    try:
        while wv + ww - (q + j) - 1 >= 0:
            c = binomial(l, j) * sign(j)
            if c:
                mid = V.product(v, q + j, w)
                if mid:
                    axpy(acc, c, V.mode(Vec.basis(u), p + l - j, mid))
            j += 1
        j = 0
        while wu + ww - (p + j) - 1 >= 0:
            c = binomial(l, j) * sign(l + j)
            if c:
                mid = V.product(u, p + j, w)
                if mid:
                    axpy(acc, -c, V.mode(Vec.basis(v), q + l - j, mid))
            j += 1
    except TableIncomplete:
        return None
    return Vec.from_acc(acc)


# ---------------------------------------------------------------------------
# C_2


@dataclass
class C2Report:
    cutoff: int
    c2_basis: dict          # weight -> list of Vec spanning C_2(V) in that weight
    quotient_dims: dict     # weight -> int
    B: list                 # (weight, alpha, Vec) representatives without the vacuum
    M: int | None
    stabilized: bool
    witnesses: dict         # weight -> list of (a, b, alpha) with a(-2)b independent

    def total_quotient_dim(self) -> int:
        return sum(self.quotient_dims.values())

    def to_json(self) -> dict:
        return {
            "cutoff": self.cutoff,
            "quotient_dims": {str(w): d for w, d in sorted(self.quotient_dims.items())},
            "B": [{"weight": w, "alpha": str(a), "vector": v.to_json()} for w, a, v in self.B],
            "M": self.M,
            "stabilized": self.stabilized,
        }


def compute_c2(V: VOAData, aut: AutomorphismData, cutoff: int | None = None) -> C2Report:
    """C_2(V) weightwise, representatives B of V/C_2(V), and the threshold M."""
    cutoff = V.cutoff if cutoff is None else cutoff
    if cutoff > V.cutoff:
        raise CutoffTooSmall(f"requested C2 cutoff {cutoff} exceeds table cutoff {V.cutoff}")
    if V.by_weight.get(0) != (V.vacuum,) or any(w < 0 for w in V.weights):
        raise PreconditionViolated("C2 representatives need a VOA of CFT type")
    eig = []
    for (w, a), vecs in sorted(aut.eigenbasis.items()):
        for v in vecs:
            eig.append((w, a, v))
    c2_basis, qdims, B, witnesses = {}, {}, [], {}
    for w in range(cutoff + 1):
        ech = Echelon()
        wit = []
        dim_w = len(V.by_weight[w])
        for wa, aa, a in eig:
            if wa >= w or ech.rank == dim_w:
                continue
            for wb, ab, b in eig:
                if wa + wb != w - 1 or ech.rank == dim_w:
                    continue
                prod = V.mode(a, -2, b)
                if prod and ech.add(prod):
                    wit.append((a, b, aa, ab, prod))
        c2_basis[w] = [p for *_, p in wit]
        witnesses[w] = wit
        qdims[w] = dim_w - ech.rank
        for wv, av, v in eig:
            if wv != w:
                continue
            if ech.add(v) and w > 0:
                B.append((w, av, v))
    M = None
    for m in range(cutoff, 0, -1):
        if qdims[m] != 0:
            break
        M = m
    gen_weight = V.meta.get("strong_generator_weight")
    if gen_weight is None:
        gen_weight = max((w for w, _, _ in B), default=1)
    stabilized = M is not None and cutoff >= M + gen_weight - 1
    return C2Report(cutoff, c2_basis, qdims, B, M, stabilized, witnesses)

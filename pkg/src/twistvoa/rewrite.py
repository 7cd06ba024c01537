"""The mode algebra of a twisted module and the spanning-set rewriting engine.

A *word* is a tuple of factors ``(vid, mode)`` read as the operator
u_1(m_1) ... u_r(m_r) (log-free modes); ``vid`` indexes an interned vector of
V.  Words act on a module vector from the right.  Infinite (summable) sums
that the lemmas produce are truncated with the module's degree bookkeeping:
a word whose partial product applied to the source vector would drop below
the minimal degree is zero.
"""
from __future__ import annotations

import heapq
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product as iproduct
from math import ceil, floor

from .errors import CutoffTooSmall, InvalidExponent, NonTerminatingBudget, PreconditionViolated, \
    TableIncomplete
from .exactalg import ONE, Echelon, Scalar, Vec, axpy, binomial, binomial_apply, mat_inverse
from .logcalc import LogSeries, residue
from .twisted import TwistedModuleData, lower_mode_rewrite
from .voa import C2Report, compute_c2, s_value, sign


def _sgn(k) -> int:
    return sign(int(k))


# ---------------------------------------------------------------------------
# the mode algebra


class ModeAlgebra:
    """Vectors, adapted bases and word evaluation for a module W.

    The adapted basis of each weight space V_(w) consists of the vacuum
    (w = 0), the representatives B of V/C_2(V) and the C_2 witnesses
    a(-2)b found by compute_c2.  All are S-eigenvectors.
    """

    def __init__(self, W: TwistedModuleData, c2: C2Report | None = None):
        self.W = W
        self.V = W.V
        self.aut = W.aut
        self.c2 = compute_c2(self.V, self.aut) if c2 is None else c2
        self._vecs: list[Vec] = []
        self._key: dict = {}
        self._wt: list = []
        self._alpha: list = []
        self.kind: dict[int, str] = {}
        self.witness: dict[int, tuple] = {}
        self._decomp: dict[int, list] = {}
        self._inverse: dict[int, tuple] = {}
        self.lemma_cache: dict = {}
        self.vacuum = self.intern(Vec.basis(self.V.vacuum))
        self.kind[self.vacuum] = "vacuum"
        self.B: list[int] = []
        for _, _, b in self.c2.B:
            vid = self.intern(b)
            self.kind[vid] = "B"
            self.B.append(vid)
        for w, wits in self.c2.witnesses.items():
            for a, b, aa, ab, prod in wits:
                vid = self.intern(prod)
                self.kind[vid] = "C2"
                self.witness[vid] = (self.intern(a), self.intern(b))

    # -- vectors
    def intern(self, v: Vec) -> int:
        key = tuple(sorted(v.items()))
        vid = self._key.get(key)
        if vid is not None:
            return vid
        wt = self.V.weight_of_vec(v)
        if wt is None:
            raise PreconditionViolated("mode vectors must be nonzero and weight-homogeneous")
        vid = len(self._vecs)
        self._vecs.append(v)
        self._key[key] = vid
        self._wt.append(wt)
        self._alpha.append(self.aut.eigenvalue(v))
        return vid

    def vec(self, vid: int) -> Vec:
        return self._vecs[vid]

    def weight(self, vid: int) -> int:
        return self._wt[vid]

    def alpha(self, vid: int):
        return self._alpha[vid]

    def depth(self, f) -> int:
        """n with mode = alpha - n."""
        return int(self._alpha[f[0]] - f[1])

    def label(self, vid: int) -> str:
        kind = self.kind.get(vid)
        if kind == "B":
            return f"b{self.B.index(vid)}"
        return f"v{vid}"

    def _adapted(self, w: int):
        hit = self._inverse.get(w)
        if hit is not None:
            return hit
        if w > self.c2.cutoff:
            raise CutoffTooSmall(f"weight {w} exceeds the C2 cutoff {self.c2.cutoff}")
        ids = [self.vacuum] if w == 0 else []
        ids += [b for b in self.B if self._wt[b] == w]
        ids += [vid for vid, k in self.kind.items() if k == "C2" and self._wt[vid] == w]
        ix = self.V.by_weight[w]
        pos = {i: r for r, i in enumerate(ix)}
        if len(ids) != len(ix):
            raise PreconditionViolated(f"adapted basis of weight {w} is incomplete")
        mat = [[Scalar(0)] * len(ids) for _ in ix]
        for c, vid in enumerate(ids):
            for i, x in self._vecs[vid].items():
                mat[pos[i]][c] = x
        hit = (ids, mat_inverse(mat), pos)
        self._inverse[w] = hit
        return hit

    def decompose(self, vid: int) -> list[tuple[int, Scalar]]:
        """Coordinates of a vector in the adapted basis of its weight."""
        if vid in self.kind:
            return [(vid, ONE)]
        hit = self._decomp.get(vid)
        if hit is not None:
            return hit
        ids, inv, pos = self._adapted(self._wt[vid])
        out = []
        v = self._vecs[vid]
        for r, target in enumerate(ids):
            c = Scalar(0)
            for i, x in v.items():
                y = inv[r][pos[i]]
                if y:
                    c = c + y * x
            if c:
                out.append((target, c))
        self._decomp[vid] = out
        return out

    # -- degrees
    def step(self, f) -> Fraction:
        return self._wt[f[0]] - f[1] - 1

    def alive(self, word, d0) -> bool:
        """False when some partial product lands below the minimal degree."""
        d = d0
        lo = self.W.min_degree
        for f in reversed(word):
            d += self.step(f)
            if d < lo:
                return False
        return True

    def degree_after(self, word, d0) -> Fraction:
        return d0 + sum((self.step(f) for f in word), Fraction(0))

    def canonical(self, word, coef, d0, acc: dict) -> None:
        """Expand every factor in adapted bases, drop zero modes, add to acc."""
        parts = []
        for vid, m in word:
            opts = []
            for t, c in self.decompose(vid):
                a = self._alpha[t]
                if (m - a).denominator == 1:
                    opts.append(((t, m), c))
            if not opts:
                return
            parts.append(opts)
        for choice in iproduct(*parts):
            w = tuple(f for f, _ in choice)
            if d0 is not None and not self.alive(w, d0):
                continue
            c = coef
            for _, x in choice:
                c = c * x
            if c:
                axpy(acc, 1, {w: c})

    # -- evaluation
    def apply(self, word, w: Vec, cache: dict | None = None) -> Vec:
        cur = w
        for k in range(len(word) - 1, -1, -1):
            key = word[k:]
            if cache is not None and key in cache:
                cur = cache[key]
                continue
            vid, m = word[k]
            cur = self.W.act(self._vecs[vid], m, 0, cur) if cur else cur
            if cache is not None:
                cache[key] = cur
        return cur

    def generator_degree(self, g: int | None = None) -> Fraction:
        return self.W.degrees[self.W.generator if g is None else g]


# ---------------------------------------------------------------------------
# expressions


class ModeExpression:
    """Finite linear combination of words applied to a generator (or bare operators)."""

    def __init__(self, terms: dict | None = None, generator: int | None = None):
        self.terms = {w: c for w, c in (terms or {}).items() if c}
        self.generator = generator

    def __add__(self, other: "ModeExpression") -> "ModeExpression":
        acc = dict(self.terms)
        for w, c in other.terms.items():
            axpy(acc, 1, {w: c})
        return ModeExpression(acc, self.generator)

    def scale(self, c) -> "ModeExpression":
        return ModeExpression({w: x * c for w, x in self.terms.items()}, self.generator)

    def __eq__(self, other) -> bool:
        return isinstance(other, ModeExpression) and self.terms == other.terms and \
            self.generator == other.generator

    __hash__ = None

    def __len__(self) -> int:
        return len(self.terms)

    def sorted_terms(self):
        return sorted(self.terms.items(), key=lambda t: [(v, m) for v, m in t[0]])

    def evaluate(self, alg: ModeAlgebra, w: Vec | None = None) -> Vec:
        if w is None:
            w = Vec.basis(self.generator if self.generator is not None else alg.W.generator)
        acc: dict = {}
        cache: dict = {}
        for word, c in self.terms.items():
            r = alg.apply(word, w, cache)
            if r:
                axpy(acc, c, r)
        return Vec.from_acc(acc)

    def to_json(self, alg: ModeAlgebra) -> list:
        out = []
        for word, c in self.sorted_terms():
            mono = []
            for vid, m in word:
                off = floor(m)
                mono.append({"vector": alg.vec(vid).to_json(), "label": alg.label(vid),
                             "coset": str(m - off), "offset": off, "k": 0})
            out.append({"monomial": mono, "coefficient": c.to_json()})
        return out

    @classmethod
    def from_json(cls, data: list, alg: ModeAlgebra, generator: int | None = None) -> "ModeExpression":
        """Monomials list factors left to right; ``vector`` is a V-basis index, a Vec or a label "b<i>"."""
        acc: dict = {}
        d0 = alg.generator_degree(generator)
        for term in data:
            word = []
            for f in term["monomial"]:
                vec = f["vector"]
                if isinstance(vec, str):
                    vid = alg.B[int(vec[1:])]
                else:
                    vid = alg.intern(Vec.basis(vec) if isinstance(vec, int) else Vec.from_json(vec))
                if f.get("k", 0):
                    raise PreconditionViolated("log modes are rewritten through N first; pass k = 0")
                word.append((vid, Fraction(f["coset"]) + int(f["offset"])))
            c = Scalar.from_json(term["coefficient"]) if "coefficient" in term else ONE
            alg.canonical(tuple(word), c, d0, acc)
        return cls(acc, generator)


def monomial(alg: ModeAlgebra, factors, generator: int | None = None, coef=ONE) -> ModeExpression:
    """Expression of one word given as [(vector, mode)], canonicalized."""
    word = tuple((alg.intern(v) if isinstance(v, Vec) else v, Fraction(m)) for v, m in factors)
    acc: dict = {}
    alg.canonical(word, Scalar(coef), alg.generator_degree(generator), acc)
    return ModeExpression(acc, generator)


# ---------------------------------------------------------------------------
# the lemmas as operator identities


def _as_vid(alg: ModeAlgebra, u) -> int:
    return alg.intern(u) if isinstance(u, Vec) else u


def commutator_expand(alg: ModeAlgebra, u, m: int, v, n: int) -> ModeExpression:
    """[u(alpha+m), v(beta+n)] = sum_j ((binom(m+L, j) u)(j) v)(alpha+beta+m+n-j)."""
    u, v = _as_vid(alg, u), _as_vid(alg, v)
    key = ("comm", u, m, v, n)
    hit = alg.lemma_cache.get(key)
    if hit is None:
        hit = alg.lemma_cache[key] = _commutator(alg, u, m, v, n)
    return ModeExpression(hit)


def _commutator(alg, u, m, v, n) -> dict:
    a, b = alg.alpha(u), alg.alpha(v)
    if a is None or b is None:
        raise PreconditionViolated("commutator_expand needs S-eigenvectors")
    V, L = alg.V, alg.aut.L
    uv, vv = alg.vec(u), alg.vec(v)
    acc: dict = {}
    j = 0
    while alg.weight(u) + alg.weight(v) - j - 1 >= 0:
        x = binomial_apply(L, m, j, uv)
        if x:
            inner = V.mode(x, j, vv)
            if inner:
                axpy(acc, 1, {((alg.intern(inner), a + b + m + n - j),): ONE})
        j += 1
    return acc


def c2_mode_expand(alg: ModeAlgebra, u, m: int, v, n: int, source_degree) -> ModeExpression:
    """The three-sum expansion of (u(m)v)(s(alpha,beta)+n), truncated on vectors of ``source_degree``."""
    u, v = _as_vid(alg, u), _as_vid(alg, v)
    key = ("c2", u, m, v, n, Fraction(source_degree))
    hit = alg.lemma_cache.get(key)
    if hit is None:
        hit = alg.lemma_cache[key] = _c2_terms(alg, u, m, v, n, Fraction(source_degree))
    return ModeExpression(hit)


def _c2_terms(alg, u, m, v, n, source_degree) -> dict:
    a, b = alg.alpha(u), alg.alpha(v)
    if a is None or b is None:
        raise PreconditionViolated("c2_mode_expand needs S-eigenvectors")
    V, L = alg.V, alg.aut.L
    s = s_value(a, b)
    uv, vv = alg.vec(u), alg.vec(v)
    acc: dict = {}
    d0 = Fraction(source_degree)
    j = 1
    while alg.weight(u) + alg.weight(v) - m - j - 1 >= 0:
        x = binomial_apply(L, 0, j, uv)
        if x:
            inner = V.mode(x, m + j, vv)
            if inner:
                word = ((alg.intern(inner), s + n - j),)
                if alg.alive(word, d0):
                    axpy(acc, 1, {word: Scalar(-1)})
        j += 1
    # sum_j (-1)^j C(m,j) u(a+m-j) v(s-a+n+j): v acts first and lowers degree as j grows
    j = 0
    while True:
        word = ((u, a + m - j), (v, s - a + n + j))
        if not alg.alive(word[1:], d0):
            break
        c = binomial(m, j) * _sgn(j)
        if c and alg.alive(word, d0):
            axpy(acc, 1, {word: Scalar(c)})
        j += 1
        if m >= 0 and j > m:
            break
    # sum_j (-1)^(m-j+1) C(m,j) v(s-a+m+n-j) u(a+j): u acts first
    j = 0
    while True:
        word = ((v, s - a + m + n - j), (u, a + j))
        if not alg.alive(word[1:], d0):
            break
        c = binomial(m, j) * _sgn(m - j + 1)
        if c and alg.alive(word, d0):
            axpy(acc, 1, {word: Scalar(c)})
        j += 1
        if m >= 0 and j > m:
            break
    return acc


def _run_vectors(alg: ModeAlgebra, seq, js):
    """((binom(L,j1)v1)(-1+j1) ... (binom(L,j_{k-1})v_{k-1})(-1+j_{k-1})) v_k."""
    V, L = alg.V, alg.aut.L
    cur = alg.vec(seq[-1])
    for vid, j in zip(reversed(seq[:-1]), reversed(js)):
        x = binomial_apply(L, 0, j, alg.vec(vid))
        if not x:
            return Vec()
        cur = V.mode(x, -1 + j, cur)
        if not cur:
            return cur
    return cur


def _rhs_run(alg: ModeAlgebra, seq, mode) -> dict:
    """sum_j x^{-|j|} Y_0(U_j, x) at the coefficient selecting ``mode`` + |j|... as words."""
    out: dict = {}
    k = len(seq)
    total_wt = sum(alg.weight(v) for v in seq)
    # enumerate j-tuples with bounded total (weights must stay nonnegative)
    def rec(prefix, budget):
        if len(prefix) == k - 1:
            yield tuple(prefix)
            return
        for j in range(budget + 1):
            yield from rec(prefix + [j], budget - j)

    for js in rec([], total_wt + k):
        U = _run_vectors(alg, seq, js)
        if U:
            axpy(out, 1, {((alg.intern(U), mode - sum(js)),): ONE})
    return out


def _ordered_words(alg: ModeAlgebra, seq, total_depth: int, d0):
    """Words of :Y_0(v_1,x)...Y_0(v_k,x): with depths summing to total_depth.

    Yields (word, signs, depths) with the nested normal-order word
    (plus parts) v_k (minus parts reversed), pruned at the source degree d0.
    """
    k = len(seq)
    lo = alg.W.min_degree
    for signs in iproduct((1, -1), repeat=k - 1):
        minus = [i for i in range(k - 1) if signs[i] < 0]
        plus = [i for i in range(k - 1) if signs[i] > 0]
        # minus parts act first: rightmost is v_1^-; order right-to-left is minus in increasing index
        def minus_rec(idx, d, depths):
            if idx == len(minus):
                yield d, depths
                return
            i = minus[idx]
            vid = seq[i]
            dep = 0
            while True:
                f = (vid, alg.alpha(vid) - dep)
                nd = d + alg.step(f)
                if nd < lo:
                    break
                yield from minus_rec(idx + 1, nd, depths + [(i, dep)])
                dep -= 1

        for d_after_minus, mdeps in minus_rec(0, d0, []):
            vk = seq[k - 1]
            wt, a = alg.weight(vk), alg.alpha(vk)
            dk_min = ceil(lo - d_after_minus - wt + a + 1)
            used = sum(dep for _, dep in mdeps)
            budget = total_depth - used - dk_min
            if budget < len(plus):
                continue

            def plus_rec(idx, left):
                if idx == len(plus):
                    yield []
                    return
                remaining = len(plus) - idx - 1
                for dep in range(1, left - remaining + 1):
                    for rest in plus_rec(idx + 1, left - dep):
                        yield [(plus[idx], dep)] + rest

            for pdeps in plus_rec(0, budget):
                dk = total_depth - used - sum(dep for _, dep in pdeps)
                depths = dict(mdeps + pdeps)
                depths[k - 1] = dk
                word = [(seq[i], alg.alpha(seq[i]) - depths[i]) for i in plus]
                word.append((vk, a - dk))
                word += [(seq[i], alg.alpha(seq[i]) - depths[i]) for i in reversed(minus)]
                word = tuple(word)
                if alg.alive(word, d0):
                    yield word, signs, depths


def repeats_reduce(alg: ModeAlgebra, vids, depth: int, M: int | None, source_degree,
                   expand_c2: bool = False) -> ModeExpression:
    """Rewrite u_1(a_1-depth)...u_k(a_k-depth) through the normal-order identity.

    The output is an operator expression equal to the run on vectors of
    ``source_degree``: terms of lower total weight plus same-weight terms
    with some depth at least depth + 1.
    """
    vids = list(vids)
    k = len(vids)
    if M is not None and k < M:
        raise PreconditionViolated(f"run length {k} is below M = {M}")
    for v in vids:
        if alg.weight(v) < 1 or alg.alpha(v) is None:
            raise PreconditionViolated("repeats need S-eigenvectors in V_+")
    seq = vids if depth > 0 else vids[::-1]
    target = tuple((v, alg.alpha(v) - depth) for v in vids)
    d0 = Fraction(source_degree)
    acc: dict = {}
    mode = sum((alg.alpha(v) for v in seq), Fraction(0)) - k * depth + k - 1
    for word, c in _rhs_run(alg, seq, mode).items():
        if alg.alive(word, d0):
            axpy(acc, 1, {word: c})
    found = False
    for word, signs, depths in _ordered_words(alg, seq, k * depth, d0):
        if word == target:
            found = True
            continue
        axpy(acc, -1, {word: ONE})
    if not found and alg.alive(target, d0):
        raise AssertionError("target word missing from the normal-ordered product")
    out = ModeExpression(acc)
    if expand_c2:
        out = _expand_full_weight(alg, out, sum(alg.weight(v) for v in vids), d0)
    return out


def _expand_full_weight(alg: ModeAlgebra, e: ModeExpression, s: int, d0) -> ModeExpression:
    """Replace single-factor terms of weight s (necessarily in C_2) by the C_2 lemma."""
    acc: dict = {}
    for word, c in e.terms.items():
        if len(word) == 1 and alg.weight(word[0][0]) == s:
            canon: dict = {}
            alg.canonical(word, c, d0, canon)
            for w2, c2 in canon.items():
                vid, m = w2[0]
                if alg.kind.get(vid) != "C2":
                    raise CutoffTooSmall("a weight >= M vector is not in C_2 within the cutoff")
                a, b = alg.witness[vid]
                n = m - s_value(alg.alpha(a), alg.alpha(b))
                for w3, c3 in c2_mode_expand(alg, a, -2, b, int(n), d0).terms.items():
                    axpy(acc, 1, {w3: c2 * c3})
        else:
            axpy(acc, 1, {word: c})
    return ModeExpression(acc)


# ---------------------------------------------------------------------------
# normal ordering identity


@dataclass
class NormalOrderCheck:
    direct: LogSeries
    rhs: LogSeries

    @property
    def difference(self) -> LogSeries:
        return self.direct - self.rhs

    @property
    def passed(self) -> bool:
        return self.direct == self.rhs


def normal_order(alg: ModeAlgebra, vectors, w: int, window) -> NormalOrderCheck:
    """Both sides of the multiple normal-ordering identity on a module basis vector.

    Coefficients of x^e are kept for outputs of degree <= window.
    """
    seq = [_as_vid(alg, v) for v in vectors]
    k = len(seq)
    W = alg.W
    d0 = W.degrees[w]
    ew = Vec.basis(w)
    alphas = sum((alg.alpha(v) for v in seq), Fraction(0))
    wts = sum(alg.weight(v) for v in seq)
    direct: dict = {}
    rhs: dict = {}
    window = Fraction(window)
    # output degree d = d0 + wts - (total mode) - k; exponent e = -(total mode) - k
    for d in [x for x in W.degree_set if x <= window]:
        total_mode = d0 + wts - k - d
        td = alphas - total_mode
        if td.denominator != 1:
            continue
        e = -total_mode - k
        if k == 1:
            words = [((seq[0], total_mode),)]
        else:
            words = [wd for wd, _, _ in _ordered_words(alg, seq, int(td), d0)]
        acc: dict = {}
        cache: dict = {}
        for word in words:
            r = alg.apply(word, ew, cache)
            if r:
                axpy(acc, 1, r)
        if acc:
            direct[(e, 0)] = Vec.from_acc(acc)
        racc: dict = {}
        for word, c in (_rhs_run(alg, seq, total_mode + k - 1) if k > 1
                        else {((seq[0], total_mode),): ONE}).items():
            vid, m = word[0]
            r = W.act(alg.vec(vid), m, 0, ew)
            if r:
                axpy(racc, c, r)
        if racc:
            rhs[(e, 0)] = Vec.from_acc(racc)
    return NormalOrderCheck(LogSeries(direct), LogSeries(rhs))


# ---------------------------------------------------------------------------
# the spanning-set normalizer


@dataclass
class SpanningCertificate:
    L: int
    M: int
    N: int
    expression: ModeExpression
    trace: list = field(default_factory=list)
    steps: int = 0

    def monomials(self) -> list:
        return [w for w, _ in self.expression.sorted_terms()]

    def to_json(self, alg: ModeAlgebra) -> dict:
        return {"L": self.L, "M": self.M, "N": self.N, "steps": self.steps,
                "normal_form": self.expression.to_json(alg), "trace": self.trace}


def measure(alg: ModeAlgebra, word) -> tuple:
    """(total weight, length, descending depths negated, inversions); every rule lowers it."""
    depths = [alg.depth(f) for f in word]
    s = sum(alg.weight(v) for v, _ in word)
    inv = sum(1 for i in range(len(depths)) for j in range(i + 1, len(depths)) if depths[i] < depths[j])
    return (s, len(word), tuple(-d for d in sorted(depths, reverse=True)), inv)


def _priority(m: tuple) -> tuple:
    s, n, neg, inv = m
    return (-s, -n, tuple(-x for x in neg), -inv)


def check_L(alg: ModeAlgebra, L: int, generator: int | None = None) -> bool:
    """Whether b(alpha - n) w = 0 for every b in B and n <= L."""
    g = alg.W.generator if generator is None else generator
    d0 = alg.W.degrees[g]
    for b in alg.B:
        n = L
        while True:
            f = (b, alg.alpha(b) - n)
            if d0 + alg.step(f) < alg.W.min_degree:
                break
            if alg.W.act(alg.vec(b), f[1], 0, Vec.basis(g)):
                return False
            n -= 1
    return True


def minimal_L(alg: ModeAlgebra, generator: int | None = None) -> int:
    """The largest L with b(alpha - n) w = 0 for all b in B, n <= L."""
    g = alg.W.generator if generator is None else generator
    d0 = alg.W.degrees[g]
    best = None
    for b in alg.B:
        a, wt = alg.alpha(b), alg.weight(b)
        n = floor(alg.W.min_degree - d0 - wt + a + 1) - 1
        top = floor(alg.W.cutoff - d0 - wt + a + 1)
        while n <= top:
            f = (b, a - n)
            if d0 + alg.step(f) >= alg.W.min_degree and alg.W.act(alg.vec(b), f[1], 0, Vec.basis(g)):
                break
            n += 1
        if n <= top:
            best = n - 1 if best is None else min(best, n - 1)
    if best is None:
        raise CutoffTooSmall("no B-mode acts nontrivially on the generator within the cutoff")
    return best


def _violation(alg: ModeAlgebra, word, L: int, M: int, N: int):
    """The first rule that applies to a canonical word, or None for normal form."""
    for i, (vid, _) in enumerate(word):
        kind = alg.kind.get(vid)
        if kind in ("vacuum", "C2"):
            return ("expand", i)
    depths = [alg.depth(f) for f in word]
    for i in range(len(word) - 1):
        if depths[i] < depths[i + 1]:
            return ("swap", i)
    if depths and depths[-1] <= L:
        return ("drop", len(word) - 1)
    i = 0
    while i < len(word):
        j = i
        while j + 1 < len(word) and depths[j + 1] == depths[i]:
            j += 1
        if depths[i] <= N and j - i + 1 > M:
            return ("repeats", i, j + 1)
        i = j + 1
    return None


def _rewrite(alg: ModeAlgebra, word, rule, d0) -> dict:
    """One rule application; returns the replacement as {word: coefficient} (uncanonicalized)."""
    kind = rule[0]
    if kind == "drop":
        return {}
    if kind == "expand":
        i = rule[1]
        vid, m = word[i]
        pre, post = word[:i], word[i + 1:]
        if alg.kind[vid] == "vacuum":
            return {pre + post: ONE} if m == -1 else {}
        a, b = alg.witness[vid]
        n = m - s_value(alg.alpha(a), alg.alpha(b))
        src = alg.degree_after(post, d0)
        inner = c2_mode_expand(alg, a, -2, b, int(n), src)
        return {pre + w + post: c for w, c in inner.terms.items()}
    if kind == "swap":
        i = rule[1]
        (u, mu), (v, mv) = word[i], word[i + 1]
        pre, post = word[:i], word[i + 2:]
        out = {pre + ((v, mv), (u, mu)) + post: ONE}
        m = int(mu - alg.alpha(u))
        n = int(mv - alg.alpha(v))
        for w, c in commutator_expand(alg, u, m, v, n).terms.items():
            axpy(out, 1, {pre + w + post: c})
        return out
    if kind == "repeats":
        i, j = rule[1], rule[2]
        pre, run, post = word[:i], word[i:j], word[j:]
        depth = alg.depth(run[0])
        src = alg.degree_after(post, d0)
        inner = repeats_reduce(alg, [v for v, _ in run], depth, None, src)
        return {pre + w + post: c for w, c in inner.terms.items()}
    raise ValueError(kind)


def spanning_normalize(alg: ModeAlgebra, expr: ModeExpression, L: int, M: int, N: int,
                       budget: int = 200_000, refine: bool = False, trace: bool = True,
                       check_preconditions: bool = True) -> SpanningCertificate:
    """Rewrite ``expr`` into the ordered, repeat-bounded spanning set over B.

    Monomials are processed from the largest measure down, so every
    monomial is finished once all contributions to it have arrived.
    """
    if refine:
        raise NotImplementedError("the refined spanning set is not implemented")
    gen = alg.W.generator if expr.generator is None else expr.generator
    if check_preconditions:
        if not alg.c2.stabilized:
            raise PreconditionViolated("V is not certified C2-cofinite within the cutoff")
        if N < L:
            raise PreconditionViolated("N must be at least L")
        if not check_L(alg, L, gen):
            raise PreconditionViolated(f"L = {L} does not annihilate the generator")
    d0 = alg.W.degrees[gen]
    pending: dict = {}
    heap: list = []
    meas: dict = {}

    def push(word, c):
        if word in pending:
            s = pending[word] + c
            if s:
                pending[word] = s
            else:
                del pending[word]
            return
        if not c:
            return
        pending[word] = c
        if word not in meas:
            meas[word] = measure(alg, word)
        heapq.heappush(heap, (_priority(meas[word]), word))

    for w, c in expr.terms.items():
        canon: dict = {}
        alg.canonical(w, c, d0, canon)
        for w2, c2 in canon.items():
            push(w2, c2)
    result: dict = {}
    steps = 0
    log = []
    while heap:
        _, word = heapq.heappop(heap)
        c = pending.pop(word, None)
        if c is None:
            continue
        rule = _violation(alg, word, L, M, N)
        if rule is None:
            axpy(result, 1, {word: c})
            continue
        steps += 1
        if steps > budget:
            raise NonTerminatingBudget(f"exceeded {budget} rewriting steps")
        repl = _rewrite(alg, word, rule, d0)
        canon: dict = {}
        for w2, c2 in repl.items():
            alg.canonical(w2, c2 * c, d0, canon)
        before = meas[word]
        for w2 in canon:
            if w2 not in meas:
                meas[w2] = measure(alg, w2)
            if not meas[w2] < before:
                raise AssertionError(f"rule {rule[0]} did not lower the measure")
        if trace:
            log.append({"rule": rule[0], "position": rule[1], "word": _word_json(alg, word),
                        "measure": _measure_json(before), "outputs": len(canon)})
        for w2, c2 in canon.items():
            push(w2, c2)
    return SpanningCertificate(L, M, N, ModeExpression(result, expr.generator), log, steps)


def spanning_union(alg: ModeAlgebra, exprs: list[ModeExpression], L: int, M: int, N: int,
                   budget: int = 200_000) -> tuple[list[SpanningCertificate], set]:
    """Normalize one expression per generator and union the resulting spanning words.

    L must annihilate every generator; the union is a set of (generator, word).
    """
    certs, words = [], set()
    for e in exprs:
        cert = spanning_normalize(alg, e, L, M, N, budget=budget)
        certs.append(cert)
        gen = alg.W.generator if e.generator is None else e.generator
        words.update((gen, w) for w in cert.monomials())
    return certs, words


def _word_json(alg: ModeAlgebra, word) -> list:
    return [[alg.label(v), str(m)] for v, m in word]


def _measure_json(m: tuple) -> list:
    return [m[0], m[1], list(m[2]), m[3]]


def is_normal_form(alg: ModeAlgebra, word, L: int, M: int, N: int) -> bool:
    return _violation(alg, word, L, M, N) is None


def check_conditions(alg: ModeAlgebra, word, L: int, M: int, N: int) -> dict:
    """The ordering and repeat conditions evaluated directly on depths."""
    depths = [alg.depth(f) for f in word]
    in_b = all(alg.kind.get(v) == "B" for v, _ in word)
    above_L = all(d > L for d in depths)
    ordering = all(depths[i] >= depths[i + 1] for i in range(len(depths) - 1))
    repeat = True
    for j in range(len(depths) - M):
        block = depths[j:j + M]
        if len(set(block)) == 1 and block[0] <= N and depths[j + M] == block[-1]:
            repeat = False
    return {"in_B": in_b, "above_L": above_L, "ordering": ordering, "repeat": repeat}


def exceptional_set_size(alg: ModeAlgebra, L: int, M: int, N: int, n: int) -> int | None:
    """Number of spanning-set words with n_1 < n (None when infinite, i.e. N < n - 1)."""
    if N < n - 1:
        return None
    per_level = sum(len(alg.B) ** r for r in range(M + 1))
    levels = max(0, n - 1 - L)
    return per_level ** levels


# ---------------------------------------------------------------------------
# C_n(W)


@dataclass
class CnReport:
    n: int
    window: Fraction
    quotient_dims: dict
    total: int
    residue_form_agrees: bool
    log_inclusive_agrees: bool
    spanning: dict = field(default_factory=dict, repr=False)

    def to_json(self) -> dict:
        return {"n": self.n, "window": str(self.window), "total": self.total,
                "quotient_dims": {str(d): q for d, q in sorted(self.quotient_dims.items())},
                "residue_form_agrees": self.residue_form_agrees,
                "log_inclusive_agrees": self.log_inclusive_agrees}


def _eigen_upto(aut, wmax: int, positive: bool) -> list:
    out = []
    for (wt, a), vecs in sorted(aut.eigenbasis.items()):
        if wt <= wmax and (wt > 0 or not positive):
            out.extend((wt, a, v) for v in vecs)
    return out


def cn_subspace(W: TwistedModuleData, n: int, window, full_checks: bool = True) -> CnReport:
    """Span of u(alpha - n, 0) w inside each degree <= window, with the residue-form cross-check."""
    if n < 1:
        raise InvalidExponent("n must be positive")
    window = Fraction(window)
    if window > W.cutoff:
        raise CutoffTooSmall(f"window {window} exceeds the module cutoff {W.cutoff}")
    V, aut = W.V, W.aut
    degs = [d for d in W.degree_set if d <= window]
    wmax = ceil(window - W.min_degree - n + 1)
    if wmax > V.cutoff:
        raise CutoffTooSmall(f"C_{n} up to degree {window} needs V up to weight {wmax}")
    eig = _eigen_upto(aut, wmax, positive=(n == 1))
    qd, spans = {}, {}
    res_ok = log_ok = True
    for d in degs:
        target = set(W.by_degree[d])
        ech = Echelon()
        for wt, a, u in eig:
            src = d - wt + a - n + 1  # deg w with u(a - n) w in degree d
            if src not in W.by_degree:
                continue
            for w in W.by_degree[src]:
                r = W.act(u, a - n, 0, Vec.basis(w))
                if r and ech.add(r) and ech.rank == len(target):
                    break
            if ech.rank == len(target):
                break
        qd[d] = len(target) - ech.rank
        spans[d] = ech
    if full_checks:
        res_ok = _residue_form(W, n, window, eig, spans)
        log_ok = _log_inclusive(W, n, window, eig, spans)
    return CnReport(n, window, qd, sum(qd.values()), res_ok, log_ok, spans)


def _residue_form(W, n, window, eig, spans) -> bool:
    """Res_x x^{-n} Y_W(x^L u, x) w lies in the mode-form span for every u, w."""
    from .twisted import _x_to_N

    for wt, a, u in eig:
        for w in range(W.dim):
            d = W.degrees[w] + wt - a + n - 1
            if d > window or d not in spans:
                continue
            series = _x_to_N(W, u, Vec.basis(w), window).shift(a - n)
            r = residue(series)
            if r and not spans[d].contains(r):
                return False
            if (r or Vec()) != W.act(u, a - n, 0, Vec.basis(w)):
                return False
    return True


def _log_inclusive(W, n, window, eig, spans) -> bool:
    """u(alpha - n, k) w lies in C_n(W) for all k."""
    for wt, a, u in eig:
        for w in range(W.dim):
            d = W.degrees[w] + wt - a + n - 1
            if d > window or d not in spans:
                continue
            for k in range(1, W.K + 1):
                r = W.act(u, a - n, k, Vec.basis(w))
                if r and not spans[d].contains(r):
                    return False
    return True


def cn_quotient_dim(W: TwistedModuleData, n: int, window) -> int:
    return cn_subspace(W, n, window, full_checks=False).total


def check_cn_nesting(W: TwistedModuleData, n: int, window) -> bool:
    """C_n(W) inside C_{n-1}(W) on the window, via the lower-modes rewrite for every generator."""
    if n < 2:
        raise InvalidExponent("nesting needs n >= 2")
    small = cn_subspace(W, n - 1, window, full_checks=False)
    V, aut = W.V, W.aut
    wmax = ceil(window - W.min_degree - n + 1)
    for wt, a, u in _eigen_upto(aut, wmax, positive=False):
        for w in range(W.dim):
            d = W.degrees[w] + wt - a + n - 1
            if d > window:
                continue
            r = W.act(u, a - n, 0, Vec.basis(w))
            if not r:
                continue
            rw = lower_mode_rewrite(V, aut, u, a - n + 1, 1)
            if n == 2 and any(V.weight_of_vec(t) == 0 for t in rw.terms):
                return False
            if rw.apply(W, Vec.basis(w)) != r or not small.spanning[d].contains(r):
                return False
    return True

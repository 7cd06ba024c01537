"""Exact scalars, sparse vectors and graded linear operators.

Scalars are Laurent polynomials in ``tau`` (standing for ``1/(2*pi*i)``)
with coefficients in a cyclotomic field.  Every cyclotomic coefficient is
kept in the power basis of ``Q(zeta_m)`` for the *smallest* admissible
conductor ``m``, so structural equality is field equality.
"""
from __future__ import annotations

from fractions import Fraction
from functools import lru_cache
from math import gcd
from typing import Iterable, Iterator, Mapping

from .errors import NonInvertible, NonRootOfUnitySpectrum

# ---------------------------------------------------------------------------
# cyclotomic fields


def _prime_factors(n: int) -> list[int]:
    out, p = [], 2
    while p * p <= n:
        if n % p == 0:
            out.append(p)
            while n % p == 0:
                n //= p
        p += 1
    if n > 1:
        out.append(n)
    return out


def _norm_conductor(n: int) -> int:
    return n // 2 if n % 4 == 2 else n


@lru_cache(maxsize=None)
def cyclotomic_poly(n: int) -> tuple[int, ...]:
    """Integer coefficients of the n-th cyclotomic polynomial, low degree first."""
    num = [-1] + [0] * (n - 1) + [1]
    for d in range(1, n):
        if n % d == 0:
            den = cyclotomic_poly(d)
            # exact division by a monic polynomial
            q = [0] * (len(num) - len(den) + 1)
            rem = list(num)
            for i in range(len(q) - 1, -1, -1):
                c = rem[i + len(den) - 1]
                q[i] = c
                if c:
                    for j, b in enumerate(den):
                        rem[i + j] -= c * b
            num = q
    return tuple(num)


@lru_cache(maxsize=None)
def totient(n: int) -> int:
    return len(cyclotomic_poly(n)) - 1


def _reduce(coeffs: list, n: int) -> tuple:
    phi = totient(n)
    if len(coeffs) <= phi:
        return tuple(coeffs) + (Fraction(0),) * (phi - len(coeffs))
    cyc = cyclotomic_poly(n)
    c = list(coeffs)
    for i in range(len(c) - 1, phi - 1, -1):
        a = c[i]
        if a:
            base = i - phi
            for j in range(phi):
                if cyc[j]:
                    c[base + j] -= a * cyc[j]
    return tuple(c[:phi])


@lru_cache(maxsize=None)
def _zeta_power(n: int, k: int) -> tuple:
    k %= n
    return _reduce([Fraction(0)] * k + [Fraction(1)], n)


def _solve_field_q(rows: list[list[Fraction]], rhs: list[Fraction]):
    """Solve a rational linear system; return None when inconsistent."""
    m = [list(r) + [b] for r, b in zip(rows, rhs)]
    ncols = len(rows[0]) if rows else 0
    piv_cols = []
    r = 0
    for c in range(ncols):
        p = next((i for i in range(r, len(m)) if m[i][c]), None)
        if p is None:
            continue
        m[r], m[p] = m[p], m[r]
        inv = 1 / m[r][c]
        m[r] = [x * inv for x in m[r]]
        for i in range(len(m)):
            if i != r and m[i][c]:
                f = m[i][c]
                m[i] = [x - f * y for x, y in zip(m[i], m[r])]
        piv_cols.append(c)
        r += 1
    for i in range(r, len(m)):
        if m[i][-1]:
            return None
    sol = [Fraction(0)] * ncols
    for i, c in enumerate(piv_cols):
        sol[c] = m[i][-1]
    return sol


@lru_cache(maxsize=None)
def _embedding(d: int, m: int) -> list[list[Fraction]]:
    """Matrix whose column j is zeta_d**j written in the basis of Q(zeta_m)."""
    step = m // d
    cols = [_zeta_power(m, j * step) for j in range(totient(d))]
    return [[cols[j][i] for j in range(len(cols))] for i in range(totient(m))]


class Cyc:
    """Element of a cyclotomic field, stored at its minimal conductor."""

    __slots__ = ("n", "c", "_h")

    def __init__(self, n: int, coeffs: tuple):
        self.n = n
        self.c = coeffs
        self._h = None

    @staticmethod
    def rational(q) -> "Cyc":
        return Cyc(1, (Fraction(q),))

    @staticmethod
    def from_powers(n: int, powers: Mapping[int, object]) -> "Cyc":
        """Build ``sum coeff * zeta_n**k`` from unreduced exponents."""
        n0 = n
        acc = [Fraction(0)] * totient(n0)
        for k, a in powers.items():
            zp = _zeta_power(n0, k)
            a = Fraction(a)
            for i, z in enumerate(zp):
                if z:
                    acc[i] += a * z
        return Cyc._canon(n0, tuple(acc))

    @staticmethod
    def _canon(n: int, coeffs: tuple) -> "Cyc":
        if n == 1 or not any(coeffs[1:]):
            return Cyc(1, (coeffs[0],))
        n2 = _norm_conductor(n)
        if n2 != n:
            coeffs = Cyc._lift(coeffs, n, n2, down=True)
            n = n2
        changed = True
        while changed and n > 1:
            changed = False
            for p in _prime_factors(n):
                d = _norm_conductor(n // p)
                sol = _solve_field_q(_embedding(d, n), list(coeffs))
                if sol is not None:
                    n, coeffs = d, tuple(sol)
                    changed = True
                    break
        if n == 1:
            return Cyc(1, (coeffs[0],))
        return Cyc(n, coeffs)

    @staticmethod
    def _lift(coeffs: tuple, n: int, m: int, down: bool = False) -> tuple:
        if down:
            # n = 2 * odd m; zeta_n = -zeta_m**((m+1)/2)
            acc = [Fraction(0)] * totient(m)
            for k, a in enumerate(coeffs):
                if a:
                    sign = -1 if k % 2 else 1
                    zp = _zeta_power(m, k * (m + 1) // 2)
                    for i, z in enumerate(zp):
                        if z:
                            acc[i] += sign * a * z
            return tuple(acc)
        if n == m:
            return coeffs
        step = m // n
        acc = [Fraction(0)] * totient(m)
        for k, a in enumerate(coeffs):
            if a:
                zp = _zeta_power(m, k * step)
                for i, z in enumerate(zp):
                    if z:
                        acc[i] += a * z
        return tuple(acc)

    def is_zero(self) -> bool:
        return self.n == 1 and not self.c[0]

    def __add__(self, other: "Cyc") -> "Cyc":
        if self.n == 1 and other.n == 1:
            return Cyc(1, (self.c[0] + other.c[0],))
        m = self.n * other.n // gcd(self.n, other.n)
        a = Cyc._lift(self.c, self.n, m)
        b = Cyc._lift(other.c, other.n, m)
        return Cyc._canon(m, tuple(x + y for x, y in zip(a, b)))

    def __neg__(self) -> "Cyc":
        return Cyc(self.n, tuple(-x for x in self.c))

    def __sub__(self, other: "Cyc") -> "Cyc":
        return self + (-other)

    def __mul__(self, other: "Cyc") -> "Cyc":
        if self.n == 1 and other.n == 1:
            return Cyc(1, (self.c[0] * other.c[0],))
        if other.n == 1:
            q = other.c[0]
            return Cyc(self.n, tuple(x * q for x in self.c)) if q else Cyc.rational(0)
        if self.n == 1:
            return other * self
        m = self.n * other.n // gcd(self.n, other.n)
        a = Cyc._lift(self.c, self.n, m)
        b = Cyc._lift(other.c, other.n, m)
        prod = [Fraction(0)] * (len(a) + len(b) - 1)
        for i, x in enumerate(a):
            if x:
                for j, y in enumerate(b):
                    if y:
                        prod[i + j] += x * y
        return Cyc._canon(m, _reduce(prod, m))

    def inverse(self) -> "Cyc":
        if self.is_zero():
            raise NonInvertible("zero has no inverse")
        if self.n == 1:
            return Cyc(1, (1 / self.c[0],))
        phi = totient(self.n)
        cols = []
        for j in range(phi):
            e = [Fraction(0)] * phi
            e[j] = Fraction(1)
            cols.append((self * Cyc(self.n, tuple(e))).c if j else self.c)
        # columns may have dropped conductor; lift back
        rows = [[Fraction(0)] * phi for _ in range(phi)]
        for j in range(phi):
            e = [Fraction(0)] * phi
            e[j] = Fraction(1)
            prod = self * Cyc(self.n, tuple(e))
            col = Cyc._lift(prod.c, prod.n, self.n) if prod.n != self.n else prod.c
            for i in range(phi):
                rows[i][j] = col[i]
        rhs = [Fraction(1)] + [Fraction(0)] * (phi - 1)
        sol = _solve_field_q(rows, rhs)
        return Cyc._canon(self.n, tuple(sol))

    def conjugate_power(self, k: int) -> "Cyc":
        """Galois image under zeta -> zeta**k (k coprime to the conductor)."""
        if self.n == 1:
            return self
        return Cyc.from_powers(self.n, {i * k: a for i, a in enumerate(self.c) if a})

    def __eq__(self, other) -> bool:
        return isinstance(other, Cyc) and self.n == other.n and self.c == other.c

    def __hash__(self) -> int:
        if self._h is None:
            self._h = hash(self.c[0]) if self.n == 1 else hash((self.n, self.c))
        return self._h

    def __repr__(self) -> str:
        if self.n == 1:
            return str(self.c[0])
        parts = []
        for k, a in enumerate(self.c):
            if not a:
                continue
            z = "1" if k == 0 else (f"z{self.n}" if k == 1 else f"z{self.n}^{k}")
            if z == "1":
                parts.append(str(a))
            elif a == 1:
                parts.append(z)
            elif a == -1:
                parts.append("-" + z)
            else:
                parts.append(f"{a}*{z}")
        return " + ".join(parts).replace("+ -", "- ")


_CZERO = Cyc.rational(0)
_CONE = Cyc.rational(1)

# ---------------------------------------------------------------------------
# scalars


class Scalar:
    """Laurent polynomial in ``tau = 1/(2*pi*i)`` over cyclotomic numbers.

    Immutable.  ``_q`` caches the rational value when the scalar is a
    plain rational number; arithmetic on such scalars stays on Fractions.
    """

    __slots__ = ("_terms", "_q", "_h")

    def __init__(self, value=0):
        if isinstance(value, Scalar):
            self._terms, self._q, self._h = value._terms, value._q, value._h
            return
        q = Fraction(value)
        self._q = q
        self._terms = ((0, Cyc(1, (q,))),) if q else ()
        self._h = None

    @classmethod
    def _rat(cls, q: Fraction) -> "Scalar":
        s = object.__new__(cls)
        s._q = q
        s._terms = ((0, Cyc(1, (q,))),) if q else ()
        s._h = None
        return s

    @classmethod
    def _from_terms(cls, terms: Mapping[int, Cyc]) -> "Scalar":
        items = tuple(sorted((p, c) for p, c in terms.items() if not c.is_zero()))
        s = object.__new__(cls)
        s._terms = items
        s._h = None
        if not items:
            s._q = Fraction(0)
        elif len(items) == 1 and items[0][0] == 0 and items[0][1].n == 1:
            s._q = items[0][1].c[0]
        else:
            s._q = None
        return s

    @classmethod
    def from_powers(cls, conductor: int, powers: Mapping[int, object], tau_power: int = 0) -> "Scalar":
        """``tau**tau_power * sum(coeff * zeta_T**k)`` with k unreduced."""
        return cls._from_terms({tau_power: Cyc.from_powers(conductor, powers)})

    # -- predicates / accessors
    def is_zero(self) -> bool:
        return not self._terms

    def __bool__(self) -> bool:
        return bool(self._terms)

    def is_rational(self) -> bool:
        return self._q is not None

    def as_fraction(self) -> Fraction:
        if self._q is None:
            raise ValueError(f"{self!r} is not rational")
        return self._q

    def tau_powers(self) -> tuple[int, ...]:
        return tuple(p for p, _ in self._terms)

    def terms(self) -> tuple[tuple[int, Cyc], ...]:
        return self._terms

    def is_unit(self) -> bool:
        return len(self._terms) == 1

    def is_canonical(self) -> bool:
        return self == scalar_normalize(self) and all(
            c.n % 4 != 2 and (c.n == 1 or any(c.c[1:])) for _, c in self._terms
        )

    # -- arithmetic
    @staticmethod
    def _coerce(x) -> "Scalar":
        if isinstance(x, Scalar):
            return x
        if isinstance(x, (int, Fraction)):
            return Scalar._rat(Fraction(x))
        return NotImplemented

    def __add__(self, other):
        other = Scalar._coerce(other)
        if other is NotImplemented:
            return other
        if self._q is not None and other._q is not None:
            return Scalar._rat(self._q + other._q)
        acc = dict(self._terms)
        for p, c in other._terms:
            acc[p] = acc[p] + c if p in acc else c
        return Scalar._from_terms(acc)

    __radd__ = __add__

    def __neg__(self):
        if self._q is not None:
            return Scalar._rat(-self._q)
        return Scalar._from_terms({p: -c for p, c in self._terms})

    def __sub__(self, other):
        other = Scalar._coerce(other)
        if other is NotImplemented:
            return other
        if self._q is not None and other._q is not None:
            return Scalar._rat(self._q - other._q)
        return self + (-other)

    def __rsub__(self, other):
        other = Scalar._coerce(other)
        if other is NotImplemented:
            return other
        return other - self

    def __mul__(self, other):
        other = Scalar._coerce(other)
        if other is NotImplemented:
            return other
        if self._q is not None and other._q is not None:
            return Scalar._rat(self._q * other._q)
        acc: dict[int, Cyc] = {}
        for p, a in self._terms:
            for r, b in other._terms:
                c = a * b
                acc[p + r] = acc[p + r] + c if p + r in acc else c
        return Scalar._from_terms(acc)

    __rmul__ = __mul__

    def inverse(self) -> "Scalar":
        if self._q is not None:
            if not self._q:
                raise NonInvertible("division by zero scalar")
            return Scalar._rat(1 / self._q)
        if len(self._terms) != 1:
            raise NonInvertible(f"{self!r} is not a unit of the scalar ring")
        p, c = self._terms[0]
        return Scalar._from_terms({-p: c.inverse()})

    def __truediv__(self, other):
        other = Scalar._coerce(other)
        if other is NotImplemented:
            return other
        if self._q is not None and other._q is not None:
            if not other._q:
                raise NonInvertible("division by zero scalar")
            return Scalar._rat(self._q / other._q)
        return self * other.inverse()

    def __rtruediv__(self, other):
        other = Scalar._coerce(other)
        if other is NotImplemented:
            return other
        return other / self

    def __pow__(self, k: int):
        if k < 0:
            return self.inverse() ** (-k)
        out, base = ONE, self
        while k:
            if k & 1:
                out = out * base
            base = base * base
            k >>= 1
        return out

    def __eq__(self, other) -> bool:
        if isinstance(other, Scalar):
            if self._q is not None or other._q is not None:
                return self._q == other._q
            return self._terms == other._terms
        if isinstance(other, (int, Fraction)):
            return self._q is not None and self._q == other
        return NotImplemented

    def __hash__(self) -> int:
        if self._h is None:
            self._h = hash(self._q) if self._q is not None else hash(self._terms)
        return self._h

    def __repr__(self) -> str:
        if self._q is not None:
            return str(self._q)
        parts = []
        for p, c in self._terms:
            cs = repr(c)
            if c.n != 1 and "+" in cs or " - " in cs:
                cs = f"({cs})"
            t = "" if p == 0 else ("tau" if p == 1 else f"tau^{p}")
            if not t:
                parts.append(cs)
            elif cs == "1":
                parts.append(t)
            elif cs == "-1":
                parts.append("-" + t)
            else:
                parts.append(f"{cs}*{t}")
        return " + ".join(parts)

    # -- serialization
    def to_json(self) -> list:
        out = []
        for p, c in self._terms:
            out.append({
                "tau_power": p,
                "conductor": c.n,
                "cyclotomic": [[k, a.numerator, a.denominator] for k, a in enumerate(c.c) if a],
            })
        return out

    @classmethod
    def from_json(cls, data) -> "Scalar":
        if isinstance(data, dict):
            data = [data]
        acc: dict[int, Cyc] = {}
        for term in data:
            n = int(term.get("conductor", 1))
            cyc = Cyc.from_powers(n, {int(k): Fraction(int(a), int(b)) for k, a, b in term["cyclotomic"]})
            p = int(term["tau_power"])
            acc[p] = acc[p] + cyc if p in acc else cyc
        return cls._from_terms(acc)


ZERO = Scalar._rat(Fraction(0))
ONE = Scalar._rat(Fraction(1))
TAU = Scalar._from_terms({1: _CONE})
TWO_PI_I = Scalar._from_terms({-1: _CONE})


def zeta(T: int, k: int = 1) -> Scalar:
    """The root of unity exp(2*pi*i*k/T)."""
    return Scalar.from_powers(T, {k % T: 1})


def exp_2pii(q) -> Scalar:
    """exp(2*pi*i*q) for rational q."""
    q = Fraction(q)
    return zeta(q.denominator, q.numerator % q.denominator)


def scalar_normalize(z) -> Scalar:
    """Canonical form of a scalar-like value (idempotent)."""
    if isinstance(z, Scalar):
        return Scalar._from_terms(dict(z._terms)) if z._q is None else Scalar._rat(z._q)
    return Scalar(z)


def binomial(a, j: int):
    """Generalized binomial coefficient binom(a, j) for scalar-like ``a``."""
    if j < 0:
        return Fraction(0) if not isinstance(a, Scalar) else ZERO
    out = Fraction(1) if not isinstance(a, Scalar) else ONE
    for i in range(j):
        out = out * (a - i) / (i + 1)
    return out


# ---------------------------------------------------------------------------
# sparse vectors


class Vec:
    """Sparse vector: basis index -> nonzero Scalar."""

    __slots__ = ("_d",)

    def __init__(self, data: Mapping | Iterable | None = None):
        d = {}
        if data:
            items = data.items() if isinstance(data, Mapping) else data
            for i, c in items:
                c = Scalar._coerce(c)
                if c:
                    d[i] = d[i] + c if i in d else c
                    if not d[i]:
                        del d[i]
        self._d = d

    @classmethod
    def _raw(cls, d: dict) -> "Vec":
        v = object.__new__(cls)
        v._d = d
        return v

    @classmethod
    def basis(cls, i, c=ONE) -> "Vec":
        return cls._raw({i: Scalar._coerce(c)})

    @classmethod
    def from_acc(cls, acc: dict) -> "Vec":
        return cls._raw({i: c for i, c in acc.items() if c})

    def items(self):
        return self._d.items()

    def keys(self):
        return self._d.keys()

    def __getitem__(self, i) -> Scalar:
        return self._d.get(i, ZERO)

    def __contains__(self, i) -> bool:
        return i in self._d

    def __len__(self) -> int:
        return len(self._d)

    def __iter__(self) -> Iterator:
        return iter(self._d)

    def __bool__(self) -> bool:
        return bool(self._d)

    def is_zero(self) -> bool:
        return not self._d

    def __add__(self, other: "Vec") -> "Vec":
        acc = dict(self._d)
        for i, c in other._d.items():
            if i in acc:
                s = acc[i] + c
                if s:
                    acc[i] = s
                else:
                    del acc[i]
            else:
                acc[i] = c
        return Vec._raw(acc)

    def __neg__(self) -> "Vec":
        return Vec._raw({i: -c for i, c in self._d.items()})

    def __sub__(self, other: "Vec") -> "Vec":
        return self + (-other)

    def __mul__(self, c) -> "Vec":
        c = Scalar._coerce(c)
        if c is NotImplemented:
            return NotImplemented
        if not c:
            return Vec._raw({})
        if c == 1:
            return self
        return Vec._raw({i: x * c for i, x in self._d.items() if x * c})

    __rmul__ = __mul__

    def __eq__(self, other) -> bool:
        if isinstance(other, Vec):
            return self._d == other._d
        if other == 0:
            return not self._d
        return NotImplemented

    __hash__ = None

    def __repr__(self) -> str:
        if not self._d:
            return "0"
        return " + ".join(f"({c})*e{i}" for i, c in sorted(self._d.items(), key=lambda t: repr(t[0])))

    def to_json(self) -> list:
        return [[i, c.to_json()] for i, c in sorted(self._d.items())]

    @classmethod
    def from_json(cls, data) -> "Vec":
        return cls((int(i), Scalar.from_json(c)) for i, c in data)

    def coefficients(self) -> Iterator[Scalar]:
        return iter(self._d.values())


def axpy(acc: dict, c, v: Vec | Mapping) -> None:
    """acc += c * v, in place, dropping zeros."""
    items = v._d.items() if isinstance(v, Vec) else v.items()
    for i, x in items:
        y = x * c
        if i in acc:
            s = acc[i] + y
            if s:
                acc[i] = s
            else:
                del acc[i]
        elif y:
            acc[i] = y


def vsum(terms: Iterable[tuple[object, Vec]]) -> Vec:
    acc: dict = {}
    for c, v in terms:
        axpy(acc, c, v)
    return Vec._raw(acc)


# ---------------------------------------------------------------------------
# dense linear algebra over the scalar field (units only as pivots)

Matrix = list  # list of rows, each a list of Scalar


def mat_identity(n: int) -> Matrix:
    return [[ONE if i == j else ZERO for j in range(n)] for i in range(n)]


def mat_zero(n: int, m: int | None = None) -> Matrix:
    return [[ZERO] * (n if m is None else m) for _ in range(n)]


def mat_mul(a: Matrix, b: Matrix) -> Matrix:
    if not a:
        return []
    m = len(b[0]) if b else 0
    out = []
    for row in a:
        acc = [ZERO] * m
        for k, x in enumerate(row):
            if x:
                for j, y in enumerate(b[k]):
                    if y:
                        acc[j] = acc[j] + x * y
        out.append(acc)
    return out


def mat_add(a: Matrix, b: Matrix, cb=1) -> Matrix:
    return [[x + cb * y for x, y in zip(ra, rb)] for ra, rb in zip(a, b)]


def mat_scale(a: Matrix, c) -> Matrix:
    c = Scalar._coerce(c)
    return [[x * c for x in row] for row in a]


def mat_is_zero(a: Matrix) -> bool:
    return all(not x for row in a for x in row)


def mat_pow(a: Matrix, k: int) -> Matrix:
    out = mat_identity(len(a))
    base = a
    while k:
        if k & 1:
            out = mat_mul(out, base)
        base = mat_mul(base, base)
        k >>= 1
    return out


def rref(a: Matrix) -> tuple[Matrix, list[int]]:
    """Reduced row echelon form; pivots must be units of the scalar ring."""
    m = [list(r) for r in a]
    pivots: list[int] = []
    r = 0
    ncols = len(m[0]) if m else 0
    for c in range(ncols):
        p = next((i for i in range(r, len(m)) if m[i][c]), None)
        if p is None:
            continue
        if not m[p][c].is_unit():
            unit = next((i for i in range(r, len(m)) if m[i][c] and m[i][c].is_unit()), None)
            if unit is None:
                raise NonInvertible("pivot is not a unit of the scalar ring")
            p = unit
        m[r], m[p] = m[p], m[r]
        inv = m[r][c].inverse()
        m[r] = [x * inv for x in m[r]]
        for i in range(len(m)):
            if i != r and m[i][c]:
                f = m[i][c]
                m[i] = [x - f * y for x, y in zip(m[i], m[r])]
        pivots.append(c)
        r += 1
        if r == len(m):
            break
    return m, pivots


def mat_rank(a: Matrix) -> int:
    return len(rref(a)[1]) if a else 0


def nullspace(a: Matrix, ncols: int | None = None) -> list[list[Scalar]]:
    """Basis of {x : a x = 0} as column vectors (lists)."""
    n = ncols if ncols is not None else (len(a[0]) if a else 0)
    if not a:
        return [[ONE if i == j else ZERO for i in range(n)] for j in range(n)]
    m, pivots = rref(a)
    free = [c for c in range(n) if c not in pivots]
    basis = []
    for f in free:
        x = [ZERO] * n
        x[f] = ONE
        for i, c in enumerate(pivots):
            x[c] = -m[i][f]
        basis.append(x)
    return basis


def mat_inverse(a: Matrix) -> Matrix:
    n = len(a)
    aug = [list(row) + [ONE if i == j else ZERO for j in range(n)] for i, row in enumerate(a)]
    m, pivots = rref(aug)
    if pivots[:n] != list(range(n)) or len(pivots) < n:
        raise NonInvertible("singular matrix")
    return [row[n:] for row in m]


class Echelon:
    """Incremental row space over the scalar ring (fraction-free fallback).

    Rows are kept fully reduced: each stored row vanishes on every other
    pivot column.  Pivots are normalized to 1 whenever they are units.
    """

    def __init__(self, key=None):
        self.rows: dict = {}
        self._key = key or (lambda i: i)

    def _reduce(self, v: Vec) -> Vec:
        d = dict(v.items())
        for c, row in self.rows.items():
            x = d.get(c)
            if x is None:
                continue
            p = row[c]
            if p == 1:
                axpy(d, -x, row)
            else:
                d = {i: y * p for i, y in d.items()}
                axpy(d, -x, row)
        return Vec._raw({i: y for i, y in d.items() if y})

    def reduce(self, v: Vec) -> Vec:
        return self._reduce(v)

    def contains(self, v: Vec) -> bool:
        return self._reduce(v).is_zero()

    def add(self, v: Vec) -> bool:
        r = self._reduce(v)
        if r.is_zero():
            return False
        c = min(r.keys(), key=self._key)
        p = r[c]
        if p.is_unit():
            r = r * p.inverse()
            p = ONE
        for d, row in list(self.rows.items()):
            x = row[c]
            if x:
                if p == 1:
                    self.rows[d] = row - r * x
                else:
                    self.rows[d] = row * p - r * x
        self.rows[c] = r
        return True

    @property
    def rank(self) -> int:
        return len(self.rows)


# ---------------------------------------------------------------------------
# graded operators


class GradedOperator:
    """Weight-preserving linear operator, stored by the images of basis vectors.

    ``blocks`` maps a weight to the tuple of basis indices of that weight;
    ``images`` maps a basis index to its image (a Vec supported in the same
    block).  Indices missing from ``images`` are sent to zero.
    """

    def __init__(self, blocks: Mapping[object, tuple], images: Mapping[int, Vec]):
        self.blocks = {w: tuple(ix) for w, ix in blocks.items()}
        self.images = {i: v for i, v in images.items() if v}
        self._weight_of = {i: w for w, ix in self.blocks.items() for i in ix}

    # -- construction
    @classmethod
    def identity(cls, blocks) -> "GradedOperator":
        return cls(blocks, {i: Vec.basis(i) for ix in blocks.values() for i in ix})

    @classmethod
    def zero(cls, blocks) -> "GradedOperator":
        return cls(blocks, {})

    @classmethod
    def from_block_matrices(cls, blocks, mats: Mapping) -> "GradedOperator":
        """``mats[w][r][c]`` is the coefficient of basis r in the image of basis c."""
        images = {}
        for w, ix in blocks.items():
            m = mats.get(w)
            if m is None:
                continue
            for c, i in enumerate(ix):
                images[i] = Vec((ix[r], m[r][c]) for r in range(len(ix)))
        return cls(blocks, images)

    def block(self, w) -> Matrix:
        ix = self.blocks[w]
        pos = {i: k for k, i in enumerate(ix)}
        m = mat_zero(len(ix))
        for c, i in enumerate(ix):
            for r, x in self.images.get(i, Vec()).items():
                m[pos[r]][c] = x
        return m

    def weight_of(self, i: int):
        return self._weight_of[i]

    # -- algebra
    def __call__(self, v: Vec) -> Vec:
        acc: dict = {}
        for i, c in v.items():
            img = self.images.get(i)
            if img is not None:
                axpy(acc, c, img)
        return Vec._raw(acc)

    def compose(self, other: "GradedOperator") -> "GradedOperator":
        return GradedOperator(self.blocks, {i: self(v) for i, v in other.images.items()})

    __matmul__ = compose

    def __add__(self, other: "GradedOperator") -> "GradedOperator":
        keys = set(self.images) | set(other.images)
        return GradedOperator(
            self.blocks, {i: self.images.get(i, Vec()) + other.images.get(i, Vec()) for i in keys}
        )

    def __sub__(self, other: "GradedOperator") -> "GradedOperator":
        return self + other.scale(-1)

    def scale(self, c) -> "GradedOperator":
        return GradedOperator(self.blocks, {i: v * c for i, v in self.images.items()})

    def shift(self, c) -> "GradedOperator":
        """self + c * identity."""
        return self + GradedOperator.identity(self.blocks).scale(c)

    def is_zero(self) -> bool:
        return not self.images

    def __eq__(self, other) -> bool:
        return isinstance(other, GradedOperator) and (self - other).is_zero()

    __hash__ = None

    def power(self, k: int) -> "GradedOperator":
        out = GradedOperator.identity(self.blocks)
        for _ in range(k):
            out = self.compose(out)
        return out

    def nilpotency_index(self, limit: int | None = None) -> int | None:
        """Least k with self**k == 0, or None if not nilpotent within the limit."""
        dim = sum(len(ix) for ix in self.blocks.values())
        limit = dim + 1 if limit is None else limit
        p = GradedOperator.identity(self.blocks)
        for k in range(limit + 1):
            if p.is_zero():
                return k
            p = self.compose(p)
        return None

    def restrict(self, weights) -> "GradedOperator":
        blocks = {w: self.blocks[w] for w in weights if w in self.blocks}
        keep = {i for ix in blocks.values() for i in ix}
        return GradedOperator(blocks, {i: v for i, v in self.images.items() if i in keep})

    def to_json(self) -> dict:
        return {
            "blocks": [[w if isinstance(w, int) else str(w), list(ix)] for w, ix in self.blocks.items()],
            "images": [[i, v.to_json()] for i, v in sorted(self.images.items())],
        }

    @classmethod
    def from_json(cls, data) -> "GradedOperator":
        blocks = {}
        for w, ix in data["blocks"]:
            blocks[Fraction(w) if isinstance(w, str) else w] = tuple(ix)
        return cls(blocks, {int(i): Vec.from_json(v) for i, v in data["images"]})


def exp_nilpotent(a: GradedOperator, scale=1) -> GradedOperator:
    """exp(scale * a) for nilpotent ``a`` (finite sum)."""
    out = GradedOperator.identity(a.blocks)
    term = GradedOperator.identity(a.blocks)
    k = 1
    while True:
        term = a.compose(term).scale(Scalar(scale) / k)
        if term.is_zero():
            return out
        out = out + term
        k += 1
        if k > 10_000:
            raise ValueError("operator is not nilpotent")


def log_unipotent(u: GradedOperator) -> GradedOperator:
    """Finite matrix logarithm of a unipotent operator."""
    x = u.shift(-1)
    out = GradedOperator.zero(u.blocks)
    term = GradedOperator.identity(u.blocks)
    k = 1
    while True:
        term = x.compose(term)
        if term.is_zero():
            return out
        out = out + term.scale(Fraction((-1) ** (k + 1), k))
        k += 1
        if k > 10_000:
            raise ValueError("operator is not unipotent")


def operator_binomial(a: GradedOperator, m, j: int) -> GradedOperator:
    """binom(m + a, j) = prod_{i<j} (m + a - i) / j!  as an operator."""
    if j < 0:
        raise ValueError("j must be nonnegative")
    out = GradedOperator.identity(a.blocks)
    for i in range(j):
        out = a.shift(Scalar(m) - i).compose(out).scale(Fraction(1, i + 1))
    return out


def binomial_apply(a: GradedOperator, m, j: int, v: Vec) -> Vec:
    """binom(m + a, j) applied to a vector, without building the operator."""
    out = v
    for i in range(j):
        if not out:
            return out
        out = (a(out) + out * (Scalar(m) - i)) * Fraction(1, i + 1)
    return out


def eigenprojection(s: GradedOperator, alpha, spectrum) -> GradedOperator:
    """Projection onto the alpha-eigenspace of a diagonalizable operator."""
    out = GradedOperator.identity(s.blocks)
    for beta in spectrum:
        if beta == alpha:
            continue
        out = s.shift(-Scalar(beta)).compose(out).scale(1 / (Scalar(alpha) - Scalar(beta)))
    return out


def _kernel_basis_of_power(block: Matrix, lam: Scalar) -> list[list[Scalar]]:
    n = len(block)
    shifted = mat_add(block, mat_identity(n), cb=-lam)
    power = shifted
    prev = -1
    while True:
        ker = nullspace(power, n)
        if len(ker) == prev or len(ker) == n:
            return ker
        prev = len(ker)
        power = mat_mul(shifted, power)


def jordan_chevalley(g: GradedOperator, T: int) -> tuple[GradedOperator, GradedOperator]:
    """Split ``g = exp(2 pi i S) exp(2 pi i N)`` with S semisimple, N nilpotent.

    S has eigenvalues k/T in [0, 1); N = tau * log(unipotent part).
    """
    s_mats, n_mats = {}, {}
    for w, ix in g.blocks.items():
        n = len(ix)
        if n == 0:
            continue
        blk = g.block(w)
        try:
            mat_inverse(blk)
        except NonInvertible as exc:
            raise NonInvertible(f"block of weight {w} is singular") from exc
        gt_minus = mat_add(mat_pow(blk, T), mat_identity(n), cb=-1)
        if not mat_is_zero(mat_pow(gt_minus, n)):
            raise NonRootOfUnitySpectrum(f"g^{T} is not unipotent on weight {w}")
        cols, alphas, lams = [], [], []
        for k in range(T):
            lam = zeta(T, k)
            ker = _kernel_basis_of_power(blk, lam)
            cols.extend(ker)
            alphas.extend([Scalar(Fraction(k, T))] * len(ker))
            lams.extend([lam] * len(ker))
        if len(cols) != n:
            raise NonRootOfUnitySpectrum(f"eigenvalues on weight {w} are not T-th roots of unity")
        q = [[cols[c][r] for c in range(n)] for r in range(n)]
        qinv = mat_inverse(q)
        diag_a = [[alphas[i] if i == j else ZERO for j in range(n)] for i in range(n)]
        diag_li = [[lams[i].inverse() if i == j else ZERO for j in range(n)] for i in range(n)]
        s_mats[w] = mat_mul(mat_mul(q, diag_a), qinv)
        gs_inv = mat_mul(mat_mul(q, diag_li), qinv)
        gu = mat_mul(gs_inv, blk)
        x = mat_add(gu, mat_identity(n), cb=-1)
        log = mat_zero(n)
        term = mat_identity(n)
        for k in range(1, n + 1):
            term = mat_mul(x, term)
            if mat_is_zero(term):
                break
            log = mat_add(log, term, cb=Scalar(Fraction((-1) ** (k + 1), k)))
        n_mats[w] = mat_scale(log, TAU)
    return (
        GradedOperator.from_block_matrices(g.blocks, s_mats),
        GradedOperator.from_block_matrices(g.blocks, n_mats),
    )


def exp_2pii_semisimple(s: GradedOperator, spectrum) -> GradedOperator:
    """exp(2 pi i S) for diagonalizable S with rational spectrum."""
    out = GradedOperator.zero(s.blocks)
    for alpha in spectrum:
        out = out + eigenprojection(s, alpha, spectrum).scale(exp_2pii(alpha))
    return out


def exp_2pii_nilpotent(n: GradedOperator) -> GradedOperator:
    """exp(2 pi i N) = exp(N / tau) for nilpotent N."""
    return exp_nilpotent(n, scale=TWO_PI_I)

"""Formal series with rational-coset exponents and powers of ``log x``.

Everything here is windowed: a series stores finitely many terms and the
caller states which coefficients are meaningful.  Coefficients may be
Scalars or Vecs (anything supporting ``+`` and scalar ``*``).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from math import factorial, floor
from typing import Callable, Iterable, Mapping

from .errors import IllFormedProduct, LogResidueAmbiguity
from .exactalg import ONE, TWO_PI_I, GradedOperator, Scalar, binomial, exp_2pii, operator_binomial


@dataclass(frozen=True, order=True)
class Exponent:
    """The rational exponent coset + offset with coset in [0, 1)."""

    coset: Fraction
    offset: int

    def __post_init__(self):
        if not (0 <= self.coset < 1):
            raise ValueError("coset must lie in [0, 1)")

    @classmethod
    def of(cls, q) -> "Exponent":
        q = Fraction(q)
        off = floor(q)
        return cls(q - off, off)

    @property
    def value(self) -> Fraction:
        return self.coset + self.offset

    def __add__(self, k: int) -> "Exponent":
        return Exponent.of(self.value + k)


def _addc(acc: dict, key, c) -> None:
    if not c:
        return
    if key in acc:
        s = acc[key] + c
        if s:
            acc[key] = s
        else:
            del acc[key]
    else:
        acc[key] = c


class LogSeries:
    """sum_{(n, k)} c_{n,k} x^n (log x)^k with rational n and finitely many terms.

    ``terms`` maps (exponent as Fraction, log power) to a coefficient.
    """

    __slots__ = ("var", "terms", "K", "lower_truncated")

    def __init__(self, terms: Mapping | None = None, var: str = "x", K: int | None = None,
                 lower_truncated: bool = True):
        acc: dict = {}
        for (n, k), c in (terms or {}).items():
            _addc(acc, (Fraction(n), int(k)), c)
        self.terms = acc
        self.var = var
        kmax = max((k for _, k in acc), default=0)
        self.K = kmax if K is None else K
        if kmax > self.K:
            raise ValueError("log power exceeds the declared bound K")
        self.lower_truncated = lower_truncated

    @classmethod
    def monomial(cls, n, k: int = 0, c=ONE, var: str = "x") -> "LogSeries":
        return cls({(n, k): c}, var=var)

    def _new(self, terms: dict) -> "LogSeries":
        return LogSeries(terms, self.var, max(self.K, max((k for _, k in terms), default=0)),
                         self.lower_truncated)

    def coefficient(self, n, k: int = 0):
        return self.terms.get((Fraction(n), k))

    def exponents(self) -> list[Exponent]:
        return sorted({Exponent.of(n) for n, _ in self.terms})

    def is_zero(self) -> bool:
        return not self.terms

    def __add__(self, other: "LogSeries") -> "LogSeries":
        acc = dict(self.terms)
        for key, c in other.terms.items():
            _addc(acc, key, c)
        return self._new(acc)

    def __neg__(self) -> "LogSeries":
        return self._new({key: c * -1 for key, c in self.terms.items()})

    def __sub__(self, other: "LogSeries") -> "LogSeries":
        return self + (-other)

    def scale(self, c) -> "LogSeries":
        acc: dict = {}
        for key, x in self.terms.items():
            _addc(acc, key, x * c)
        return self._new(acc)

    def shift(self, a) -> "LogSeries":
        """Multiply by x^a."""
        a = Fraction(a)
        return self._new({(n + a, k): c for (n, k), c in self.terms.items()})

    def times_log(self, j: int = 1) -> "LogSeries":
        return self._new({(n, k + j): c for (n, k), c in self.terms.items()})

    def map_coefficients(self, f: Callable) -> "LogSeries":
        acc: dict = {}
        for key, c in self.terms.items():
            _addc(acc, key, f(c))
        return self._new(acc)

    def __eq__(self, other) -> bool:
        return isinstance(other, LogSeries) and self.terms == other.terms

    __hash__ = None

    def first_difference(self, other: "LogSeries"):
        """The smallest (n, k) where the two series differ, or None."""
        keys = sorted(set(self.terms) | set(other.terms))
        for key in keys:
            a, b = self.terms.get(key), other.terms.get(key)
            if a != b and not (a is None and not b) and not (b is None and not a):
                return key
        return None

    def __repr__(self) -> str:
        if not self.terms:
            return "0"
        parts = []
        for (n, k), c in sorted(self.terms.items()):
            mono = f"{self.var}^{n}" + (f" log^{k}" if k else "")
            parts.append(f"({c}) {mono}")
        return " + ".join(parts)


# -- derivatives ------------------------------------------------------------


def partial_x(s: LogSeries) -> LogSeries:
    acc: dict = {}
    for (n, k), c in s.terms.items():
        if n:
            _addc(acc, (n - 1, k), c * Scalar(n))
    return s._new(acc)


def partial_log(s: LogSeries) -> LogSeries:
    acc: dict = {}
    for (n, k), c in s.terms.items():
        if k:
            _addc(acc, (n, k - 1), c * k)
    return s._new(acc)


def full_derivative(s: LogSeries) -> LogSeries:
    """d/dx = partial/partial x + x^{-1} partial/partial(log x)."""
    return partial_x(s) + partial_log(s).shift(-1)


def x_times(s: LogSeries) -> LogSeries:
    return s.shift(1)


# -- the 2 pi i exponentials --------------------------------------------------


def _translate_log(s: LogSeries, sign: int) -> LogSeries:
    """(log x)^k -> (log x + sign * 2 pi i)^k, with 2 pi i = tau^{-1}."""
    acc: dict = {}
    step = TWO_PI_I if sign > 0 else -TWO_PI_I
    for (n, k), c in s.terms.items():
        for i in range(k + 1):
            _addc(acc, (n, i), c * (Scalar(binomial(k, i)) * step ** (k - i)))
    return s._new(acc)


def _phase(s: LogSeries, sign: int) -> LogSeries:
    acc: dict = {}
    for (n, k), c in s.terms.items():
        _addc(acc, (n, k), c * exp_2pii(sign * n))
    return s._new(acc)


def partial_exponentials(s: LogSeries, which: str) -> LogSeries:
    """Apply e^{+-2 pi i x d/dx} ('+x', '-x') or e^{+-2 pi i d/dlog x} ('+log', '-log')."""
    if which == "+x":
        return _phase(s, 1)
    if which == "-x":
        return _phase(s, -1)
    if which == "+log":
        return _translate_log(s, 1)
    if which == "-log":
        return _translate_log(s, -1)
    raise ValueError(f"unknown exponential {which!r}")


def monodromy(s: LogSeries) -> LogSeries:
    """x^n (log x)^k -> e^{2 pi i n} x^n (log x + 2 pi i)^k."""
    return _translate_log(_phase(s, 1), 1)


def inverse_monodromy(s: LogSeries) -> LogSeries:
    return partial_exponentials(partial_exponentials(s, "-log"), "-x")


def set_log_zero(s: LogSeries) -> LogSeries:
    return s._new({(n, k): c for (n, k), c in s.terms.items() if k == 0})


def operator_log_power(apply_power: Callable[[int], object], K: int, sign: int = 1) -> dict:
    """Coefficients of x^{sign*N} = sum_j (sign log x)^j N^j / j! as {j: value}."""
    out = {}
    for j in range(K + 1):
        v = apply_power(j)
        if v:
            out[j] = v * Fraction(sign ** j, factorial(j))
    return out


def translation_eigen_polynomial(coeffs: list, c) -> bool:
    """Whether p(log x) = sum coeffs[k] (log x)^k satisfies T p = c p.

    T is e^{-2 pi i d/dlog x}; the answer is True exactly when p = 0, or p is
    constant and c = 1.
    """
    s = LogSeries({(0, k): Scalar(a) for k, a in enumerate(coeffs) if a})
    return (partial_exponentials(s, "-log") - s.scale(Scalar(c))).is_zero()


# -- multivariable series -----------------------------------------------------


class MultiSeries:
    """Finitely many terms in several variables, each with a log power.

    ``terms`` maps (exponent tuple, log tuple) to a coefficient.  ``exact``
    records whether the stored terms are the whole series (as for a
    polynomial) or only a window of an infinite one.
    """

    def __init__(self, variables: tuple, terms: Mapping | None = None, exact: bool = True):
        self.vars = tuple(variables)
        acc: dict = {}
        for (e, l), c in (terms or {}).items():
            _addc(acc, (tuple(Fraction(x) for x in e), tuple(l)), c)
        self.terms = acc
        self.exact = exact

    def _idx(self, v: str) -> int:
        return self.vars.index(v)

    def __add__(self, other: "MultiSeries") -> "MultiSeries":
        other = other.align(self.vars)
        acc = dict(self.terms)
        for key, c in other.terms.items():
            _addc(acc, key, c)
        return MultiSeries(self.vars, acc, self.exact and other.exact)

    def __neg__(self) -> "MultiSeries":
        return MultiSeries(self.vars, {k: c * -1 for k, c in self.terms.items()}, self.exact)

    def __sub__(self, other: "MultiSeries") -> "MultiSeries":
        return self + (-other)

    def scale(self, c) -> "MultiSeries":
        return MultiSeries(self.vars, {k: x * c for k, x in self.terms.items()}, self.exact)

    def align(self, variables: tuple) -> "MultiSeries":
        if tuple(variables) == self.vars:
            return self
        missing = [v for v in self.vars if v not in variables]
        if any(e[self._idx(v)] or l[self._idx(v)] for v in missing for (e, l) in self.terms):
            raise ValueError("cannot drop a variable that occurs")
        acc = {}
        for (e, l), c in self.terms.items():
            ne = tuple(e[self._idx(v)] if v in self.vars else Fraction(0) for v in variables)
            nl = tuple(l[self._idx(v)] if v in self.vars else 0 for v in variables)
            acc[(ne, nl)] = c
        return MultiSeries(tuple(variables), acc, self.exact)

    def mul(self, other: "MultiSeries", keep: Callable | None = None) -> "MultiSeries":
        """Product, optionally filtered by ``keep(exponents, logs)``.

        A product of two windows can receive infinitely many contributions
        in a coefficient; this is only allowed when one factor is exact.
        """
        if not self.exact and not other.exact:
            raise IllFormedProduct("product of two truncated series")
        variables = self.vars + tuple(v for v in other.vars if v not in self.vars)
        a, b = self.align(variables), other.align(variables)
        acc: dict = {}
        for (e1, l1), c1 in a.terms.items():
            for (e2, l2), c2 in b.terms.items():
                e = tuple(x + y for x, y in zip(e1, e2))
                l = tuple(x + y for x, y in zip(l1, l2))
                if keep is None or keep(e, l):
                    _addc(acc, (e, l), c1 * c2 if not isinstance(c1, GradedOperator) else c1(c2))
        return MultiSeries(variables, acc, a.exact and b.exact)

    def coefficient(self, exps: tuple, logs: tuple | None = None):
        logs = logs or (0,) * len(self.vars)
        return self.terms.get((tuple(Fraction(x) for x in exps), tuple(logs)))

    def __eq__(self, other) -> bool:
        return isinstance(other, MultiSeries) and self.align(other.vars).terms == other.terms

    __hash__ = None

    def to_logseries(self) -> LogSeries:
        if len(self.vars) != 1:
            raise ValueError("not a one-variable series")
        return LogSeries({(e[0], l[0]): c for (e, l), c in self.terms.items()}, var=self.vars[0])

    @classmethod
    def from_logseries(cls, s: LogSeries) -> "MultiSeries":
        return cls((s.var,), {((n,), (k,)): c for (n, k), c in s.terms.items()}, exact=False)


@dataclass(frozen=True)
class Binomial:
    """The binomial  lead_sign * x_lead + tail_sign * x_tail / x_over.

    ``lead`` may be None, standing for the constant 1.  Expansion is always
    in nonnegative powers of the tail.
    """

    lead: str | None
    tail: str
    lead_sign: int = 1
    tail_sign: int = 1
    over: str | None = None


def _sign(s: int, k) -> int:
    return 1 if s == 1 or int(k) % 2 == 0 else -1


def iota_expand(b: Binomial, exponent, terms: int) -> MultiSeries:
    """Expand b**exponent, keeping tail powers 0..terms-1.

    ``exponent`` is rational or a GradedOperator; operator exponents need a
    constant lead, giving sum_j binom(A, j) (tail)^j with operator coefficients.
    """
    variables = tuple(v for v in (b.lead, b.tail, b.over) if v is not None)
    out: dict = {}
    for j in range(terms):
        if isinstance(exponent, GradedOperator):
            if b.lead is not None or b.lead_sign != 1:
                raise ValueError("operator exponents need the binomial 1 + tail")
            coef = operator_binomial(exponent, 0, j).scale(_sign(b.tail_sign, j))
            lead_exp = Fraction(0)
        else:
            n = Fraction(exponent)
            if b.lead_sign == -1 and n.denominator != 1:
                raise ValueError("negative lead needs an integral exponent")
            lead_exp = n - j
            coef = Scalar(binomial(n, j)) * (_sign(b.lead_sign, lead_exp) if b.lead is not None else 1) \
                * _sign(b.tail_sign, j)
        if not coef or (isinstance(coef, GradedOperator) and coef.is_zero()):
            continue
        exps = []
        for v in variables:
            if v == b.lead:
                exps.append(lead_exp)
            elif v == b.tail:
                exps.append(Fraction(j))
            else:
                exps.append(Fraction(-j))
        out[(tuple(exps), (0,) * len(variables))] = coef
    exact = isinstance(exponent, GradedOperator) or (
        Fraction(exponent).denominator == 1 and Fraction(exponent) >= 0 and terms > Fraction(exponent))
    return MultiSeries(variables, out, exact=exact)


def delta_expansion(b: Binomial, center: str, n_range: Iterable[int], terms: int) -> MultiSeries:
    """x_c^{-1} delta(b / x_c) = sum_n b^n x_c^{-n-1}, windowed in n and tail power."""
    acc = MultiSeries((center,), {})
    for n in n_range:
        part = iota_expand(b, n, terms).mul(MultiSeries((center,), {((-n - 1,), (0,)): ONE}))
        acc = acc + part
    acc.exact = False
    return acc


def residue(s, var: str | None = None, convention: str | None = None):
    """Coefficient of x^{-1} in ``var``.

    Terms x^{-1} (log x)^k with k >= 1 make the residue ambiguous unless the
    'full_derivative' convention is chosen, under which they are derivatives
    d/dx of (log x)^{k+1}/(k+1) and contribute 0.
    """
    if isinstance(s, LogSeries):
        logs = [k for (n, k), c in s.terms.items() if k and c]
        if logs and convention != "full_derivative":
            raise LogResidueAmbiguity(f"log powers {sorted(set(logs))} present in residue variable")
        return s.terms.get((Fraction(-1), 0))
    i = s._idx(var)
    if convention != "full_derivative" and any(l[i] and c for (e, l), c in s.terms.items()):
        raise LogResidueAmbiguity(f"log powers of {var} present")
    rest = tuple(v for v in s.vars if v != var)
    acc: dict = {}
    for (e, l), c in s.terms.items():
        if e[i] == -1 and l[i] == 0:
            key = (e[:i] + e[i + 1:], l[:i] + l[i + 1:])
            _addc(acc, key, c)
    return MultiSeries(rest, acc, s.exact)


def delta_substitute(s: MultiSeries, source: str, target: str) -> MultiSeries:
    """Res_{source} source^{-1} delta(target/source) f = f with source replaced by target."""
    i = s._idx(source)
    if target in s.vars:
        j = s._idx(target)
        if not s.exact and any(e[j] for (e, l) in s.terms) and any(e[i] for (e, l) in s.terms):
            raise IllFormedProduct(f"merging {source} into {target} needs infinitely many terms")
        acc: dict = {}
        for (e, l), c in s.terms.items():
            ne = list(e)
            nl = list(l)
            ne[j] += ne[i]
            nl[j] += nl[i]
            del ne[i], nl[i]
            _addc(acc, (tuple(ne), tuple(nl)), c)
        return MultiSeries(tuple(v for v in s.vars if v != source), acc, s.exact)
    variables = tuple(target if v == source else v for v in s.vars)
    return MultiSeries(variables, dict(s.terms), s.exact)

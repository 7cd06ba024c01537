"""Heisenberg and rank-one lattice Fock spaces with exact vertex operators.

Untwisted states are pairs ``(parts, m)``: ``parts`` is a descending tuple of
positive integers standing for ``h(-p1) ... h(-pk)`` and ``m`` is the lattice
charge (the state carries ``e^{m h}``).  Twisted states are descending tuples
of odd positive integers measured in half-units, so a part ``p`` stands for
``h(-p/2)``.

Vertex operators are evaluated with the formal variable set to 1: since every
mode changes the degree by a known amount, the coefficient of ``x^{-n-1}`` is
the part of the output living in the matching degree.
"""
from __future__ import annotations

from fractions import Fraction
from functools import lru_cache
from math import factorial

from .exactalg import binomial


def _insert(parts: tuple, p: int) -> tuple:
    out = list(parts)
    for i, q in enumerate(out):
        if p >= q:
            out.insert(i, p)
            return tuple(out)
    out.append(p)
    return tuple(out)


def _remove(parts: tuple, p: int) -> tuple:
    out = list(parts)
    out.remove(p)
    return tuple(out)


def _merge(a: tuple, b: tuple) -> tuple:
    return tuple(sorted(a + b, reverse=True))


def _multiplicities(parts: tuple) -> dict:
    out: dict = {}
    for p in parts:
        out[p] = out.get(p, 0) + 1
    return out


def _add(acc: dict, key, c) -> None:
    if c:
        s = acc.get(key, 0) + c
        if s:
            acc[key] = s
        else:
            acc.pop(key, None)


@lru_cache(maxsize=None)
def partitions(n: int, largest: int | None = None, odd: bool = False) -> tuple:
    """Partitions of n as descending tuples (optionally into odd parts)."""
    if n == 0:
        return ((),)
    largest = n if largest is None else min(largest, n)
    out = []
    for p in range(largest, 0, -1):
        if odd and p % 2 == 0:
            continue
        for rest in partitions(n - p, p, odd):
            out.append((p,) + rest)
    return tuple(out)


@lru_cache(maxsize=None)
def _creation_series(m: int, budget: int, half: bool) -> tuple:
    """Terms of exp(sum_{r>0} m h(-r)/r) adding at most ``budget`` units.

    Returns a tuple of (added_parts, coefficient); in half-unit mode a part p
    means the mode h(-p/2) and r = p/2.
    """
    out = []
    for size in range(budget + 1):
        for lam in partitions(size, odd=half):
            coef = Fraction(1)
            for p, k in _multiplicities(lam).items():
                r = Fraction(p, 2) if half else Fraction(p)
                coef *= (Fraction(m) / r) ** k / factorial(k)
            out.append((lam, coef))
    return tuple(out)


def _shift_parts(parts: tuple, shift) -> list:
    """Expand prod_p (y_p + shift)^{c_p} over the multiset ``parts``.

    This is how exp(sum_{r>0} -m h(r)/r) acts: each h(-r)-variable is
    translated by -kappa*m independently of r.
    """
    terms = [((), Fraction(1))]
    for p, c in _multiplicities(parts).items():
        new = []
        for keep in range(c + 1):
            coef = Fraction(binomial(c, keep)) * Fraction(shift) ** (c - keep)
            if coef:
                for base, b in terms:
                    new.append((base + (p,) * keep, b * coef))
        terms = new
    return [(tuple(sorted(ps, reverse=True)), c) for ps, c in terms]


class LatticeFock:
    """Untwisted Heisenberg Fock space, optionally tensored with a rank-one lattice.

    ``kappa`` is the norm <h, h>.  With ``lattice=False`` only charge 0
    occurs (the free boson); with ``lattice=True`` charges range over all
    integers and the lattice vector ``m h`` has norm ``kappa m^2``.
    """

    def __init__(self, kappa: int = 1, lattice: bool = False):
        self.kappa = kappa
        self.lattice = lattice
        self._cache: dict = {}

    def weight(self, state) -> int:
        parts, m = state
        return sum(parts) + self.kappa * m * m // 2

    def states_of_weight(self, w: int) -> list:
        out = []
        charges = [0]
        if self.lattice:
            charges = []
            m = 0
            while self.kappa * m * m // 2 <= w:
                charges.extend([m] if m == 0 else [m, -m])
                m += 1
            charges.sort(key=lambda c: (abs(c), -c))
        for m in charges:
            rest = w - self.kappa * m * m // 2
            for lam in partitions(rest):
                out.append((lam, m))
        return out

    # -- basic modes
    def mode_h(self, r: int, vec: dict) -> dict:
        out: dict = {}
        for (parts, m), c in vec.items():
            if r < 0:
                _add(out, (_insert(parts, -r), m), c)
            elif r == 0:
                _add(out, (parts, m), c * self.kappa * m)
            else:
                k = parts.count(r)
                if k:
                    _add(out, (_remove(parts, r), m), c * self.kappa * r * k)
        return out

    # -- vertex operators
    def vertex(self, u, w, cap: int) -> dict:
        """Y(u, 1) w truncated to output weight <= cap."""
        key = (u, w)
        hit = self._cache.get(key)
        if hit is not None and hit[0] >= cap:
            if hit[0] == cap:
                return hit[1]
            return {s: c for s, c in hit[1].items() if self.weight(s) <= cap}
        res = self._vertex(u, w, cap)
        self._cache[key] = (cap, res)
        return res

    def _vertex(self, u, w, cap: int) -> dict:
        parts, m = u
        if not parts:
            return self._vertex_exp(m, w, cap)
        n, up = parts[0], (parts[1:], m)
        res: dict = {}
        # creation part of the derivative field, applied after Y(u')
        for s, c in self.vertex(up, w, cap - n).items():
            ws = self.weight(s)
            for mu in range(n, cap - ws + 1):
                _add(res, (_insert(s[0], mu), s[1]), c * binomial(mu - 1, n - 1))
        # annihilation part (including the zero mode), applied before Y(u')
        sign = -1 if (n - 1) % 2 else 1
        wparts, wm = w
        pre: dict = {}
        for p, k in _multiplicities(wparts).items():
            coef = sign * binomial(p + n - 1, n - 1) * self.kappa * p * k
            _add(pre, (_remove(wparts, p), wm), coef)
        if wm:
            _add(pre, w, sign * self.kappa * wm)
        for w2, c2 in pre.items():
            for s, c in self.vertex(up, w2, cap).items():
                _add(res, s, c * c2)
        return res

    def _vertex_exp(self, m: int, w, cap: int) -> dict:
        if self.weight(w) > cap and m == 0:
            return {}
        if m == 0:
            return {w: Fraction(1)}
        wparts, wm = w
        charge = wm + m
        base = self.kappa * charge * charge // 2
        res: dict = {}
        for kept, c in _shift_parts(wparts, -self.kappa * m):
            room = cap - base - sum(kept)
            if room < 0:
                continue
            for added, a in _creation_series(m, room, False):
                _add(res, (_merge(kept, added), charge), c * a)
        return res

    def mode(self, u, n: int, w) -> dict:
        """u(n) w as a dict of states."""
        target = self.weight(u) + self.weight(w) - n - 1
        if target < 0:
            return {}
        return {s: c for s, c in self.vertex(u, w, target).items() if self.weight(s) == target}


@lru_cache(maxsize=None)
def flm_coefficients(degree: int) -> dict:
    """Coefficients c_{mn} of -log(((1+x)^{1/2} + (1+y)^{1/2}) / 2) up to total degree."""
    half = [binomial(Fraction(1, 2), k) for k in range(degree + 1)]
    g: dict = {}
    for k in range(1, degree + 1):
        g[(k, 0)] = g.get((k, 0), 0) + half[k] / 2
        g[(0, k)] = g.get((0, k), 0) + half[k] / 2

    def mul(a, b):
        out: dict = {}
        for (i, j), x in a.items():
            for (k, l), y in b.items():
                if i + j + k + l <= degree:
                    _add(out, (i + k, j + l), x * y)
        return out

    res: dict = {}
    power = {(0, 0): Fraction(1)}
    for k in range(1, degree + 1):
        power = mul(power, g)
        for key, c in power.items():
            _add(res, key, c * Fraction((-1) ** k, k))
    return res


class TwistedFock:
    """The -1 twisted module of a LatticeFock space (half-integer modes).

    The twisted field of a state u is W(exp(Delta) u), where W is the
    normal-ordered product of twisted derivative fields and lattice
    exponentials, and Delta is the quadratic zero-mode correction.
    ``norm_exponent`` fixes the lattice normalization 2^{-e <a,a>} and
    ``charge_sign`` the action t^m of the lattice group on the one-dimensional
    twist space.
    """

    def __init__(self, fock: LatticeFock, norm_exponent: Fraction = Fraction(1), charge_sign: int = 1):
        self.fock = fock
        self.kappa = fock.kappa
        self.norm_exponent = Fraction(norm_exponent)
        self.charge_sign = charge_sign
        self._cache: dict = {}
        self._delta_cache: dict = {}

    # twisted states are tuples of odd half-units; degrees are in half-units
    @staticmethod
    def degree2(state) -> int:
        return sum(state)

    def degree(self, state) -> Fraction:
        return Fraction(sum(state), 2)

    def states_of_degree2(self, d2: int) -> list:
        return list(partitions(d2, odd=True))

    def mode_h(self, p: int, vec: dict) -> dict:
        """h(p/2) on a twisted vector (p odd)."""
        out: dict = {}
        for parts, c in vec.items():
            if p < 0:
                _add(out, _insert(parts, -p), c)
            else:
                k = parts.count(p)
                if k:
                    _add(out, _remove(parts, p), c * self.kappa * Fraction(p, 2) * k)
        return out

    # -- the quadratic correction on V
    def exp_delta(self, u) -> dict:
        hit = self._delta_cache.get(u)
        if hit is not None:
            return hit
        wt = self.fock.weight(u)
        coeffs = flm_coefficients(max(wt, 1))
        total = {u: Fraction(1)}
        term = {u: Fraction(1)}
        k = 1
        while term:
            new: dict = {}
            for (i, j), c in coeffs.items():
                if i + j == 0 or i + j > wt:
                    continue
                step = self.fock.mode_h(i, self.fock.mode_h(j, term))
                for s, x in step.items():
                    _add(new, s, x * c / self.kappa)
            term = {s: x / k for s, x in new.items()}
            for s, x in term.items():
                _add(total, s, x)
            k += 1
        self._delta_cache[u] = total
        return total

    def _normalization(self, m: int) -> Fraction:
        e = self.norm_exponent * self.kappa * m * m
        sign = self.charge_sign ** abs(m)
        return sign * Fraction(2) ** (-e) if e.denominator == 1 else None

    def vertex(self, u, w, cap2: int) -> dict:
        """Twisted Y(u, 1) w truncated to output degree <= cap2/2."""
        out: dict = {}
        for v, c in self.exp_delta(u).items():
            for s, x in self._wop(v, w, cap2).items():
                _add(out, s, c * x)
        return out

    def _wop(self, v, w, cap2: int) -> dict:
        key = (v, w)
        hit = self._cache.get(key)
        if hit is not None and hit[0] >= cap2:
            if hit[0] == cap2:
                return hit[1]
            return {s: c for s, c in hit[1].items() if sum(s) <= cap2}
        res = self._wop_compute(v, w, cap2)
        self._cache[key] = (cap2, res)
        return res

    def _wop_compute(self, v, w, cap2: int) -> dict:
        parts, m = v
        if not parts:
            if m == 0:
                return {w: Fraction(1)} if sum(w) <= cap2 else {}
            norm = self._normalization(m)
            res: dict = {}
            for kept, c in _shift_parts(w, -self.kappa * m):
                room = cap2 - sum(kept)
                if room < 0:
                    continue
                for added, a in _creation_series(m, room, True):
                    _add(res, _merge(kept, added), norm * c * a)
            return res
        n, vp = parts[0], (parts[1:], m)
        res: dict = {}
        for s, c in self._wop(vp, w, cap2 - 1).items():
            ds = sum(s)
            for p in range(1, cap2 - ds + 1, 2):
                _add(res, _insert(s, p), c * binomial(Fraction(p, 2) - 1, n - 1))
        pre: dict = {}
        for p, k in _multiplicities(w).items():
            coef = binomial(Fraction(-p, 2) - 1, n - 1) * self.kappa * Fraction(p, 2) * k
            _add(pre, _remove(w, p), coef)
        for w2, c2 in pre.items():
            for s, c in self._wop(vp, w2, cap2).items():
                _add(res, s, c * c2)
        return res

    def mode(self, u, n: Fraction, w) -> dict:
        """u(n) w for a state u of the untwisted space."""
        target2 = 2 * (self.fock.weight(u) - n - 1) + sum(w)
        if target2 < 0 or Fraction(target2).denominator != 1:
            return {}
        target2 = int(target2)
        return {s: c for s, c in self.vertex(u, w, target2).items() if sum(s) == target2}

"""Laurent polynomials in the square roots ``q_c^{1/2}`` of the parameters.

A monomial is a sorted tuple of ``(name, e)`` pairs meaning ``prod q_name^{e/2}``.
Coefficients are :class:`~fractions.Fraction` or, after numeric specialisation,
Python ``complex``.
"""

from __future__ import annotations

import math
from fractions import Fraction
from functools import lru_cache
from typing import Mapping, Union

Number = Union[int, Fraction, complex, float]
Monomial = tuple[tuple[str, int], ...]

ONE_MONO: Monomial = ()


@lru_cache(maxsize=1 << 16)
def _mono_mul(a: Monomial, b: Monomial) -> Monomial:
    if not a:
        return b
    if not b:
        return a
    d = dict(a)
    for k, e in b:
        d[k] = d.get(k, 0) + e
    return tuple(sorted((k, e) for k, e in d.items() if e))


def _coerce(c: Number):
    # integral rationals are stored as int: much cheaper arithmetic for formal parameters
    if isinstance(c, Fraction):
        return c.numerator if c.denominator == 1 else c
    if isinstance(c, (int, complex)):
        return c
    if isinstance(c, float):
        return complex(c)
    raise TypeError(f"unsupported coefficient {c!r}")


def sqrt_rational(q: Fraction):
    """Exact square root of a positive rational when it exists, else a float."""
    q = Fraction(q)
    n, d = q.numerator, q.denominator
    rn, rd = math.isqrt(n), math.isqrt(d)
    if rn * rn == n and rd * rd == d:
        return Fraction(rn, rd)
    return math.sqrt(n / d)


def power_half(q: Fraction, e: int):
    """``q^{e/2}``, exact when possible."""
    r = sqrt_rational(q)
    if isinstance(r, Fraction):
        return r ** e
    return complex(float(q) ** (e / 2))


class LaurentScalar:
    """Sparse Laurent polynomial; immutable by convention."""

    __slots__ = ("terms",)

    def __init__(self, terms: Mapping[Monomial, Number] | None = None):
        t = {}
        if terms:
            for m, c in terms.items():
                c = _coerce(c)
                if c != 0:
                    t[m] = c
        self.terms: dict[Monomial, object] = t

    @classmethod
    def const(cls, c: Number) -> "LaurentScalar":
        return cls({ONE_MONO: c})

    @classmethod
    def q_half(cls, name: str, e: int = 1, c: Number = 1) -> "LaurentScalar":
        """``c * q_name^{e/2}``."""
        return cls({((name, e),) if e else ONE_MONO: c})

    @classmethod
    def monomial(cls, mono: Mapping[str, int], c: Number = 1) -> "LaurentScalar":
        return cls({tuple(sorted((k, e) for k, e in mono.items() if e)): c})

    # -- arithmetic --------------------------------------------------------------
    def __add__(self, other) -> "LaurentScalar":
        other = _lift(other)
        t = dict(self.terms)
        for m, c in other.terms.items():
            v = t.get(m, 0) + c
            if v == 0:
                t.pop(m, None)
            else:
                t[m] = v
        out = LaurentScalar()
        out.terms = t
        return out

    __radd__ = __add__

    def __neg__(self) -> "LaurentScalar":
        out = LaurentScalar()
        out.terms = {m: -c for m, c in self.terms.items()}
        return out

    def __sub__(self, other) -> "LaurentScalar":
        return self + (-_lift(other))

    def __rsub__(self, other) -> "LaurentScalar":
        return _lift(other) - self

    def __mul__(self, other) -> "LaurentScalar":
        if not isinstance(other, LaurentScalar):
            c = _coerce(other)
            out = LaurentScalar()
            if c != 0:
                out.terms = {m: v * c for m, v in self.terms.items() if v * c != 0}
            return out
        t: dict = {}
        for m1, c1 in self.terms.items():
            for m2, c2 in other.terms.items():
                m = _mono_mul(m1, m2)
                t[m] = t.get(m, 0) + c1 * c2
        return LaurentScalar(t)

    __rmul__ = __mul__

    def __pow__(self, k: int) -> "LaurentScalar":
        if k < 0:
            return self.inverse() ** (-k)
        out = LaurentScalar.const(1)
        for _ in range(k):
            out = out * self
        return out

    def __truediv__(self, other) -> "LaurentScalar":
        if isinstance(other, LaurentScalar):
            return self * other.inverse()
        return self * (1 / _coerce(other))

    def inverse(self) -> "LaurentScalar":
        if len(self.terms) != 1:
            raise ZeroDivisionError("only monomials are invertible in the Laurent ring")
        (m, c), = self.terms.items()
        return LaurentScalar({tuple((k, -e) for k, e in m): 1 / c})

    # -- queries -------------------------------------------------------------------
    def __eq__(self, other) -> bool:
        try:
            other = _lift(other)
        except TypeError:
            return NotImplemented
        return self.terms == other.terms

    def __hash__(self):
        return hash(frozenset(self.terms.items()))

    def __bool__(self) -> bool:
        return bool(self.terms)

    def is_zero(self) -> bool:
        return not self.terms

    def is_constant(self) -> bool:
        return all(m == ONE_MONO for m in self.terms)

    def constant(self):
        c = self.terms.get(ONE_MONO, 0)
        return Fraction(c) if isinstance(c, int) else c

    def symbols(self) -> set[str]:
        return {k for m in self.terms for k, _ in m}

    def conjugate(self) -> "LaurentScalar":
        """Complex conjugation of coefficients (``q^{1/2}`` taken real)."""
        out = LaurentScalar()
        out.terms = {m: (c.conjugate() if isinstance(c, complex) else c) for m, c in self.terms.items()}
        return out

    def evaluate(self, values: Mapping[str, Fraction], partial: bool = False):
        """Substitute ``q_name = values[name]``; returns a number, or a
        :class:`LaurentScalar` when ``partial`` and symbols remain."""
        t: dict = {}
        for m, c in self.terms.items():
            rest = []
            f = c
            for k, e in m:
                if k in values and values[k] is not None:
                    f = f * power_half(Fraction(values[k]), e)
                elif partial:
                    rest.append((k, e))
                else:
                    raise KeyError(f"no value for parameter {k}")
            key = tuple(rest)
            t[key] = t.get(key, 0) + f
        out = LaurentScalar(t)
        if partial and not out.is_constant():
            return out
        return out.constant()

    def max_abs(self) -> float:
        return max((abs(complex(c)) for c in self.terms.values()), default=0.0)

    def chop(self, tol: float) -> "LaurentScalar":
        out = {}
        for m, c in self.terms.items():
            if isinstance(c, complex):
                re = 0.0 if abs(c.real) <= tol else c.real
                im = 0.0 if abs(c.imag) <= tol else c.imag
                c = complex(re, im)
            if c != 0:
                out[m] = c
        return LaurentScalar(out)

    def __repr__(self) -> str:
        return f"LaurentScalar({self})"

    def __str__(self) -> str:
        if not self.terms:
            return "0"
        parts = []
        for m in sorted(self.terms, key=_mono_key):
            c = self.terms[m]
            mono = "*".join(_fmt_power(k, e) for k, e in m)
            cs = _fmt_coeff(c)
            if not mono:
                parts.append(cs)
            elif cs == "1":
                parts.append(mono)
            elif cs == "-1":
                parts.append("-" + mono)
            else:
                parts.append(f"{cs}*{mono}")
        s = " + ".join(parts)
        return s.replace("+ -", "- ")


def _lift(x) -> LaurentScalar:
    if isinstance(x, LaurentScalar):
        return x
    return LaurentScalar.const(x)


def _mono_key(m: Monomial):
    return (tuple(k for k, _ in m), tuple(-e for _, e in m))


def _fmt_power(k: str, e: int) -> str:
    ex = Fraction(e, 2)
    if ex == 1:
        return k
    return f"{k}^({ex})"


def _fmt_coeff(c) -> str:
    if isinstance(c, complex):
        if c.imag == 0:
            return repr(c.real)
        return f"({c.real!r}{c.imag:+.17g}j)"
    return str(c)


ZERO = LaurentScalar()
ONE = LaurentScalar.const(1)

"""Exact arithmetic for rational combinations of square roots of rationals.

The Cayley-tree weights are square roots of rational numbers, and products of
level-shifting operators produce sums of products of such roots.  A value of
the form ``sum_i q_i * sqrt(r_i)`` with rational ``q_i, r_i`` is closed under
addition and multiplication, and two such sums can be compared exactly because
square roots of pairwise non-square-ratio rationals are linearly independent
over the rationals.  No integer factorisation is needed: terms are merged
whenever the ratio of their radicands is a perfect rational square.
"""

from __future__ import annotations

import math
from fractions import Fraction
from numbers import Rational
from typing import Dict, Iterable, Optional, Tuple, Union

__all__ = ["Surd", "is_rational_square", "rational_sqrt", "to_fraction"]

Number = Union[int, Fraction, "Surd"]

_ONE = Fraction(1)


def to_fraction(value) -> Fraction:
    """Convert ints, Fractions and decimal-looking floats/strings to Fraction.

    Floats go through their shortest ``repr`` so that ``2.5`` becomes ``5/2``
    and ``2.1`` becomes ``21/10`` rather than the binary expansion.
    """
    if isinstance(value, Fraction):
        return value
    if isinstance(value, (int, Rational)):
        return Fraction(value)
    if isinstance(value, float):
        if not math.isfinite(value):
            raise ValueError(f"cannot convert {value!r} to a rational")
        return Fraction(repr(value))
    return Fraction(str(value))


def rational_sqrt(r: Fraction) -> Optional[Fraction]:
    """Return the exact square root of ``r`` if it is a rational square."""
    if r < 0:
        return None
    num, den = r.numerator, r.denominator
    a, b = math.isqrt(num), math.isqrt(den)
    if a * a == num and b * b == den:
        return Fraction(a, b)
    return None


def is_rational_square(r: Fraction) -> bool:
    return rational_sqrt(r) is not None


class Surd:
    """An exact real number ``sum_i coeff_i * sqrt(radicand_i)``.

    Radicands are positive Fractions and are kept pairwise
    linearly independent (no ratio between two of them is a rational square),
    so the representation is zero iff every coefficient is zero.

    >>> a = Surd.sqrt(Fraction(7, 8))
    >>> a * a == Fraction(7, 8)
    True
    >>> Surd.sqrt(2) + Surd.sqrt(8) == 3 * Surd.sqrt(2)
    True
    """

    __slots__ = ("_terms",)

    def __init__(self, value: Union[int, Fraction, "Surd"] = 0):
        if isinstance(value, Surd):
            self._terms: Dict[Fraction, Fraction] = dict(value._terms)
            return
        self._terms = {}
        q = to_fraction(value)
        if q:
            self._terms[_ONE] = q

    @classmethod
    def sqrt(cls, radicand, coeff=1) -> "Surd":
        """``coeff * sqrt(radicand)`` for a non-negative rational radicand."""
        r = to_fraction(radicand)
        if r < 0:
            raise ValueError("negative radicand")
        out = cls()
        out._add_term(r, to_fraction(coeff))
        return out

    @classmethod
    def _from_terms(cls, terms: Iterable[Tuple[Fraction, Fraction]]) -> "Surd":
        out = cls()
        for r, q in terms:
            out._add_term(r, q)
        return out

    def _add_term(self, r: Fraction, q: Fraction) -> None:
        if not q or not r:
            return
        root = rational_sqrt(r)
        if root is not None:
            r, q = _ONE, q * root
        else:
            for key in self._terms:
                if key == _ONE:
                    continue
                t = rational_sqrt(r / key)
                if t is not None:
                    r, q = key, q * t
                    break
        new = self._terms.get(r, 0) + q
        if new:
            self._terms[r] = new
        else:
            self._terms.pop(r, None)

    # -- inspection -------------------------------------------------------
    @property
    def terms(self) -> Dict[Fraction, Fraction]:
        """Mapping radicand -> coefficient (read-only copy)."""
        return dict(self._terms)

    def is_zero(self) -> bool:
        return not self._terms

    def is_rational(self) -> bool:
        return all(r == _ONE for r in self._terms)

    def to_fraction(self) -> Fraction:
        if not self.is_rational():
            raise ValueError(f"{self!r} is irrational")
        return self._terms.get(_ONE, Fraction(0))

    def __float__(self) -> float:
        return math.fsum(float(q) * math.sqrt(r) for r, q in self._terms.items())

    def __bool__(self) -> bool:
        return bool(self._terms)

    def __repr__(self) -> str:
        if not self._terms:
            return "Surd(0)"
        parts = []
        for r in sorted(self._terms):
            q = self._terms[r]
            parts.append(f"{q}" if r == _ONE else f"{q}*sqrt({r})")
        return "Surd(" + " + ".join(parts) + ")"

    # -- arithmetic -------------------------------------------------------
    @staticmethod
    def _coerce(other) -> Optional["Surd"]:
        if isinstance(other, Surd):
            return other
        if isinstance(other, (int, Fraction)):
            return Surd(other)
        return None

    def __add__(self, other):
        o = self._coerce(other)
        if o is None:
            if isinstance(other, float):
                return float(self) + other
            return NotImplemented
        out = Surd(self)
        for r, q in o._terms.items():
            out._add_term(r, q)
        return out

    __radd__ = __add__

    def __neg__(self) -> "Surd":
        out = Surd()
        out._terms = {r: -q for r, q in self._terms.items()}
        return out

    def __pos__(self) -> "Surd":
        return self

    def __sub__(self, other):
        o = self._coerce(other)
        if o is None:
            if isinstance(other, float):
                return float(self) - other
            return NotImplemented
        return self + (-o)

    def __rsub__(self, other):
        o = self._coerce(other)
        if o is None:
            if isinstance(other, float):
                return other - float(self)
            return NotImplemented
        return o + (-self)

    def __mul__(self, other):
        o = self._coerce(other)
        if o is None:
            if isinstance(other, float):
                return float(self) * other
            return NotImplemented
        out = Surd()
        for r1, q1 in self._terms.items():
            for r2, q2 in o._terms.items():
                if r1 == r2:
                    out._add_term(_ONE, q1 * q2 * r1)
                else:
                    out._add_term(r1 * r2, q1 * q2)
        return out

    __rmul__ = __mul__

    def __abs__(self) -> float:
        return abs(float(self))

    def __eq__(self, other) -> bool:
        o = self._coerce(other)
        if o is None:
            if isinstance(other, float):
                return float(self) == other
            return NotImplemented
        return (self - o).is_zero()

    # radicand keys are not canonical across instances
    __hash__ = None  # type: ignore[assignment]

"""Exact dyadic rationals in [0, 1] and exact weights.

A :class:`Dyadic` is stored as ``num / 2**exp`` with ``num`` odd (or the
pair ``(0, 0)``), so equal values always have identical fields and can be
hashed and compared directly.  Measure weights are plain
:class:`fractions.Fraction` values.
"""

from __future__ import annotations

import re
from fractions import Fraction
from functools import total_ordering

# Runaway compositions of PL maps blow up exponents; fail loudly instead.
EXP_LIMIT = 10**6


class ExponentOverflow(ArithmeticError):
    pass


class DyadicRangeError(ValueError):
    pass


ExactWeight = Fraction


def _trailing_zeros(n: int) -> int:
    return (n & -n).bit_length() - 1


@total_ordering
class Dyadic:
    """The dyadic rational ``num / 2**exp``, confined to [0, 1]."""

    __slots__ = ("num", "exp")

    def __init__(self, num: int, exp: int):
        # Trusts its input; use dyadic_normalize() for unchecked pairs.
        self.num = num
        self.exp = exp

    def __eq__(self, other):
        if not isinstance(other, Dyadic):
            return NotImplemented
        return self.num == other.num and self.exp == other.exp

    def __hash__(self):
        return hash((self.num, self.exp))

    def __lt__(self, other):
        if not isinstance(other, Dyadic):
            return NotImplemented
        return dyadic_compare(self, other) < 0

    def __repr__(self):
        return f"Dyadic({self})"

    def __str__(self):
        return f"{self.num}/2^{self.exp}"

    def __reduce__(self):
        return (Dyadic, (self.num, self.exp))

    def as_fraction(self) -> Fraction:
        return Fraction(self.num, 1 << self.exp)

    def __float__(self):
        return self.num / (1 << self.exp) if self.exp < 1000 else float(self.as_fraction())


ZERO = Dyadic(0, 0)
ONE = Dyadic(1, 0)
HALF = Dyadic(1, 1)


def dyadic_normalize(num: int, exp: int) -> Dyadic:
    """Canonical representative of ``num / 2**exp``.

    Raises :class:`DyadicRangeError` if the value is outside [0, 1].
    """
    if exp < 0:
        num <<= -exp
        exp = 0
    if num < 0 or num > (1 << exp):
        raise DyadicRangeError(f"{num}/2^{exp} is outside [0, 1]")
    if num == 0:
        return ZERO
    tz = _trailing_zeros(num)
    if tz >= exp:
        # only 1 survives the range check with a power-of-two numerator
        return ONE
    exp -= tz
    if exp > EXP_LIMIT:
        raise ExponentOverflow(f"dyadic exponent {exp} exceeds limit {EXP_LIMIT}")
    return Dyadic(num >> tz, exp)


def dyadic_from_fraction(q: Fraction) -> Dyadic:
    q = Fraction(q)
    den = q.denominator
    if den & (den - 1):
        raise ValueError(f"{q} is not dyadic")
    return dyadic_normalize(q.numerator, den.bit_length() - 1)


def dyadic_affine(t: Dyadic, slope_log2: int, offset: Fraction | Dyadic | int) -> Dyadic:
    """Exact value of ``2**slope_log2 * t + offset``.

    ``offset`` may be negative; it must have a power-of-two denominator.
    """
    if isinstance(offset, Dyadic):
        onum, oexp = offset.num, offset.exp
    else:
        offset = Fraction(offset)
        den = offset.denominator
        if den & (den - 1):
            raise ValueError(f"offset {offset} is not dyadic")
        onum, oexp = offset.numerator, den.bit_length() - 1
    # 2^a * num / 2^exp = num / 2^(exp - a)
    texp = t.exp - slope_log2
    e = max(texp, oexp, 0)
    total = (t.num << (e - texp)) + (onum << (e - oexp))
    return dyadic_normalize(total, e)


def dyadic_compare(a: Dyadic, b: Dyadic) -> int:
    """-1, 0 or 1 as ``a`` is less than, equal to, or greater than ``b``."""
    if a.exp == b.exp:
        x, y = a.num, b.num
    elif a.exp > b.exp:
        x, y = a.num, b.num << (a.exp - b.exp)
    else:
        x, y = a.num << (b.exp - a.exp), b.num
    return (x > y) - (x < y)


def hair_point(m: int) -> Dyadic:
    """The point ``1 - 2**-m``."""
    return dyadic_normalize((1 << m) - 1, m)


_TEXT = re.compile(r"^\s*(-?\d+)\s*/\s*(?:2\^(\d+)|(\d+))\s*$")


def parse_dyadic(text: str) -> Dyadic:
    """Parse ``"p/2^q"`` or ``"p/q"`` with ``q`` a power of two."""
    m = _TEXT.match(text)
    if not m:
        raise ValueError(f"cannot parse dyadic {text!r}")
    num = int(m.group(1))
    if m.group(2) is not None:
        return dyadic_normalize(num, int(m.group(2)))
    den = int(m.group(3))
    if den <= 0 or den & (den - 1):
        raise ValueError(f"denominator of {text!r} is not a power of two")
    return dyadic_normalize(num, den.bit_length() - 1)


def format_weight(w) -> str:
    """Exact weights as ``num/den``, floats via repr."""
    if isinstance(w, Fraction):
        return f"{w.numerator}/{w.denominator}"
    return repr(float(w))


def parse_weight(text: str):
    text = text.strip()
    if "/" in text:
        return Fraction(text)
    if any(c in text for c in ".eE") or text.lower() in ("inf", "nan"):
        return float(text)
    return Fraction(int(text))

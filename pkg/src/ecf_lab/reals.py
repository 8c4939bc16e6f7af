"""Certified real inputs.

A source answers ``bounds(prec)`` with exact rationals ``lo <= x <= hi``;
higher ``prec`` must give a narrower (not necessarily nested) interval.
Exact rationals return ``lo == hi``.
"""

from __future__ import annotations

import os
from fractions import Fraction

import mpmath
from mpmath import iv
from mpmath.libmp import to_rational

from .errors import DomainError

DEFAULT_PRECISION_BITS = 256
MAX_PRECISION_BITS = 4096


def default_precision_bits() -> int:
    return int(os.environ.get("ECF_LAB_PRECISION_BITS", DEFAULT_PRECISION_BITS))


def _raw_to_fraction(raw) -> Fraction:
    p, q = to_rational(raw)
    return Fraction(int(p), int(q))


def interval_to_fractions(x) -> tuple:
    """Exact rational endpoints of an ``mpmath.iv`` interval."""
    a, b = x._mpi_
    return _raw_to_fraction(a), _raw_to_fraction(b)


class ExactRational:
    exact = True

    def __init__(self, value):
        self.value = Fraction(value)
        self.name = str(self.value)

    def bounds(self, prec):
        return self.value, self.value

    def __repr__(self):
        return f"ExactRational({self.value})"


class IntervalReal:
    """A real given by a function ``prec -> mpmath.iv.mpf`` enclosing it."""

    exact = False

    def __init__(self, fn, name="<real>"):
        self._fn = fn
        self.name = name

    def bounds(self, prec):
        old = iv.prec
        iv.prec = prec + 10
        try:
            x = self._fn()
        finally:
            iv.prec = old
        return interval_to_fractions(x)

    def __repr__(self):
        return f"IntervalReal({self.name})"


NAMED_CONSTANTS = {
    "pi-3": lambda: iv.pi - 3,
    "sqrt2-1": lambda: iv.sqrt(2) - 1,
    "e-2": lambda: iv.e - 2,
}


def mu_inverse_cdf_interval(u_lo, u_hi):
    """Enclosure of ``F^{-1}([u_lo, u_hi])`` where F is the CDF of mu.

    F^{-1}(u) = 3(3^u - 1)/(3^u + 3) is increasing, so the enclosure is
    the hull of the endpoint images.
    """
    lo = iv.mpf(u_lo)
    hi = iv.mpf(u_hi)
    out = []
    for u in (lo, hi):
        t = iv.mpf(3) ** u
        out.append(3 * (t - 1) / (t + 3))
    return iv.mpf([out[0].a, out[1].b])


class MuRandomReal:
    """A mu-distributed random real whose binary digits are drawn lazily.

    The uniform variable u is revealed bit by bit from ``rng``; the
    certified interval for alpha = F^{-1}(u) is the image of the dyadic
    interval known so far.  Asking for more precision draws more bits, so
    the number is exactly mu-distributed however deep it is expanded.
    """

    exact = False

    def __init__(self, rng, name="mu-sample"):
        self._rng = rng
        self._bits = 0
        self._u = 0
        self.name = name

    def _draw(self, nbits):
        nbytes = (nbits + 7) // 8
        chunk = int.from_bytes(self._rng.bytes(nbytes), "little")
        self._u = (self._u << (8 * nbytes)) | chunk
        self._bits += 8 * nbytes

    def bounds(self, prec):
        if self._bits < prec:
            self._draw(prec - self._bits)
        old = iv.prec
        iv.prec = self._bits + 24
        try:
            scale = iv.mpf(2) ** (-self._bits)
            u_lo = iv.mpf(self._u) * scale
            u_hi = iv.mpf(self._u + 1) * scale
            x = mu_inverse_cdf_interval(u_lo.a, u_hi.b)
        finally:
            iv.prec = old
        lo, hi = interval_to_fractions(x)
        # F^{-1} maps [0,1] onto [0,1]; clip rounding spill
        return max(lo, Fraction(0)), min(hi, Fraction(1))

    def __repr__(self):
        return f"MuRandomReal(bits={self._bits})"


def parse_value(text: str, precision_bits: int | None = None):
    """Turn a CLI value into a source.

    Accepts the named constants in ``NAMED_CONSTANTS``, rationals ``p/q``
    and decimal strings (taken as the exact rational they spell).
    """
    text = text.strip()
    if text in NAMED_CONSTANTS:
        return IntervalReal(NAMED_CONSTANTS[text], name=text)
    try:
        value = Fraction(text)
    except (ValueError, ZeroDivisionError) as exc:
        raise DomainError(f"cannot parse value {text!r}") from exc
    return ExactRational(value)


def to_mpf(value, prec=128):
    """High-precision float of an exact rational (for reporting)."""
    with mpmath.workprec(prec):
        value = Fraction(value)
        return mpmath.mpf(value.numerator) / value.denominator

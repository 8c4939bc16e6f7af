"""Regular continued fractions (Gauss map) and rewriting into ECF form."""

from __future__ import annotations

from fractions import Fraction
from typing import Sequence

from .ecf import Status
from .errors import DomainError, InsufficientDigits, PrecisionExhausted
from .reals import MAX_PRECISION_BITS, ExactRational, default_precision_bits
from .symbols import OMEGA_BAR, Convergent, EcfDigit


def _check(a):
    a = [int(v) for v in a]
    if any(v < 1 for v in a):
        raise DomainError("Euclidean digits must be positive integers")
    return a


def _rational_cf(v: Fraction) -> list:
    out = []
    n, d = v.numerator, v.denominator
    while n:
        a, r = divmod(d, n)
        out.append(a)
        n, d = r, n
    return out


def euclid_expand(x, n=None, precision_bits=None, max_precision_bits=MAX_PRECISION_BITS) -> list:
    """Gauss-map digits a_j = floor(1/G^{j-1}(x)).

    Exact rationals give their full (finite) expansion, truncated to ``n``
    if given; the last digit is then at least 2 except for x = 1.
    Interval sources give the first ``n`` certified digits.
    """
    source = x if hasattr(x, "bounds") else ExactRational(x)
    if getattr(source, "exact", False):
        v = source.value
        if not 0 < v <= 1:
            raise DomainError(f"{v} is outside (0,1]")
        digits = _rational_cf(v)
        return digits if n is None else digits[:n]
    if n is None:
        raise ValueError("n is required for interval sources")
    prec = precision_bits or default_precision_bits()
    while True:
        lo, hi = source.bounds(prec)
        if hi <= 0 or lo > 1:
            raise DomainError(f"{source!r} is outside (0,1]")
        if lo > 0:
            a, b = _rational_cf(Fraction(lo)), _rational_cf(Fraction(hi))
            # the last digit of either endpoint is not certified
            common = []
            for u, v in zip(a[:-1], b[:-1]):
                if u != v:
                    break
                common.append(u)
            if len(common) >= n:
                return common[:n]
        if prec >= max_precision_bits:
            raise PrecisionExhausted(
                f"{getattr(source, 'name', source)!r}: Euclidean digits not certified "
                f"at {prec} bits",
                source=source,
            )
        prec = min(2 * prec, max_precision_bits)


def evaluate_euclid(digits: Sequence[int], tail=0) -> Fraction:
    """1/(a_1 + 1/(a_2 + ... + 1/(a_n + tail)))."""
    a = _check(digits)
    if not a:
        raise DomainError("empty word")
    t = Fraction(tail)
    for v in reversed(a):
        t = 1 / (v + t)
    return t


def euclid_convergents(digits: Sequence[int], n=None) -> list:
    """P_j/Q_j with seeds Q_{-1} = P_0 = 0, P_{-1} = Q_0 = 1."""
    a = _check(digits)
    n = len(a) if n is None else n
    if n > len(a):
        raise InsufficientDigits(f"need {n} digits, have {len(a)}")
    p0, p1 = 1, 0
    q0, q1 = 0, 1
    out = []
    for i, v in enumerate(a[:n], start=1):
        p0, p1 = p1, v * p1 + p0
        q0, q1 = q1, v * q1 + q0
        out.append(Convergent(p1, q1, i))
    return out


def euclid_to_ecf(digits: Sequence[int], with_status=False):
    """Rewrite a finite regular continued fraction into ECF digits.

    Works left to right.  An even a_1 becomes (a_1/2, +1).  An odd a_1
    followed by a_2 uses

        a_1 + 1/(a_2 + 1/(a_3 + y)) = (a_1 + 1) - 1/(2 - 1/(2 - ... - 1/((a_3 + 1) + y)))

    with a_2 - 1 twos, i.e. emits ((a_1+1)/2, -1), a_2 - 1 copies of
    (1,-1), and continues with a_3 + 1.  At the end of the word an odd
    pair [a_1, a_2] is read as [a_1, a_2 - 1, 1] and a lone odd a_1 >= 3
    as ((a_1+1)/2, -1) followed by the periodic (1,-1)-tail; these
    normalizations reproduce the canonical expansion of the value.

    With ``with_status`` returns ``(digits, Status)``.
    """
    a = _check(digits)
    if not a:
        raise DomainError("empty word")
    if a[-1] == 1 and len(a) > 1:
        # both representations exist: use the one ending in a digit >= 2
        a = a[:-2] + [a[-2] + 1]
    out = []
    status = Status.TERMINATED
    i = 0
    while i < len(a):
        a1 = a[i]
        if a1 % 2 == 0:
            out.append(EcfDigit(a1 // 2, 1))
            i += 1
            continue
        if i == len(a) - 1:
            if a1 > 1:
                out.append(EcfDigit((a1 + 1) // 2, -1))
            status = Status.PERIODIC_TAIL
            break
        out.append(EcfDigit((a1 + 1) // 2, -1))
        a2 = a[i + 1]
        if i + 1 == len(a) - 1:
            out.extend([OMEGA_BAR] * (a2 - 2))
            out.append(EcfDigit(1, 1))
            break
        out.extend([OMEGA_BAR] * (a2 - 1))
        a[i + 2] += 1
        i += 2
    if with_status:
        return out, status
    return out


def identity_sides(a1, a2, a3, y) -> tuple:
    """Both sides of the single-triplet rewriting identity, exactly."""
    y = Fraction(y)
    lhs = a1 + 1 / (a2 + 1 / (a3 + y))
    t = (a3 + 1) + y
    for _ in range(a2 - 1):
        t = 2 - 1 / t
    rhs = (a1 + 1) - 1 / t
    return lhs, rhs

"""Even-quotient continued fractions: digits, the maps T and R, convergents.

Digits are assigned by the half-open partition

    B(k,-1) = (1/(2k), 1/(2k-1)],   B(k,+1) = (1/(2k+1), 1/(2k)]

and T(x) = xi*(1/x - 2k) on B(k, xi).  A rational reaching 0 terminates;
one reaching 1 (the indifferent fixed point) ends in the periodic
(1,-1)-tail.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import islice
from typing import Iterable, Sequence

from .errors import (
    DegenerateDenominator,
    DomainError,
    EcfError,
    InsufficientDigits,
    PrecisionExhausted,
    UnboundedPrefix,
)
from .reals import MAX_PRECISION_BITS, ExactRational, default_precision_bits
from .symbols import OMEGA_BAR, Convergent, EcfDigit, SigmaSymbol

TAU_SCAN_LIMIT = 10**6


class Status(enum.Enum):
    ACTIVE = "active"
    TERMINATED = "terminated"
    PERIODIC_TAIL = "periodic-tail"
    PRECISION_EXHAUSTED = "precision-exhausted"


def _endpoint_digit(n, d):
    """Partition cell of n/d in (0, 1] as (k, xi); None at 0."""
    if n == 0:
        return None
    s = d // n
    if s % 2 == 0:
        return s // 2, 1
    return (s + 1) // 2, -1


def _bar_run(n, d):
    """Leading (1,-1) count of n/d in (1/2, 1]; None at the fixed point 1."""
    e = d - n
    if e == 0:
        return None
    # with y = 1/(1-x) the branch acts as y -> y - 1
    return max(0, -(-(2 * n - d) // e))


def _as_fraction(x) -> Fraction:
    try:
        return Fraction(x)
    except TypeError as exc:
        raise DomainError(f"not an exact value: {x!r}") from exc


def ecf_digit(x):
    """One step of T.

    ``x`` is an exact rational or a pair ``(lo, hi)`` of rationals
    enclosing a real.  Returns ``(digit, T(x))`` with ``T(x)`` of the same
    kind as ``x``.
    """
    if isinstance(x, tuple):
        lo, hi = (_as_fraction(v) for v in x)
        if lo > hi:
            lo, hi = hi, lo
        if lo <= 0 and hi <= 0 or lo > 1:
            raise DomainError(f"interval {x} is outside (0,1]")
        if lo <= 0 or hi > 1:
            raise PrecisionExhausted(f"interval {x} straddles the domain boundary")
        dl = _endpoint_digit(lo.numerator, lo.denominator)
        dh = _endpoint_digit(hi.numerator, hi.denominator)
        if dl != dh:
            raise PrecisionExhausted(f"interval {x} straddles a partition boundary")
        k, xi = dl
        a = xi * (1 / lo - 2 * k)
        b = xi * (1 / hi - 2 * k)
        return EcfDigit(k, xi), (min(a, b), max(a, b))
    v = _as_fraction(x)
    if not 0 < v <= 1:
        raise DomainError(f"{x} is outside (0,1]")
    k, xi = _endpoint_digit(v.numerator, v.denominator)
    return EcfDigit(k, xi), xi * (1 / v - 2 * k)


class EcfStream:
    """Lazy, certified digit source for a real in (0, 1].

    Digits are only emitted once the whole enclosing interval lies in one
    partition cell; otherwise the precision is doubled, up to
    ``max_precision_bits``.  Emitted digits are kept in Sigma form (complete
    symbols plus a count of trailing (1,-1) digits) so that long excursions
    near 1 cost O(1).
    """

    def __init__(self, source, precision_bits=None, max_precision_bits=MAX_PRECISION_BITS):
        if not hasattr(source, "bounds"):
            source = ExactRational(source)
        self.source = source
        self.precision_bits = precision_bits or default_precision_bits()
        self.max_precision_bits = max(max_precision_bits, self.precision_bits)
        self.status = Status.ACTIVE
        self._exact = bool(getattr(source, "exact", False))
        self._symbols = []
        self._pending = 0
        self._count = 0
        self._mat = (1, 0, 0, 1)
        self._orig = None
        self._load(self.precision_bits)
        self._check_domain()
        self._check_exact_end()

    # -- interval bookkeeping -------------------------------------------------
    def _load(self, prec):
        lo, hi = self.source.bounds(prec)
        lo, hi = Fraction(lo), Fraction(hi)
        if self._orig is not None:
            lo = max(lo, self._orig[0])
            hi = min(hi, self._orig[1])
            if lo > hi:
                raise EcfError(f"source {self.source!r} returned inconsistent bounds")
        self._orig = (lo, hi)
        a, b, c, d = self._mat
        ends = []
        for v in (lo, hi):
            n = a * v.numerator + b * v.denominator
            m = c * v.numerator + d * v.denominator
            if m < 0:
                n, m = -n, -m
            ends.append((n, m))
        (n1, d1), (n2, d2) = ends
        if n1 * d2 > n2 * d1:
            ends.reverse()
        self._lo, self._hi = ends

    def _check_domain(self):
        lo, hi = self._orig
        if hi <= 0 or lo > 1 or (self._exact and lo <= 0):
            raise DomainError(f"{self.source!r} is outside (0,1]")

    def _is_point(self):
        (n1, d1), (n2, d2) = self._lo, self._hi
        return n1 * d2 == n2 * d1

    def _check_exact_end(self):
        if not (self._exact and self._is_point()):
            return
        n, d = self._lo
        if n == 0:
            self.status = Status.TERMINATED
        elif n == d:
            self.status = Status.PERIODIC_TAIL

    def _refine(self):
        if self.precision_bits >= self.max_precision_bits:
            self.status = Status.PRECISION_EXHAUSTED
            raise PrecisionExhausted(
                f"{getattr(self.source, 'name', self.source)!r}: digit {self._count + 1} "
                f"not certified at {self.precision_bits} bits",
                source=self.source,
            )
        self.precision_bits = min(2 * self.precision_bits, self.max_precision_bits)
        self._load(self.precision_bits)

    def _resolve(self):
        while True:
            if self.status is not Status.ACTIVE:
                return None
            (n1, d1), (n2, d2) = self._lo, self._hi
            if n1 >= 0 and n2 <= d2:
                dl = _endpoint_digit(n1, d1)
                if dl is not None and dl == _endpoint_digit(n2, d2):
                    return dl
            self._refine()

    def _apply(self, k, xi):
        (n1, d1), (n2, d2) = self._lo, self._hi
        e1 = (xi * (d1 - 2 * k * n1), n1)
        e2 = (xi * (d2 - 2 * k * n2), n2)
        if xi > 0:  # decreasing branch
            e1, e2 = e2, e1
        self._lo, self._hi = e1, e2
        a, b, c, d = self._mat
        self._mat = (xi * (c - 2 * k * a), xi * (d - 2 * k * b), a, b)
        self._count += 1
        if k == 1 and xi == -1:
            self._pending += 1
        else:
            self._symbols.append(SigmaSymbol(self._pending, k, xi))
            self._pending = 0
        self._check_exact_end()

    def _skip_bars(self, limit=None):
        """Emit the certified leading run of (1,-1) digits in one jump."""
        while self.status is Status.ACTIVE:
            (n1, d1), (n2, d2) = self._lo, self._hi
            if 2 * n1 <= d1:
                return
            t1 = _bar_run(n1, d1)
            if t1 is None:  # exact 1
                self.status = Status.PERIODIC_TAIL
                return
            t2 = _bar_run(n2, d2)
            t = t1 if t2 is None else min(t1, t2)
            if limit is not None:
                t = min(t, limit - self._count)
            if t <= 0:
                return
            self._lo = (n1 - t * (d1 - n1), d1 - t * (d1 - n1))
            self._hi = (n2 - t * (d2 - n2), d2 - t * (d2 - n2))
            a, b, c, d = self._mat
            # branch (1,-1) iterated t times: [[t+1, -t], [t, 1-t]]
            self._mat = (
                (t + 1) * a - t * c,
                (t + 1) * b - t * d,
                t * a + (1 - t) * c,
                t * b + (1 - t) * d,
            )
            self._count += t
            self._pending += t
            self._check_exact_end()
            if limit is not None and self._count >= limit:
                return
            if t1 != t2:
                # endpoints disagree on the run length: refine and retry
                self._refine()

    # -- public API -------------------------------------------------------------
    @property
    def omega_count(self) -> int:
        return self._count

    @property
    def symbols(self) -> list:
        """Complete Sigma symbols emitted so far."""
        return list(self._symbols)

    @property
    def pending_bars(self) -> int:
        """Trailing (1,-1) digits not yet closed by an Omega* digit."""
        return self._pending

    @property
    def emitted(self) -> list:
        out = []
        for s in self._symbols:
            out.extend(s.digits())
        out.extend([OMEGA_BAR] * self._pending)
        return out

    def next_digit(self):
        """Next Omega digit, or None once terminated / periodic."""
        d = self._resolve()
        if d is None:
            return None
        self._apply(*d)
        return EcfDigit(*d)

    def next_symbol(self):
        """Next complete Sigma symbol, or None once the expansion ends."""
        while True:
            self._skip_bars()
            d = self._resolve()
            if d is None:
                return None
            self._apply(*d)
            if d != (1, -1):
                return self._symbols[-1]

    def ensure_symbols(self, n) -> list:
        """Make at least ``n`` symbols available; returns all symbols."""
        while len(self._symbols) < n:
            if self.next_symbol() is None:
                raise InsufficientDigits(
                    f"expansion ended ({self.status.value}) after {len(self._symbols)} symbols"
                )
        return self._symbols

    def ensure_digits(self, n):
        while self._count < n:
            self._skip_bars(limit=n)
            if self._count >= n:
                break
            if self.next_digit() is None:
                raise InsufficientDigits(
                    f"expansion ended ({self.status.value}) after {self._count} digits"
                )

    def current_interval(self) -> tuple:
        """Certified enclosure of T^count(x)."""
        (n1, d1), (n2, d2) = self._lo, self._hi
        return Fraction(n1, d1), Fraction(n2, d2)


def ecf_expand(stream, n) -> list:
    """Emit up to ``n`` further Omega digits of ``stream`` (or of a value)."""
    if not isinstance(stream, EcfStream):
        stream = EcfStream(stream)
    start = stream.omega_count
    target = start + n
    while stream.omega_count < target:
        stream._skip_bars(limit=target)
        if stream.omega_count >= target or stream.next_digit() is None:
            break
    digits = stream.emitted
    return digits[start:target]


def ecf_expansion(x) -> tuple:
    """Full expansion of a rational: ``(digits, status)``."""
    stream = EcfStream(ExactRational(x))
    while stream.next_symbol() is not None:
        pass
    return stream.emitted, stream.status


def evaluate(digits: Sequence[EcfDigit], tail=0) -> Fraction:
    """Value of ``[[d_1, ..., d_n]]`` with ``T^n(x) = tail``.

    ``tail=0`` gives the n-th convergent, ``tail=1`` a periodic (1,-1) tail.
    """
    if not digits:
        if tail == 1:
            return Fraction(1)
        raise DomainError("empty word has no value unless its tail is 1")
    t = Fraction(tail)
    run = 0
    for d in reversed(digits):
        if d.is_bar:
            run += 1
            continue
        if run:
            t = _apply_bars(t, run)
            run = 0
        t = 1 / (2 * d.k + d.xi * t)
    return _apply_bars(t, run) if run else t


def _apply_bars(t, h):
    # h maps y -> 1/(2 - y) shift 1/(1 - y) by h
    if t == 1:
        return t
    return 1 - 1 / (1 / (1 - t) + h)


def sigma_encode(digits: Iterable[EcfDigit]) -> tuple:
    """Re-block Omega digits into Sigma symbols.

    Returns ``(symbols, suffix)`` where ``suffix`` holds trailing (1,-1)
    digits that do not yet form a complete block.
    """
    out = []
    h = 0
    for d in digits:
        if d.is_bar:
            h += 1
        else:
            out.append(SigmaSymbol(h, d.k, d.xi))
            h = 0
    return out, [OMEGA_BAR] * h


def sigma_decode(symbols: Iterable[SigmaSymbol]) -> list:
    out = []
    for s in symbols:
        out.extend(s.digits())
    return out


def tau(word, scan_limit=TAU_SCAN_LIMIT) -> int:
    """Number of leading (1,-1) digits of an Omega word."""
    if isinstance(word, EcfStream):
        raise TypeError("pass the stream's digits or symbols, not the stream")
    count = 0
    for d in word:
        if not d.is_bar:
            return count
        count += 1
        if count > scan_limit:
            raise UnboundedPrefix(f"more than {scan_limit} leading (1,-1) digits")
    raise InsufficientDigits(f"word ends after {count} leading (1,-1) digits")


def _symbols_of(word, n):
    if isinstance(word, EcfStream):
        return word.ensure_symbols(n)[:n]
    word = list(islice(word, n))
    if len(word) < n:
        raise InsufficientDigits(f"need {n} Sigma symbols, have {len(word)}")
    return word


def nu_indices(word, n) -> tuple:
    """``(nu_0..nu_n, theta_0..theta_n)`` for a Sigma word."""
    syms = _symbols_of(word, n)
    theta = [1] + [s.h + 1 for s in syms]
    nu = []
    acc = 0
    for t in theta:
        acc += t
        nu.append(acc)
    return nu, theta


def convergents(digits: Sequence[EcfDigit], n) -> list:
    """``p_i/q_i`` for i = 1..n by the three-term recurrence."""
    digits = list(islice(digits, n))
    if len(digits) < n:
        raise InsufficientDigits(f"need {n} digits, have {len(digits)}")
    p0, p1 = 1, 0  # p_{-1}, p_0
    q0, q1 = 0, 1  # q_{-1}, q_0
    xi_prev = 1  # xi_0
    out = []
    for i, d in enumerate(digits, start=1):
        p0, p1 = p1, 2 * d.k * p1 + xi_prev * p0
        q0, q1 = q1, 2 * d.k * q1 + xi_prev * q0
        xi_prev = d.xi
        out.append(Convergent(p1, q1, i))
    return out


def hat_q(word, n) -> int:
    """Denominator of the n-th R-convergent (``hat q_0 = 1``)."""
    if n < 0:
        raise ValueError("n must be nonnegative")
    if n == 0:
        return 1
    syms = _symbols_of(word, n + 1)
    nu, _ = nu_indices(syms, n)
    return convergents(sigma_decode(syms), nu[n])[-1].q


class DenominatorTracker:
    """Incremental ``p_i, q_i`` along a Sigma word.

    Runs of (1,-1) are applied in closed form: inside a run the
    recurrence is q_i = 2 q_{i-1} - q_{i-2}, an arithmetic progression.
    """

    __slots__ = ("index", "p1", "p0", "q1", "q0", "xi")

    def __init__(self):
        self.index = 0
        self.p1, self.p0 = 0, 1
        self.q1, self.q0 = 1, 0
        self.xi = 1

    def copy(self):
        t = DenominatorTracker()
        t.index, t.p1, t.p0, t.q1, t.q0, t.xi = (
            self.index, self.p1, self.p0, self.q1, self.q0, self.xi
        )
        return t

    def push_digit(self, k, xi):
        self.p1, self.p0 = 2 * k * self.p1 + self.xi * self.p0, self.p1
        self.q1, self.q0 = 2 * k * self.q1 + self.xi * self.q0, self.q1
        self.xi = xi
        self.index += 1

    def push_bars(self, h, L=None):
        """Apply h digits (1,-1).

        With ``L`` given, returns ``(index, q, previous q)`` of the first
        of these digits whose denominator exceeds L, or None.
        """
        if h <= 0:
            return None
        self.push_digit(1, -1)
        hit = None
        if L is not None and self.q1 > L:
            hit = (self.index, self.q1, self.q0)
        r = h - 1
        if r:
            dq = self.q1 - self.q0
            if L is not None and hit is None:
                j = (L - self.q1) // dq + 1
                if j <= r:
                    hit = (self.index + j, self.q1 + j * dq, self.q1 + (j - 1) * dq)
            dp = self.p1 - self.p0
            self.q0 = self.q1 + (r - 1) * dq
            self.q1 = self.q1 + r * dq
            self.p0 = self.p1 + (r - 1) * dp
            self.p1 = self.p1 + r * dp
            self.index += r
        return hit


def backward_evaluate(digits: Sequence[EcfDigit], m=None, mode="q") -> Fraction:
    """Evaluate the reversed word directly.

    ``mode="q"``: ``[[(k_m, xi_{m-1}), ..., (k_2, xi_1), (k_1, *)]]``;
    ``mode="p"``: the same word stopped at ``(k_2, *)``.
    """
    digits = list(digits)
    m = len(digits) if m is None else m
    if m < 2:
        raise ValueError("m must be at least 2")
    if len(digits) < m:
        raise InsufficientDigits(f"need {m} digits, have {len(digits)}")
    stop = 0 if mode == "q" else 1
    # innermost term is 2 k_{stop+1}; then r <- 2k_i + xi_{i-1}/r outward
    r = Fraction(2 * digits[stop].k)
    for i in range(stop + 1, m):
        r = 2 * digits[i].k + digits[i - 1].xi / r
    return 1 / r


def mobius_backward(conv_prev: Convergent, conv: Convergent, gamma):
    """``(q_{m-1} + p_{m-1} g) / (q_m + p_m g)``."""
    num = conv_prev.q + conv_prev.p * gamma
    den = conv.q + conv.p * gamma
    if den == 0:
        raise DegenerateDenominator("q_m + p_m * gamma vanishes")
    if isinstance(num, int) and isinstance(den, int):
        return Fraction(num, den)
    return num / den


def forward_reversed(digits: Sequence[EcfDigit], gamma, m=None):
    """Direct evaluation of ``[[(k_m, xi_{m-1}), ..., (k_1, xi_0), ...]]``
    where the part from ``xi_0`` on is the past value ``gamma``.
    """
    digits = list(digits)
    m = len(digits) if m is None else m
    r = 2 * digits[0].k + gamma
    for i in range(1, m):
        r = 2 * digits[i].k + digits[i - 1].xi / r
    return 1 / r


def jump_map(x) -> tuple:
    """R(x) = T^{tau+1}(x) for a rational x; returns ``(symbol, R(x))``."""
    v = _as_fraction(x)
    if not 0 < v <= 1:
        raise DomainError(f"{x} is outside (0,1]")
    n, d = v.numerator, v.denominator
    h = 0
    if 2 * n > d:
        h = _bar_run(n, d)
        if h is None:
            raise DomainError("x = 1 has an infinite (1,-1) prefix")
        e = d - n
        n, d = n - h * e, d - h * e
    k, xi = _endpoint_digit(n, d)
    return SigmaSymbol(h, k, xi), Fraction(xi * (d - 2 * k * n), n)


@dataclass
class RenewalRecord:
    """First index whose denominator exceeds L, with the symbol window."""

    L: Fraction
    n: int
    q: int
    which: str
    window: tuple | None = None
    prev_q: int | None = None
    extra: dict = field(default_factory=dict)

    @property
    def ratio(self) -> Fraction:
        return Fraction(self.q) / self.L

    def ratio_float(self) -> float:
        return float(self.ratio)


class _SymbolFeed:
    def __init__(self, word):
        self._stream = word if isinstance(word, EcfStream) else None
        self._list = None if self._stream else list(word)

    def get(self, i):
        """1-based Sigma symbol."""
        if self._stream is not None:
            return self._stream.ensure_symbols(i)[i - 1]
        if i > len(self._list):
            raise InsufficientDigits(f"need {i} Sigma symbols, have {len(self._list)}")
        return self._list[i - 1]


def renewal_time(word, L, which="R", N1=1, N2=1) -> RenewalRecord:
    """Renewal time for the T-sequence ``q_n`` or the R-sequence ``hat q_n``.

    ``window`` holds Omega digits ``omega_{n_L+j}`` (T) or Sigma symbols
    ``sigma_{n_L+j}`` (R) for ``-N1 < j <= N2``; it is None when the
    window would reach before index 1.
    """
    L = Fraction(L)
    if L <= 0:
        raise ValueError("L must be positive")
    feed = _SymbolFeed(word)
    tr = DenominatorTracker()
    if which.upper() == "T":
        j = 0
        hit = None
        while hit is None:
            j += 1
            s = feed.get(j)
            hit = tr.push_bars(s.h, L)
            if hit is None:
                tr.push_digit(s.m, s.sign)
                if tr.q1 > L:
                    hit = (tr.index, tr.q1, tr.q0)
        n, q, prev = hit
        window = None
        if n - N1 + 1 >= 1:
            window = _omega_window(feed, n - N1 + 1, n + N2)
        return RenewalRecord(L, n, q, "T", window, prev)
    if which.upper() != "R":
        raise ValueError("which must be 'T' or 'R'")
    s = feed.get(1)
    tr.push_bars(s.h)
    tr.push_digit(s.m, s.sign)
    n = 0
    prev_hat = 1
    while True:
        n += 1
        s = feed.get(n + 1)
        if s.h:
            tr.push_digit(1, -1)
        else:
            tr.push_digit(s.m, s.sign)
        if tr.q1 > L:
            break
        prev_hat = tr.q1
        if s.h:
            tr.push_bars(s.h - 1)
            tr.push_digit(s.m, s.sign)
    window = None
    if n - N1 + 1 >= 1:
        window = tuple(feed.get(i) for i in range(n - N1 + 1, n + N2 + 1))
    return RenewalRecord(L, n, tr.q1, "R", window, prev_hat)


def _omega_window(feed, start, stop) -> tuple:
    out = []
    pos = 0  # Omega index of the last digit of the previous symbol
    j = 0
    while pos < stop:
        j += 1
        s = feed.get(j)
        first, last = pos + 1, pos + s.length
        lo, hi = max(first, start), min(last, stop)
        for i in range(lo, hi + 1):
            out.append(s.last_digit if i == last else OMEGA_BAR)
        pos = last
    return tuple(out)

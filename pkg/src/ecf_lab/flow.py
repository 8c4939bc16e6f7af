"""Natural extension, roof function and the special flow over it.

A point of the natural extension is a bi-infinite Sigma word
``(..., sigma_{-1}, sigma_0; sigma_1, sigma_2, ...)``.  It is stored as a
finite past window (most recent first) with its value

    x = [[(0, xi_0); (k_0, xi_{-1}), (k_{-1}, xi_{-2}), ...]] in (-1/3, 1]

and a lazily expanded future.  Pushing a digit (k, xi) from the future
onto the past maps x to xi/(2k + x).

The roof function is psi = sum_{i=2}^{nu_1} log r_i with
r_1 = 2k_1 + x and r_i = 2k_i + xi_{i-1}/r_i-1; equivalently
prod_{i=1}^{nu} r_i = q_nu + p_nu x.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Sequence

import mpmath
import numpy as np

from .ecf import DenominatorTracker, EcfStream, renewal_time
from .errors import (
    DomainError,
    EcfError,
    EmptyCylinder,
    InsufficientDigits,
    WindowUnderflow,
)
from .measures import CylinderSpec, cylinder_interval, past_interval
from .reals import ExactRational, MuRandomReal
from .symbols import EcfDigit, SigmaSymbol

DEFAULT_WINDOW = 40
G_DEPTH = 40
SAMPLE_BITS = 2048
PAST_LO = Fraction(-1, 3)


class _Future:
    """Read-only view of sigma_1, sigma_2, ... over a stream or a tuple."""

    __slots__ = ("source", "offset", "prefix")

    def __init__(self, source, offset=0, prefix=()):
        self.source = source
        self.offset = offset
        self.prefix = tuple(prefix)

    def symbol(self, j) -> SigmaSymbol:
        if j <= len(self.prefix):
            return self.prefix[j - 1]
        i = self.offset + j - len(self.prefix)
        if isinstance(self.source, EcfStream):
            return self.source.ensure_symbols(i)[i - 1]
        if i > len(self.source):
            raise InsufficientDigits(f"future word has only {len(self.source)} symbols")
        return self.source[i - 1]

    def advance(self) -> "_Future":
        if self.prefix:
            return _Future(self.source, self.offset, self.prefix[1:])
        return _Future(self.source, self.offset + 1)

    def push_front(self, s) -> "_Future":
        if not self.prefix and self.offset > 0:
            # undoing a forward shift: reuse the source
            i = self.offset
            if isinstance(self.source, EcfStream):
                if len(self.source.symbols) >= i and self.source.symbols[i - 1] == s:
                    return _Future(self.source, i - 1)
            elif len(self.source) >= i and self.source[i - 1] == s:
                return _Future(self.source, i - 1)
        return _Future(self.source, self.offset, (s,) + self.prefix)

    def head(self, n) -> tuple:
        return tuple(self.symbol(j) for j in range(1, n + 1))


def _push_bars(x, h):
    # with z = 1/(1+x) one pushed (1,-1) digit is z -> z + 1
    if h == 0:
        return x
    z = 1 / (1 + x) + h
    return 1 / z - 1


def _push(x, s):
    x = _push_bars(x, s.h)
    return s.sign / (2 * s.m + x)


def _pop(x, s):
    x = s.sign / x - 2 * s.m
    if s.h:
        x = 1 / (1 / (1 + x) - s.h) - 1
    return x


def window_value(past: Sequence[SigmaSymbol]) -> Fraction:
    """Value of a past window with the unseen tail set to 0."""
    x = Fraction(0)
    for s in reversed(past):
        x = _push(x, s)
    return x


class BiWord:
    """A point of the natural extension, as past window plus future."""

    __slots__ = ("past", "future", "past_value", "shift", "_width")

    def __init__(self, past, future, past_value=None, shift=0):
        self.past = tuple(past)
        for s in self.past:
            if s.m == 1 and s.sign == -1:
                raise EmptyCylinder(f"forbidden symbol {s} in past")
        if not isinstance(future, _Future):
            future = _Future(future if isinstance(future, EcfStream) else tuple(future))
        self.future = future
        self.past_value = window_value(self.past) if past_value is None else Fraction(past_value)
        if not PAST_LO <= self.past_value <= 1:
            raise DomainError(f"past value {self.past_value} outside (-1/3, 1]")
        self.shift = shift
        self._width = None

    @property
    def past_width(self) -> float:
        """Width of the set of past values compatible with the window."""
        if self._width is None:
            lo, hi = past_interval(self.past)
            self._width = float(hi - lo)
        return self._width

    def sigma(self, j) -> SigmaSymbol:
        """sigma_j for j >= 1 (future) or j <= 0 (past window)."""
        if j >= 1:
            return self.future.symbol(j)
        if -j >= len(self.past):
            raise WindowUnderflow(f"sigma_{j} lies beyond the past window")
        return self.past[-j]

    def future_digits(self, n_symbols) -> list:
        out = []
        for s in self.future.head(n_symbols):
            out.extend(s.digits())
        return out

    def key(self, n_future=3, n_past=None) -> tuple:
        past = self.past if n_past is None else self.past[:n_past]
        return past, self.future.head(n_future)

    def __repr__(self):
        past = " ".join(str(s) for s in reversed(self.past[:3]))
        fut = " ".join(str(s) for s in self.future.head(3))
        return f"BiWord(... {past} ; {fut} ...)"


@dataclass(frozen=True)
class RoofValue:
    """psi = psi_0 + psi_1 + psi_2; ``width`` bounds the past-truncation
    error when requested."""

    total: float
    parts: tuple
    width: float | None = None


@dataclass(frozen=True)
class FlowPoint:
    base: BiWord
    height: float


def r_hat_shift(w: BiWord, steps=1) -> BiWord:
    """Apply the natural extension ``steps`` times (negative: inverse)."""
    x = w.past_value
    past = w.past
    fut = w.future
    if steps >= 0:
        for _ in range(steps):
            s = fut.symbol(1)
            x = _push(x, s)
            past = (s,) + past
            fut = fut.advance()
    else:
        for _ in range(-steps):
            if not past:
                raise WindowUnderflow("past window exhausted")
            s = past[0]
            x = _pop(x, s)
            past = past[1:]
            fut = fut.push_front(s)
    out = BiWord.__new__(BiWord)
    out.past, out.future, out.past_value = past, fut, x
    out.shift, out._width = w.shift + steps, None
    return out


def _first_digit(s: SigmaSymbol):
    return (1, -1) if s.h else (s.m, s.sign)


def _roof_args(s1: SigmaSymbol, s2: SigmaSymbol, x: Fraction) -> tuple:
    """Exact arguments of the logs in (psi_0, psi_1, psi_2)."""
    tau, m = s1.h, s1.m
    if tau == 0:
        a0 = a1 = None
        r = 2 * m + x
    else:
        num, den = (tau + 1) + tau * x, tau + (tau - 1) * x
        a0 = num / (2 + x) if tau >= 2 else None
        r = 2 * m - den / num
        a1 = r
    k2, _ = _first_digit(s2)
    a2 = 2 * k2 + s1.sign / r
    return a0, a1, a2


def _log(v) -> float:
    try:
        return math.log(v)
    except OverflowError:
        return math.log(v.numerator) - math.log(v.denominator)


def psi(w: BiWord, certify=False) -> RoofValue:
    """Roof function via the telescoped closed forms.

    |d psi/dx| <= 3 on (-1/3, 1], so ``certify`` adds 3 * past_width.
    """
    a0, a1, a2 = _roof_args(w.future.symbol(1), w.future.symbol(2), w.past_value)
    p0 = _log(a0) if a0 is not None else 0.0
    p1 = _log(a1) if a1 is not None else 0.0
    p2 = _log(a2)
    width = 3.0 * w.past_width if certify else None
    return RoofValue(p0 + p1 + p2, (p0, p1, p2), width)


def roof_bounds(s1: SigmaSymbol, s2: SigmaSymbol, corrected=False) -> dict:
    """Elementary bounds on (psi_0, psi_1, psi_2) over the 2-cylinder [s1, s2].

    Returns ``{"case": 1..4, "psi0": (lo, hi), "psi1": (lo, hi),
    "psi2": (lo, hi)}``; case 1 is h1 = h2 = 0, case 2 is h1 = 0 < h2,
    case 3 is h1 > 0 = h2 and case 4 is h1, h2 > 0.

    The textbook lower bounds for cases 1 and 2 assume the past value
    after sigma_1 is at least -1/5.  After s1 = 2- it lies in
    (-3/11, -1/5), so psi_2 can drop to log(2 m2 - 3/11).  ``corrected``
    returns the lower bounds valid for every s1.
    """
    h1, m1, h2, m2 = s1.h, s1.m, s2.h, s2.m
    zero = (0.0, 0.0)
    if h1 == 0:
        p0 = p1 = zero
        if h2 == 0:
            lo = (22 * m2 - 3) / 11 if corrected else (10 * m2 - 1) / 5
            case, p2 = 1, (math.log(lo), math.log(2 * m2 + 1))
        else:
            case, p2 = 2, (math.log(19 / 11 if corrected else 9 / 5), math.log(3))
    else:
        p0, p1 = (0.0, math.log(2 * h1 + 1)), (0.0, math.log(2 * m1))
        if h2 == 0:
            case, p2 = 3, (math.log((6 * m2 - 1) / 3), math.log(2 * m2 + 1))
        else:
            case, p2 = 4, (math.log(5 / 3), math.log(3))
    return {"case": case, "psi0": p0, "psi1": p1, "psi2": p2}


def psi_direct(w: BiWord) -> float:
    """Roof function by summing log r_i for i = 2..nu_1 one digit at a time."""
    s1, s2 = w.future.symbol(1), w.future.symbol(2)
    digits = list(s1.digits()) + [EcfDigit(*_first_digit(s2))]
    r = 2 * digits[0].k + w.past_value
    total = 0.0
    for i in range(1, len(digits)):
        r = 2 * digits[i].k + digits[i - 1].xi / r
        total += _log(r)
    return total


def psi_mobius(w: BiWord) -> float:
    """Roof function as log((q_nu + p_nu x)/(q_1 + p_1 x)) with nu = nu_1."""
    s1, s2 = w.future.symbol(1), w.future.symbol(2)
    x = w.past_value
    tr = DenominatorTracker()
    tr.push_bars(s1.h)
    tr.push_digit(s1.m, s1.sign)
    tr.push_digit(*_first_digit(s2))
    k1 = _first_digit(s1)[0]
    return _log((tr.q1 + tr.p1 * x) / (2 * k1 + x))


def birkhoff_sum(w: BiWord, n) -> float:
    """S_n = sum_{j<n} psi(R^j w)."""
    total = 0.0
    for _ in range(n):
        total += psi(w).total
        w = r_hat_shift(w, 1)
    return total


def _nu_states(w: BiWord, n):
    """(p, q) at Omega-index nu_j for j = 1..n."""
    tr = DenominatorTracker()
    s = w.future.symbol(1)
    out = []
    tr.push_bars(s.h)
    tr.push_digit(s.m, s.sign)
    for j in range(1, n + 1):
        nxt = w.future.symbol(j + 1)
        tr.push_digit(*_first_digit(nxt))
        out.append((tr.p1, tr.q1))
        if nxt.h:
            tr.push_bars(nxt.h - 1)
            tr.push_digit(nxt.m, nxt.sign)
    return out


def g_sequence(w: BiWord, n=G_DEPTH) -> tuple:
    """``(g_0..g_n, increments g_{j+1}-g_j for j = 0..n-1)``.

    With hat q_j = q_nu and S_j = log((q_nu + p_nu x)/(2k_1 + x)),
    g_j = log(2k_1 + x) - log(1 + (p_nu/q_nu) x) for j >= 1 and g_0 = 0.
    Increments are formed from exact rationals and log1p, so they stay
    accurate far below double-precision resolution of g itself.
    """
    x = w.past_value
    k1 = _first_digit(w.future.symbol(1))[0]
    base = _log(2 * k1 + x)
    states = _nu_states(w, n)
    ratios = [1 + Fraction(p, q) * x for p, q in states]
    g = [0.0] + [base - _log(a) for a in ratios]
    inc = [g[1]]
    for j in range(1, n):
        a, b = ratios[j - 1], ratios[j]
        inc.append(math.log1p(float((a - b) / b)))
    return g, inc


def g_n(w: BiWord, n) -> float:
    """log hat q_n - S_n."""
    if n == 0:
        return 0.0
    return g_sequence(w, n)[0][n]


def g_limit(w: BiWord, depth=G_DEPTH) -> float:
    """g approximated by g_depth."""
    return g_sequence(w, depth)[0][depth]


def crossing_index(w: BiWord, t) -> int:
    """r(w, t) = min{r >= 1 : S_r > t} for t >= 0."""
    if t < 0:
        raise ValueError("crossing index needs t >= 0")
    r, s = 0, 0.0
    while s <= t:
        s += psi(w).total
        w = r_hat_shift(w, 1)
        r += 1
    return r


def flow(w: BiWord, y, t) -> FlowPoint:
    """Phi_t applied to (w, y)."""
    roof = psi(w).total
    if not 0 <= y < roof:
        raise ValueError(f"height {y} not in [0, {roof})")
    target = y + t
    # compare against cumulative sums so that t = S_k lands exactly on R^k
    acc = 0.0
    while acc + roof <= target:
        acc += roof
        w = r_hat_shift(w, 1)
        roof = psi(w).total
    while target < acc:
        w = r_hat_shift(w, -1)
        acc -= psi(w).total
    return FlowPoint(w, target - acc)


# -- sampling from the invariant measure ------------------------------------------

def _uniform_bits(rng, bits) -> int:
    return int.from_bytes(rng.bytes((bits + 7) // 8), "little")


def _mpf_to_fraction(v) -> Fraction:
    p, q = mpmath.libmp.to_rational(v._mpf_)
    return Fraction(int(p), int(q))


def sample_mu_hat_point(rng, rect=None, bits=SAMPLE_BITS) -> tuple:
    """Draw ``(alpha, x)`` from mu-hat, optionally restricted to a rectangle.

    In the coordinates (alpha, x) in (0,1] x (-1/3,1], mu-hat has density
    1/(log 3 (1 + alpha x)^2); its alpha-marginal is f.  ``rect`` is
    ``((a1, a2), (y1, y2))``.  Both coordinates are returned as exact
    rationals at ``bits`` bits of precision.
    """
    (a1, a2), (y1, y2) = rect if rect is not None else ((Fraction(0), Fraction(1)), (PAST_LO, Fraction(1)))
    scale = 2 ** (bits + 8)
    u = Fraction(2 * _uniform_bits(rng, bits + 8) + 1, 2 * scale)
    v = Fraction(2 * _uniform_bits(rng, bits + 8) + 1, 2 * scale)
    with mpmath.workprec(bits + 32):
        mp = mpmath.mpf
        A1, A2, Y1, Y2 = (mp(c.numerator) / c.denominator for c in (a1, a2, y1, y2))

        def G(a):
            return mpmath.log((1 + a * Y2) / (1 + a * Y1))

        s = G(A1) + (mp(u.numerator) / u.denominator) * (G(A2) - G(A1))
        es = mpmath.exp(s)
        alpha = (es - 1) / (Y2 - Y1 * es)
        lo = 1 / (1 + alpha * Y1)
        hi = 1 / (1 + alpha * Y2)
        inv = lo - (mp(v.numerator) / v.denominator) * (lo - hi)
        if alpha == 0:
            x = Y1 + (mp(v.numerator) / v.denominator) * (Y2 - Y1)
        else:
            x = (1 / inv - 1) / alpha
        alpha_f = _mpf_to_fraction(alpha)
        x_f = _mpf_to_fraction(x)
    alpha_f = min(max(alpha_f, a1), a2)
    x_f = min(max(x_f, y1), y2)
    if alpha_f <= 0:
        alpha_f = Fraction(1, scale)
    return alpha_f, x_f


def decode_past(x: Fraction, n_symbols) -> tuple:
    """Past Sigma symbols sigma_0, sigma_{-1}, ... read off a past value.

    Each step writes |x| = 1/(2k + x') with x' in (-1, 1] and sign(x) = xi.
    Values in (-1, -1/3] give (1,-1); a run of them is jumped in one step
    using z = 1/(1+x), which drops by 1 per digit.  Stops early if the
    expansion of a rational x ends.
    """
    y = Fraction(x)
    if not PAST_LO < y <= 1:
        raise DomainError("past value must lie in (-1/3, 1]")
    syms = []
    while len(syms) < n_symbols and y != 0:
        xi = 1 if y > 0 else -1
        inv = 1 / abs(y)
        k = max(1, math.ceil((inv - 1) / 2))
        y = inv - 2 * k
        h = 0
        if -1 < y <= PAST_LO:
            z = 1 / (1 + y)
            h = math.floor(z - Fraction(3, 2)) + 1
            y = 1 / (z - h) - 1
        syms.append(SigmaSymbol(h, k, xi))
    return tuple(syms)


def sample_biword(rng, window=DEFAULT_WINDOW, method="density", burn_in=None,
                  bits=SAMPLE_BITS, cylinder: CylinderSpec | None = None) -> BiWord:
    """Draw a point of the natural extension from mu-hat.

    ``density``: exact draw of (alpha, x) from the density of mu-hat; the
    future is the expansion of alpha and the past window is decoded from x,
    whose exact value is kept.  With ``cylinder`` the draw is restricted
    to that bi-sided cylinder.

    ``burn-in``: alpha ~ mu, shifted ``burn_in`` (default 2*window) times;
    the trailing ``window`` symbols form the past and the past value is the
    window value (tail truncated).
    """
    if method == "burn-in":
        if cylinder is not None:
            raise ValueError("cylinder sampling needs method='density'")
        b = 2 * window if burn_in is None else burn_in
        if b < window:
            raise ValueError("burn_in must be at least the window length")
        stream = EcfStream(MuRandomReal(rng), precision_bits=1024)
        syms = stream.ensure_symbols(b)
        past = tuple(reversed(syms[b - window:b]))
        return BiWord(past, _Future(stream, b))
    if method != "density":
        raise ValueError("method must be 'density' or 'burn-in'")
    rect = None
    if cylinder is not None:
        if not cylinder.past:
            raise ValueError("bi-sided cylinder needs a past part")
        a1, a2 = cylinder_interval(CylinderSpec(cylinder.future))
        y1, y2 = past_interval(cylinder.past)
        rect = ((a1, a2), (y1, y2))
    for _ in range(100):
        alpha, x = sample_mu_hat_point(rng, rect, bits)
        past = decode_past(x, window)
        stream = EcfStream(ExactRational(alpha))
        w = BiWord(past, _Future(stream), past_value=x)
        if cylinder is None:
            return w
        n1, n2 = len(cylinder.past), len(cylinder.future)
        try:
            if past[:n1] == cylinder.past and w.future.head(n2) == cylinder.future:
                return w
        except InsufficientDigits:
            pass
    raise EcfError("could not draw a point inside the cylinder (rounding at its edge?)")


def biword_from_value(alpha, past: Sequence[SigmaSymbol] = (), past_value=None) -> BiWord:
    """BiWord with future given by the expansion of ``alpha``."""
    src = alpha if hasattr(alpha, "bounds") else ExactRational(alpha)
    return BiWord(tuple(past), _Future(EcfStream(src)), past_value)


# -- experiments --------------------------------------------------------------------

def renewal_vs_crossing(cylinder: CylinderSpec, L_values, samples, rng, depth=G_DEPTH,
                        window=DEFAULT_WINDOW) -> dict:
    """Compare hat n_L with r(w, log L - g_C) on a bi-sided cylinder.

    g_C is the largest g (approximated by g_depth) over the sampled points.
    Returns mismatch fractions per L and, as a control, the mismatch when
    the time is log L - g(w) pointwise.
    """
    if len(cylinder.past) < 4 or len(cylinder.future) < 4:
        raise ValueError("cylinder needs at least 4 symbols on each side")
    pts = [sample_biword(rng, window, cylinder=cylinder) for _ in range(samples)]
    gs = [g_limit(w, depth) for w in pts]
    g_c = max(gs)
    L_values = list(L_values)
    if any(math.log(L) <= g_c for L in L_values):
        raise DomainError(f"need log L > g_C = {g_c:.6g}")
    out = {"g_C": g_c, "g_spread": g_c - min(gs), "L": [], "mismatch": [], "control": []}
    for L in L_values:
        bad = ctrl = 0
        for w, g in zip(pts, gs):
            n_hat = renewal_time(w.future.source if w.future.offset == 0 and not w.future.prefix
                                 else list(w.future.head(depth)), Fraction(L), "R").n
            bad += n_hat != crossing_index(w, math.log(L) - g_c)
            ctrl += n_hat != crossing_index(w, math.log(L) - g)
        out["L"].append(L)
        out["mismatch"].append(bad / samples)
        out["control"].append(ctrl / samples)
    return out


def cylinder_band(symbols: Sequence[SigmaSymbol], y_max: float) -> Callable:
    """Indicator of {sigma_1.. = symbols, height < y_max} on flow points."""
    symbols = tuple(symbols)

    def indicator(p: FlowPoint) -> float:
        return float(p.height < y_max and p.base.future.head(len(symbols)) == symbols)

    return indicator


def correlation_decay(A: Callable, B: Callable, t_grid, samples, rng, batches=20,
                      window=8, bits=SAMPLE_BITS) -> list:
    """Covariance of A and B o Phi_t under the flow-invariant measure.

    Points are drawn as (w, y) with w ~ mu-hat weighted by psi(w) and y
    uniform under the roof.  Error bars come from batch means.
    """
    t_grid = list(t_grid)
    w_all = np.empty(samples)
    a_all = np.empty(samples)
    b_all = np.empty((len(t_grid), samples))
    for i in range(samples):
        w = sample_biword(rng, window, bits=bits)
        roof = psi(w).total
        y = float(rng.random()) * roof
        p = FlowPoint(w, y)
        w_all[i] = roof
        a_all[i] = A(p)
        for j, t in enumerate(t_grid):
            b_all[j, i] = B(flow(w, y, t))
    out = []
    size = samples // batches
    for j, t in enumerate(t_grid):
        def cov(sl):
            wt = w_all[sl]
            s = wt.sum()
            ea = (wt * a_all[sl]).sum() / s
            eb = (wt * b_all[j, sl]).sum() / s
            return (wt * a_all[sl] * b_all[j, sl]).sum() / s - ea * eb

        est = cov(slice(None))
        parts = np.array([cov(slice(k * size, (k + 1) * size)) for k in range(batches)])
        err = float(parts.std(ddof=1) / math.sqrt(batches))
        out.append({"t": t, "estimate": float(est), "stderr": err})
    return out

"""Invariant densities, cylinder intervals and sampling from mu.

mu is the R-invariant probability measure with density

    f(a) = (1/log 3) * (1/(3 - a) + 1/(1 + a)),

whose CDF F(a) = log(3(1 + a)/(3 - a))/log 3 inverts in closed form.
T preserves the infinite measure with density h(a) = 1/(1+a) + 1/(1-a).
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .errors import DomainError, EmptyCylinder
from .reals import MuRandomReal
from .symbols import EcfDigit, SigmaSymbol

LOG3 = math.log(3.0)
LOG2 = math.log(2.0)


def _domain(a, lo=0.0, hi=1.0, name="alpha"):
    arr = np.asarray(a, dtype=float)
    if np.any(~((arr >= lo) & (arr <= hi))):
        raise DomainError(f"{name} must lie in [{lo}, {hi}]")
    return arr


def _out(arr, like):
    return float(arr) if np.ndim(like) == 0 else arr


def density_f(a):
    """Density of mu on [0, 1] (continuous up to both endpoints)."""
    arr = _domain(a)
    return _out((1.0 / (3.0 - arr) + 1.0 / (1.0 + arr)) / LOG3, a)


def density_h(a):
    """Density of the infinite T-invariant measure on [0, 1)."""
    arr = np.asarray(a, dtype=float)
    if np.any(~((arr >= 0) & (arr < 1))):
        raise DomainError("alpha must lie in [0, 1)")
    return _out(1.0 / (1.0 + arr) + 1.0 / (1.0 - arr), a)


def density_gauss(a):
    arr = _domain(a)
    return _out(1.0 / (LOG2 * (1.0 + arr)), a)


def mu_cdf(a):
    arr = _domain(a)
    return _out(np.log(3.0 * (1.0 + arr) / (3.0 - arr)) / LOG3, a)


def mu_inverse_cdf(u):
    arr = _domain(u, name="u")
    t = np.power(3.0, arr)
    return _out(3.0 * (t - 1.0) / (t + 3.0), u)


def h_primitive(a):
    """Antiderivative log((1+a)/(1-a)) of h, zero at 0."""
    arr = np.asarray(a, dtype=float)
    return _out(np.log1p(arr) - np.log1p(-arr), a)


def sample_mu(rng, size=None):
    """Draws from mu by the exact inverse CDF."""
    return mu_inverse_cdf(rng.random(size))


def mu_random_real(rng) -> MuRandomReal:
    """A mu-distributed real with lazily revealed, certified digits."""
    return MuRandomReal(rng)


def mu_measure(a, b) -> float:
    """mu((a, b]) for exact rationals, accurate for tiny intervals."""
    a, b = Fraction(a), Fraction(b)
    if a > b:
        a, b = b, a
    if a < 0 or b > 1:
        raise DomainError("interval must lie in [0, 1]")
    # log((1+b)/(1+a)) + log((3-a)/(3-b)) with both ratios close to 1
    x = float((b - a) / (1 + a))
    y = float((b - a) / (3 - b))
    return (math.log1p(x) + math.log1p(y)) / LOG3


def remark1_bound(h, m) -> float:
    """Upper bound 3/(log 3 (4h^2 + 8h + 3) m^2) on mu(C[h.m^+-])."""
    return 3.0 / (LOG3 * (4 * h * h + 8 * h + 3) * m * m)


def _as_symbol(s):
    if isinstance(s, (SigmaSymbol, EcfDigit)):
        return s
    h, m, sign = s
    if m == 1 and sign == -1:
        raise EmptyCylinder(f"{h}x1- is a forbidden Sigma symbol")
    return SigmaSymbol(h, m, sign)


@dataclass(frozen=True)
class CylinderSpec:
    """A cylinder of Sigma symbols (Omega digits are accepted too).

    ``future`` holds sigma_1, sigma_2, ...; ``past`` holds sigma_0,
    sigma_{-1}, ... (most recent first) for bi-sided cylinders.
    """

    future: tuple = ()
    past: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "future", tuple(_as_symbol(s) for s in self.future))
        object.__setattr__(self, "past", tuple(_as_symbol(s) for s in self.past))

    @property
    def word(self) -> tuple:
        """One-sided word with the same mu-hat measure (shift invariance)."""
        return tuple(reversed(self.past)) + self.future


def _digits_of(s):
    return [s] if isinstance(s, EcfDigit) else s.digits()


def _branch_matrix(symbols) -> tuple:
    """Integer Mobius matrix of the composed inverse branches."""
    a, b, c, d = 1, 0, 0, 1
    for s in symbols:
        for dig in _digits_of(s):
            # y -> 1/(2k + xi*y)  is  [[0, 1], [xi, 2k]]
            a, b, c, d = b * dig.xi, a + 2 * dig.k * b, d * dig.xi, c + 2 * dig.k * d
    return a, b, c, d


def cylinder_interval(spec) -> tuple:
    """Exact endpoints (left, right) of a one-sided cylinder.

    For a bi-sided spec the interval of ``spec.word`` is returned.
    """
    if not isinstance(spec, CylinderSpec):
        spec = CylinderSpec(tuple(spec))
    word = spec.word
    if not word:
        return Fraction(0), Fraction(1)
    a, b, c, d = _branch_matrix(word)
    e0 = Fraction(b, d)
    e1 = Fraction(a + b, c + d)
    return (e0, e1) if e0 <= e1 else (e1, e0)


def cylinder_measure(spec) -> float:
    lo, hi = cylinder_interval(spec)
    return mu_measure(lo, hi)


def past_interval(past: Sequence) -> tuple:
    """Range of the past value x in (-1/3, 1] compatible with a past window.

    Pushing a digit (k, xi) onto the past maps x to xi/(2k + x), the
    matrix [[0, xi], [1, 2k]]; h pushed (1,-1) digits give
    [[1-h, -h], [h, 1+h]].
    """
    a, b, c, d = 1, 0, 0, 1
    for s in [_as_symbol(v) for v in past]:
        # newest symbol first: its maps act last, i.e. on the left
        if isinstance(s, EcfDigit):
            h, k, xi = 0, s.k, s.xi
        else:
            h, k, xi = s.h, s.m, s.sign
        # M = B^h-composition: x -> xi/(2k + bars(x))
        m = (0, xi, 1, 2 * k)
        if h:
            bh = (1 - h, -h, h, 1 + h)
            m = (m[0] * bh[0] + m[1] * bh[2], m[0] * bh[1] + m[1] * bh[3],
                 m[2] * bh[0] + m[3] * bh[2], m[2] * bh[1] + m[3] * bh[3])
        a, b, c, d = (a * m[0] + b * m[2], a * m[1] + b * m[3],
                      c * m[0] + d * m[2], c * m[1] + d * m[3])
    e0 = Fraction(-a + 3 * b, -c + 3 * d)
    e1 = Fraction(a + b, c + d)
    return (e0, e1) if e0 <= e1 else (e1, e0)


# -- invariance checks -----------------------------------------------------------

def t_map_float(a):
    """Vectorised T on floats in (0, 1]."""
    a = np.asarray(a, dtype=float)
    inv = 1.0 / a
    s = np.floor(inv)
    k = np.floor((s + 1) / 2)
    xi = np.where(s % 2 == 0, 1.0, -1.0)
    return xi * (inv - 2 * k)


def r_map_float(a):
    """Vectorised R = T^(tau+1), the bar run jumped in closed form."""
    a = np.asarray(a, dtype=float)
    e = 1.0 - a
    with np.errstate(divide="ignore", invalid="ignore"):
        t = np.where(a > 0.5, np.ceil((2 * a - 1) / e), 0.0)
        y = np.where(t > 0, (a - t * e) / (1 - t * e), a)
    y = np.clip(y, np.finfo(float).tiny, 0.5)
    return t_map_float(y)


def _r_scalar(a: float) -> float:
    if a > 0.5:
        e = 1.0 - a
        t = math.ceil((2 * a - 1) / e)
        a = (a - t * e) / (1 - t * e)
        if not 0.0 < a <= 0.5:
            return -1.0
    inv = 1.0 / a
    s = math.floor(inv)
    k = (s + 1) // 2
    return (inv - 2 * k) if s % 2 == 0 else (2 * k - inv)


@dataclass
class InvarianceReport:
    map: str
    n: int
    bins: int
    deviation: float
    threshold: float
    edges: np.ndarray
    empirical: np.ndarray
    theoretical: np.ndarray
    orbit_deviation: float | None = None
    extra: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        ok = self.deviation <= self.threshold
        if self.orbit_deviation is not None:
            ok = ok and self.orbit_deviation <= self.threshold
        return ok

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["bin_left", "bin_right", "empirical", "theoretical"])
            for i in range(self.bins):
                w.writerow([
                    repr(float(self.edges[i])), repr(float(self.edges[i + 1])),
                    repr(float(self.empirical[i])), repr(float(self.theoretical[i])),
                ])


def _hist_density(values, edges, total):
    counts, _ = np.histogram(values, bins=edges)
    return counts / (total * np.diff(edges))


def invariance_check(rng, map="R", n=10**6, bins=100, orbit_length=None) -> InvarianceReport:
    """Histogram test of invariance.

    ``R`` and ``identity`` push mu-samples forward and compare with f on
    [0, 1]; ``R`` also histograms one long orbit (Birkhoff time average).
    ``T`` samples the T-invariant measure restricted to (0, 10/11], which
    contains every T-preimage of (0, 0.9], and compares the pushforward
    with h on (0, 0.9].  The deviation is the sup over bins of the
    difference of average densities; the threshold is 5 sqrt(B/N).
    """
    threshold = 5.0 * math.sqrt(bins / n)
    if map in ("R", "identity"):
        edges = np.linspace(0.0, 1.0, bins + 1)
        theo = np.diff(mu_cdf(edges)) / np.diff(edges)
        alpha = sample_mu(rng, n)
        image = r_map_float(alpha) if map == "R" else alpha
        emp = _hist_density(image, edges, n)
        dev = float(np.max(np.abs(emp - theo)))
        orbit_dev = None
        if map == "R":
            length = orbit_length or n
            x = float(sample_mu(rng))
            orbit = np.empty(length)
            for i in range(length):
                x = _r_scalar(x)
                if not 0.0 < x <= 1.0:  # float orbit hit an endpoint; restart
                    x = float(sample_mu(rng))
                orbit[i] = x
            orbit_dev = float(np.max(np.abs(_hist_density(orbit, edges, length) - theo)))
        return InvarianceReport(map, n, bins, dev, threshold, edges, emp, theo, orbit_dev)
    if map == "T":
        c = 10.0 / 11.0
        top = 0.9
        s = rng.random(n) * h_primitive(c)
        alpha = np.tanh(s / 2.0)
        image = t_map_float(alpha)
        edges = np.linspace(0.0, top, bins + 1)
        # normalise by the restricted mass so both sides integrate alike
        mass = h_primitive(c)
        emp = _hist_density(image, edges, n) * mass
        theo = np.diff(h_primitive(edges)) / np.diff(edges)
        dev = float(np.max(np.abs(emp - theo)) / mass)
        return InvarianceReport("T", n, bins, dev, threshold, edges, emp, theo)
    raise ValueError("map must be 'R', 'T' or 'identity'")

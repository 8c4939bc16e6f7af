"""Monte Carlo estimates of the joint law of (normalised denominator, window)
at renewal times, with convergence diagnostics across scales."""

from __future__ import annotations

import math
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction

import mpmath
import numpy as np
from scipy import stats

from .ecf import EcfStream, renewal_time
from .errors import EcfError, InsufficientDigits, PrecisionExhausted
from .reals import MuRandomReal

MAX_DISCARD_RATE = 0.01


def sample_rng(seed, i):
    """Independent generator for sample ``i``; does not depend on workers."""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(i,)))


def _extended_ratio(q, L) -> np.longdouble:
    with mpmath.workprec(80):
        L = Fraction(L)
        v = mpmath.mpf(q * L.denominator) / mpmath.mpf(L.numerator)
        return np.longdouble(mpmath.nstr(v, 22, strip_zeros=False))


@dataclass
class EmpiricalJointDistribution:
    """Ratio samples tagged with their symbol windows."""

    which: str
    L: Fraction
    N1: int
    N2: int
    ratios: np.ndarray
    windows: list
    indices: np.ndarray
    requested: int
    truncated: int = 0
    precision_failures: int = 0
    containment_violations: int | None = None
    seed: int | None = None
    extra: dict = field(default_factory=dict)

    @property
    def N(self) -> int:
        return len(self.ratios)

    def ratio_cdf(self, x) -> np.ndarray:
        r = np.sort(self.ratios.astype(float))
        return np.searchsorted(r, np.asarray(x, dtype=float), side="right") / len(r)

    def histogram(self, bins=200, lo=1.0, hi=10.0) -> tuple:
        counts, edges = np.histogram(self.ratios.astype(float), bins=bins, range=(lo, hi))
        return counts / self.N, edges

    def window_freqs(self, offset=None) -> dict:
        """Relative frequencies of windows, or of one offset j in (-N1, N2]."""
        if offset is None:
            keys = [tuple(str(s) for s in w) for w in self.windows]
        else:
            if not -self.N1 < offset <= self.N2:
                raise ValueError(f"offset must lie in ({-self.N1}, {self.N2}]")
            pos = offset + self.N1 - 1
            keys = [str(w[pos]) for w in self.windows]
        c = Counter(keys)
        n = len(keys)
        return {k: v / n for k, v in c.most_common()}

    def to_json(self, ratio_samples_path=None, top=20) -> dict:
        freqs = {
            str(j): dict(list(self.window_freqs(j).items())[:top])
            for j in range(-self.N1 + 1, self.N2 + 1)
        }
        return {
            "which": self.which,
            "L": str(self.L),
            "N": self.N,
            "requested": self.requested,
            "truncated": self.truncated,
            "precision_failures": self.precision_failures,
            "containment_violations": self.containment_violations,
            "ratio_samples_path": ratio_samples_path,
            "ratio_quantiles": {
                str(p): float(np.quantile(self.ratios.astype(float), p))
                for p in (0.1, 0.25, 0.5, 0.75, 0.9)
            },
            "median_index": float(np.median(self.indices)),
            "window_freqs": freqs,
        }


def _one_sample(args):
    seed, i, which, L, N1, N2, prec, check = args
    rng = sample_rng(seed, i)
    stream = EcfStream(MuRandomReal(rng, name=f"mu-sample[{seed}:{i}]"), precision_bits=prec)
    try:
        rec = renewal_time(stream, L, which, N1, N2)
        bad = None
        if check:
            t = rec if which == "T" else renewal_time(stream, L, "T")
            r = rec if which == "R" else renewal_time(stream, L, "R")
            bad = not (r.prev_q < t.q <= r.q)
    except PrecisionExhausted:
        return ("precision", None, None, None, None)
    except InsufficientDigits:
        return ("precision", None, None, None, None)
    return ("ok", rec.q, rec.n, rec.window, bad)


def simulate_renewal(which, L, N1, N2, samples, seed=0, workers=1, precision_bits=256,
                     check_containment=True, chunksize=256) -> EmpiricalJointDistribution:
    """Draw ``samples`` points alpha ~ mu and record the renewal statistic.

    ``which`` is ``T`` (q_{n_L}/L with Omega-window) or ``R``
    (hat q_{hat n_L}/L with Sigma-window).  Samples whose window would
    reach before index 1 are discarded and counted; samples whose digits
    cannot be certified are discarded and counted, and more than 1% of
    those aborts the run.
    """
    which = which.upper()
    if which not in ("T", "R"):
        raise ValueError("which must be 'T' or 'R'")
    L = Fraction(L)
    if L < 10:
        raise ValueError("L must be at least 10")
    if N1 < 1 or N2 < 1:
        raise ValueError("N1 and N2 must be at least 1")
    jobs = [(seed, i, which, L, N1, N2, precision_bits, check_containment) for i in range(samples)]
    if workers and workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_one_sample, jobs, chunksize=chunksize))
    else:
        results = [_one_sample(j) for j in jobs]
    qs, ns, windows = [], [], []
    truncated = failures = violations = 0
    for status, q, n, window, bad in results:
        if status != "ok":
            failures += 1
            continue
        if bad:
            violations += 1
        if window is None:
            truncated += 1
            continue
        qs.append(q)
        ns.append(n)
        windows.append(window)
    if failures > MAX_DISCARD_RATE * samples:
        raise EcfError(f"{failures} of {samples} samples failed certification (> 1%)")
    ratios = np.array([_extended_ratio(q, L) for q in qs], dtype=np.longdouble)
    return EmpiricalJointDistribution(
        which, L, N1, N2, ratios, windows, np.array(ns, dtype=np.int64), samples,
        truncated, failures, violations if check_containment else None, seed,
    )


def ks_distance(a: EmpiricalJointDistribution, b: EmpiricalJointDistribution) -> float:
    return float(stats.ks_2samp(a.ratios.astype(float), b.ratios.astype(float)).statistic)


def tv_distance(p: dict, q: dict) -> float:
    keys = set(p) | set(q)
    return 0.5 * sum(abs(p.get(k, 0.0) - q.get(k, 0.0)) for k in keys)


def convergence_diagnostic(dists) -> dict:
    """Pairwise KS distances of ratio marginals and TV distances of the
    per-offset window marginals (max over offsets)."""
    dists = list(dists)
    if len(dists) < 2:
        raise ValueError("need at least two distributions")
    n = len(dists)
    ks = np.zeros((n, n))
    tv = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            ks[i, j] = ks[j, i] = ks_distance(dists[i], dists[j])
            offsets = range(-min(dists[i].N1, dists[j].N1) + 1, min(dists[i].N2, dists[j].N2) + 1)
            tv[i, j] = tv[j, i] = max(
                tv_distance(dists[i].window_freqs(o), dists[j].window_freqs(o)) for o in offsets
            )
    return {"L": [str(d.L) for d in dists], "ks": ks.tolist(), "tv": tv.tolist()}


def scale_invariance_probe(which, L, lambdas, samples, seed=0, N1=2, N2=2, workers=1) -> list:
    """KS drift of the ratio marginal at lambda*L against lambda = 1.

    Common random numbers are used across lambda.  The error bar is the
    5% two-sample KS critical value 1.36 sqrt(2/N).
    """
    base = simulate_renewal(which, L, N1, N2, samples, seed, workers)
    out = []
    for lam in lambdas:
        lam = Fraction(lam)
        if not 1 <= lam <= 10:
            raise ValueError("lambda must lie in [1, 10]")
        d = base if lam == 1 else simulate_renewal(which, L * lam, N1, N2, samples, seed, workers)
        drift = 0.0 if lam == 1 else ks_distance(base, d)
        err = 1.36 * math.sqrt(1.0 / base.N + 1.0 / d.N)
        out.append({"lambda": float(lam), "drift": drift, "stderr": err})
    return out

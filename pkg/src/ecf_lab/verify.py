"""Property suite behind ``ecf-lab verify``: quick versions of the module
invariants, each returning (passed, detail)."""

from __future__ import annotations

import random
import warnings
from fractions import Fraction

import numpy as np
from scipy import integrate

from . import ecf, euclid, flow, measures, renewal
from .reals import MuRandomReal
from .symbols import EcfDigit, SigmaSymbol


def _random_rationals(rnd, n, qmax=10**6):
    out = []
    while len(out) < n:
        q = rnd.randint(2, qmax)
        p = rnd.randint(1, q)
        out.append(Fraction(p, q))
    return out


def check_partition(rng, size):
    bad = 0
    for q in range(2, size + 2):
        x = Fraction(int(rng.integers(1, q + 1)), q)
        d, tx = ecf.ecf_digit(x)
        lo = Fraction(1, 2 * d.k) if d.xi < 0 else Fraction(1, 2 * d.k + 1)
        hi = Fraction(1, 2 * d.k - 1) if d.xi < 0 else Fraction(1, 2 * d.k)
        if not (lo < x <= hi and 0 <= tx <= 1 and x == 1 / (2 * d.k + d.xi * tx)):
            bad += 1
    return bad == 0, f"{size} grid points, {bad} failures"


def check_convergents(rng, size):
    rnd = random.Random(int(rng.integers(2**32)))
    bad = 0
    for x in _random_rationals(rnd, size):
        digits, _ = ecf.ecf_expansion(x)
        convs = ecf.convergents(digits, min(len(digits), 50))
        pp, qq = 0, 1  # p_0, q_0
        for c in convs:
            n = c.index
            if not (abs(x - Fraction(c.p, c.q)) <= Fraction(1, c.q) and c.q >= n + 1
                    and abs(c.p * qq - pp * c.q) == 1):
                bad += 1
            pp, qq = c.p, c.q
    return bad == 0, f"{size} rationals, {bad} violations"


def check_hat_q_growth(rng, size):
    bad = 0
    for _ in range(size):
        s = ecf.EcfStream(MuRandomReal(rng), precision_bits=512)
        syms = s.ensure_symbols(31)
        nu, _ = ecf.nu_indices(syms, 30)
        convs = ecf.convergents(ecf.sigma_decode(syms), nu[30])
        for n in range(1, 31):
            if convs[nu[n] - 1].q ** 3 < 3**n:
                bad += 1
    return bad == 0, f"{size} mu-samples, n <= 30, {bad} violations"


def check_coding(rng, size):
    bad = 0
    for _ in range(size):
        syms = []
        for _ in range(6):
            h, m = int(rng.geometric(0.5)) - 1, int(rng.integers(1, 6))
            sign = 1 if m == 1 or rng.random() < 0.5 else -1
            syms.append(SigmaSymbol(h, m, sign))
        digits = ecf.sigma_decode(syms)
        back, rest = ecf.sigma_encode(digits)
        if back != syms or rest:
            bad += 1
        x = ecf.evaluate(digits + [EcfDigit(1, 1)])
        sym, rx = ecf.jump_map(x)
        if sym != syms[0] or rx != ecf.evaluate(digits[syms[0].length:] + [EcfDigit(1, 1)]):
            bad += 1
    return bad == 0, f"{size} words, {bad} failures"


def check_backward(rng, size):
    rnd = random.Random(int(rng.integers(2**32)))
    bad = 0
    for _ in range(size):
        m = rnd.randint(2, 30)
        digits = [EcfDigit(rnd.randint(1, 5), rnd.choice((1, -1))) for _ in range(m)]
        convs = ecf.convergents(digits, m)
        if ecf.backward_evaluate(digits, m, "q") != Fraction(convs[m - 2].q, convs[m - 1].q):
            bad += 1
        if ecf.backward_evaluate(digits, m, "p") != Fraction(convs[m - 2].p, convs[m - 1].p):
            bad += 1
        g = Fraction(rnd.randint(-30, 90), 90)
        beta = ecf.mobius_backward(convs[m - 2], convs[m - 1], g)
        if beta != ecf.forward_reversed(digits, g):
            bad += 1
    return bad == 0, f"{size} words, {bad} failures"


def check_euclid(rng, size):
    rnd = random.Random(int(rng.integers(2**32)))
    bad = 0
    for x in _random_rationals(rnd, size):
        a = euclid.euclid_expand(x)
        d, status = euclid.euclid_to_ecf(a, with_status=True)
        e, status2 = ecf.ecf_expansion(x)
        tail = 1 if status is ecf.Status.PERIODIC_TAIL else 0
        if d != e or status != status2 or (d and ecf.evaluate(d, tail) != x):
            bad += 1
    return bad == 0, f"{size} rationals, {bad} mismatches"


def check_density(rng, size):
    with warnings.catch_warnings():
        # quad flags roundoff once it is already at machine precision
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        val, _ = integrate.quad(measures.density_f, 0, 1, epsabs=1e-14, epsrel=1e-14)
    u = np.linspace(0, 1, size)
    inv = float(np.max(np.abs(measures.mu_cdf(measures.mu_inverse_cdf(u)) - u)))
    ok = abs(val - 1) < 1e-12 and inv < 1e-12
    return ok, f"integral-1 = {val - 1:.2e}, max |F(F^-1(u)) - u| = {inv:.2e}"


def check_cylinders(rng, size):
    bad = 0
    for h in range(size):
        for m in range(1, size + 1):
            for sign in (1, -1):
                if m == 1 and sign == -1:
                    continue
                if measures.cylinder_measure([(h, m, sign)]) > measures.remark1_bound(h, m):
                    bad += 1
    parent = [(0, 2, 1)]
    lo, hi = measures.cylinder_interval(parent)
    total = sum(measures.cylinder_measure(parent + [(h, m, s)])
                for h in range(60) for m in range(1, 60) for s in (1, -1)
                if not (m == 1 and s == -1))
    cover = total / measures.cylinder_measure(parent)
    ok = bad == 0 and 0.97 < cover <= 1 + 1e-9
    return ok, f"h, m < {size}: {bad} bound violations; children cover {cover:.4f} of parent"


def check_psi(rng, size):
    worst = 0.0
    neg = 0
    for _ in range(size):
        w = flow.sample_biword(rng, window=4, bits=256)
        r = flow.psi(w)
        if r.total <= 0:
            neg += 1
        if w.future.symbol(1).h < 5000:
            worst = max(worst, abs(r.total - flow.psi_direct(w)))
        worst = max(worst, abs(r.total - flow.psi_mobius(w)))
    return neg == 0 and worst < 1e-9, f"{size} points, max route gap {worst:.2e}"


def check_flow_group(rng, size):
    bad = 0
    for _ in range(size):
        w = flow.sample_biword(rng, window=20, bits=512)
        s, t = float(rng.uniform(0, 8)), float(rng.uniform(-4, 8))
        a = flow.flow(w, 0.0, s + t)
        p = flow.flow(w, 0.0, s)
        b = flow.flow(p.base, p.height, t)
        if a.base.shift != b.base.shift or abs(a.height - b.height) > 1e-9:
            bad += 1
    return bad == 0, f"{size} triples, {bad} failures"


def check_renewal(rng, size):
    seed = int(rng.integers(2**32))
    a = renewal.simulate_renewal("R", 1000, 2, 2, size, seed=seed)
    b = renewal.simulate_renewal("R", 1000, 2, 2, size, seed=seed, check_containment=False)
    forbidden = sum(1 for w in a.windows if w[1].m == 1 and w[1].sign == -1)
    ok = (a.containment_violations == 0 and bool(np.all(a.ratios > 1)) and forbidden == 0
          and np.array_equal(a.ratios, b.ratios))
    return ok, (f"{size} samples: {a.containment_violations} containment violations, "
                f"min ratio {float(a.ratios.min()):.4f}, reproducible {np.array_equal(a.ratios, b.ratios)}")


CHECKS = [
    ("ecf_core: partition and identity", check_partition, 2000),
    ("ecf_core: convergent estimates", check_convergents, 300),
    ("ecf_core: hat q_n >= 3^(n/3)", check_hat_q_growth, 30),
    ("ecf_core: Sigma coding and R", check_coding, 300),
    ("ecf_core: backward convergents", check_backward, 300),
    ("euclid_convert: rewriting", check_euclid, 500),
    ("measures: density and CDF", check_density, 10**4),
    ("measures: cylinders", check_cylinders, 20),
    ("special_flow: psi routes agree", check_psi, 300),
    ("special_flow: group property", check_flow_group, 100),
    ("renewal_stats: containment", check_renewal, 1000),
]


def run_suite(seed=0, scale=1.0) -> list:
    rng = np.random.default_rng(seed)
    rows = []
    for name, fn, size in CHECKS:
        try:
            ok, detail = fn(rng, max(1, int(size * scale)))
        except Exception as exc:  # report, don't crash the table
            ok, detail = False, f"error: {exc!r}"
        rows.append((name, bool(ok), detail))
    return rows


def format_table(rows) -> str:
    width = max(len(r[0]) for r in rows)
    lines = [f"{'check'.ljust(width)}  result  detail"]
    for name, ok, detail in rows:
        lines.append(f"{name.ljust(width)}  {'PASS' if ok else 'FAIL'}    {detail}")
    return "\n".join(lines)

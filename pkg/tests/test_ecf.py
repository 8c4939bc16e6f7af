import math
import random
from fractions import Fraction

import mpmath
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ecf_lab.ecf import (
    DenominatorTracker,
    EcfStream,
    Status,
    backward_evaluate,
    convergents,
    ecf_digit,
    ecf_expand,
    ecf_expansion,
    evaluate,
    forward_reversed,
    hat_q,
    jump_map,
    mobius_backward,
    nu_indices,
    renewal_time,
    sigma_decode,
    sigma_encode,
    tau,
)
from ecf_lab.errors import DomainError, InsufficientDigits, PrecisionExhausted, UnboundedPrefix
from ecf_lab.reals import MuRandomReal, parse_value
from ecf_lab.symbols import OMEGA_BAR, EcfDigit, SigmaSymbol, parse_sigma

rationals = st.integers(2, 10**6).flatmap(
    lambda q: st.integers(1, q).map(lambda p: Fraction(p, q)))

digit_st = st.builds(EcfDigit, st.integers(1, 9), st.sampled_from([1, -1]))


def test_partition_endpoints():
    # 1/(2k) closes B(k,+1) on the right and opens B(k,-1) on the left
    assert ecf_digit(Fraction(1, 2)) == (EcfDigit(1, 1), 0)
    assert ecf_digit(Fraction(1, 4)) == (EcfDigit(2, 1), 0)
    assert ecf_digit(Fraction(1, 3)) == (EcfDigit(2, -1), 1)
    assert ecf_digit(Fraction(1)) == (EcfDigit(1, -1), 1)


def test_digit_from_interval():
    d, _ = ecf_digit((Fraction(3, 10), Fraction(32, 100)))
    assert d == EcfDigit(2, -1)
    with pytest.raises(PrecisionExhausted):
        ecf_digit((Fraction(24, 100), Fraction(26, 100)))


@given(rationals)
def test_one_step_identity(x):
    d, tx = ecf_digit(x)
    assert 0 <= tx <= 1
    assert x == 1 / (2 * d.k + d.xi * tx)


def test_domain_errors():
    for bad in (0, Fraction(-1, 2), Fraction(3, 2)):
        with pytest.raises(DomainError):
            ecf_digit(bad)
        with pytest.raises(DomainError):
            ecf_expansion(bad)


def test_small_expansions():
    assert ecf_expansion(Fraction(2, 5)) == ([EcfDigit(1, 1), EcfDigit(1, 1)], Status.TERMINATED)
    digits, status = ecf_expansion(Fraction(1, 3))
    assert digits == [EcfDigit(2, -1)] and status is Status.PERIODIC_TAIL
    assert evaluate(digits, tail=1) == Fraction(1, 3)
    assert ecf_expansion(Fraction(1)) == ([], Status.PERIODIC_TAIL)


@given(rationals)
@settings(max_examples=300)
def test_expansion_evaluates_back(x):
    digits, status = ecf_expansion(x)
    tail = 1 if status is Status.PERIODIC_TAIL else 0
    assert evaluate(digits, tail) == x


def test_golden_vector_pi():
    s = EcfStream(parse_value("pi-3"))
    syms = s.ensure_symbols(9)
    assert [str(v) for v in syms] == ["4-", "14x1+", "146+", "1x1+", "1+", "3x1+", "7+", "1+", "1x2-"]
    nu, theta = nu_indices(syms, 8)
    assert nu == [1, 2, 17, 18, 20, 21, 25, 26, 27]
    assert theta == [1, 1, 15, 1, 2, 1, 4, 1, 1]


def test_pi_cross_check_mpmath():
    digits = ecf_expand(parse_value("pi-3"), 30)
    with mpmath.workprec(400):
        x = mpmath.pi - 3
        for d in digits:
            inv = 1 / x
            s = int(mpmath.floor(inv))
            k = (s + 1) // 2
            assert d == EcfDigit(k, 1 if s % 2 == 0 else -1)
            x = d.xi * (inv - 2 * k)


def test_stream_exhausts_precision():
    s = EcfStream(parse_value("pi-3"), precision_bits=128, max_precision_bits=256)
    with pytest.raises(PrecisionExhausted):
        ecf_expand(s, 10**4)


def test_stream_unresolvable_point():
    # an interval source that straddles 1/2 forever
    class Straddle:
        name = "half"

        def bounds(self, prec):
            eps = Fraction(1, 2**prec)
            return Fraction(1, 2) - eps, Fraction(1, 2) + eps

    src = Straddle()
    s = EcfStream(src, precision_bits=128, max_precision_bits=512)
    with pytest.raises(PrecisionExhausted):
        s.next_digit()


def test_stream_digits_are_lazy(rng):
    s = EcfStream(MuRandomReal(rng))
    a = ecf_expand(s, 20)
    b = ecf_expand(s, 20)
    assert len(a) == len(b) == 20
    assert s.emitted == a + b


def test_bar_run_jump_matches_digit_walk():
    # x = 1 - 1/10^4: long run of (1,-1) before anything else
    x = 1 - Fraction(7, 10**4 + 1)
    digits, _ = ecf_expansion(x)
    walk = []
    y = x
    for _ in range(len(digits)):
        d, y = ecf_digit(y)
        walk.append(d)
        if y == 0:
            break
    assert walk == digits
    assert tau(digits) == next(i for i, d in enumerate(walk) if not d.is_bar)


def test_tau_edge_cases():
    assert tau([EcfDigit(3, 1)]) == 0
    assert tau([OMEGA_BAR, OMEGA_BAR, EcfDigit(2, -1)]) == 2
    with pytest.raises(InsufficientDigits):
        tau([OMEGA_BAR, OMEGA_BAR])
    with pytest.raises(UnboundedPrefix):
        tau([OMEGA_BAR] * 50, scan_limit=10)


@given(st.lists(digit_st, min_size=1, max_size=40))
def test_sigma_round_trip(digits):
    syms, rest = sigma_encode(digits)
    assert sigma_decode(syms) + list(rest) == list(digits)
    assert all(not (s.m == 1 and s.sign == -1) for s in syms)


@given(st.lists(digit_st, min_size=2, max_size=40))
def test_convergents_matrix_product(digits):
    # p_n/q_n from the product of [[0,1],[xi,2k]] matrices
    convs = convergents(digits, len(digits))
    a, b, c, d = 1, 0, 0, 1
    for dig in digits:
        a, b, c, d = b * dig.xi, a + 2 * dig.k * b, d * dig.xi, c + 2 * dig.k * d
    assert (convs[-1].p, convs[-1].q) == (b, d)
    assert Fraction(convs[-1].p, convs[-1].q) == evaluate(digits)


@given(rationals)
@settings(max_examples=300)
def test_convergent_estimates(x):
    digits, _ = ecf_expansion(x)
    pp, qq = 0, 1
    for c in convergents(digits, min(len(digits), 50)):
        assert abs(x - Fraction(c.p, c.q)) <= Fraction(1, c.q)
        assert c.q >= c.index + 1
        assert abs(c.p * qq - pp * c.q) == 1
        pp, qq = c.p, c.q


def test_hat_q_conventions():
    syms = parse_sigma("4- 14x1+ 146+ 1x1+")
    assert hat_q(syms, 0) == 1
    # nu_1 = 2, so hat q_1 = q_2
    assert hat_q(syms, 1) == convergents(sigma_decode(syms), 2)[1].q == 15
    assert hat_q(syms, 2) == convergents(sigma_decode(syms), 17)[16].q
    with pytest.raises(InsufficientDigits):
        hat_q(syms, 4)


def test_hat_q_lower_bound_random(rng):
    for _ in range(20):
        s = EcfStream(MuRandomReal(rng), precision_bits=512)
        syms = s.ensure_symbols(41)
        for n in range(1, 41):
            q = hat_q(syms, n)
            assert q**3 >= 3**n


def test_hat_q_upper_growth(rng):
    # log hat q_n / n stays bounded along mu-typical words
    ratios = []
    for _ in range(40):
        s = EcfStream(MuRandomReal(rng), precision_bits=1024)
        syms = s.ensure_symbols(101)
        ratios.append(math.log(hat_q(syms, 100)) / 100)
    assert max(ratios) < 10
    assert min(ratios) > math.log(3) / 3


def test_denominator_tracker_bars():
    tr = DenominatorTracker()
    tr.push_digit(3, 1)
    slow = tr.copy()
    for _ in range(25):
        slow.push_digit(1, -1)
    tr.push_bars(25)
    assert (tr.p1, tr.q1, tr.p0, tr.q0) == (slow.p1, slow.q1, slow.p0, slow.q0)


def test_denominator_tracker_crossing():
    tr = DenominatorTracker()
    tr.push_digit(2, 1)
    start = tr.copy()
    hit = tr.push_bars(1000, L=500)
    # walk to find the first q exceeding 500
    walk = start.copy()
    for i in range(1, 1001):
        walk.push_digit(1, -1)
        if walk.q1 > 500:
            break
    assert hit == (start.index + i, walk.q1, walk.q0)


@given(st.lists(digit_st, min_size=2, max_size=30), st.fractions(Fraction(-1, 3), 1))
def test_backward_lemma_and_mobius(digits, gamma):
    m = len(digits)
    convs = convergents(digits, m)
    assert backward_evaluate(digits, m, "q") == Fraction(convs[m - 2].q, convs[m - 1].q)
    assert backward_evaluate(digits, m, "p") == Fraction(convs[m - 2].p, convs[m - 1].p) \
        if convs[m - 1].p else True
    assert mobius_backward(convs[m - 2], convs[m - 1], gamma) == forward_reversed(digits, gamma)


def test_jump_map_matches_shift():
    x = Fraction(123457, 300001)
    digits, status = ecf_expansion(x)
    sym, rx = jump_map(x)
    tail = 1 if status is Status.PERIODIC_TAIL else 0
    assert sym.digits() == tuple(digits[: sym.length])
    assert rx == evaluate(digits[sym.length:], tail) if digits[sym.length:] else True


def test_renewal_time_definitions(rng):
    for _ in range(50):
        s = EcfStream(MuRandomReal(rng), precision_bits=512)
        t = renewal_time(s, 1000, "T")
        r = renewal_time(s, 1000, "R")
        assert t.prev_q <= 1000 < t.q
        assert r.prev_q <= 1000 < r.q
        assert r.prev_q < t.q <= r.q
        if r.window is not None:
            assert len(r.window) == 2
            assert not (r.window[0].m == 1 and r.window[0].sign == -1)


def test_renewal_time_exact_word():
    syms = parse_sigma("4- 14x1+ 146+ 1x1+ 1+ 3x1+ 7+ 1+ 1x2-")
    rec = renewal_time(syms, 100, "R")
    nu, _ = nu_indices(syms, 8)
    qs = [hat_q(syms, n) for n in range(0, 8)]
    n = next(i for i, q in enumerate(qs) if q > 100)
    assert rec.n == n and rec.q == qs[n]


def test_renewal_window_truncation():
    syms = parse_sigma("4- 14x1+ 146+ 1x1+ 1+ 3x1+ 7+ 1+ 1x2-")
    # hat q_1 = 8 > 5, so sigma_0 would be needed
    rec = renewal_time(syms, 5, "R", N1=2, N2=1)
    assert rec.window is None

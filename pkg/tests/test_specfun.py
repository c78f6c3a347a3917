from __future__ import annotations

import math
from functools import reduce

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from zetaspec.errors import CapacityError, QuadratureError, ValidationError
from zetaspec.specfun import (
    EULER_GAMMA,
    MAX_SIEVE_LIMIT,
    integrate_adaptive,
    nth_prime,
    primes_up_to,
    re_digamma_quarter_line,
    sieve_mangoldt,
)


def lcm_upto(x: int) -> int:
    return reduce(lambda a, b: a * b // math.gcd(a, b), range(1, x + 1), 1)


def smallest_factor(n: int) -> int:
    for p in range(2, n + 1):
        if n % p == 0:
            return p
    return n


def mangoldt_by_factoring(n: int) -> float:
    p = smallest_factor(n)
    while n % p == 0:
        n //= p
    return math.log(p) if n == 1 else 0.0


# -- sieve ------------------------------------------------------------------


@pytest.mark.parametrize("limit", [-3, 0, 1])
def test_sieve_below_two_is_empty(limit):
    assert len(sieve_mangoldt(limit)) == 0


def test_sieve_to_ten():
    table = sieve_mangoldt(10)
    ln = math.log
    expected = [(2, ln(2)), (3, ln(3)), (4, ln(2)), (5, ln(5)), (7, ln(7)), (8, ln(2)), (9, ln(3))]
    assert [n for n, _ in table.entries] == [n for n, _ in expected]
    assert np.allclose([w for _, w in table.entries], [w for _, w in expected], rtol=0, atol=1e-15)
    assert abs(table.chebyshev_psi(10) - math.log(2520)) <= 1e-12


@pytest.mark.parametrize("x", range(1, 31))
def test_chebyshev_psi_matches_lcm(x):
    assert abs(sieve_mangoldt(30).chebyshev_psi(x) - math.log(lcm_upto(x))) <= 1e-12


def test_sieve_matches_factorization():
    table = dict(sieve_mangoldt(500).entries)
    for n in range(2, 501):
        assert table.get(n, 0.0) == pytest.approx(mangoldt_by_factoring(n), abs=1e-15)


def test_sieve_entries_strictly_ascending_and_prime_powers():
    table = sieve_mangoldt(5000)
    assert np.all(np.diff(table.n) > 0)
    for n, w in table.entries:
        p = round(math.exp(w))
        m = round(math.log(n) / w)
        assert p**m == n and smallest_factor(p) == p


def test_below_drops_boundary():
    table = sieve_mangoldt(100)
    assert list(table.below(math.log(8)).n) == [2, 3, 4, 5, 7]
    assert len(table.below(0.5)) == 0


def test_sieve_capacity():
    with pytest.raises(CapacityError):
        primes_up_to(MAX_SIEVE_LIMIT + 1)


@pytest.mark.parametrize("index,prime", [(1, 2), (2, 3), (5, 11), (6, 13), (25, 97), (100, 541), (1000, 7919)])
def test_nth_prime(index, prime):
    assert nth_prime(index) == prime


def test_nth_prime_errors():
    with pytest.raises(ValidationError):
        nth_prime(0)
    with pytest.raises(CapacityError):
        nth_prime(20_000_000)


# -- digamma ----------------------------------------------------------------


def test_digamma_quarter_closed_form():
    closed = -EULER_GAMMA - math.pi / 2 - 3 * math.log(2)
    assert abs(re_digamma_quarter_line(0.0) - closed) <= 1e-12
    assert closed == pytest.approx(-4.2274535, abs=1e-7)


def test_digamma_recurrence():
    # psi(5/4) - psi(1/4) = 4; psi(5/4) is Re psi on the same line shifted by one
    from zetaspec.specfun import digamma_complex

    assert abs(digamma_complex(1.25).real - re_digamma_quarter_line(0.0) - 4.0) <= 1e-12


def test_digamma_at_100_near_log():
    assert abs(re_digamma_quarter_line(100.0) - math.log(abs(0.25 + 50j))) <= 1e-3
    assert re_digamma_quarter_line(100.0) == pytest.approx(3.912, abs=1e-3)


@given(st.floats(min_value=-1e4, max_value=1e4, allow_nan=False))
def test_digamma_even(t):
    assert re_digamma_quarter_line(t) == re_digamma_quarter_line(-t)


@settings(max_examples=60, deadline=None)
@given(st.floats(min_value=0.0, max_value=2000.0, allow_nan=False))
def test_digamma_against_mpmath(t):
    ref = float(mpmath.re(mpmath.digamma(mpmath.mpc(0.25, t / 2))))
    assert abs(re_digamma_quarter_line(t) - ref) <= 1e-12


def test_digamma_vectorized():
    t = np.linspace(-50, 50, 11)
    v = re_digamma_quarter_line(t)
    assert v.shape == t.shape
    assert np.allclose(v, [re_digamma_quarter_line(x) for x in t], rtol=0, atol=0)


# -- quadrature -------------------------------------------------------------


def test_quad_constant_exact():
    assert integrate_adaptive(lambda x: np.ones_like(x), 0, 1).value == 1.0


def test_quad_polynomial():
    r = integrate_adaptive(lambda x: x * x, 0, 1, tol=1e-12)
    assert abs(r.value - 1 / 3) <= 1e-12
    assert r.error_estimate >= 0


def test_quad_oscillatory_with_phase_nodes():
    nodes = np.arange(1, 50) * math.pi / 50
    r = integrate_adaptive(lambda x: np.sin(50 * x), 0, math.pi, tol=1e-10, points=nodes)
    assert abs(r.value - (1 - math.cos(50 * math.pi)) / 50) <= 1e-10


@settings(max_examples=40, deadline=None)
@given(
    st.floats(min_value=-3, max_value=3),
    st.floats(min_value=0.1, max_value=4),
    st.floats(min_value=0.05, max_value=0.95),
)
def test_quad_split_invariance(a, width, frac):
    b = a + width
    c = a + frac * width

    def f(x):
        return np.exp(np.sin(3 * x)) / (1 + x * x)

    whole = integrate_adaptive(f, a, b, tol=1e-11)
    left = integrate_adaptive(f, a, c, tol=1e-11)
    right = integrate_adaptive(f, c, b, tol=1e-11)
    slack = whole.error_estimate + left.error_estimate + right.error_estimate + 1e-14
    assert abs(whole.value - (left.value + right.value)) <= max(slack, 3e-11)


def test_quad_nonconvergence_reports_partial():
    with pytest.raises(QuadratureError) as info:
        integrate_adaptive(lambda x: np.sign(x - 0.3141), 0, 1, tol=1e-15, max_subdivisions=5)
    partial = info.value.partial
    assert partial.error_estimate > 1e-15
    assert abs(partial.value - (1 - 0.3141 - 0.3141)) < 0.1


@pytest.mark.parametrize("a,b,tol", [(1, 1, 1e-8), (2, 1, 1e-8), (0, 1, 0.0)])
def test_quad_bad_arguments(a, b, tol):
    with pytest.raises(ValidationError):
        integrate_adaptive(lambda x: x, a, b, tol=tol)

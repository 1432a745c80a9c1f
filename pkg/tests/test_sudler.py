import math
import random

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sudlercert.contfrac import EventuallyPeriodicCF, delta_exact, denominators, ostrowski_expand, parse_cf
from sudlercert.sudler import (
    H_limit,
    H_limit_grid,
    WorkBudgetError,
    decompose_check,
    epsilon_shift,
    frac_multiples,
    ostrowski_sum,
    perturbed_product,
    perturbed_product_grid,
    sudler_product,
)

PHI = parse_cf("[0;(1)]")
SQRT2 = parse_cf("[0;(2)]")
A123 = parse_cf("[0;(1,2,3)]")

digit = st.integers(1, 3)


@st.composite
def cfs(draw):
    prefix = draw(st.lists(digit, max_size=4))
    period = draw(st.lists(digit, min_size=1, max_size=3))
    return EventuallyPeriodicCF(0, tuple(prefix), tuple(period))


def naive_product(x: float, N: int) -> float:
    return math.prod(2 * abs(math.sin(math.pi * r * x)) for r in range(1, N + 1))


# ---------------------------------------------------------------- products

def test_product_examples():
    assert sudler_product(PHI, 0) == 1.0
    assert sudler_product(PHI, 1) == pytest.approx(2 * math.sin(math.pi * 0.6180339887498949), rel=1e-14)
    assert sudler_product(PHI, 1) == pytest.approx(1.8640, abs=1e-4)
    assert sudler_product(EventuallyPeriodicCF(0, (2,)), 2) == 0.0


@given(cfs(), st.integers(1, 300))
def test_product_matches_naive(cf, N):
    assert sudler_product(cf, N) == pytest.approx(naive_product(float(cf), N), rel=1e-9)


@given(cfs(), st.integers(1, 5000))
def test_fractional_parts_centred(cf, r):
    x = frac_multiples(cf, r, r + 1)[0]
    assert -0.5 <= x < 0.5
    v = r * float(cf)
    assert abs(x - (v - round(v))) < 1e-9


def test_frac_multiples_limit():
    with pytest.raises(WorkBudgetError):
        frac_multiples(PHI, 1, 1 << 32)


def test_golden_products_near_constant():
    qs = denominators(PHI, 30)
    for n in range(24, 31):
        assert sudler_product(PHI, qs[n]) == pytest.approx(2.407, abs=0.01)


def test_perturbed_at_zero_is_plain_product():
    # q_9(phi) = 55 with q_0 = q_1 = 1
    assert perturbed_product(PHI, 9, 0.0) == sudler_product(PHI, 55)
    grid = perturbed_product_grid(PHI, 9, [0.0])[0]
    assert grid == pytest.approx(sudler_product(PHI, 55), rel=1e-12)


def test_perturbed_naive():
    q = denominators(SQRT2, 6)[6]
    eps = 0.17
    x = float(SQRT2)
    direct = math.prod(2 * abs(math.sin(math.pi * (r * x + eps / q))) for r in range(1, q + 1))
    assert perturbed_product(SQRT2, 6, eps) == pytest.approx(direct, rel=1e-9)


def test_perturbed_budget():
    with pytest.raises(WorkBudgetError):
        perturbed_product_grid(A123, 20, [0.0, 0.1], work_budget=10**6)


# ---------------------------------------------------------------- decomposition

def test_epsilon_shift_examples():
    qs = denominators(PHI, 5)
    assert epsilon_shift(PHI, qs[5], 5, 0) == 0.0
    N = qs[3] + qs[1]
    assert epsilon_shift(PHI, N, 3, 0) == 0.0
    # j = 2 carries the sign (-1)^2, so the shift is +delta_3
    assert epsilon_shift(PHI, N, 1, 0) == pytest.approx(float(delta_exact(PHI, 3)), rel=1e-14)


def test_epsilon_shift_range_error():
    with pytest.raises(IndexError):
        epsilon_shift(PHI, 4, 9, 0)


@pytest.mark.parametrize("cf,N", [(PHI, 12), (SQRT2, 17), (A123, 99999)])
def test_decomposition_examples(cf, N):
    assert decompose_check(cf, N).rel_error < 1e-9


def test_decomposition_of_denominator_single_factor():
    q = denominators(A123, 8)[8]
    d = ostrowski_expand(q, A123).digits
    assert d.count(0) == len(d) - 1
    r = decompose_check(A123, q)
    assert r.rhs == pytest.approx(perturbed_product(A123, 8, 0.0), rel=1e-12)


@settings(max_examples=40, deadline=None)
@given(cfs(), st.integers(1, 3000))
def test_epsilon_range_and_sign_rule(cf, N):
    d = ostrowski_expand(N, cf).digits
    top = len(d) - 1
    for i, b in enumerate(d):
        if b == 0:
            continue
        q = denominators(cf, i)[i]
        lam = q * float(delta_exact(cf, i))
        lam1 = q * float(delta_exact(cf, i + 1))
        for t in range(b):
            e = epsilon_shift(cf, N, i, t, d)
            assert -lam + lam1 - 1e-12 <= e <= (cf.digit(i + 1) - 1) * lam + lam1 + 1e-12
        # eps_{i,0} > 0 iff the first nonzero higher digit sits an even distance away
        higher = [r for r in range(1, top - i + 1) if d[i + r] > 0]
        e0 = epsilon_shift(cf, N, i, 0, d)
        if higher:
            assert (e0 > 0) == (higher[0] % 2 == 0)
        else:
            assert e0 == 0.0


def test_decomposition_random_pairs():
    rng = random.Random(7)
    for _ in range(25):
        cf = EventuallyPeriodicCF(0, tuple(rng.choice((1, 2, 3)) for _ in range(rng.randint(0, 3))),
                                  tuple(rng.choice((1, 2, 3)) for _ in range(rng.randint(1, 3))))
        N = rng.randint(1, 10**5)
        assert decompose_check(cf, N).rel_error < 1e-9


# ---------------------------------------------------------------- H_k

def test_hk_vanishes_at_minus_lambda():
    q = denominators(A123, 9)[9]
    lam = q * float(delta_exact(A123, 9))
    assert H_limit(A123, 9, -lam).value == pytest.approx(0.0, abs=1e-12)


def test_hk_golden():
    r = H_limit(PHI, 25, 0.0)
    assert r.value == pytest.approx(2.407, abs=0.01)
    assert r.truncation == denominators(PHI, 25)[25] // 2


def test_hk_close_to_perturbed():
    eps = [-0.3, 0.0, 0.2, 0.3, 0.6]
    P = perturbed_product_grid(A123, 20, eps)
    H = H_limit_grid(A123, 20, eps)
    assert np.max(np.abs(P - H)) < 0.02


def test_hk_single_matches_grid():
    assert H_limit(A123, 12, 0.1).value == pytest.approx(H_limit_grid(A123, 12, [0.3, 0.1])[1], rel=1e-13)


# ---------------------------------------------------------------- Ostrowski sums

def test_ostrowski_sum_single_term():
    x = float(PHI)
    assert ostrowski_sum(PHI, 1) == pytest.approx(0.5 - (x % 1), abs=1e-15)


def test_ostrowski_sum_bound_golden():
    assert abs(ostrowski_sum(PHI, 20)) <= 1.5 * math.log(20)


def test_ostrowski_sum_rational_bruteforce():
    from fractions import Fraction

    cf = EventuallyPeriodicCF(0, (2, 1, 3))
    x = cf.exact.as_fraction()
    brute = sum(Fraction(1, 2) - (n * x) % 1 for n in range(1, 51))
    assert ostrowski_sum(cf, 50) == pytest.approx(float(brute), abs=1e-12)


@settings(max_examples=30)
@given(cfs(), st.integers(11, 4000))
def test_ostrowski_sum_log_bound(cf, ell):
    amax = max(cf.prefix + cf.period)
    assert abs(ostrowski_sum(cf, ell)) <= 1.5 * math.log(ell) * amax

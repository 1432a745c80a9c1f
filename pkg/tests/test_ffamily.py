import math
import random
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sudlercert.contfrac import EventuallyPeriodicCF, parse_cf
from sudlercert.ffamily import (
    GRID_STEP,
    FULL_PARAMS,
    SMOKE_PARAMS,
    DomainError,
    FParams,
    F_eval,
    F_table,
    W_algorithm,
    W_algorithm_left,
    build_family,
    build_ffunction,
    e_n,
    f_infinity,
    f_n,
    g_values,
    w_est,
    w_minmax,
)
from sudlercert.pattern import N_PATTERNS, Pattern, cf_max, cf_max_exact, cf_min, cf_min_exact, pattern_bounds
from sudlercert.sudler import H_limit_grid, ostrowski_sum

PHI = parse_cf("[0;(1)]")
GRID = np.arange(-1000, 1001) / 1000
patterns = st.builds(lambda i: Pattern.from_index(i), st.integers(0, N_PATTERNS - 1))


def brute_w(ell, x, y):
    # literal per-term definition with exact rationals
    wmin = wmax = Fraction(0)
    for n in range(1, ell + 1):
        fx, fy = math.floor(n * x), math.floor(n * y)
        same = fx == fy
        wmin += (1 - (n * y - fy)) * same - Fraction(1, 2)
        wmax += Fraction(1, 2) - (n * x - fx) * same
    return wmin, wmax


# ---------------------------------------------------------------- params

def test_params_validation():
    with pytest.raises(ValueError):
        FParams(9, 100, 5)
    with pytest.raises(ValueError):
        FParams(20, 21, 5)
    with pytest.raises(ValueError):
        FParams(20, 100, 0)
    assert FULL_PARAMS.as_dict() == {"n0": 20, "T": 10000, "m": 40}


# ---------------------------------------------------------------- w sums

def test_w_minmax_hand_example():
    wmin, wmax = w_minmax(1, Fraction(1, 5), Fraction(3, 10))
    assert wmin == pytest.approx(0.2, abs=1e-15)
    assert wmax == pytest.approx(0.3, abs=1e-15)


def test_w_minmax_degenerate_is_ostrowski_sum():
    for ell in (1, 7, 50, 333):
        wmin, wmax = w_minmax(ell, PHI, PHI)
        assert wmin == pytest.approx(wmax, abs=1e-12)
        assert wmin == pytest.approx(ostrowski_sum(PHI, ell), abs=1e-9)


def test_w_minmax_order_error():
    with pytest.raises(ValueError):
        w_minmax(5, Fraction(1, 2), Fraction(1, 3))


@settings(max_examples=40)
@given(st.integers(1, 400), st.fractions(0, 1, max_denominator=997), st.fractions(0, 1, max_denominator=997))
def test_w_minmax_matches_brute_force(ell, x, y):
    x, y = min(x, y), max(x, y)
    wmin, wmax = w_minmax(ell, x, y)
    bmin, bmax = brute_w(ell, x, y)
    assert wmin == pytest.approx(float(bmin), abs=1e-9)
    assert wmax == pytest.approx(float(bmax), abs=1e-9)


def test_sandwich_random_triples():
    rng = random.Random(3)
    for _ in range(20):
        x = Fraction(rng.randrange(10**6), 10**6)
        y = x + Fraction(rng.randrange(1, 5 * 10**4), 10**6)
        y = min(y, Fraction(1))
        z = x + (y - x) * Fraction(rng.randrange(1001), 1000)
        ell = rng.randint(1, 500)
        wmin, wmax = w_minmax(ell, x, y)
        s = float(sum(Fraction(1, 2) - (n * z) % 1 for n in range(1, ell + 1)))
        assert wmin - 1e-9 <= s <= wmax + 1e-9


def test_w_est_brute_force():
    p = FParams(20, 100, 5)
    x, y = Fraction(26, 100), Fraction(27, 100)
    acc = [Fraction(0), Fraction(0)]
    for ell in range(21, 101):
        bmin, bmax = brute_w(ell, x, y)
        acc[0] += bmin / (ell * (ell + 1))
        acc[1] += bmax / (ell * (ell + 1))
    expected = max(abs(float(acc[0])), abs(float(acc[1])))
    assert w_est(p, x, y) == pytest.approx(expected, abs=1e-12)


def test_w_est_degenerate():
    p = FParams(20, 300, 5)
    s = sum(ostrowski_sum(PHI, ell) / (ell * (ell + 1)) for ell in range(21, 301))
    assert w_est(p, PHI, PHI) == pytest.approx(abs(s), abs=1e-10)


@settings(max_examples=30)
@given(st.fractions(0, 1, max_denominator=10**4), st.fractions(0, 1, max_denominator=10**4))
def test_w_est_non_negative(x, y):
    assert w_est(FParams(20, 200, 5), min(x, y), max(x, y)) >= 0


# ---------------------------------------------------------------- W recursion

@pytest.mark.parametrize("c", ["111111111", "123123123", "313131313", "333311111"])
def test_W_algorithm_self_consistency(c):
    r = W_algorithm(c, SMOKE_PARAMS)
    assert r.W < r.err_max
    lo, hi = cf_min_exact(r.worst_leaf).exact, cf_max_exact(r.worst_leaf).exact
    assert r.W == pytest.approx(w_est(SMOKE_PARAMS, lo, hi), abs=0)
    left = Pattern.parse(c).left
    assert all(leaf[:4] == left for leaf in r.leaves)


def _is_complete_prefix_code(leaves, root):
    # every infinite extension of root has exactly one leaf as a prefix
    leaves = set(leaves)

    def covered(w):
        if w in leaves:
            return True
        if len(w) > max(map(len, leaves)):
            return False
        return all(covered(w + (d,)) for d in (1, 2, 3))

    prefixes_ok = all(not any(leaf[:i] in leaves for i in range(len(root), len(leaf))) for leaf in leaves)
    return prefixes_ok and covered(root)


@pytest.mark.parametrize("c", ["111111111", "212121212", "333333333"])
def test_W_leaves_cover_interval(c):
    r = W_algorithm(c, SMOKE_PARAMS)
    assert _is_complete_prefix_code(r.leaves, Pattern.parse(c).left)
    # leaf intervals are pairwise disjoint and ordered inside (cev_min, cev_max)
    ivs = sorted((cf_min(l), cf_max(l)) for l in r.leaves)
    for (a0, a1), (b0, b1) in zip(ivs, ivs[1:]):
        assert a1 <= b0
    b = pattern_bounds(c)
    assert ivs[0][0] >= b.cev_min - 1e-15 and ivs[-1][1] <= b.cev_max + 1e-15


def test_W_restart_path():
    # a tiny depth forces threshold restarts
    r = W_algorithm_left((1, 1, 1, 1), FParams(20, 2000, 6))
    assert r.restarts > 0
    assert r.W < r.err_max


def test_W_depends_only_on_left():
    a = W_algorithm("123412341".replace("4", "1"), SMOKE_PARAMS)
    b = W_algorithm("123433333".replace("4", "1"), SMOKE_PARAMS)
    assert a.W == b.W


# ---------------------------------------------------------------- factors

def g_reference(c, n):
    # independent re-implementation of the three-case split in Fractions of floats
    b = pattern_bounds(c)
    lo, hi = b.cev_min, b.cev_max
    if math.floor(n * lo) != math.floor(n * hi):
        return (1 - b.lambda_max / (2 * n)) ** 2
    fr = n * hi - math.floor(n * hi)
    lam = b.lambda_max if fr >= 0.5 else b.lambda_min
    return (1 - lam * (fr - 0.5) / n) ** 2


@given(patterns)
def test_g_matches_reference(c):
    g = g_values(pattern_bounds(c), 20)
    for n in range(1, 21):
        assert g[n - 1] == pytest.approx(g_reference(c, n), rel=1e-13)


def test_g_floor_disagreement_case():
    c = Pattern.parse("111111111")
    b = pattern_bounds(c)
    n = next(n for n in range(1, 21) if math.floor(n * b.cev_min) != math.floor(n * b.cev_max))
    assert g_values(b, 20)[n - 1] == pytest.approx((1 - b.lambda_max / (2 * n)) ** 2, rel=1e-15)


def test_f_n_large_n_at_zero():
    b = pattern_bounds("123123123")
    n = 20
    g = g_values(b, n)
    assert f_n(b, n, 0.0, g) == pytest.approx(g[-1] - max(b.lambda_max, b.lambda_min) ** 2 / (4 * n * n), rel=1e-15)


@given(patterns, st.floats(0, 1), st.floats(0, 1))
def test_f_n_concave_on_random_intervals(c, u, v):
    b = pattern_bounds(c)
    lo, hi = b.eps_min, b.eps_max
    x, y = lo + (hi - lo) * min(u, v), lo + (hi - lo) * max(u, v)
    g = g_values(b, 20)
    for n in (1, 5, 20):
        mid = f_n(b, n, (x + y) / 2, g)
        assert mid >= (f_n(b, n, x, g) + f_n(b, n, y, g)) / 2 - 1e-15


def test_f_infinity_limit_sanity():
    b = pattern_bounds("123123123")
    p = FParams(20, 10**15, 5)
    E = b.lambda_max
    expected = 1 - (b.lambda_max**2 / 4 + b.lambda_max**2 / 4 + E**2) / 20
    assert f_infinity(b, p, 0.0, 0.0) == pytest.approx(expected, abs=1e-12)


def test_f_infinity_in_unit_interval():
    ff = build_ffunction("123123123", FULL_PARAMS)
    v = f_infinity(ff.bounds, FULL_PARAMS, ff.W, 0.0)
    assert 0 < v < 1


def test_F_zero_at_minus_lambda_min():
    ff = build_ffunction("313131313", SMOKE_PARAMS)
    assert ff(-ff.bounds.lambda_min, check=False) == 0.0


def test_F_domain_error():
    ff = build_ffunction("123123123", SMOKE_PARAMS)
    with pytest.raises(DomainError):
        F_eval(ff, ff.bounds.eps_max + 0.01)
    with pytest.raises(DomainError):
        F_eval(ff, ff.bounds.eps_min - 0.01)
    F_eval(ff, ff.bounds.eps_min - GRID_STEP / 2)


def test_F_table_shape_and_determinism():
    ff = build_ffunction("131313131", FULL_PARAMS)
    t1 = F_table(ff, GRID)
    t2 = F_table(build_ffunction("131313131", FULL_PARAMS), GRID)
    assert t1 == t2
    inside = [v for _, v in t1 if v is not None]
    lo, hi = ff.domain
    assert len(inside) == int(np.sum((GRID >= lo) & (GRID <= hi)))
    # a single hump
    k = int(np.argmax(inside))
    assert np.all(np.diff(inside[:k + 1]) >= 0) and np.all(np.diff(inside[k:]) <= 0)
    assert 0 < k < len(inside) - 1


def test_family_matches_single_functions():
    rng = random.Random(2)
    pats = [Pattern.from_index(rng.randrange(N_PATTERNS)) for _ in range(12)]
    fam = build_family(pats, SMOKE_PARAMS)
    for p in pats:
        ff = build_ffunction(p, SMOKE_PARAMS)
        xs = np.linspace(*ff.domain, 9)
        assert np.allclose(fam.F(p, xs), ff(xs), rtol=1e-13, atol=1e-15)


def test_family_positivity_and_concavity(full_family):
    fam = full_family
    idx = np.arange(len(fam))
    lmin, lmax = fam.lam_min[:, None], fam.lam_max[:, None]
    for start in range(0, len(fam), 2048):
        sl = slice(start, start + 2048)
        x = np.broadcast_to(GRID, (len(idx[sl]), GRID.size))
        inside = (x >= fam.eps_min[sl, None]) & (x <= fam.eps_max[sl, None])
        # every factor positive on the domain
        assert np.all(fam.min_factor(idx[sl], x)[inside] > 0)
        assert np.all((x + lmin[sl])[inside] > 0)
        # concavity of f_n: e_n is a max of convex parabolas
        ee = np.maximum((x + lmax[sl] / 2) ** 2, (x + lmin[sl] / 2) ** 2)
        d2 = ee[:, 2:] - 2 * ee[:, 1:-1] + ee[:, :-2]
        assert np.all(d2 > 0)
        # concavity of f_inf
        n0, T = fam.params.n0, fam.params.T
        E = lmax[sl] + (x * lmax[sl] + x**2) / (n0 + 1)
        finf = 1 - (2 * lmax[sl] * (fam.W[sl, None] + 4.5 * (1 + math.log(T)) / T)
                    + (lmax[sl] ** 2 / 4 + (x + lmax[sl] / 2) ** 2 + E**2) / n0)
        assert np.all(finf[:, 2:] - 2 * finf[:, 1:-1] + finf[:, :-2] < 0)


def test_H_dominates_F_spot_check():
    # alpha = periodic extension of c, so c(alpha, k) = c whenever k = 4 mod 9
    rng = random.Random(17)
    k = 13
    for _ in range(10):
        c = Pattern.from_index(rng.randrange(N_PATTERNS))
        alpha = EventuallyPeriodicCF(0, (), c.digits)
        assert tuple(alpha.digit(i) for i in range(k - 3, k + 6)) == c.digits
        ff = build_ffunction(c, FULL_PARAMS)
        lo, hi = ff.domain
        xs = GRID[(GRID >= lo) & (GRID <= hi)][::20]
        H = H_limit_grid(alpha, k, xs)
        assert np.all(H >= ff(xs) - 0.02)

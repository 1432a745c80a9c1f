"""Sudler products, their perturbed versions and the H_k limit functions."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .contfrac import (
    EventuallyPeriodicCF,
    QuadSurd,
    delta_exact,
    denominators,
    ostrowski_expand,
    reversal,
)

__all__ = [
    "PerturbationIndex",
    "HkEvaluation",
    "WorkBudgetError",
    "frac_multiples",
    "log_sudler_product",
    "sudler_product",
    "perturbed_product",
    "perturbed_product_grid",
    "epsilon_shift",
    "DecompositionCheck",
    "decompose_check",
    "H_limit",
    "H_limit_grid",
    "ostrowski_sum",
]

# fixed-point fractional parts use three 32-bit limbs (96 bits)
_LIMB = 32
_MASK = np.uint64((1 << _LIMB) - 1)
_FRAC_BITS = 3 * _LIMB
_CHUNK = 1 << 20

# refuse single evaluations with more sine factors than this
DEFAULT_WORK_BUDGET = 2 * 10**11


class WorkBudgetError(RuntimeError):
    """Raised when an evaluation would exceed the configured work budget."""


@dataclass(frozen=True)
class PerturbationIndex:
    i: int
    t: int
    N: int


@dataclass(frozen=True)
class HkEvaluation:
    k: int
    epsilon: float
    value: float
    truncation: int


def _fixed_point(x: QuadSurd) -> int:
    # floor({x} * 2**96)
    f = x.shift(-x.floor())
    if f.b == 0:
        return (f.a << _FRAC_BITS) // f.c
    return ((f.a << _FRAC_BITS) + f._scaled_root(_FRAC_BITS)) // f.c


def _frac_chunk_fixed(A: int, r: np.ndarray) -> np.ndarray:
    """Centered fractional parts of r*A/2**96, in [-1/2, 1/2)."""
    a0 = np.uint64(A & ((1 << _LIMB) - 1))
    a1 = np.uint64((A >> _LIMB) & ((1 << _LIMB) - 1))
    a2 = np.uint64(A >> (2 * _LIMB))
    p0 = r * a0
    p1 = r * a1
    p2 = r * a2
    lo = p0 & _MASK
    mid = (p1 & _MASK) + (p0 >> np.uint64(_LIMB))
    hi = (p2 + (p1 >> np.uint64(_LIMB)) + (mid >> np.uint64(_LIMB))) & _MASK
    mid = mid & _MASK
    # values with top bit set are >= 1/2: negate the 96-bit word to centre them
    neg = hi >= np.uint64(1 << (_LIMB - 1))
    nlo = (~lo & _MASK) + np.uint64(1)
    nmid = (~mid & _MASK) + (nlo >> np.uint64(_LIMB))
    nhi = ((~hi & _MASK) + (nmid >> np.uint64(_LIMB))) & _MASK
    nlo &= _MASK
    nmid &= _MASK
    lo = np.where(neg, nlo, lo)
    mid = np.where(neg, nmid, mid)
    hi = np.where(neg, nhi, hi)
    val = (hi.astype(np.float64) * 2.0**-32 + mid.astype(np.float64) * 2.0**-64
           + lo.astype(np.float64) * 2.0**-96)
    return np.where(neg, -val, val)


def frac_multiples(alpha: EventuallyPeriodicCF | QuadSurd, start: int, stop: int) -> np.ndarray:
    """Centered fractional parts of r*alpha for start <= r < stop.

    Irrational alpha uses 96-bit fixed point (absolute error about r * 2**-96
    before the final rounding); rational alpha is exact up to rounding.
    """
    x = alpha.exact if isinstance(alpha, EventuallyPeriodicCF) else alpha
    if stop >= 1 << 32:
        raise WorkBudgetError("multiples beyond 2**32 are not supported")
    r = np.arange(start, stop, dtype=np.uint64)
    if x.is_rational:
        fr = x.as_fraction() % 1
        p, q = fr.numerator, fr.denominator
        if q < 1 << 31:
            num = (r.astype(np.int64) % q) * p % q
            num = np.where(2 * num >= q, num - q, num)
            return num.astype(np.float64) / q
    return _frac_chunk_fixed(_fixed_point(x), r)


def _log_factor_sum(x: np.ndarray) -> tuple[float, bool]:
    s = np.abs(np.sin(np.pi * x))
    if np.any(s == 0.0):
        return -math.inf, True
    return math.fsum(np.log(2.0 * s)), False


def log_sudler_product(alpha: EventuallyPeriodicCF, N: int) -> float:
    """log P_N(alpha); -inf when some factor vanishes."""
    if N < 0:
        raise ValueError("N must be non-negative")
    total = []
    for lo in range(1, N + 1, _CHUNK):
        x = frac_multiples(alpha, lo, min(N + 1, lo + _CHUNK))
        s, zero = _log_factor_sum(x)
        if zero:
            return -math.inf
        total.append(s)
    return math.fsum(total)


def sudler_product(alpha: EventuallyPeriodicCF, N: int) -> float:
    """P_N(alpha) = prod_{r=1}^N 2|sin(pi r alpha)|, accumulated in log space."""
    lg = log_sudler_product(alpha, N)
    return 0.0 if lg == -math.inf else math.exp(lg)


def perturbed_product_grid(alpha: EventuallyPeriodicCF, n: int, epsilons: Sequence[float],
                           work_budget: int = DEFAULT_WORK_BUDGET) -> np.ndarray:
    """P_{q_n}(alpha, eps) for every eps in epsilons."""
    q = denominators(alpha, n)[n]
    eps = np.asarray(epsilons, dtype=np.float64)
    if q * max(1, eps.size) > work_budget:
        raise WorkBudgetError(
            f"{q} factors x {eps.size} perturbations = {q * eps.size:.3g} sine evaluations "
            f"exceeds the budget {work_budget:.3g}")
    sign = -1.0 if n % 2 else 1.0
    shifts = sign * eps / q
    logs = [[] for _ in range(eps.size)]
    zero = np.zeros(eps.size, dtype=bool)
    for lo in range(1, q + 1, _CHUNK):
        x = frac_multiples(alpha, lo, min(q + 1, lo + _CHUNK))
        for j, e in enumerate(shifts):
            y = x + e
            y -= np.rint(y)
            s = np.abs(np.sin(np.pi * y))
            if np.any(s == 0.0):
                zero[j] = True
                continue
            logs[j].append(float(np.sum(np.log(2.0 * s))))
    out = np.array([math.exp(math.fsum(lg)) for lg in logs])
    out[zero] = 0.0
    return out


def perturbed_product(alpha: EventuallyPeriodicCF, n: int, epsilon: float,
                      work_budget: int = DEFAULT_WORK_BUDGET) -> float:
    """P_{q_n}(alpha, eps) = prod_{r=1}^{q_n} 2|sin(pi(r alpha + (-1)^n eps/q_n))|."""
    if epsilon == 0:
        return sudler_product(alpha, denominators(alpha, n)[n])
    return float(perturbed_product_grid(alpha, n, [epsilon], work_budget)[0])


def epsilon_shift(alpha: EventuallyPeriodicCF, N: int, i: int, t: int,
                  digits: Sequence[int] | None = None) -> float:
    """eps_{i,t}(N) = q_i (t delta_i + sum_j (-1)^j b_{i+j} delta_{i+j})."""
    if digits is None:
        digits = ostrowski_expand(N, alpha).digits
    n = len(digits) - 1
    if i < 0 or i > n:
        raise IndexError(f"level {i} exceeds the top Ostrowski level {n} of N={N}")
    if t < 0:
        raise ValueError("t must be non-negative")
    q_i = denominators(alpha, i)[i]
    acc = delta_exact(alpha, i).scale(t * q_i)
    for j in range(1, n - i + 1):
        b = digits[i + j]
        if b:
            term = delta_exact(alpha, i + j).scale(b * q_i)
            acc = acc - term if j % 2 else acc + term
    return float(acc)


@dataclass(frozen=True)
class DecompositionCheck:
    lhs: float
    rhs: float
    rel_error: float


def decompose_check(alpha: EventuallyPeriodicCF, N: int) -> DecompositionCheck:
    """Both sides of the product decomposition along the Ostrowski expansion of N.

    lhs is P_N(alpha); rhs is the product of P_{q_i}(alpha, eps_{i,t}(N)) over
    all levels i and counters t < b_i.  The relative error is taken in log space.
    """
    if N < 1:
        raise ValueError("N must be >= 1")
    digits = ostrowski_expand(N, alpha).digits
    lhs = log_sudler_product(alpha, N)
    parts = []
    for i, b in enumerate(digits):
        for t in range(b):
            eps = epsilon_shift(alpha, N, i, t, digits)
            v = perturbed_product(alpha, i, eps)
            parts.append(math.log(v) if v > 0 else -math.inf)
    rhs = -math.inf if -math.inf in parts else math.fsum(parts)
    if lhs == -math.inf or rhs == -math.inf:
        rel = 0.0 if lhs == rhs else math.inf
        return DecompositionCheck(math.exp(lhs), math.exp(rhs), rel)
    return DecompositionCheck(math.exp(lhs), math.exp(rhs), math.expm1(abs(lhs - rhs)))


def _hk_ingredients(alpha: EventuallyPeriodicCF, k: int):
    qs = denominators(alpha, k)
    q, q_prev = qs[k], qs[k - 1]
    lam = float(delta_exact(alpha, k).scale(q))
    M = q // 2
    return q, q_prev, lam, M


def H_limit_grid(alpha: EventuallyPeriodicCF, k: int, epsilons: Sequence[float],
                 work_budget: int = DEFAULT_WORK_BUDGET) -> np.ndarray:
    """H_k(alpha, eps) over an array of perturbations."""
    if k < 1:
        raise ValueError("k must be >= 1")
    q, q_prev, lam, M = _hk_ingredients(alpha, k)
    eps = np.asarray(epsilons, dtype=np.float64)
    if M * max(1, eps.size) > work_budget:
        raise WorkBudgetError(f"{M} factors x {eps.size} perturbations exceeds the budget")
    assert reversal(alpha, k).denominator == q
    logs = [[] for _ in range(eps.size)]
    zero = np.zeros(eps.size, dtype=bool)
    for lo in range(1, M + 1, _CHUNK):
        n = np.arange(lo, min(M + 1, lo + _CHUNK), dtype=np.int64)
        # {n q_{k-1} / q_k} exactly in integers
        fr = ((n % q) * (q_prev % q) % q).astype(np.float64) / q
        nf = n.astype(np.float64)
        base = (1.0 - lam * (fr - 0.5) / nf) ** 2
        for j, e in enumerate(eps):
            h = np.abs(base - (e + lam / 2) ** 2 / nf**2)
            if np.any(h == 0.0):
                zero[j] = True
                continue
            logs[j].append(float(np.sum(np.log(h))))
    out = np.empty(eps.size)
    for j, e in enumerate(eps):
        lin = 2 * math.pi * abs(e + lam)
        if zero[j] or lin == 0.0:
            out[j] = 0.0
        else:
            out[j] = lin * math.exp(math.fsum(logs[j]))
    return out


def H_limit(alpha: EventuallyPeriodicCF, k: int, epsilon: float) -> HkEvaluation:
    """H_k(alpha, eps) = 2 pi |eps + lambda_k| prod_{n <= q_k/2} h_{n,k}(eps)."""
    value = float(H_limit_grid(alpha, k, [epsilon])[0])
    return HkEvaluation(k, float(epsilon), value, denominators(alpha, k)[k] // 2)


def ostrowski_sum(x: EventuallyPeriodicCF | QuadSurd, ell: int) -> float:
    """S_ell(x) = sum_{n=1}^{ell} (1/2 - {n x})."""
    if ell < 1:
        raise ValueError("ell must be >= 1")
    xs = x.exact if isinstance(x, EventuallyPeriodicCF) else x
    parts = []
    for lo in range(1, ell + 1, _CHUNK):
        c = frac_multiples(xs, lo, min(ell + 1, lo + _CHUNK))
        # centred value c in [-1/2, 1/2): {n x} = c for c >= 0, else 1 + c
        fr = np.where(c >= 0, c, 1.0 + c)
        parts.append(math.fsum(0.5 - fr))
    return math.fsum(parts)

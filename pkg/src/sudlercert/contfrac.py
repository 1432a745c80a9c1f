"""Continued fractions with exact integer arithmetic.

Eventually periodic expansions are evaluated through their closed-form
quadratic surd, so every floor/fractional-part decision downstream can be
made exactly.  Floats are produced only at the very end, correctly rounded
from a 256-bit fixed-point approximation.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from typing import Iterator, Sequence

__all__ = [
    "CFError",
    "QuadSurd",
    "EventuallyPeriodicCF",
    "ConvergentPair",
    "OstrowskiExpansion",
    "continuant",
    "eval_cf",
    "convergents",
    "tail_value",
    "reversal",
    "lambda_kj",
    "denominators",
    "delta_exact",
    "ostrowski_expand",
    "is_legal_ostrowski",
    "parse_cf",
    "format_cf",
]

_PREC = 256


class CFError(ValueError):
    """Invalid continued-fraction input."""


def _primitive_period(period: tuple[int, ...]) -> tuple[int, ...]:
    n = len(period)
    for d in range(1, n + 1):
        if n % d == 0 and period[:d] * (n // d) == period:
            return period[:d]
    return period


@dataclass(frozen=True)
class QuadSurd:
    """The real number (a + b*sqrt(d)) / c with integer a, b, c and d >= 0.

    ``c`` is kept positive.  ``d`` is never a perfect square unless ``b == 0``.
    """

    a: int
    b: int
    d: int
    c: int

    def __post_init__(self):
        if self.c == 0:
            raise ZeroDivisionError("surd with zero denominator")
        if self.c < 0:
            object.__setattr__(self, "a", -self.a)
            object.__setattr__(self, "b", -self.b)
            object.__setattr__(self, "c", -self.c)
        if self.b == 0 and self.d != 0:
            object.__setattr__(self, "d", 0)
        if self.d:
            r = math.isqrt(self.d)
            if r * r == self.d:
                object.__setattr__(self, "a", self.a + self.b * r)
                object.__setattr__(self, "b", 0)
                object.__setattr__(self, "d", 0)
        g = math.gcd(math.gcd(self.a, self.b), self.c)
        if g > 1:
            object.__setattr__(self, "a", self.a // g)
            object.__setattr__(self, "b", self.b // g)
            object.__setattr__(self, "c", self.c // g)

    @classmethod
    def from_int(cls, n: int) -> "QuadSurd":
        return cls(n, 0, 0, 1)

    @classmethod
    def from_fraction(cls, x: Fraction) -> "QuadSurd":
        return cls(x.numerator, 0, 0, x.denominator)

    @property
    def is_rational(self) -> bool:
        return self.b == 0

    def as_fraction(self) -> Fraction:
        if self.b:
            raise CFError("irrational surd has no exact Fraction")
        return Fraction(self.a, self.c)

    def _scaled_root(self, prec: int) -> int:
        # floor(b*sqrt(d) * 2**prec), rounded toward -inf
        if self.b == 0:
            return 0
        r = math.isqrt(self.b * self.b * self.d << (2 * prec))
        return r if self.b > 0 else -r - 1

    def __float__(self) -> float:
        if self.b == 0:
            return self.a / self.c
        s = self._scaled_root(_PREC)
        return float(Fraction((self.a << _PREC) + s, self.c << _PREC))

    def floor(self) -> int:
        if self.b == 0:
            return self.a // self.c
        r = math.isqrt(self.b * self.b * self.d)
        # b*sqrt(d) is irrational: it lies strictly between r and r+1 (or -r-1 and -r)
        base = self.a + r if self.b > 0 else self.a - r - 1
        return base // self.c

    def scale(self, n: int) -> "QuadSurd":
        return QuadSurd(self.a * n, self.b * n, self.d, self.c)

    def shift(self, n: int) -> "QuadSurd":
        return QuadSurd(self.a + n * self.c, self.b, self.d, self.c)

    def frac(self) -> float:
        """Fractional part, computed exactly before rounding to float."""
        return float(self.shift(-self.floor()))

    def __neg__(self):
        return QuadSurd(-self.a, -self.b, self.d, self.c)

    def __sub__(self, other: "QuadSurd") -> "QuadSurd":
        if other.b and self.b and other.d != self.d:
            raise CFError("surds over different radicands")
        d = self.d or other.d
        return QuadSurd(self.a * other.c - other.a * self.c,
                        self.b * other.c - other.b * self.c, d, self.c * other.c)

    def __add__(self, other: "QuadSurd") -> "QuadSurd":
        return self - (-other)

    def sign(self) -> int:
        if self.b == 0:
            return (self.a > 0) - (self.a < 0)
        # compare a with -b*sqrt(d)
        if self.a >= 0 and self.b > 0:
            return 1
        if self.a <= 0 and self.b < 0:
            return -1
        lhs, rhs = self.a * self.a, self.b * self.b * self.d
        if self.a > 0:
            return 1 if lhs > rhs else -1
        return -1 if lhs > rhs else 1

    def __lt__(self, other: "QuadSurd") -> bool:
        return (self - other).sign() < 0

    def mobius(self, p: int, pp: int, q: int, qp: int) -> "QuadSurd":
        """Return (p*x + pp) / (q*x + qp)."""
        num_a, num_b = p * self.a + pp * self.c, p * self.b
        den_a, den_b = q * self.a + qp * self.c, q * self.b
        if den_b == 0:
            return QuadSurd(num_a, num_b, self.d, den_a)
        # multiply through by the conjugate of the denominator
        a = num_a * den_a - num_b * den_b * self.d
        b = num_b * den_a - num_a * den_b
        c = den_a * den_a - den_b * den_b * self.d
        return QuadSurd(a, b, self.d, c)


def continuant(seq: Sequence[int]) -> int:
    """Continuant <c_1, ..., c_t>; the empty continuant is 1."""
    prev, cur = 0, 1  # <c_1..c_{-1}> := 0 keeps the recurrence uniform
    for c in seq:
        if int(c) != c or c < 1:
            raise CFError(f"continuant digits must be positive integers, got {c!r}")
        prev, cur = cur, c * cur + prev
    return cur


def _matrix(digits: Sequence[int]) -> tuple[int, int, int, int]:
    # product of [[a, 1], [1, 0]] over digits -> [[P, P'], [Q, Q']]
    p, pp, q, qp = 1, 0, 0, 1
    for a in digits:
        p, pp = a * p + pp, p
        q, qp = a * q + qp, q
    return p, pp, q, qp


@dataclass(frozen=True)
class EventuallyPeriodicCF:
    """[a0; prefix..., (period...)] with every digit after a0 positive.

    An empty period denotes the rational number [a0; prefix].
    """

    a0: int
    prefix: tuple[int, ...] = ()
    period: tuple[int, ...] = ()

    def __post_init__(self):
        prefix = tuple(int(x) for x in self.prefix)
        period = tuple(int(x) for x in self.period)
        if self.a0 < 0:
            raise CFError("a0 must be non-negative")
        for d in prefix + period:
            if d < 1:
                raise CFError(f"partial quotients must be >= 1, got {d}")
        if not prefix and not period:
            raise CFError("continued fraction needs a prefix or a period")
        object.__setattr__(self, "prefix", prefix)
        object.__setattr__(self, "period", _primitive_period(period))

    @property
    def is_rational(self) -> bool:
        return not self.period

    def __len__(self):
        # number of partial quotients after a0 (rationals only)
        if self.period:
            raise TypeError("infinite continued fraction has no length")
        return len(self.prefix)

    def digit(self, i: int) -> int:
        """Partial quotient a_i (a_0 for i == 0)."""
        if i == 0:
            return self.a0
        if i < 0:
            raise IndexError("negative digit index")
        if i <= len(self.prefix):
            return self.prefix[i - 1]
        if not self.period:
            raise IndexError(f"rational continued fraction has no digit a_{i}")
        j = (i - len(self.prefix) - 1) % len(self.period)
        return self.period[j]

    def digits(self, n: int) -> list[int]:
        """[a_1, ..., a_n]."""
        return [self.digit(i) for i in range(1, n + 1)]

    @cached_property
    def exact(self) -> QuadSurd:
        """The exact value as a quadratic surd (or rational)."""
        if self.period:
            P, Pp, Q, Qp = _matrix(self.period)
            # u = [t1; t2, ..., tk, u]  =>  Q u^2 + (Qp - P) u - Pp = 0
            tail = QuadSurd(P - Qp, 1, (P - Qp) ** 2 + 4 * Q * Pp, 2 * Q)
        else:
            tail = None
        x = tail
        for a in reversed(self.prefix):
            if x is None:
                x = QuadSurd.from_int(a)
            else:
                x = x.mobius(a, 1, 1, 0)
        # x = [prefix_1; prefix_2, ...]; fold in a0
        return x.mobius(self.a0, 1, 1, 0)

    def __float__(self) -> float:
        return float(self.exact)

    def __str__(self) -> str:
        return format_cf(self)


def eval_cf(cf: EventuallyPeriodicCF) -> float:
    """Value of the continued fraction as a correctly rounded float."""
    return float(cf.exact)


@dataclass(frozen=True)
class ConvergentPair:
    """p_k / q_k with delta_k = ||q_k alpha|| and lambda_k = q_k delta_k."""

    k: int
    p: int
    q: int
    delta: float
    lam: float


def _convergent_ints(cf: EventuallyPeriodicCF, up_to: int) -> Iterator[tuple[int, int, int]]:
    p_prev, q_prev = 1, 0
    p, q = cf.a0, 1
    yield 0, p, q
    for k in range(1, up_to + 1):
        a = cf.digit(k)
        p, p_prev = a * p + p_prev, p
        q, q_prev = a * q + q_prev, q
        yield k, p, q


def _distance_to_int(x: QuadSurd) -> QuadSurd:
    f = x.floor()
    lo = x.shift(-f)
    hi = QuadSurd.from_int(1) - lo
    if x.is_rational and lo.as_fraction() == Fraction(1, 2):
        raise CFError("nearest-integer distance tie at exactly 1/2")
    return lo if lo < hi else hi


def convergents(cf: EventuallyPeriodicCF, up_to: int) -> Iterator[ConvergentPair]:
    """Yield ConvergentPair for k = 0..up_to.

    delta_k is ||q_k alpha||, evaluated exactly and rounded once.
    """
    if up_to < 0:
        raise ValueError("up_to must be >= 0")
    if cf.is_rational and up_to > len(cf):
        raise IndexError(f"rational continued fraction has only {len(cf)} convergents past a0")
    alpha = cf.exact
    for k, p, q in _convergent_ints(cf, up_to):
        delta = float(_distance_to_int(alpha.scale(q)))
        yield ConvergentPair(k, p, q, delta, q * delta)


def denominators(cf: EventuallyPeriodicCF, up_to: int) -> list[int]:
    """[q_0, ..., q_up_to]."""
    return [q for _, _, q in _convergent_ints(cf, up_to)]


def delta_exact(cf: EventuallyPeriodicCF, k: int) -> QuadSurd:
    """delta_k = ||q_k alpha|| as an exact surd."""
    q = denominators(cf, k)[k]
    return _distance_to_int(cf.exact.scale(q))


def tail_value(cf: EventuallyPeriodicCF, k: int) -> float:
    """alpha_k = [a_k; a_{k+1}, ...] for k >= 1."""
    if k < 1:
        raise IndexError("tail index must be >= 1")
    if cf.is_rational:
        digits = cf.digits(len(cf))[k - 1:]
        if not digits:
            raise IndexError("tail beyond the last digit")
        return float(EventuallyPeriodicCF(digits[0], tuple(digits[1:])).exact) if len(digits) > 1 else float(digits[0])
    n_pre = len(cf.prefix)
    if k <= n_pre:
        rest = cf.prefix[k - 1:]
        return float(EventuallyPeriodicCF(rest[0], rest[1:], cf.period))
    j = (k - n_pre - 1) % len(cf.period)
    rot = cf.period[j:] + cf.period[:j]
    return float(EventuallyPeriodicCF(rot[0], (), rot[1:] + rot[:1]))


def reversal(cf: EventuallyPeriodicCF, k: int) -> Fraction:
    """The reversed expansion [0; a_k, ..., a_1] = q_{k-1} / q_k, exactly."""
    if k < 1:
        raise IndexError("reversal index must be >= 1")
    qs = denominators(cf, k)
    return Fraction(qs[k - 1], qs[k])


def lambda_kj(cf: EventuallyPeriodicCF, k: int, j: int) -> float:
    """lambda_{k,j} = q_k * delta_{k+j}."""
    q = denominators(cf, k)[k]
    return float(delta_exact(cf, k + j).scale(q))


@dataclass(frozen=True)
class OstrowskiExpansion:
    """N = sum b_l q_l with the usual legality rules."""

    digits: tuple[int, ...]
    alpha: EventuallyPeriodicCF

    @property
    def value(self) -> int:
        qs = denominators(self.alpha, len(self.digits) - 1) if self.digits else []
        return sum(b * q for b, q in zip(self.digits, qs))

    def nonzero_levels(self) -> list[int]:
        return [i for i, b in enumerate(self.digits) if b]


def is_legal_ostrowski(digits: Sequence[int], cf: EventuallyPeriodicCF) -> bool:
    for ell, b in enumerate(digits):
        a_next = cf.digit(ell + 1)
        if b < 0:
            return False
        if ell == 0 and b >= a_next:
            return False
        if ell >= 1 and b > a_next:
            return False
        if ell >= 1 and b == a_next and digits[ell - 1] != 0:
            return False
    return True


def ostrowski_expand(N: int, cf: EventuallyPeriodicCF) -> OstrowskiExpansion:
    """Greedy Ostrowski expansion of N >= 0 with respect to cf."""
    if N < 0:
        raise ValueError("N must be non-negative")
    qs = [1]
    q_prev = 0
    k = 0
    while qs[-1] <= N:
        k += 1
        if cf.is_rational and k > len(cf):
            raise IndexError(f"N={N} is not below the denominator q={qs[-1]} of a rational alpha")
        q_prev, q = qs[-1], cf.digit(k) * qs[-1] + q_prev
        qs.append(q)
    top = len(qs) - 2
    if top < 0:
        return OstrowskiExpansion((0,), cf)
    digits = [0] * (top + 1)
    rest = N
    for ell in range(top, -1, -1):
        digits[ell], rest = divmod(rest, qs[ell])
    assert rest == 0
    return OstrowskiExpansion(tuple(digits), cf)


_CF_RE = re.compile(r"^\[(\d+)(?:;(.*))?\]$")


def parse_cf(text: str) -> EventuallyPeriodicCF:
    """Parse '[a0;p1,...,(t1,...,tk)]'."""
    s = text.strip()
    m = _CF_RE.match(s)
    if not m:
        raise CFError(f"malformed continued fraction at position 0: {text!r}")
    a0 = int(m.group(1))
    body = m.group(2) or ""
    offset = s.index(";") + 1 if ";" in s else len(s)
    prefix: list[int] = []
    period: list[int] = []
    in_period = False
    closed = False
    pos = offset
    for tok in body.split(","):
        t = tok.strip()
        start = pos
        pos += len(tok) + 1
        if closed:
            raise CFError(f"digits after the period at position {start}")
        if t.startswith("("):
            if in_period:
                raise CFError(f"nested period at position {start}")
            in_period = True
            t = t[1:].strip()
        if t.endswith(")"):
            if not in_period:
                raise CFError(f"unbalanced ')' at position {start}")
            closed = True
            t = t[:-1].strip()
        if not t.isdigit():
            raise CFError(f"expected a positive integer at position {start}, got {tok!r}")
        d = int(t)
        if d < 1:
            raise CFError(f"zero digit at position {start}")
        (period if in_period else prefix).append(d)
    if in_period and not closed:
        raise CFError(f"unterminated period in {text!r}")
    if body == "" and ";" in s:
        raise CFError(f"empty digit list in {text!r}")
    if not prefix and not period:
        raise CFError(f"no partial quotients in {text!r}")
    return EventuallyPeriodicCF(a0, tuple(prefix), tuple(period))


def format_cf(cf: EventuallyPeriodicCF) -> str:
    parts = [str(d) for d in cf.prefix]
    if cf.period:
        parts.append("(" + ",".join(str(d) for d in cf.period) + ")")
    return f"[{cf.a0};{','.join(parts)}]"

"""Digit patterns c in {1,2,3}^9 and their extremal continued-fraction quantities."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable, Sequence

from .contfrac import EventuallyPeriodicCF, QuadSurd, continuant

__all__ = [
    "Pattern",
    "PatternBounds",
    "PERIOD_LOW",
    "PERIOD_HIGH",
    "cf_min",
    "cf_max",
    "cf_min_exact",
    "cf_max_exact",
    "pattern_bounds",
    "shift_completions",
    "enumerate_patterns",
    "N_PATTERNS",
]

PERIOD_LOW = (3, 1)
PERIOD_HIGH = (1, 3)
N_PATTERNS = 3**9


@dataclass(frozen=True, order=True)
class Pattern:
    """Nine partial quotients (a_{k-3}, ..., a_{k+5}), each in {1,2,3}."""

    digits: tuple[int, ...]

    def __post_init__(self):
        d = tuple(int(x) for x in self.digits)
        if len(d) != 9:
            raise ValueError(f"a pattern has exactly 9 digits, got {len(d)}")
        if any(x not in (1, 2, 3) for x in d):
            raise ValueError(f"pattern digits must lie in {{1,2,3}}, got {d}")
        object.__setattr__(self, "digits", d)

    @classmethod
    def parse(cls, text: str) -> "Pattern":
        t = text.strip()
        if len(t) != 9 or not t.isdigit():
            raise ValueError(f"pattern must be 9 digits, got {text!r}")
        return cls(tuple(int(ch) for ch in t))

    @classmethod
    def from_index(cls, idx: int) -> "Pattern":
        if not 0 <= idx < N_PATTERNS:
            raise IndexError(idx)
        out = []
        for _ in range(9):
            idx, r = divmod(idx, 3)
            out.append(r + 1)
        return cls(tuple(reversed(out)))

    @property
    def index(self) -> int:
        """Lexicographic position among all 3^9 patterns."""
        v = 0
        for x in self.digits:
            v = 3 * v + (x - 1)
        return v

    def c(self, i: int) -> int:
        """1-based digit c_i."""
        return self.digits[i - 1]

    @property
    def left(self) -> tuple[int, ...]:
        """(c_4, c_3, c_2, c_1), the reversed digits before position k."""
        return tuple(reversed(self.digits[:4]))

    def __str__(self) -> str:
        return "".join(str(x) for x in self.digits)


def _as_pattern(c) -> Pattern:
    if isinstance(c, Pattern):
        return c
    if isinstance(c, str):
        return Pattern.parse(c)
    return Pattern(tuple(c))


def _tail_cf(a0: int, digits: Sequence[int], period: tuple[int, int]) -> EventuallyPeriodicCF:
    return EventuallyPeriodicCF(a0, tuple(digits), period)


@lru_cache(maxsize=None)
def _period_value(period: tuple[int, int]) -> float:
    # [0; (period)]
    return float(EventuallyPeriodicCF(0, (), period))


def _fold(a0: int, digits: Sequence[int], period: tuple[int, int]) -> float:
    # float value of [a0; digits, (period)], folded from the back
    x = _period_value(period)
    for a in reversed(digits):
        x = 1.0 / (a + x)
    return a0 + x


@lru_cache(maxsize=None)
def _cev_exact(left: tuple[int, ...]) -> tuple[QuadSurd, QuadSurd]:
    return cf_min_exact(left).exact, cf_max_exact(left).exact


def cf_min_exact(B: Sequence[int]) -> EventuallyPeriodicCF:
    """[0; B, (3,1)] for even len(B), [0; B, (1,3)] for odd."""
    return _tail_cf(0, B, PERIOD_LOW if len(B) % 2 == 0 else PERIOD_HIGH)


def cf_max_exact(B: Sequence[int]) -> EventuallyPeriodicCF:
    """[0; B, (1,3)] for even len(B), [0; B, (3,1)] for odd."""
    return _tail_cf(0, B, PERIOD_HIGH if len(B) % 2 == 0 else PERIOD_LOW)


def cf_min(B: Sequence[int]) -> float:
    return float(cf_min_exact(B))


def cf_max(B: Sequence[int]) -> float:
    return float(cf_max_exact(B))


@dataclass(frozen=True)
class PatternBounds:
    """Limiting extremes of alpha_{k+1}, the reversal, lambda_k and lambda_{k,j}.

    lambda_j_min[j] / lambda_j_max[j] hold lambda_{c,j} for j = 1..5; index 0
    repeats lambda_min / lambda_max so that j = 0 can be used uniformly.
    """

    pattern: Pattern
    vec_min: float
    vec_max: float
    cev_min: float
    cev_max: float
    lambda_min: float
    lambda_max: float
    lambda_j_min: tuple[float, ...]
    lambda_j_max: tuple[float, ...]
    eps_min: float
    eps_max: float
    cev_min_exact: QuadSurd = field(repr=False, compare=False)
    cev_max_exact: QuadSurd = field(repr=False, compare=False)

    def lam(self, j: int, which: str) -> float:
        """lambda_{c,j}^{min|max}; j = 0 is lambda_c itself."""
        src = self.lambda_j_min if which == "min" else self.lambda_j_max
        return src[j]


def _lambda_j(c: Pattern, j: int, cev: float, fwd_period, bwd_period) -> float:
    d = c.digits
    cont = continuant(d[4:4 + j]) + cev * continuant(d[5:4 + j])
    fwd = _fold(d[4 + j], d[5 + j:], fwd_period)
    bwd = _fold(0, tuple(reversed(d[:4 + j])), bwd_period)
    return 1.0 / (cont * (fwd + bwd))


@lru_cache(maxsize=None)
def _bounds_cached(c: Pattern) -> PatternBounds:
    d = c.digits
    vec_min = _fold(d[4], d[5:], PERIOD_LOW)
    vec_max = _fold(d[4], d[5:], PERIOD_HIGH)
    cev_min_x, cev_max_x = _cev_exact(c.left)
    cev_min, cev_max = float(cev_min_x), float(cev_max_x)
    lam_min = 1.0 / (vec_max + cev_max)
    lam_max = 1.0 / (vec_min + cev_min)
    lj_min, lj_max = [lam_min], [lam_max]
    for j in range(1, 5):
        lo, hi = (PERIOD_LOW, PERIOD_HIGH) if j % 2 else (PERIOD_HIGH, PERIOD_LOW)
        lj_min.append(_lambda_j(c, j, cev_max, lo, lo))
        lj_max.append(_lambda_j(c, j, cev_min, hi, hi))
    cont5 = continuant(d[4:9])
    cont6 = continuant(d[5:9])
    rev = tuple(reversed(d))
    lj_min.append(1.0 / (cont5 + cev_max * cont6)
                  / (3 + _period_value(PERIOD_HIGH) + _fold(0, rev, PERIOD_LOW)))
    lj_max.append(1.0 / (cont5 + cev_min * cont6)
                  / (1 + _period_value(PERIOD_LOW) + _fold(0, rev, PERIOD_HIGH)))
    # the 1e-100 widening of the perturbation range is below double resolution
    eps_min = -lam_max + lj_min[1]
    eps_max = (d[4] - 1) * lam_max + lj_max[1]
    return PatternBounds(c, vec_min, vec_max, cev_min, cev_max, lam_min, lam_max,
                         tuple(lj_min), tuple(lj_max), eps_min, eps_max,
                         cev_min_x, cev_max_x)


def pattern_bounds(c) -> PatternBounds:
    """All extremal quantities of a pattern (memoised)."""
    return _bounds_cached(_as_pattern(c))


def shift_completions(c, s: int) -> list[Pattern]:
    """Drop the first s digits of c and append every word of length s."""
    c = _as_pattern(c)
    if not 0 <= s <= 5:
        raise ValueError("shift must lie in 0..5")
    keep = c.digits[s:]
    return [Pattern(keep + w) for w in itertools.product((1, 2, 3), repeat=s)]


def enumerate_patterns() -> list[Pattern]:
    """All 3^9 patterns in lexicographic order."""
    return [Pattern(w) for w in itertools.product((1, 2, 3), repeat=9)]


def patterns_from_text(items: Iterable[str]) -> list[Pattern]:
    return [Pattern.parse(x) for x in items]

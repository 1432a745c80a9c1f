"""Grid checks, universal inequalities and the negative-perturbation case table.

Everything here works on an ``FFamily`` so that one case is checked for all
eligible patterns and all completions of the shifted pattern in a handful
of array operations.
"""

from __future__ import annotations

import itertools
import json
import math
import time
from collections import Counter
from dataclasses import asdict, dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from .contfrac import EventuallyPeriodicCF
from .ffamily import (
    GRID_STEP,
    DomainError,
    FFamily,
    FFunction,
    FParams,
    FULL_PARAMS,
    build_family,
)
from .pattern import N_PATTERNS, Pattern, enumerate_patterns, shift_completions
from .sudler import frac_multiples

__all__ = [
    "Grid",
    "GRID",
    "snap_down",
    "snap_up",
    "below",
    "check_unimodal",
    "interval_lower_bound",
    "Term",
    "FactorSpec",
    "Variant",
    "CaseSpec",
    "case_table",
    "case_matches",
    "legal_digit_tuples",
    "verify_universal",
    "verify_case",
    "VerificationReport",
    "run_full",
    "empirical_liminf",
    "DEFAULT_THRESHOLDS",
    "ALL_CHECKS",
    "SHARP_TARGETS",
    "SAFETY",
    "TRANSCRIPTION_SLACK",
]

SAFETY = 1e-6
TRANSCRIPTION_SLACK = 5e-3
# margins the lower-bound argument needs
DEFAULT_THRESHOLDS = {
    "zero": 1.0001,
    "negpert": 0.35,
    "pos_t0": 1.0001,
    "pos_t1": 1.0001,
    "pos_t2": 1.0001,
    "cases": 1.0001,
}
# sharper published constants
SHARP_TARGETS = {
    "zero": 1.14671,
    "negpert": 0.35,
    "pos_t0": 1.14671,
    "pos_t1": 1.53232,
    "pos_t2": 1.2866,
}


# ---------------------------------------------------------------- grid

@dataclass(frozen=True)
class Grid:
    """x_i = -1 + i/1000 for i = 0..2000, stored through the offset j = i - 1000."""

    step: float = GRID_STEP
    half: int = 1000

    @property
    def points(self) -> np.ndarray:
        return np.arange(-self.half, self.half + 1) / self.half

    def __len__(self):
        return 2 * self.half + 1

    def x(self, j):
        return np.asarray(j) / self.half


GRID = Grid()


def snap_down(v) -> np.ndarray:
    """Offset j of the largest grid point <= v."""
    v = np.asarray(v, dtype=np.float64)
    j = np.floor(v * GRID.half)
    j = np.where(j / GRID.half > v, j - 1, j)
    j = np.where((j + 1) / GRID.half <= v, j + 1, j)
    return j.astype(np.int64)


def snap_up(v) -> np.ndarray:
    """Offset j of the smallest grid point >= v."""
    v = np.asarray(v, dtype=np.float64)
    j = np.ceil(v * GRID.half)
    j = np.where(j / GRID.half < v, j + 1, j)
    j = np.where((j - 1) / GRID.half >= v, j - 1, j)
    return j.astype(np.int64)


def below(v) -> np.ndarray:
    """Offset of the largest grid point strictly below v."""
    j = snap_down(v)
    return np.where(j / GRID.half >= np.asarray(v), j - 1, j)


def above(v) -> np.ndarray:
    """Offset of the smallest grid point strictly above v."""
    j = snap_up(v)
    return np.where(j / GRID.half <= np.asarray(v), j + 1, j)


# ---------------------------------------------------------------- unimodality

MAX_PLATEAU = 2


def check_unimodal(values: Sequence[float], x: Sequence[float] | None = None
                   ) -> tuple[bool, int, int]:
    """(ok, argmax_index, plateau_width) for a sequence of grid values.

    ok needs a non-decreasing run up to the maximum, a non-increasing run
    after it, a maximum at a positive grid point (when ``x`` is given) and
    at most two equal maximal values.
    """
    v = np.asarray(values, dtype=np.float64)
    if v.size < 3:
        raise ValueError("need at least three grid values")
    i = int(np.argmax(v))
    d = np.diff(v)
    ok = bool(np.all(d[:i] >= 0) and np.all(d[i:] <= 0))
    plateau = int(np.sum(v == v[i]))
    if plateau > MAX_PLATEAU:
        ok = False
    if x is not None and not np.asarray(x)[i] > 0:
        ok = False
    return ok, i, plateau


def _family_unimodal(fam: FFamily, chunk: int = 1024):
    """Unimodality and factor positivity over the bracketed domain grid of every pattern."""
    lo_j = below(fam.eps_min)
    hi_j = above(fam.eps_max)
    xs = GRID.points
    offs = np.arange(-GRID.half, GRID.half + 1)
    fails, flags, pos_fails = [], [], []
    argmax_x = np.empty(len(fam))
    for start in range(0, len(fam), chunk):
        idx = np.arange(start, min(len(fam), start + chunk))
        V = fam.evaluate(idx, np.broadcast_to(xs, (idx.size, xs.size)))
        inside = (offs[None, :] >= lo_j[idx, None]) & (offs[None, :] <= hi_j[idx, None])
        Vm = np.where(inside, V, -np.inf)
        am = np.argmax(Vm, axis=1)
        d = np.diff(V, axis=1)
        pair_in = inside[:, 1:] & inside[:, :-1]
        k = np.arange(d.shape[1])[None, :]
        bad_up = pair_in & (k < am[:, None]) & (d < 0)
        bad_down = pair_in & (k >= am[:, None]) & (d > 0)
        vmax = Vm[np.arange(idx.size), am]
        plateau = np.sum(Vm == vmax[:, None], axis=1)
        argmax_x[idx] = xs[am]
        mf = fam.min_factor(idx, np.broadcast_to(xs, (idx.size, xs.size)))
        lin = xs[None, :] + fam.lam_min[idx, None]
        nonpos = inside & ((mf <= 0) | (lin <= 0))
        for r in range(idx.size):
            p = str(fam.patterns[idx[r]])
            ok = not (bad_up[r].any() or bad_down[r].any()) and xs[am[r]] > 0
            if plateau[r] > 1:
                flags.append({"pattern": p, "plateau": int(plateau[r])})
            if not ok or plateau[r] > MAX_PLATEAU:
                fails.append({"pattern": p, "argmax": float(xs[am[r]])})
            if nonpos[r].any():
                pos_fails.append({"pattern": p, "epsilon": float(xs[np.argmax(nonpos[r])])})
    return fails, flags, pos_fails, argmax_x


# ---------------------------------------------------------------- bounds

def interval_lower_bound(ff: FFunction, lo: float, hi: float) -> float:
    """Lower bound for F_c on [lo, hi] from the two outward grid neighbours.

    The interval is first intersected with [eps_min, eps_max], where every
    perturbation actually lives; pseudo-concavity then gives F >= min of
    the values at the snapped endpoints.
    """
    if lo > hi:
        raise ValueError("lo must not exceed hi")
    e_lo, e_hi = ff.domain
    a, b = max(lo, e_lo), min(hi, e_hi)
    if a > b:
        raise DomainError(f"[{lo}, {hi}] misses the domain of {ff.pattern}")
    ja, jb = int(snap_down(a)), int(snap_up(b))
    return min(ff(GRID.x(ja)), ff(GRID.x(jb)))


def _family_interval_lb(fam: FFamily, pos: np.ndarray, lo: np.ndarray, hi: np.ndarray):
    """Vectorised interval_lower_bound; returns (bound, empty_mask)."""
    a = np.maximum(lo, fam.eps_min[pos])
    b = np.minimum(hi, fam.eps_max[pos])
    empty = a > b
    a = np.where(empty, fam.eps_min[pos], a)
    b = np.where(empty, fam.eps_min[pos], b)
    va = fam.evaluate(pos, GRID.x(snap_down(a)))
    vb = fam.evaluate(pos, GRID.x(snap_up(b)))
    return np.minimum(va, vb), empty


# ---------------------------------------------------------------- universal

@dataclass
class UniversalResult:
    zero: float
    negpert: float
    pos_t0: float
    pos_t1: float
    pos_t2: float
    witnesses: dict
    per_pattern_t0: np.ndarray = field(repr=False, default=None)

    def as_dict(self) -> dict:
        out = {}
        for k in ("zero", "negpert", "pos_t0", "pos_t1", "pos_t2"):
            v = getattr(self, k)
            out[k] = v if math.isfinite(v) else None
        return out


def verify_universal(fam: FFamily) -> UniversalResult:
    """Minimum over the family of each universal quantity."""
    P = len(fam)
    idx = np.arange(P)
    l1min, l1max = fam.lam_j_min[:, 1], fam.lam_j_max[:, 1]
    lmin, lmax = fam.lam_min, fam.lam_max
    c5 = fam.digits[:, 4]
    f0 = fam.evaluate(idx, np.zeros(P))
    fneg = fam.evaluate(idx, GRID.x(below(fam.eps_min)))
    t0 = np.minimum(f0, fam.evaluate(idx, l1max))
    t1 = np.minimum(fam.evaluate(idx, l1min), fam.evaluate(idx, l1max + lmax))
    t2 = np.minimum(fam.evaluate(idx, l1min + lmin), fam.evaluate(idx, l1max + 2 * lmax))
    t1 = np.where(c5 >= 2, t1, np.inf)
    t2 = np.where(c5 == 3, t2, np.inf)
    out = {}
    wit = {}
    for name, arr in (("zero", f0), ("negpert", fneg), ("pos_t0", t0), ("pos_t1", t1), ("pos_t2", t2)):
        i = int(np.argmin(arr))
        out[name] = float(arr[i])
        wit[name] = str(fam.patterns[i]) if np.isfinite(arr[i]) else None
    return UniversalResult(**out, witnesses=wit, per_pattern_t0=t0)


# ---------------------------------------------------------------- case table

# a coefficient is a number or the name of a pattern digit such as "c9"
Coef = float | str


@dataclass(frozen=True)
class Term:
    """coef * delta_{k+s+j} measured relative to q_{k+s}, i.e. coef * lambda_{c',j}."""

    coef: Coef
    j: int


@dataclass(frozen=True)
class FactorSpec:
    """One F factor: shift s of the pattern, counter t and the perturbation interval."""

    shift: int
    t: int
    lower: tuple[Term, ...]
    upper: tuple[Term, ...]


@dataclass(frozen=True)
class Variant:
    """A product of factors times a power of the universal t=0 bound."""

    factors: tuple[FactorSpec, ...]
    universal_power: int = 0
    label: str = ""


@dataclass(frozen=True)
class CaseSpec:
    """A negative-perturbation case.

    ``b`` maps j to the allowed range of b_{k+j}; ``tail`` restricts the
    parity of the minimal r > 5 with b_{k+r} >= 1 ('odd', 'even', 'none').
    ``a_conditions`` maps pattern position i to the allowed values of c_i.
    ``combination``: 'single' and 'product' use the full product of every
    factor; 'max' takes max(F_A, full product); 'forward' reuses the
    positive-perturbation bound of the pattern itself.
    """

    case_id: str
    b: dict
    tail: frozenset = frozenset({"odd", "even", "none"})
    a_conditions: dict = field(default_factory=dict)
    combination: str = "product"
    variants: tuple[Variant, ...] = ()
    target: float | None = None
    alternate: Variant | None = None
    note: str = ""


def T(*pairs) -> tuple[Term, ...]:
    return tuple(Term(c, j) for c, j in pairs)


ZERO: tuple[Term, ...] = ()
ANY = (0, 3)


def _f(shift, lower, upper=ZERO, t=0) -> FactorSpec:
    return FactorSpec(shift, t, lower, upper)


def _v(*factors, power=0, label="") -> tuple[Variant, ...]:
    return (Variant(tuple(factors), power, label),)


def case_table() -> list[CaseSpec]:
    """All negative-perturbation cases with their delta chains and stated constants."""
    C = []
    c6 = {6: {2, 3}}

    def add(cid, b, variants=(), comb="product", target=None, a=None, tail=None, alt=None, note=""):
        C.append(CaseSpec(cid, b, tail or frozenset({"odd", "even", "none"}), a or {}, comb,
                          variants, target, alt, note))

    # Case 1: b_{k+1} >= 1
    b11 = {1: (1, 1)}
    add("1.1.1.1", {**b11, 2: (0, 0), 3: (1, 3)},
        _v(_f(0, T((-1, 1), (-1, 2))), _f(1, T((1, 3)), T((1, 1)))), "product", 1.061, c6)
    add("1.1.1.2", {**b11, 2: (0, 0), 3: (0, 0), 4: (0, 0)},
        _v(_f(0, T((-1, 1), (-1, 4))), _f(1, T((-1, 4)), T((1, 3)))), "product", 1.2007, c6)
    add("1.1.1.3", {**b11, 2: (0, 0), 3: (0, 0), 4: (1, 1), 5: (0, 0), 6: (1, 3)},
        _v(_f(0, T((-1, 1), (1, 4))), _f(1, T((-1, 3), (-1, 4)))), "product", 1.0301, c6)
    add("1.1.1.4", {**b11, 2: (0, 0), 3: (0, 0), 4: (1, 1), 5: (0, 0), 6: (0, 0)},
        _v(_f(0, T((-1, 1), (0.5, 4))), _f(1, T((-1, 3), (-0.5, 4)))), "product", 1.1424, c6)
    add("1.1.1.5", {**b11, 2: (0, 0), 3: (0, 0), 4: (1, 1), 5: (1, 3)},
        _v(_f(0, T((-1, 1), (1, 5))), _f(1, T((-1, 3)))), "product", 1.1945, c6)
    add("1.1.1.6", {**b11, 2: (0, 0), 3: (0, 0), 4: (2, 2)},
        _v(_f(0, T((-1, 1), (1, 4), (1, 5))), _f(1, T((-2, 3), (-1, 4)))), "product", 1.0183,
        {**c6, 9: {2, 3}})
    add("1.1.1.7", {**b11, 2: (0, 0), 3: (0, 0), 4: (3, 3)},
        _v(_f(0, T((-1, 1), (2, 4), (1, 5))), _f(1, T((-1, 2)))), "product", 1.0189,
        {**c6, 9: {3}}, note="-3 delta_{k+4} - delta_{k+5} = -delta_{k+3} when a_{k+5} = 3")
    b112 = {**b11, 2: (1, 1)}
    a112 = {**c6, 7: {2, 3}}
    add("1.1.2.1", {**b112, 3: (0, 0), 4: (0, 0), 5: (0, 0)},
        _v(_f(0, T((-1, 1), (1, 2), (-0.5, 4))), _f(1, T((-1, 1), (-1, 4)))), "max", 1.0046, a112)
    add("1.1.2.2", {**b112, 3: (0, 0), 4: (0, 0), 5: (1, 3)},
        _v(_f(0, T((-1, 1), (1, 2), (-1, 4))), _f(1, T((-1, 1)))), "max", 1.071, a112)
    add("1.1.2.3", {**b112, 3: (0, 0), 4: (1, 3)},
        _v(_f(0, T((-1, 1), (1, 2), (1, 5))), _f(1, T((-1, 1), ("c9", 3), (-1, 4))), power=1),
        "max", 1.02901, a112,
        alt=Variant((_f(0, T((-1, 1), (1, 2), (1, 5))), _f(1, T((-1, 1), (-1, 3), (-1, 4)))), 1,
                    "printed bound, valid for b_{k+4} = 1"),
        note="b_{k+4} may reach a_{k+5}; the chain uses -a_{k+5} delta_{k+4}")
    add("1.1.2.4", {**b112, 3: (1, 3)},
        _v(_f(0, T((-1, 1), (1, 3))), _f(1, T((-1, 1), (1, 3)))), "max", 1.0705, {**a112, 8: {2, 3}})
    b113 = {**b11, 2: (2, 2)}
    a113 = {**c6, 7: {3}}
    add("1.1.3.1", {**b113, 3: (0, 0), 4: (0, 0), 5: (0, 0), 6: (0, 0)},
        _v(_f(0, T((-1, 1), (2, 2), (-0.5, 4))), _f(1, T((-2, 1), (-0.5, 4)))), "max", 1.03587, a113)
    add("1.1.3.2", {**b113, 3: (0, 0), 4: (0, 0), 5: (0, 0), 6: (1, 3)},
        _v(_f(0, T((-1, 1), (2, 2))), _f(1, T((-2, 1), (-1, 4)))), "max", 1.0139, a113)
    add("1.1.3.3", {**b113, 3: (0, 0), 4: (0, 0), 5: (1, 3)},
        _v(_f(0, T((-1, 1), (2, 2), (-1, 4))), _f(1, T((-2, 1)))), "max", 1.0466, a113)
    add("1.1.3.4", {**b113, 3: (0, 0), 4: (1, 1), 5: (0, 0)},
        _v(_f(0, T((-1, 1), (2, 2), (0.5, 4))), _f(1, T((-2, 1), (-1, 3), (-1, 4)))), "max", 1.0032, a113)
    add("1.1.3.5", {**b113, 3: (0, 0), 4: (1, 1), 5: (1, 3)},
        _v(_f(0, T((-1, 1), (2, 2), (1, 5))), _f(1, T((-2, 1), (-1, 3)))), "max", 1.0084, a113)
    add("1.1.3.6", {**b113, 3: (0, 0), 4: (2, 3)},
        _v(_f(0, T((-1, 1), (2, 2), (1, 4), (1, 5)))), "single", 1.0179, {**a113, 9: {2, 3}})
    add("1.1.3.7", {**b113, 3: (1, 3)},
        _v(_f(0, T((-1, 1), (1, 2), (1, 3))), _f(1, T((-2, 1), (1, 3)))), "max", 1.0325, {**a113, 8: {2, 3}})
    add("1.2", {1: (2, 2)},
        _v(_f(0, T((-2, 1), (-1, 2))), _f(1, T((1, 1)), T((1, 1), (1, 0)), t=1)), "product", 1.53477,
        {6: {3}})

    # Case 2: b_{k+1} = 0
    add("2.1", {1: (0, 0), 2: (1, 3)}, (), "forward", 1.14671)
    b22 = {1: (0, 0), 2: (0, 0)}
    b221 = {**b22, 3: (0, 0)}
    add("2.2.1.1", {**b221, 4: (0, 0), 5: (0, 0)},
        _v(_f(0, T((-0.5, 4)), T((1, 5)))), "single", 1.0841)
    add("2.2.1.2", {**b221, 4: (0, 0), 5: (1, 3)},
        _v(_f(0, T((-1, 4))), power=1), "product", 1.1296, tail=frozenset({"odd", "none"}))
    add("2.2.1.3", {**b221, 4: (0, 0), 5: (1, 3)},
        tuple(Variant((_f(0, T((-b5, 5))),), b5 - 1, f"b_{{k+5}}={b5}") for b5 in (1, 2, 3)),
        "product", 1.0596, tail=frozenset({"even"}))
    add("2.2.1.4", {**b221, 4: (1, 3)}, (), "forward", 1.14671)
    b222 = {**b22, 3: (1, 1), 4: (0, 0)}
    add("2.2.2.1", {**b222, 5: (0, 0)},
        _v(_f(0, T((-1, 3), (-0.5, 4))), _f(3, ZERO, T((1, 3)))), "product", 1.432,
        tail=frozenset({"odd", "none"}))
    add("2.2.2.2", {**b222, 5: (0, 0)},
        _v(_f(0, T((-1, 3))), _f(3, T((-1, 2)))), "max", 1.0535, tail=frozenset({"even"}))
    add("2.2.2.3", {**b222, 5: (1, 3)},
        _v(_f(0, T((-1, 3), (-1, 4))), _f(3, T((1, 3)), T((1, 1)))), "product", 1.434)
    b223 = {**b22, 3: (1, 1)}
    a223 = {9: {2, 3}}
    add("2.2.3.1", {**b223, 4: (1, 1), 5: (0, 0), 6: (0, 0)},
        _v(_f(0, T((-1, 3), (0.5, 4))), _f(3, T((-1, 1), (-0.5, 2)))), "max", 1.073, a223)
    add("2.2.3.2", {**b223, 4: (1, 1), 5: (0, 0), 6: (1, 3)},
        _v(_f(0, T((-1, 3), (1, 4))), _f(3, T((-1, 1), (-1, 2)))), "max", 1.063, a223)
    add("2.2.3.3", {**b223, 4: (1, 1), 5: (1, 3)},
        _v(_f(0, T((-1, 3), (1, 5))), _f(3, T((-1, 1), (1, 3)))), "max", 1.0622, a223)
    add("2.2.3.4", {**b223, 4: (2, 2), 5: (0, 0), 6: (0, 0)},
        _v(_f(0, T((-1, 3), (1.5, 4))), _f(3, T((-2, 1), (-0.5, 2)))), "max", 1.0659, {9: {3}},
        alt=Variant((_f(0, T((-1, 3), (1.5, 4))), _f(3, T((-2, 1), (0.5, 2)))), 0,
                    "printed bound with +0.5 lambda_{c',2}^min"),
        note="bound taken from the delta chain -2 delta_{k+4} - 0.5 delta_{k+5}")
    add("2.2.3.5", {**b223, 4: (2, 2), 5: (0, 0), 6: (1, 3)},
        _v(_f(0, T((-1, 3), (2, 4)))), "single", 1.0262, {9: {3}})
    add("2.2.3.6", {**b223, 4: (2, 2), 5: (1, 3)},
        _v(_f(0, T((-1, 3), (1, 4), (1, 5))), _f(3, T((-2, 1), (1, 3)))), "max", 1.0522, {9: {3}})
    add("2.2.4", {**b22, 3: (2, 2)},
        _v(_f(0, T((-2, 3), (-1, 4))), _f(3, ZERO, T((1, 0), (1, 1)), t=1)), "max", 1.14807, {8: {2, 3}})
    add("2.2.5", {**b22, 3: (3, 3)},
        _v(_f(0, T((-3, 3), (-1, 4))), _f(3, ZERO, T((1, 0), (1, 1)), t=1),
           _f(3, T((1, 0)), T((2, 0), (1, 1)), t=2)), "max", 1.4541, {8: {3}})
    return C


# ---------------------------------------------------------------- digit space

def _tail_parity(b6: int, tail: str) -> str:
    return "even" if b6 >= 1 else tail


def case_matches(spec: CaseSpec, b: Sequence[int], tail: str) -> bool:
    """Does the digit tuple (b_{k+1}, ..., b_{k+6}) with the given tail match the case?"""
    for j, (lo, hi) in spec.b.items():
        if not lo <= b[j - 1] <= hi:
            return False
    return _tail_parity(b[5], tail) in spec.tail


def legal_digit_tuples(a: Sequence[int]) -> list[tuple[int, ...]]:
    """Legal (b_{k+1}, ..., b_{k+6}) with b_k >= 1 for a = (a_{k+1}, ..., a_{k+7})."""
    out = []
    ranges = [range(0, a[j + 1] + 1) for j in range(6)]
    for b in itertools.product(*ranges):
        prev = 1  # b_k >= 1
        ok = True
        for j in range(6):
            if b[j] == a[j + 1] and prev != 0:
                ok = False
                break
            prev = b[j]
        if ok:
            out.append(b)
    return out


# ---------------------------------------------------------------- case evaluation

def _coef(coef: Coef, digits: np.ndarray) -> np.ndarray:
    if isinstance(coef, str):
        return digits[:, int(coef[1:]) - 1].astype(np.float64)
    return np.full(digits.shape[0], float(coef))


def _bound(fam: FFamily, pos: np.ndarray, terms: Sequence[Term], digits: np.ndarray,
           upper: bool) -> np.ndarray:
    out = np.zeros(pos.size)
    for t in terms:
        co = _coef(t.coef, digits)
        lmin, lmax = fam.lam_j_min[pos, t.j], fam.lam_j_max[pos, t.j]
        if upper:
            out += np.where(co > 0, co * lmax, co * lmin)
        else:
            out += np.where(co < 0, co * lmax, co * lmin)
    return out


def _eligible(spec: CaseSpec, digits: np.ndarray) -> np.ndarray:
    ok = np.ones(digits.shape[0], dtype=bool)
    for i, allowed in spec.a_conditions.items():
        ok &= np.isin(digits[:, i - 1], sorted(allowed))
    return ok


def _completion_positions(fam: FFamily, pos: np.ndarray, shift: int) -> list[np.ndarray]:
    idx = np.array([fam.patterns[p].index for p in pos], dtype=np.int64) if pos.size else np.zeros(0, np.int64)
    if shift == 0:
        return [pos]
    keep = idx % 3 ** (9 - shift)
    out = []
    for w in range(3**shift):
        cidx = keep * 3**shift + w
        cpos = fam.pos_of_index[cidx]
        if np.any(cpos < 0):
            raise KeyError(f"family lacks completions at shift {shift}")
        out.append(cpos)
    return out


def _variant_values(fam: FFamily, pos: np.ndarray, var: Variant, combination: str, u0: float):
    """Per-pattern lower bound of one variant, with the factor-A bound alongside."""
    digits = fam.digits[pos]
    factor_lbs = []
    empty_any = np.zeros(pos.size, dtype=bool)
    for fs in var.factors:
        lb_min = np.full(pos.size, np.inf)
        for cpos in _completion_positions(fam, pos, fs.shift):
            lo = _bound(fam, cpos, fs.lower, digits, upper=False)
            hi = _bound(fam, cpos, fs.upper, digits, upper=True)
            lb, empty = _family_interval_lb(fam, cpos, lo, hi)
            empty_any |= empty
            lb_min = np.minimum(lb_min, lb)
        factor_lbs.append(lb_min)
    A = factor_lbs[0]
    prod = np.prod(np.vstack(factor_lbs), axis=0) * u0**var.universal_power
    if combination == "max":
        val = np.maximum(A, prod)
    else:
        val = prod
    return val, empty_any


@dataclass
class CaseResult:
    id: str
    target: float | None
    min_value: float | None
    witness_pattern: str | None
    eligible_patterns: int
    min_margin: float | None
    target_gap: float | None
    passed: bool
    reproduces_target: bool | None
    alternate_value: float | None = None
    alternate_label: str | None = None
    empty_intervals: int = 0


def verify_case(spec: CaseSpec, fam: FFamily, universal: UniversalResult,
                patterns: Sequence[int] | None = None, threshold: float = DEFAULT_THRESHOLDS["cases"]
                ) -> CaseResult:
    """Minimum over eligible patterns (and completions) of the case combination."""
    pos = np.arange(len(fam)) if patterns is None else np.asarray(patterns, dtype=np.int64)
    pos = pos[_eligible(spec, fam.digits[pos])]
    u0 = universal.pos_t0
    alt_val = None
    empties = 0
    if pos.size == 0:
        vals = np.zeros(0)
    elif spec.combination == "forward":
        vals = universal.per_pattern_t0[pos]
    else:
        vals = np.full(pos.size, np.inf)
        for var in spec.variants:
            v, empty = _variant_values(fam, pos, var, spec.combination, u0)
            empties += int(empty.sum())
            vals = np.minimum(vals, v)
        if spec.alternate is not None:
            v, _ = _variant_values(fam, pos, spec.alternate, spec.combination, u0)
            alt_val = float(v.min())
    if not vals.size:
        # no eligible pattern: nothing to check
        return CaseResult(spec.case_id, spec.target, None, None, 0, None, None, True, None,
                          alt_val, spec.alternate.label if spec.alternate else None, 0)
    i = int(np.argmin(vals))
    mv, wit = float(vals[i]), str(fam.patterns[pos[i]])
    margin = mv - threshold
    gap = None if spec.target is None else mv - spec.target
    return CaseResult(
        spec.case_id, spec.target, mv, wit, int(pos.size), margin, gap,
        bool(margin > SAFETY and empties == 0),
        None if gap is None else bool(gap >= -TRANSCRIPTION_SLACK),
        alt_val, spec.alternate.label if spec.alternate else None, empties,
    )


# ---------------------------------------------------------------- report

@dataclass
class VerificationReport:
    params: dict
    global_status: str
    worst_margins: dict
    universal_values: dict
    universal_witnesses: dict
    sharp_targets_met: dict
    cases: list
    unimodality_failures: list
    plateau_flags: list
    positivity_failures: list
    restart_histogram: dict
    patterns_checked: int
    wall_time_seconds: float
    failures: list = field(default_factory=list)
    gated_checks: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)

    @classmethod
    def from_json(cls, text: str) -> "VerificationReport":
        return cls(**json.loads(text))

    def deterministic_view(self) -> dict:
        d = self.to_dict()
        d.pop("wall_time_seconds")
        return d

    @property
    def passed(self) -> bool:
        return self.global_status == "PASS"


def _closure(patterns: Sequence[Pattern], cases: Sequence[CaseSpec]) -> list[Pattern]:
    shifts = {fs.shift for sp in cases for v in sp.variants + ((sp.alternate,) if sp.alternate else ())
              for fs in v.factors if fs.shift}
    seen = {p.index: p for p in patterns}
    for p in patterns:
        for s in shifts:
            for q in shift_completions(p, s):
                seen.setdefault(q.index, q)
    return [seen[i] for i in sorted(seen)]


ALL_CHECKS = ("zero", "negpert", "pos_t0", "pos_t1", "pos_t2", "cases", "unimodality", "positivity")


def run_full(params: FParams = FULL_PARAMS, patterns: Sequence[Pattern] | None = None,
             jobs: int = 1, cache=None, thresholds: dict | None = None,
             family: FFamily | None = None, gate: Iterable[str] | None = None
             ) -> VerificationReport:
    """Build the family, then check unimodality, the universal bounds and every case.

    ``gate`` names the check groups that decide the global status (all by
    default); failures of other groups are still listed in the report.
    """
    gate = list(ALL_CHECKS if gate is None else gate)
    unknown = set(gate) - set(ALL_CHECKS)
    if unknown:
        raise ValueError(f"unknown checks {sorted(unknown)}")
    t_start = time.perf_counter()
    thr = dict(DEFAULT_THRESHOLDS)
    if thresholds:
        thr.update(thresholds)
    cases = case_table()
    base = list(patterns) if patterns is not None else enumerate_patterns()
    needed = _closure(base, cases)
    if family is None or any(family.pos_of_index[p.index] < 0 for p in needed):
        family = build_family(needed, params, cache=cache, jobs=jobs)
    base_pos = np.array(sorted(family.pos_of_index[p.index] for p in base), dtype=np.int64)

    # unimodality and positivity are checked on every function that is used
    uni_fail, plateau, pos_fail, _ = _family_unimodal(family)
    universal = verify_universal(family)
    # the universal minima are reported over the requested patterns only
    sub = _subfamily_universal(family, base_pos)

    failures = []
    worst = {}
    sharp = {}
    for name in ("zero", "negpert", "pos_t0", "pos_t1", "pos_t2"):
        val = getattr(sub, name)
        worst[name] = val - thr[name] if math.isfinite(val) else None
        if not math.isfinite(val):
            val = None
        if val is not None and not val - thr[name] > SAFETY:
            failures.append({"check": name, "group": name, "value": val, "threshold": thr[name],
                             "witness_pattern": sub.witnesses[name]})
        sharp[name] = None if val is None else bool(val - SHARP_TARGETS[name] > SAFETY)

    case_rows = []
    for spec in cases:
        r = verify_case(spec, family, universal, base_pos, thr["cases"])
        case_rows.append(asdict(r))
        if not r.passed:
            failures.append({"check": f"case {spec.case_id}", "group": "cases", "value": r.min_value,
                             "threshold": thr["cases"], "witness_pattern": r.witness_pattern})
    margins = [r["min_margin"] for r in case_rows if r["min_margin"] is not None]
    worst["cases"] = min(margins) if margins else None
    for f in uni_fail:
        failures.append({"check": "unimodality", "group": "unimodality", **f})
    for f in pos_fail:
        failures.append({"check": "positivity", "group": "positivity", **f})
    blocking = [f for f in failures if f["group"] in gate]

    hist = Counter(int(x) for x in family.restarts[base_pos])
    report = VerificationReport(
        params=params.as_dict(),
        global_status="PASS" if not blocking else "FAIL",
        worst_margins=worst,
        universal_values=sub.as_dict(),
        universal_witnesses=sub.witnesses,
        sharp_targets_met=sharp,
        cases=case_rows,
        unimodality_failures=uni_fail,
        plateau_flags=plateau,
        positivity_failures=pos_fail,
        restart_histogram={str(k): v for k, v in sorted(hist.items())},
        patterns_checked=int(base_pos.size),
        wall_time_seconds=round(time.perf_counter() - t_start, 3),
        failures=failures,
        gated_checks=gate,
    )
    return report


def _subfamily_universal(fam: FFamily, pos: np.ndarray) -> UniversalResult:
    full = verify_universal(fam)
    if pos.size == len(fam):
        return full
    P = pos.size
    l1min, l1max = fam.lam_j_min[pos, 1], fam.lam_j_max[pos, 1]
    lmin, lmax = fam.lam_min[pos], fam.lam_max[pos]
    c5 = fam.digits[pos, 4]
    f0 = fam.evaluate(pos, np.zeros(P))
    fneg = fam.evaluate(pos, GRID.x(below(fam.eps_min[pos])))
    t0 = np.minimum(f0, fam.evaluate(pos, l1max))
    t1 = np.where(c5 >= 2, np.minimum(fam.evaluate(pos, l1min), fam.evaluate(pos, l1max + lmax)), np.inf)
    t2 = np.where(c5 == 3, np.minimum(fam.evaluate(pos, l1min + lmin),
                                      fam.evaluate(pos, l1max + 2 * lmax)), np.inf)
    out, wit = {}, {}
    for name, arr in (("zero", f0), ("negpert", fneg), ("pos_t0", t0), ("pos_t1", t1), ("pos_t2", t2)):
        i = int(np.argmin(arr))
        out[name] = float(arr[i])
        wit[name] = str(fam.patterns[pos[i]]) if np.isfinite(arr[i]) else None
    return UniversalResult(**out, witnesses=wit, per_pattern_t0=full.per_pattern_t0)


# ---------------------------------------------------------------- empirical check

def empirical_liminf(alpha: EventuallyPeriodicCF, N_max: int) -> tuple[float, int]:
    """min_{1 <= N <= N_max} P_N(alpha) and the first N attaining it."""
    import warnings

    if N_max < 1:
        raise ValueError("N_max must be >= 1")
    if alpha.period and max(alpha.period) > 3:
        warnings.warn("partial quotients above 3 in the period", stacklevel=2)
    x = frac_multiples(alpha, 1, N_max + 1)
    s = np.abs(np.sin(np.pi * x))
    if np.any(s == 0.0):
        n = int(np.argmax(s == 0.0)) + 1
        return 0.0, n
    logs = np.cumsum(np.log(2.0 * s))
    i = int(np.argmin(logs))
    return float(math.exp(logs[i])), i + 1

"""The lower-bound functions F_c and the recursive W estimate.

For every pattern c the function

    F_c(eps) = 2 pi (eps + lambda_c^min) f_{c,inf}(eps) prod_{n<=n0} f_{c,n}(eps)

bounds the limit functions H_k from below along indices with pattern c.
``FFamily`` holds all patterns at once as numpy arrays so that grids over
every pattern can be evaluated in a few vectorised passes.
"""

from __future__ import annotations

import logging
import math
from functools import lru_cache
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Protocol, Sequence

import numpy as np

from .contfrac import EventuallyPeriodicCF, QuadSurd
from .pattern import (
    Pattern,
    PatternBounds,
    cf_max_exact,
    cf_min_exact,
    enumerate_patterns,
    pattern_bounds,
)

log = logging.getLogger(__name__)

__all__ = [
    "FParams",
    "FULL_PARAMS",
    "SMOKE_PARAMS",
    "WResult",
    "FFunction",
    "FFamily",
    "DomainError",
    "NonTerminationError",
    "g_values",
    "f_n",
    "e_n",
    "f_infinity",
    "w_minmax",
    "w_est",
    "W_algorithm",
    "build_ffunction",
    "build_family",
    "F_eval",
    "F_table",
    "GRID_STEP",
]

GRID_STEP = 0.001
# floors of n*x closer than this to an integer are decided in exact arithmetic
_FLOOR_GUARD = 1e-9
MAX_RESTARTS = 10_000
RESTART_FACTOR = 1.05
INIT_SLACK = 1e-6


class DomainError(ValueError):
    """Perturbation outside the evaluation domain of F_c."""


class NonTerminationError(RuntimeError):
    """The W recursion kept restarting."""


@dataclass(frozen=True)
class FParams:
    n0: int = 20
    T: int = 10000
    m: int = 40

    def __post_init__(self):
        if self.n0 < 10:
            raise ValueError("n0 must be >= 10")
        if self.T < self.n0 + 2:
            raise ValueError("T must be >= n0 + 2")
        if self.m < 1:
            raise ValueError("m must be >= 1")

    def as_dict(self) -> dict:
        return {"n0": self.n0, "T": self.T, "m": self.m}


FULL_PARAMS = FParams(20, 10000, 40)
SMOKE_PARAMS = FParams(20, 2000, 12)


# ---------------------------------------------------------------- w sums

def _as_surd(x) -> QuadSurd:
    if isinstance(x, QuadSurd):
        return x
    if isinstance(x, EventuallyPeriodicCF):
        return x.exact
    from fractions import Fraction
    return QuadSurd.from_fraction(Fraction(x))


def _floors(x: QuadSurd, T: int) -> tuple[np.ndarray, np.ndarray]:
    """floor(n x) (exact) and {n x} for n = 1..T."""
    n = np.arange(1, T + 1, dtype=np.float64)
    v = n * float(x)
    fl = np.floor(v)
    fr = v - fl
    for i in np.nonzero((fr < _FLOOR_GUARD) | (fr > 1 - _FLOOR_GUARD))[0]:
        fl[i] = x.scale(int(i) + 1).floor()
    fr = v - fl
    # an exact floor can disagree with the rounded product by one ulp
    return fl, np.clip(fr, 0.0, 1.0)


def _w_terms(x: QuadSurd, y: QuadSurd, T: int) -> tuple[np.ndarray, np.ndarray]:
    fx, rx = _floors(x, T)
    if y == x:
        fy, ry = fx, rx
    else:
        fy, ry = _floors(y, T)
    agree = fx == fy
    tmin = np.where(agree, 0.5 - ry, -0.5)
    tmax = np.where(agree, 0.5 - rx, 0.5)
    return tmin, tmax


def w_minmax(ell: int, x, y) -> tuple[float, float]:
    """(w_min, w_max) at ell for x <= y; sandwiches S_ell(z) for z in [x, y]."""
    xs, ys = _as_surd(x), _as_surd(y)
    if ys < xs:
        raise ValueError("w_minmax needs x <= y")
    tmin, tmax = _w_terms(xs, ys, ell)
    return math.fsum(tmin), math.fsum(tmax)


def _weights(n0: int, T: int) -> np.ndarray:
    ell = np.arange(n0 + 1, T + 1, dtype=np.float64)
    return 1.0 / (ell * (ell + 1.0))


def w_est(params: FParams, x, y) -> float:
    """max(|sum w_min(l)/(l(l+1))|, |sum w_max(l)/(l(l+1))|) over n0 < l <= T."""
    xs, ys = _as_surd(x), _as_surd(y)
    if ys < xs:
        raise ValueError("w_est needs x <= y")
    tmin, tmax = _w_terms(xs, ys, params.T)
    wt = _weights(params.n0, params.T)
    wmin = np.cumsum(tmin)[params.n0:]
    wmax = np.cumsum(tmax)[params.n0:]
    return float(max(abs(np.dot(wmin, wt)), abs(np.dot(wmax, wt))))


# ---------------------------------------------------------------- W recursion

@dataclass
class WResult:
    W: float
    restarts: int
    err_max: float
    leaves: list[tuple[int, ...]] = field(default_factory=list)
    worst_leaf: tuple[int, ...] = ()
    nodes: int = 0


def _interval(C: tuple[int, ...]) -> tuple[QuadSurd, QuadSurd]:
    return cf_min_exact(C).exact, cf_max_exact(C).exact


def W_algorithm_left(left: Sequence[int], params: FParams) -> WResult:
    """The W recursion started from the word ``left``."""
    left = tuple(left)
    memo: dict[tuple[int, ...], float] = {}

    def est(C):
        v = memo.get(C)
        if v is None:
            v = w_est(params, *_interval(C))
            memo[C] = v
        return v

    lo, hi = _interval(left)
    err = max(w_est(params, lo, lo), w_est(params, hi, hi)) + INIT_SLACK
    restarts = 0
    while True:
        # depth-first; a higher threshold only ever visits a subtree of the
        # previous attempt, so memoised estimates are reused verbatim
        stack = [left]
        leaves: list[tuple[int, ...]] = []
        best, worst = -1.0, left
        failed = False
        while stack:
            C = stack.pop()
            v = est(C)
            if v < err:
                leaves.append(C)
                if v > best:
                    best, worst = v, C
                continue
            if len(C) >= params.m:
                failed = True
                break
            stack.extend((C + (3,), C + (2,), C + (1,)))
        if not failed:
            return WResult(best, restarts, err, leaves, worst, len(memo))
        restarts += 1
        if restarts > MAX_RESTARTS:
            raise NonTerminationError(f"W recursion for {left} exceeded {MAX_RESTARTS} restarts")
        err *= RESTART_FACTOR


def W_algorithm(c, params: FParams) -> WResult:
    """W_c(n0, T, m), which depends on c only through (c_4, c_3, c_2, c_1)."""
    pb = pattern_bounds(c)
    return W_algorithm_left(pb.pattern.left, params)


# ---------------------------------------------------------------- factors

@lru_cache(maxsize=None)
def _g_structure(left: tuple[int, ...], n0: int) -> tuple[np.ndarray, np.ndarray]:
    """Case selector and {n cev_max} for n = 1..n0.

    Case 0: floors of n*cev_min and n*cev_max differ; case 1: they agree and
    {n cev_max} >= 1/2; case 2: they agree and {n cev_max} < 1/2.  All
    comparisons are exact.
    """
    lo, hi = cf_min_exact(left).exact, cf_max_exact(left).exact
    case = np.zeros(n0, dtype=np.int8)
    frac = np.zeros(n0)
    half = QuadSurd(1, 0, 0, 2)
    for n in range(1, n0 + 1):
        fh = hi.scale(n).floor()
        fr = hi.scale(n).shift(-fh)
        frac[n - 1] = float(fr)
        if fh != lo.scale(n).floor():
            case[n - 1] = 0
        elif fr < half:
            case[n - 1] = 2
        else:
            case[n - 1] = 1
    return case, frac


def g_values(bounds: PatternBounds, n0: int) -> np.ndarray:
    """g_{c,n} for n = 1..n0."""
    case, frac = _g_structure(bounds.pattern.left, n0)
    n = np.arange(1, n0 + 1, dtype=np.float64)
    lmax, lmin = bounds.lambda_max, bounds.lambda_min
    return np.where(case == 0, (1.0 - lmax / (2 * n)) ** 2,
                    np.where(case == 1, (1.0 - lmax * (frac - 0.5) / n) ** 2,
                             (1.0 - lmin * (frac - 0.5) / n) ** 2))


def e_n(bounds: PatternBounds, n: int, eps):
    eps = np.asarray(eps, dtype=np.float64)
    a = (eps + bounds.lambda_max / 2) ** 2
    b = (eps + bounds.lambda_min / 2) ** 2
    return np.maximum(a, b) / n**2


def f_n(bounds: PatternBounds, n: int, eps, g: np.ndarray | None = None):
    """f_{c,n}(eps) = g_{c,n} - e_{c,n}(eps)."""
    if g is None:
        g = g_values(bounds, n)
    return g[n - 1] - e_n(bounds, n, eps)


def f_infinity(bounds: PatternBounds, params: FParams, W: float, eps):
    eps = np.asarray(eps, dtype=np.float64)
    lm = bounds.lambda_max
    n0, T = params.n0, params.T
    E = lm + (eps * lm + eps**2) / (n0 + 1)
    tail = 4.5 * (1.0 + math.log(T)) / T
    return 1.0 - (2 * lm * (W + tail) + (lm**2 / 4 + (eps + 0.5 * lm) ** 2 + E**2) / n0)


@dataclass
class FFunction:
    pattern: Pattern
    bounds: PatternBounds
    params: FParams
    W: float
    g: np.ndarray
    restarts: int = 0

    @property
    def domain(self) -> tuple[float, float]:
        return self.bounds.eps_min, self.bounds.eps_max

    @property
    def eval_domain(self) -> tuple[float, float]:
        # one grid step of slack on both sides for bracketing grid points
        return self.bounds.eps_min - GRID_STEP, self.bounds.eps_max + GRID_STEP

    def factors(self, eps) -> np.ndarray:
        """Array of shape (n0 + 2, len(eps)): linear factor, f_inf, f_1..f_n0."""
        eps = np.atleast_1d(np.asarray(eps, dtype=np.float64))
        b = self.bounds
        rows = [2 * math.pi * (eps + b.lambda_min), f_infinity(b, self.params, self.W, eps)]
        for n in range(1, self.params.n0 + 1):
            rows.append(f_n(b, n, eps, self.g))
        return np.vstack(rows)

    def __call__(self, eps, check: bool = True):
        e = np.asarray(eps, dtype=np.float64)
        if check:
            lo, hi = self.eval_domain
            if np.any((e < lo - 1e-12) | (e > hi + 1e-12)):
                raise DomainError(f"perturbation outside [{lo:.6f}, {hi:.6f}] for {self.pattern}")
        v = np.prod(self.factors(e), axis=0)
        return float(v[0]) if e.ndim == 0 else v


def build_ffunction(c, params: FParams, W: WResult | float | None = None) -> FFunction:
    pb = pattern_bounds(c)
    restarts = 0
    if W is None:
        W = W_algorithm(pb.pattern, params)
    if isinstance(W, WResult):
        W, restarts = W.W, W.restarts
    return FFunction(pb.pattern, pb, params, float(W), g_values(pb, params.n0), restarts)


def F_eval(ff: FFunction, epsilon: float) -> float:
    """F_c(eps); raises DomainError outside the evaluation domain."""
    return ff(float(epsilon))


def F_table(ff: FFunction, grid: Iterable[float]) -> list[tuple[float, float | None]]:
    """(eps, F(eps)) rows; points outside [eps_min, eps_max] carry None."""
    lo, hi = ff.domain
    pts = [float(x) for x in grid]
    inside = [x for x in pts if lo <= x <= hi]
    vals = dict(zip(inside, ff(np.array(inside), check=False).tolist())) if inside else {}
    return [(x, vals.get(x)) for x in pts]


# ---------------------------------------------------------------- all patterns

class WCacheLike(Protocol):
    def get(self, pattern: str, n0: int, T: int, m: int): ...
    def put_many(self, entries, params) -> None: ...


def _w_job(args):
    left, params = args
    r = W_algorithm_left(left, params)
    return left, r.W, r.restarts


def compute_W_table(lefts: Sequence[tuple[int, ...]], params: FParams,
                    jobs: int = 1) -> dict[tuple[int, ...], tuple[float, int]]:
    """W and restart count for every distinct left word."""
    todo = sorted(set(lefts))
    if jobs > 1 and len(todo) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            res = list(ex.map(_w_job, [(l, params) for l in todo]))
    else:
        res = [_w_job((l, params)) for l in todo]
    return {left: (W, r) for left, W, r in res}


@dataclass
class FFamily:
    """F_c for a list of patterns stored column-wise."""

    params: FParams
    patterns: list[Pattern]
    lam_min: np.ndarray
    lam_max: np.ndarray
    eps_min: np.ndarray
    eps_max: np.ndarray
    W: np.ndarray
    restarts: np.ndarray
    g: np.ndarray  # shape (P, n0)
    lam_j_min: np.ndarray  # shape (P, 6), column 0 is lambda_c^min
    lam_j_max: np.ndarray
    _index: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        self._index = {str(p): i for i, p in enumerate(self.patterns)}
        # position in this family of every lexicographic pattern index, -1 if absent
        self.pos_of_index = np.full(3**9, -1, dtype=np.int64)
        self.pos_of_index[[p.index for p in self.patterns]] = np.arange(len(self.patterns))
        self.digits = np.array([p.digits for p in self.patterns], dtype=np.int64).reshape(-1, 9)

    def __len__(self):
        return len(self.patterns)

    def position(self, c) -> int:
        return self._index[str(c)]

    def ffunction(self, c) -> FFunction:
        i = self.position(c)
        p = self.patterns[i]
        return FFunction(p, pattern_bounds(p), self.params, float(self.W[i]), self.g[i].copy(),
                         int(self.restarts[i]))

    def evaluate(self, idx: np.ndarray, eps: np.ndarray) -> np.ndarray:
        """F at eps[i, j] for pattern idx[i]; eps may be 1-d (one point per pattern)."""
        idx = np.asarray(idx)
        eps = np.asarray(eps, dtype=np.float64)
        squeeze = eps.ndim == 1
        if squeeze:
            eps = eps[:, None]
        lmin = self.lam_min[idx][:, None]
        lmax = self.lam_max[idx][:, None]
        n0, T = self.params.n0, self.params.T
        out = 2 * math.pi * (eps + lmin)
        E = lmax + (eps * lmax + eps**2) / (n0 + 1)
        tail = 4.5 * (1.0 + math.log(T)) / T
        out = out * (1.0 - (2 * lmax * (self.W[idx][:, None] + tail)
                            + (lmax**2 / 4 + (eps + 0.5 * lmax) ** 2 + E**2) / n0))
        emax = (eps + lmax / 2) ** 2
        emin = (eps + lmin / 2) ** 2
        ee = np.maximum(emax, emin)
        for n in range(1, n0 + 1):
            out = out * (self.g[idx, n - 1][:, None] - ee / n**2)
        return out[:, 0] if squeeze else out

    def min_factor(self, idx: np.ndarray, eps: np.ndarray) -> np.ndarray:
        """Smallest of f_inf, f_1..f_n0 at each point (positivity check)."""
        idx = np.asarray(idx)
        eps = np.asarray(eps, dtype=np.float64)
        lmin = self.lam_min[idx][:, None]
        lmax = self.lam_max[idx][:, None]
        n0, T = self.params.n0, self.params.T
        E = lmax + (eps * lmax + eps**2) / (n0 + 1)
        tail = 4.5 * (1.0 + math.log(T)) / T
        m = 1.0 - (2 * lmax * (self.W[idx][:, None] + tail)
                   + (lmax**2 / 4 + (eps + 0.5 * lmax) ** 2 + E**2) / n0)
        ee = np.maximum((eps + lmax / 2) ** 2, (eps + lmin / 2) ** 2)
        for n in range(1, n0 + 1):
            m = np.minimum(m, self.g[idx, n - 1][:, None] - ee / n**2)
        return m

    def F(self, c, eps):
        """F_c at one or more perturbations."""
        i = self.position(c)
        e = np.atleast_1d(np.asarray(eps, dtype=np.float64))
        v = self.evaluate(np.array([i]), e[None, :])[0]
        return float(v[0]) if np.ndim(eps) == 0 else v


def build_family(patterns: Sequence[Pattern] | None = None, params: FParams = FULL_PARAMS,
                 cache: WCacheLike | None = None, jobs: int = 1) -> FFamily:
    """Construct F_c for the given patterns (all 3^9 by default)."""
    pats = list(patterns) if patterns is not None else enumerate_patterns()
    bounds = [pattern_bounds(p) for p in pats]
    W = np.empty(len(pats))
    R = np.zeros(len(pats), dtype=np.int64)
    missing = []
    for i, p in enumerate(pats):
        hit = cache.get(str(p), params.n0, params.T, params.m) if cache is not None else None
        if hit is not None:
            W[i], R[i] = hit.W, hit.restarts
        else:
            missing.append(i)
    if missing:
        table = compute_W_table([pats[i].left for i in missing], params, jobs)
        new_entries = []
        for i in missing:
            W[i], R[i] = table[pats[i].left]
            new_entries.append((str(pats[i]), float(W[i]), int(R[i])))
        if cache is not None:
            cache.put_many(new_entries, params)
    g = np.vstack([g_values(b, params.n0) for b in bounds])
    return FFamily(
        params, pats,
        np.array([b.lambda_min for b in bounds]),
        np.array([b.lambda_max for b in bounds]),
        np.array([b.eps_min for b in bounds]),
        np.array([b.eps_max for b in bounds]),
        W, R, g,
        np.array([b.lambda_j_min for b in bounds]).reshape(-1, 6),
        np.array([b.lambda_j_max for b in bounds]).reshape(-1, 6),
    )


"""Command-line front end and the on-disk W cache.

Exit codes: 0 success / PASS, 1 verification FAIL, 2 usage or internal error.
"""

from __future__ import annotations

import argparse
import csv
import fcntl
import json
import logging
import os
import random
import sys
import tempfile
import time
from contextlib import contextmanager, nullcontext
from dataclasses import asdict, dataclass
from pathlib import Path

from .contfrac import CFError, parse_cf
from .ffamily import SMOKE_PARAMS, FParams, W_algorithm, build_family, build_ffunction
from .pattern import N_PATTERNS, Pattern, enumerate_patterns
from .sudler import (
    WorkBudgetError,
    H_limit,
    decompose_check,
    perturbed_product,
    sudler_product,
)
from .verify import GRID, empirical_liminf, run_full

log = logging.getLogger("sudlercert")

CACHE_FILE = "wcache.jsonl"
SMOKE_SAMPLE = 200
SMOKE_SEED = 0


# ---------------------------------------------------------------- cache

@dataclass(frozen=True)
class WCacheEntry:
    pattern: str
    n0: int
    T: int
    m: int
    W: float
    restarts: int
    created_at: float

    @property
    def key(self):
        return (self.pattern, self.n0, self.T, self.m)


class WCache:
    """Line-delimited JSON records of W values keyed by (pattern, n0, T, m).

    Writers take an exclusive lock, rewrite the file to a temporary sibling
    and rename it into place, so readers always see a complete file.
    """

    def __init__(self, directory):
        self.dir = Path(directory)
        self.dir.mkdir(parents=True, exist_ok=True)
        if not os.access(self.dir, os.W_OK):
            raise OSError(f"cache directory {self.dir} is not writable")
        self.path = self.dir / CACHE_FILE
        self._lock_path = self.dir / (CACHE_FILE + ".lock")
        self._entries: dict | None = None

    @contextmanager
    def _locked(self):
        with open(self._lock_path, "a") as fh:
            fcntl.flock(fh, fcntl.LOCK_EX)
            try:
                yield
            finally:
                fcntl.flock(fh, fcntl.LOCK_UN)

    def _read(self) -> dict:
        out = {}
        if not self.path.exists():
            return out
        with open(self.path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, 1):
                if not line.strip():
                    continue
                try:
                    e = WCacheEntry(**json.loads(line))
                    if e.W < 0:
                        raise ValueError("negative W")
                except (ValueError, TypeError) as exc:
                    log.warning("skipping corrupt cache line %d in %s: %s", lineno, self.path, exc)
                    continue
                out[e.key] = e
        return out

    def load(self) -> dict:
        if self._entries is None:
            self._entries = self._read()
        return self._entries

    def get(self, pattern: str, n0: int, T: int, m: int) -> WCacheEntry | None:
        return self.load().get((str(pattern), n0, T, m))

    def put(self, entry: WCacheEntry) -> None:
        self._write([entry])

    def put_many(self, entries, params: FParams) -> None:
        now = time.time()
        self._write([WCacheEntry(p, params.n0, params.T, params.m, W, r, now) for p, W, r in entries])

    def _write(self, new: list) -> None:
        with self._locked():
            current = self._read()
            lines = []
            if self.path.exists():
                lines = [ln.rstrip("\n") for ln in self.path.read_text(encoding="utf-8").splitlines()
                         if ln.strip()]
            for e in new:
                if e.W < 0:
                    raise ValueError("W must be non-negative")
                if e.key in current:
                    continue
                current[e.key] = e
                lines.append(json.dumps(asdict(e), sort_keys=True))
            fd, tmp = tempfile.mkstemp(dir=self.dir, prefix=".wcache-", suffix=".tmp")
            with os.fdopen(fd, "w", encoding="utf-8") as fh:
                fh.write("\n".join(lines) + ("\n" if lines else ""))
                fh.flush()
                os.fsync(fh.fileno())
            os.replace(tmp, self.path)
            self._entries = current

    def __len__(self):
        return len(self.load())


def default_cache_dir() -> Path | None:
    d = os.environ.get("SUDLER_CACHE_DIR")
    return Path(d) if d else None


# ---------------------------------------------------------------- helpers

def _fmt(x: float) -> str:
    # repr is locale-independent and round-trips
    return repr(float(x))


def _open_out(target: str | None):
    if target in (None, "-", "csv"):
        return nullcontext(sys.stdout)
    return open(target, "w", encoding="utf-8", newline="")


def _params(ns) -> FParams:
    if getattr(ns, "smoke", False):
        return SMOKE_PARAMS
    return FParams(ns.n0, ns.T, ns.m)


def _parse_patterns(text: str | None) -> list[Pattern] | None:
    if not text:
        return None
    if text.startswith("@"):
        items = Path(text[1:]).read_text().split()
    else:
        items = text.replace(",", " ").split()
    return [Pattern.parse(x) for x in items]


def smoke_patterns(n: int = SMOKE_SAMPLE, seed: int = SMOKE_SEED) -> list[Pattern]:
    idx = sorted(random.Random(seed).sample(range(N_PATTERNS), n))
    return [Pattern.from_index(i) for i in idx]


def _cache(ns) -> WCache | None:
    d = ns.cache or default_cache_dir()
    return WCache(d) if d else None


# ---------------------------------------------------------------- commands

def cmd_eval(ns) -> int:
    print(_fmt(sudler_product(parse_cf(ns.alpha), ns.N)))
    return 0


def cmd_perturbed(ns) -> int:
    print(_fmt(perturbed_product(parse_cf(ns.alpha), ns.n, ns.eps)))
    return 0


def cmd_hk(ns) -> int:
    r = H_limit(parse_cf(ns.alpha), ns.k, ns.eps)
    print(_fmt(r.value))
    return 0


def cmd_decompose(ns) -> int:
    r = decompose_check(parse_cf(ns.alpha), ns.N)
    print(f"lhs={_fmt(r.lhs)} rhs={_fmt(r.rhs)} rel_error={_fmt(r.rel_error)}")
    return 0


def cmd_fc_table(ns) -> int:
    params = _params(ns)
    c = Pattern.parse(ns.pattern)
    cache = _cache(ns)
    hit = cache.get(str(c), params.n0, params.T, params.m) if cache is not None else None
    if hit is not None:
        ff = build_ffunction(c, params, hit.W)
    else:
        res = W_algorithm(c, params)
        if cache is not None:
            cache.put_many([(str(c), res.W, res.restarts)], params)
        ff = build_ffunction(c, params, res)
    lo, hi = ff.domain
    xs = [x for x in GRID.points if lo <= x <= hi]
    with _open_out(ns.out) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["epsilon", "value"])
        for x in xs:
            w.writerow([f"{x:.3f}", _fmt(ff(x))])
    return 0


def cmd_wtable(ns) -> int:
    params = _params(ns)
    pats = _parse_patterns(ns.patterns) or (smoke_patterns() if ns.smoke else enumerate_patterns())
    cache = _cache(ns)

    fam = build_family(pats, params, cache=cache, jobs=ns.jobs)
    with _open_out(ns.out) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["pattern", "n0", "T", "m", "W", "restarts"])
        for i, p in enumerate(fam.patterns):
            w.writerow([str(p), params.n0, params.T, params.m, _fmt(fam.W[i]), int(fam.restarts[i])])
    return 0


def cmd_verify(ns) -> int:
    params = _params(ns)
    pats = _parse_patterns(ns.patterns)
    gate = None
    thresholds = {}
    if ns.smoke:
        pats = pats or smoke_patterns()
        gate = ["zero"]
        thresholds["zero"] = 1.0
    if ns.require_zero is not None:
        thresholds["zero"] = ns.require_zero
    report = run_full(params, pats, jobs=ns.jobs, cache=_cache(ns), thresholds=thresholds, gate=gate)
    text = report.to_json()
    if ns.out:
        Path(ns.out).write_text(text + "\n", encoding="utf-8")
    else:
        print(text)
    summary = f"{report.global_status}: {report.patterns_checked} patterns"
    for f in report.failures:
        if f["group"] in report.gated_checks:
            summary += f"\n  failed {f['check']} (witness {f.get('witness_pattern') or f.get('pattern')})"
    print(summary, file=sys.stderr)
    return 0 if report.passed else 1


def cmd_liminf(ns) -> int:
    v, n = empirical_liminf(parse_cf(ns.alpha), ns.N)
    print(f"min={_fmt(v)} argmin={n}")
    return 0


# ---------------------------------------------------------------- parser

def _add_params(p):
    p.add_argument("--n0", type=int, default=20)
    p.add_argument("--T", type=int, default=10000)
    p.add_argument("--m", type=int, default=40)
    p.add_argument("--smoke", action="store_true", help="use (n0,T,m)=(20,2000,12) on a 200-pattern sample")
    p.add_argument("--cache", help="W cache directory (default $SUDLER_CACHE_DIR)")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="sudlercert", description="Sudler product lower-bound certificates")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("eval", help="P_N(alpha)")
    p.add_argument("--alpha", required=True)
    p.add_argument("--N", type=int, required=True)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("perturbed", help="P_{q_n}(alpha, eps)")
    p.add_argument("--alpha", required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--eps", type=float, required=True)
    p.set_defaults(func=cmd_perturbed)

    p = sub.add_parser("hk", help="H_k(alpha, eps)")
    p.add_argument("--alpha", required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--eps", type=float, default=0.0)
    p.set_defaults(func=cmd_hk)

    p = sub.add_parser("decompose-check", help="compare P_N with its Ostrowski decomposition")
    p.add_argument("--alpha", required=True)
    p.add_argument("--N", type=int, required=True)
    p.set_defaults(func=cmd_decompose)

    p = sub.add_parser("fc-table", help="CSV of F_c on the in-domain grid")
    p.add_argument("--pattern", required=True)
    p.add_argument("--out", default="csv", help="file path, or 'csv' / '-' for stdout")
    _add_params(p)
    p.set_defaults(func=cmd_fc_table)

    p = sub.add_parser("wtable", help="CSV of W values")
    p.add_argument("--patterns", help="comma separated list or @file")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out", default="-")
    _add_params(p)
    p.set_defaults(func=cmd_wtable)

    p = sub.add_parser("verify", help="run the full verification")
    p.add_argument("--patterns", help="comma separated list or @file")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out", help="write the JSON report here instead of stdout")
    p.add_argument("--require-zero", type=float, default=None,
                   help="override the F(0) threshold (for testing the failure path)")
    _add_params(p)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("liminf", help="min_{N <= N_max} P_N(alpha)")
    p.add_argument("--alpha", required=True)
    p.add_argument("--N", type=int, default=10**5)
    p.set_defaults(func=cmd_liminf)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        ns = ap.parse_args(argv)
    except SystemExit as e:
        return 0 if e.code == 0 else 2
    logging.basicConfig(level=logging.INFO if ns.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        return ns.func(ns)
    except (CFError, ValueError, WorkBudgetError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # internal error
        log.exception("internal error: %s", exc)
        return 2


if __name__ == "__main__":
    sys.exit(main())

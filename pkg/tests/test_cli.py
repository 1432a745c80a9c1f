import csv
import io
import json
import multiprocessing as mp

import pytest

from sudlercert.cli import WCache, WCacheEntry, main, smoke_patterns
from sudlercert.ffamily import SMOKE_PARAMS, W_algorithm

PATS = "123123123,313131313,222222222"


def run(argv, capsys):
    code = main(argv)
    out, err = capsys.readouterr()
    return code, out, err


# ---------------------------------------------------------------- cache

def test_cache_put_get(tmp_path):
    c = WCache(tmp_path)
    e = WCacheEntry("123123123", 20, 2000, 12, 0.0123, 0, 1.0)
    c.put(e)
    assert c.get("123123123", 20, 2000, 12) == e
    assert WCache(tmp_path).get("123123123", 20, 2000, 12) == e
    assert c.get("123123123", 20, 2000, 13) is None
    assert len(c) == 1


def test_cache_rejects_negative(tmp_path):
    with pytest.raises(ValueError):
        WCache(tmp_path).put(WCacheEntry("123123123", 20, 2000, 12, -1.0, 0, 1.0))


def test_cache_skips_corrupt_lines(tmp_path, caplog):
    c = WCache(tmp_path)
    c.put(WCacheEntry("111111111", 20, 2000, 12, 0.02, 1, 1.0))
    with open(c.path, "a") as fh:
        fh.write("{not json\n")
        fh.write('{"pattern": "222222222"}\n')
    fresh = WCache(tmp_path)
    assert len(fresh) == 1
    assert "corrupt" in caplog.text


def _writer(args):
    d, i = args
    WCache(d).put_many([(f"{i}{i}{i}{i}{i}{i}{i}{i}{i}", 0.01 * i, 0)], SMOKE_PARAMS)


def test_cache_concurrent_writers(tmp_path):
    ctx = mp.get_context("fork")
    with ctx.Pool(3) as pool:
        pool.map(_writer, [(str(tmp_path), i) for i in (1, 2, 3)])
    c = WCache(tmp_path)
    assert len(c) == 3
    assert c.get("222222222", 20, 2000, 12).W == pytest.approx(0.02)


def test_fc_table_uses_and_fills_cache(tmp_path, capsys):
    code, out1, _ = run(["fc-table", "--pattern", "123123123", "--smoke", "--cache", str(tmp_path)], capsys)
    assert code == 0
    entry = WCache(tmp_path).get("123123123", 20, 2000, 12)
    assert entry.W == W_algorithm("123123123", SMOKE_PARAMS).W
    code, out2, _ = run(["fc-table", "--pattern", "123123123", "--smoke", "--cache", str(tmp_path)], capsys)
    assert out1 == out2


# ---------------------------------------------------------------- commands

def test_eval_golden_ratio(capsys):
    code, out, _ = run(["eval", "--alpha", "[0;(1)]", "--N", "6765"], capsys)
    assert code == 0 and abs(float(out) - 2.407) < 0.01


def test_hk_and_perturbed(capsys):
    code, out, _ = run(["hk", "--alpha", "[0;(1)]", "--k", "15", "--eps", "0"], capsys)
    assert code == 0 and float(out) > 0
    code, out, _ = run(["perturbed", "--alpha", "[0;(1)]", "--n", "15", "--eps", "0.1"], capsys)
    assert code == 0 and float(out) > 0


def test_decompose_check(capsys):
    code, out, _ = run(["decompose-check", "--alpha", "[0;(1,2,3)]", "--N", "12345"], capsys)
    assert code == 0
    rel = float(out.split("rel_error=")[1])
    assert rel < 1e-9


def test_liminf(capsys):
    code, out, _ = run(["liminf", "--alpha", "[0;(3)]", "--N", "1000"], capsys)
    assert code == 0 and out.startswith("min=")


def test_usage_errors(capsys):
    assert run(["eval", "--alpha", "[0;1,2,x]", "--N", "5"], capsys)[0] == 2
    assert run(["eval"], capsys)[0] == 2
    assert run(["nosuchcommand"], capsys)[0] == 2
    code, _, err = run(["fc-table", "--pattern", "12345"], capsys)
    assert code == 2 and "9 digits" in err


def test_fc_table_csv(capsys):
    code, out, _ = run(["fc-table", "--pattern", "131313131", "--smoke"], capsys)
    assert code == 0
    rows = list(csv.reader(io.StringIO(out)))
    assert rows[0] == ["epsilon", "value"]
    xs = [float(r[0]) for r in rows[1:]]
    assert xs == sorted(xs) and len(xs) > 100
    assert all(float(r[1]) >= 0 for r in rows[1:])


def test_wtable(capsys):
    code, out, _ = run(["wtable", "--patterns", PATS, "--smoke"], capsys)
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    assert [r["pattern"] for r in rows] == PATS.split(",")
    for r in rows:
        assert float(r["W"]) == W_algorithm(r["pattern"], SMOKE_PARAMS).W


def test_patterns_from_file(tmp_path, capsys):
    f = tmp_path / "p.txt"
    f.write_text("\n".join(PATS.split(",")))
    code, out, _ = run(["wtable", "--patterns", f"@{f}", "--smoke"], capsys)
    assert code == 0 and len(out.strip().splitlines()) == 4


def test_verify_exit_codes(tmp_path, capsys):
    out = tmp_path / "r.json"
    code, _, err = run(["verify", "--smoke", "--patterns", PATS, "--out", str(out)], capsys)
    assert code == 0 and err.startswith("PASS")
    assert json.loads(out.read_text())["global_status"] == "PASS"
    code, _, err = run(["verify", "--smoke", "--patterns", PATS, "--require-zero", "3"], capsys)
    assert code == 1 and "failed zero" in err


def _strip_wall(text):
    d = json.loads(text)
    d.pop("wall_time_seconds")
    return json.dumps(d, sort_keys=True)


def test_outputs_repeatable(tmp_path, capsys):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    for p in (a, b):
        assert main(["wtable", "--patterns", PATS, "--smoke", "--out", str(p)]) == 0
    assert a.read_bytes() == b.read_bytes()
    r1, r2, r3 = (tmp_path / f"r{i}.json" for i in range(3))
    assert main(["verify", "--smoke", "--patterns", PATS, "--out", str(r1)]) == 0
    assert main(["verify", "--smoke", "--patterns", PATS, "--out", str(r2)]) == 0
    assert main(["verify", "--smoke", "--patterns", PATS, "--jobs", "2", "--out", str(r3)]) == 0
    capsys.readouterr()
    # everything except the timing field is byte-identical
    assert _strip_wall(r1.read_text()) == _strip_wall(r2.read_text()) == _strip_wall(r3.read_text())


@pytest.mark.slow
def test_verify_smoke_preset(capsys):
    assert len(smoke_patterns()) == 200
    code, _, err = run(["verify", "--smoke"], capsys)
    assert code == 0 and "PASS: 200 patterns" in err

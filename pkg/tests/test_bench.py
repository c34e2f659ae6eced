import json
import subprocess
import sys
from fractions import Fraction

import numpy as np
import pytest

from pbist import Config
from pbist.bench import (
    CSV_HEADER, InputError, WorkloadSpec, gen_workload, main, read_keys, run_bench, setops_cmd,
)


def test_spec_validation():
    for kw in ({"key_range": 0}, {"prob": 0}, {"prob": Fraction(3, 2)}, {"batch_size": 0},
               {"op_mix": [("upsert", 5)]}, {"reps": 0}):
        with pytest.raises(ValueError):
            WorkloadSpec(**kw)


def test_full_probability_takes_every_key():
    initial, batches = gen_workload(WorkloadSpec(key_range=10, prob=1, batch_size=5))
    assert initial.tolist() == list(range(-10, 11))
    assert len(batches) == 3
    for b in batches:
        assert np.all(np.diff(b) > 0) and b.min() >= -10 and b.max() <= 10


def test_workload_is_deterministic():
    spec = WorkloadSpec(key_range=10**4, batch_size=100, seed=7)
    a, b = gen_workload(spec), gen_workload(spec)
    assert np.array_equal(a[0], b[0])
    assert all(np.array_equal(x, y) for x, y in zip(a[1], b[1]))
    other = gen_workload(WorkloadSpec(key_range=10**4, batch_size=100, seed=8))
    assert not np.array_equal(a[0], other[0])


def test_binomial_initial_size():
    r = 10**6
    initial, _ = gen_workload(WorkloadSpec(key_range=r, prob=Fraction(1, 2), batch_size=1))
    n = 2 * r + 1
    sigma = (n * 0.25) ** 0.5
    assert abs(len(initial) - n / 2) <= 3 * sigma
    assert np.all(np.diff(initial) > 0)


def tiny(**kw):
    return WorkloadSpec(key_range=2000, batch_size=300, reps=2, **kw)


def test_one_row_per_op():
    report = run_bench(tiny(), [1])
    assert [(r.op, r.workers) for r in report.rows] == [
        ("contains", 1), ("insert", 1), ("remove", 1)]
    assert all(r.reps == 2 and r.ms >= 0 and r.batch == 300 for r in report.rows)


def test_baseline_rows():
    report = run_bench(tiny(op_mix=[("contains", 100)]), [1, 2], baseline=True)
    assert [r.op for r in report.rows] == ["contains", "contains", "baseline_contains"]


def test_zero_workers_rejected():
    with pytest.raises(ValueError):
        run_bench(tiny(), [1, 0])
    with pytest.raises(ValueError):
        run_bench(tiny(), [])


def test_final_state_independent_of_workers():
    report = run_bench(tiny(config=Config(seq_cutoff=16)), [1, 2, 4])
    for op in ("contains", "insert", "remove"):
        assert len({report.digests[(op, w)] for w in (1, 2, 4)}) == 1


def test_csv_and_json():
    report = run_bench(tiny(op_mix=[("insert", 10)]), [1])
    lines = report.to_csv().splitlines()
    assert lines[0] == ",".join(CSV_HEADER)
    assert lines[1].startswith("insert,1,10,")
    rows = json.loads(report.to_json())["rows"]
    assert rows[0]["op"] == "insert" and rows[0]["workers"] == 1


def write(path, keys):
    path.write_text("".join(f"{k}\n" for k in keys))
    return str(path)


@pytest.mark.parametrize("op,b,want", [
    ("union", [2, 4, 5, 7, 8], [1, 2, 3, 4, 5, 7, 8, 9]),
    ("diff", [2, 3, 6, 7, 9], [1, 5]),
    ("intersect", [], []),
    ("intersect", [9, 2, 3], [3, 9]),
])
def test_setops_examples(tmp_path, op, b, want):
    fa = write(tmp_path / "a.txt", [1, 3, 5, 7, 9])
    fb = write(tmp_path / "b.txt", b)
    out = tmp_path / "out.txt"
    setops_cmd(op, fa, fb, str(out))
    assert [int(x) for x in out.read_text().split()] == want


def test_setops_random_against_numpy(tmp_path):
    rng = np.random.default_rng(12)
    for trial in range(10):
        a = rng.integers(-10**12, 10**12, 3000)
        a[::3] = rng.integers(-50, 50, len(a[::3]))
        b = rng.integers(-10**12, 10**12, 2000)
        b[::2] = rng.integers(-50, 50, len(b[::2]))
        fa, fb = write(tmp_path / "a", a.tolist()), write(tmp_path / "b", b.tolist())
        for op, ref in (("union", np.union1d), ("intersect", np.intersect1d),
                        ("diff", np.setdiff1d)):
            out = tmp_path / f"{op}.txt"
            setops_cmd(op, fa, fb, str(out))
            got = np.array([int(x) for x in out.read_text().split()], dtype=np.int64)
            assert np.array_equal(got, ref(a, b)), (trial, op)


def test_read_keys_errors(tmp_path):
    bad = tmp_path / "bad.txt"
    bad.write_text("1\n\n-7\n2x\n")
    with pytest.raises(InputError, match=":4:"):
        read_keys(str(bad))
    bad.write_text(f"{2**63}\n")
    with pytest.raises(InputError, match=":1:"):
        read_keys(str(bad))
    good = tmp_path / "good.txt"
    good.write_text(" 5\n\n-3\n")
    assert read_keys(str(good)).tolist() == [5, -3]


def test_main_exit_codes(tmp_path, capsys):
    fa = write(tmp_path / "a.txt", [1, 3, 5])
    bad = tmp_path / "bad.txt"
    bad.write_text("1\nnope\n")
    assert main(["setops", "union", fa, str(bad)]) != 0
    assert ":2:" in capsys.readouterr().err
    assert main(["setops", "union", fa, str(tmp_path / "missing.txt")]) != 0
    assert main(["setops", "union", fa, fa]) == 0
    assert capsys.readouterr().out == "1\n3\n5\n"
    assert main(["bench", "--workers", "0"]) != 0


def test_bench_command_line(tmp_path):
    out = tmp_path / "r.csv"
    proc = subprocess.run(
        [sys.executable, "-m", "pbist.bench", "bench", "--range", "1000", "--batch", "50",
         "--reps", "1", "--workers", "1,2", "--baseline", "--ops", "contains",
         "--H", "8", "--C", "3", "--eps", "2/3", "--cutoff", "64", "--out", str(out)],
        capture_output=True, text=True, timeout=300)
    assert proc.returncode == 0, proc.stderr
    lines = out.read_text().splitlines()
    assert lines[0] == "op,workers,batch,tree_size,ms,reps"
    assert [line.split(",")[:2] for line in lines[1:]] == [
        ["contains", "1"], ["contains", "2"], ["baseline_contains", "1"]]

"""Workload generation, timing harness and file-based set algebra.

Run as ``python -m pbist.bench`` (or the ``ist-bench`` script)::

    ist-bench bench --range 1000000 --prob 1/2 --batch 100000 --workers 1,2,4 --baseline
    ist-bench setops union a.txt b.txt --out c.txt

Workloads use numpy's PCG64 generator seeded with ``--seed``. The initial
set keeps each integer of ``[-R, R]`` independently with probability ``p``;
the candidates are streamed in fixed-size chunks so the generator's draws do
not depend on memory limits. Batches are uniform draws from the same range,
sorted and de-duplicated before the timed region.
"""

import argparse
import csv
import hashlib
import io
import json
import statistics
import sys
import time
from dataclasses import asdict, dataclass, field
from fractions import Fraction

import numpy as np
from sortedcontainers import SortedList

from . import primitives as prim
from .batched import contains_batched, insert_batched, normalize_batch, remove_batched
from .core import DEFAULT_CONFIG, Config, Tree

__all__ = [
    "WorkloadSpec",
    "BenchRow",
    "BenchReport",
    "gen_workload",
    "run_bench",
    "read_keys",
    "setops_cmd",
    "InputError",
    "main",
]

OPS = ("contains", "insert", "remove")
SETOPS = ("union", "intersect", "diff")
CSV_HEADER = ("op", "workers", "batch", "tree_size", "ms", "reps")

# candidates per generator call when materializing the initial set
_CHUNK = 1 << 22


@dataclass(frozen=True)
class WorkloadSpec:
    key_range: int = 10**6
    prob: Fraction = Fraction(1, 2)
    batch_size: int = 10**5
    seed: int = 0
    op_mix: tuple = None
    config: Config = DEFAULT_CONFIG
    reps: int = 10

    def __post_init__(self):
        object.__setattr__(self, "prob", Fraction(self.prob))
        if self.op_mix is None:
            object.__setattr__(self, "op_mix", tuple((op, self.batch_size) for op in OPS))
        else:
            object.__setattr__(self, "op_mix", tuple((op, int(m)) for op, m in self.op_mix))
        if self.key_range <= 0:
            raise ValueError("key range must be positive")
        if not 0 < self.prob <= 1:
            raise ValueError("inclusion probability must be in (0, 1]")
        if self.batch_size < 1:
            raise ValueError("batch size must be at least 1")
        if self.reps < 1:
            raise ValueError("reps must be at least 1")
        for op, m in self.op_mix:
            if op not in OPS:
                raise ValueError(f"unknown operation {op!r}")
            if m < 1:
                raise ValueError("batch size must be at least 1")


@dataclass
class BenchRow:
    op: str
    workers: int
    batch: int
    tree_size: int
    ms: float
    reps: int
    median_ms: float = 0.0


@dataclass
class BenchReport:
    rows: list = field(default_factory=list)
    # (op, workers) -> sha256 of the op's result and the final tree contents
    digests: dict = field(default_factory=dict)

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for r in self.rows:
            w.writerow((r.op, r.workers, r.batch, r.tree_size, f"{r.ms:.3f}", r.reps))
        return buf.getvalue()

    def to_json(self):
        return json.dumps({"rows": [asdict(r) for r in self.rows]}, indent=2) + "\n"


def gen_workload(spec):
    """Initial sorted keys and one normalized batch per ``op_mix`` entry."""
    rng = np.random.Generator(np.random.PCG64(spec.seed))
    r = int(spec.key_range)
    p = float(spec.prob)
    parts = []
    for start in range(-r, r + 1, _CHUNK):
        stop = min(start + _CHUNK, r + 1)
        if p >= 1:
            parts.append(np.arange(start, stop, dtype=np.int64))
        else:
            keep = rng.random(stop - start) < p
            parts.append(start + np.flatnonzero(keep).astype(np.int64))
    initial = np.concatenate(parts) if parts else np.empty(0, dtype=np.int64)
    batches = [normalize_batch(rng.integers(-r, r, size=m, endpoint=True))
               for _, m in spec.op_mix]
    return initial, batches


def _digest(result, tree_keys):
    h = hashlib.sha256()
    h.update(np.asarray(result).tobytes())
    h.update(np.ascontiguousarray(tree_keys, dtype=np.int64).tobytes())
    return h.hexdigest()


def _run_op(tree, op, batch):
    if op == "contains":
        return contains_batched(tree, batch)
    if op == "insert":
        return np.int64(insert_batched(tree, batch))
    return np.int64(remove_batched(tree, batch))


def _baseline_op(sl, op, batch):
    if op == "contains":
        return [k in sl for k in batch]
    if op == "insert":
        for k in batch:
            if k not in sl:
                sl.add(k)
    else:
        for k in batch:
            sl.discard(k)
    return None


def run_bench(spec, workers=(1,), baseline=False, progress=None):
    """Time every operation of ``spec.op_mix`` at every worker count.

    Each repetition runs on a fresh copy of the ideal tree; copying happens
    outside the timed region. Baseline rows time a ``SortedList`` doing the
    same work one key at a time.
    """
    workers = [int(w) for w in workers]
    if not workers:
        raise ValueError("need at least one worker count")
    bad = [w for w in workers if w < 1]
    if bad:
        raise ValueError(f"worker counts must be >= 1, got {bad}")
    initial, batches = gen_workload(spec)
    base = Tree.from_sorted(initial, spec.config)
    report = BenchReport()
    for (op, m), batch in zip(spec.op_mix, batches):
        for w in workers:
            times = []
            with prim.num_workers(w):
                for _ in range(spec.reps):
                    tree = base.copy()
                    t0 = time.perf_counter()
                    res = _run_op(tree, op, batch)
                    times.append((time.perf_counter() - t0) * 1e3)
            report.digests[(op, w)] = _digest(res, tree.to_array())
            report.rows.append(BenchRow(op, w, m, len(initial), statistics.fmean(times),
                                        spec.reps, statistics.median(times)))
            if progress:
                progress(report.rows[-1])
        if baseline:
            keys = batch.tolist()
            times = []
            for _ in range(spec.reps):
                sl = SortedList(initial.tolist())
                t0 = time.perf_counter()
                _baseline_op(sl, op, keys)
                times.append((time.perf_counter() - t0) * 1e3)
            report.rows.append(BenchRow(f"baseline_{op}", 1, m, len(initial),
                                        statistics.fmean(times), spec.reps,
                                        statistics.median(times)))
            if progress:
                progress(report.rows[-1])
    return report


class InputError(ValueError):
    pass


def read_keys(path):
    """Parse a file of newline-separated signed decimal integers.

    Blank lines are skipped. Raises :class:`InputError` naming the first bad
    line, or ``OSError`` if the file cannot be read.
    """
    keys = []
    lo, hi = -(1 << 63), (1 << 63) - 1
    with open(path) as f:
        for lineno, line in enumerate(f, 1):
            s = line.strip()
            if not s:
                continue
            try:
                v = int(s, 10)
            except ValueError:
                raise InputError(f"{path}:{lineno}: not an integer: {s!r}") from None
            if not lo <= v <= hi:
                raise InputError(f"{path}:{lineno}: out of 64-bit range: {s}")
            keys.append(v)
    return np.array(keys, dtype=np.int64)


def _setop(op, a, b, config=DEFAULT_CONFIG):
    tree = Tree.from_sorted(normalize_batch(a), config)
    b = normalize_batch(b)
    if op == "union":
        insert_batched(tree, b)
        return tree.to_array()
    if op == "diff":
        remove_batched(tree, b)
        return tree.to_array()
    if op == "intersect":
        return prim.pack(b, contains_batched(tree, b), config.seq_cutoff)
    raise ValueError(f"unknown set operation {op!r}")


def setops_cmd(op, file_a, file_b, out=None, config=DEFAULT_CONFIG):
    """Write ``A op B`` to ``out`` (a path, or stdout when None), one key per line."""
    if op not in SETOPS:
        raise ValueError(f"unknown set operation {op!r}")
    res = _setop(op, read_keys(file_a), read_keys(file_b), config)
    text = "".join(f"{k}\n" for k in res.tolist())
    if out is None:
        sys.stdout.write(text)
    else:
        with open(out, "w") as f:
            f.write(text)


def _parser():
    p = argparse.ArgumentParser(prog="ist-bench", description=__doc__.split("\n")[0])
    sub = p.add_subparsers(dest="cmd", required=True)

    b = sub.add_parser("bench", help="time batched operations")
    b.add_argument("--range", type=int, default=10**6, dest="key_range", help="keys in [-R, R]")
    b.add_argument("--prob", type=Fraction, default=Fraction(1, 2))
    b.add_argument("--batch", type=int, default=10**5)
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("--workers", default="1", help="comma-separated worker counts")
    b.add_argument("--reps", type=int, default=10)
    b.add_argument("--ops", default=",".join(OPS), help="comma-separated subset of %(default)s")
    b.add_argument("--baseline", action="store_true", help="also time a SortedList per key")
    b.add_argument("--H", type=int, default=DEFAULT_CONFIG.leaf_threshold, help="leaf threshold")
    b.add_argument("--C", type=int, default=DEFAULT_CONFIG.rebuild_factor, help="rebuild factor")
    b.add_argument("--eps", type=Fraction, default=Fraction(3, 4), help="index size exponent")
    b.add_argument("--cutoff", type=int, default=DEFAULT_CONFIG.seq_cutoff,
                   help="sequential cutoff (grain)")
    b.add_argument("--routing", choices=("interpolation", "rank"), default="interpolation")
    b.add_argument("--json", action="store_true", help="emit JSON instead of CSV")
    b.add_argument("--out", help="write the report here instead of stdout")

    s = sub.add_parser("setops", help="set algebra on files of integers")
    s.add_argument("op", choices=SETOPS)
    s.add_argument("file_a")
    s.add_argument("file_b")
    s.add_argument("--out")
    return p


def _bench_main(args):
    try:
        workers = [int(w) for w in args.workers.split(",") if w.strip()]
        config = Config(leaf_threshold=args.H, rebuild_factor=args.C, index_exponent=args.eps,
                        seq_cutoff=args.cutoff, routing=args.routing)
        ops = [o.strip() for o in args.ops.split(",") if o.strip()]
        spec = WorkloadSpec(key_range=args.key_range, prob=args.prob, batch_size=args.batch,
                            seed=args.seed, op_mix=[(o, args.batch) for o in ops],
                            config=config, reps=args.reps)
        if not workers or min(workers) < 1:
            raise ValueError(f"worker counts must be >= 1, got {args.workers!r}")
    except ValueError as e:
        print(f"ist-bench: {e}", file=sys.stderr)
        return 2
    report = run_bench(spec, workers, args.baseline)
    text = report.to_json() if args.json else report.to_csv()
    if args.out:
        with open(args.out, "w") as f:
            f.write(text)
    else:
        sys.stdout.write(text)
    return 0


def main(argv=None):
    args = _parser().parse_args(argv)
    if args.cmd == "bench":
        return _bench_main(args)
    try:
        setops_cmd(args.op, args.file_a, args.file_b, args.out)
    except InputError as e:
        print(f"ist-bench: {e}", file=sys.stderr)
        return 2
    except OSError as e:
        print(f"ist-bench: {e}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())

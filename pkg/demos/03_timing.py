"""Batched contains against a SortedList doing one key at a time.

Same workload generator as the ist-bench command, at a size that runs in
a few seconds.
"""

from pbist.bench import WorkloadSpec, run_bench

spec = WorkloadSpec(key_range=10**6, batch_size=10**5, reps=3)
report = run_bench(spec, workers=[1, 2], baseline=True)
print(report.to_csv())

rows = {(r.op, r.workers): r.ms for r in report.rows}
for op in ("contains", "insert", "remove"):
    print(f"{op:9s} IST {rows[op, 1]:8.1f} ms   SortedList {rows['baseline_' + op, 1]:8.1f} ms")

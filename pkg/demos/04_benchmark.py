"""Timing the full analysis on a ten-million-packet table.

Run with ``python3 demos/04_benchmark.py [rows]``. It reports load and
query times for one worker and for every available core, and confirms
the two runs agree exactly.
"""
import sys
import tempfile
import time
from pathlib import Path

from netsense.analytics import all_properties
from netsense.edges import build, read_edges, write_edges
from netsense.kernels import default_workers
from netsense.synth import SynthConfig, generate

rows = int(sys.argv[1]) if len(sys.argv) > 1 else 10**7
path = Path(tempfile.mkdtemp(prefix="netsense-bench-")) / "edges.bin"

batch, _ = generate(SynthConfig(rows, max(rows // 10, 1), model="skewed", seed=8))
vertices, table = build(batch)
write_edges(table, vertices, path)
del batch, table
print(f"{rows} rows, {path.stat().st_size / 1e6:.0f} MB on disk")

results = {}
for workers in sorted({1, default_workers()}):
    t0 = time.perf_counter()
    _, table = read_edges(path)
    t1 = time.perf_counter()
    timings = {}
    results[workers] = all_properties(table, workers=workers, timings=timings)
    t2 = time.perf_counter()
    slowest = max(timings, key=timings.get)
    print(f"workers={workers}: load {t1 - t0:.2f} s, queries {t2 - t1:.2f} s "
          f"(slowest: {slowest} {timings[slowest]:.2f} s)")

first = next(iter(results.values()))
print("identical across worker counts:", all(r == first for r in results.values()))

"""The traffic-matrix statistics and where they come from.

Every statistic is checked against the ground truth that the generator
computes from its own sparse matrix, and the per-vertex distributions are
written as CSV files for plotting.
"""
import json
import tempfile
from pathlib import Path

import numpy as np

from netsense.analytics import all_properties
from netsense.report import write_distributions
from netsense.synth import SynthConfig, generate_table

vertices, table, truth = generate_table(SynthConfig(200_000, 10_000, model="skewed",
                                                     exponent=1.8, seed=9))
props = all_properties(table)
print(json.dumps(props.scalars(), indent=2))
assert props.scalars() == truth.scalars()

# heavy-tailed sources: a handful of vertices send most of the traffic
share = np.sort(props.packets_from_source)[::-1][:10].sum() / props.valid_packets
print(f"top 10 sources send {share:.1%} of packets")
values, counts = np.unique(props.fan_out[props.fan_out > 0], return_counts=True)
print("fan-out histogram (degree: vertices):", dict(zip(values[:8].tolist(), counts[:8].tolist())))

out = Path(tempfile.mkdtemp(prefix="netsense-dist-"))
print("distributions:", write_distributions(props, vertices, out), "in", out)

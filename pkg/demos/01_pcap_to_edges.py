"""From a packet capture to an edge file.

We synthesise a small capture with a few IPv6 frames mixed in, parse it
back, and turn the valid IPv4 packets into a raw edge table with a dense
vertex dictionary. The aggregated form (one row per link) is written next
to it.
"""
import tempfile
from pathlib import Path

from netsense.edges import aggregate, build, read_edges, write_edges
from netsense.pcap import ingest_pcap
from netsense.synth import SynthConfig, generate, write_pcap

work = Path(tempfile.mkdtemp(prefix="netsense-demo-"))

batch, _ = generate(SynthConfig(n_packets=5_000, n_vertices=200, model="skewed", seed=1))
write_pcap(batch, work / "trace.pcap", invalid_fraction=0.02, seed=1, byteorder="big")

packets, stats = ingest_pcap(work / "trace.pcap")
print("ingest:", stats.to_dict())
assert packets == batch

vertices, raw = build(packets)
print(f"{len(vertices)} vertices, {len(raw)} raw rows")
write_edges(raw, vertices, work / "raw.csv", "csv")

links = aggregate(raw)
write_edges(links, vertices, work / "links.bin", "binary")
print(f"{len(links)} distinct links; heaviest carries {links.n_packets.max()} packets")

# both files read back to the same table they were written from
assert read_edges(work / "links.bin") == (vertices, links)
print("\n".join((work / "raw.csv").read_text().splitlines()[:5]))
print("files in", work)

"""Run reports (JSON) and distribution sidecar files.

Report schema ``netsense.report/1``; keys always appear in this order::

    schema, tool_version, input{path, format, size_bytes}, cache_hint,
    anonymization{seed, rounds} | null, properties{9 scalar queries},
    unique_ips{total, src_only, dst_only, both}, distributions{name: file} | null,
    timings{load, anonymize, queries{...}, total}    (omitted on request)

``cache_hint`` is declared by the operator (``cold`` for a first read of
the input, ``warm`` when it is expected to sit in the page cache); the
tool does not try to detect it.
"""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .analytics import NetworkProperties
from .edges import VertexDictionary, format_ipv4

SCHEMA = "netsense.report/1"
CACHE_HINTS = ("cold", "warm")


@dataclass
class RunReport:
    input_path: str
    input_format: str
    input_size: int
    properties: NetworkProperties
    cache_hint: str | None = None
    seed: int | None = None
    rounds: int | None = None
    distributions: dict[str, str] | None = None
    timings: dict = field(default_factory=dict)

    def to_dict(self, include_timings: bool = True) -> dict:
        props = self.properties
        out = {
            "schema": SCHEMA,
            "tool_version": __version__,
            "input": {"path": self.input_path, "format": self.input_format,
                      "size_bytes": self.input_size},
            "cache_hint": self.cache_hint,
            "anonymization": None if self.seed is None else {"seed": self.seed, "rounds": self.rounds},
            "properties": props.scalars(),
            "unique_ips": asdict(props.unique_ips) if props.unique_ips else None,
            "distributions": self.distributions,
        }
        if include_timings:
            out["timings"] = self.timings
        return out

    def to_json(self, include_timings: bool = True) -> str:
        return json.dumps(self.to_dict(include_timings), indent=2) + "\n"


def write_distributions(props: NetworkProperties, vertices: VertexDictionary, directory) -> dict[str, str]:
    """Write the vector-valued results as CSV files; returns {name: filename}."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    names = [format_ipv4(a) for a in vertices.reverse.tolist()]
    written = {}

    links = props.link_packets
    if links is not None:
        lines = ["src_ip,dst_ip,n_packets"]
        lines += [f"{names[s]},{names[d]},{n}"
                  for s, d, n in zip(links.src.tolist(), links.dst.tolist(), links.n_packets.tolist())]
        (directory / "link_packets.csv").write_text("\n".join(lines) + "\n")
        written["link_packets"] = "link_packets.csv"

    for attr, column in (("packets_from_source", "packets"), ("packets_to_destination", "packets"),
                         ("fan_out", "fan_out"), ("fan_in", "fan_in")):
        vec = getattr(props, attr)
        if vec is None:
            continue
        vec = np.asarray(vec)
        lines = [f"ip,{column}"] + [f"{ip},{v}" for ip, v in zip(names, vec.tolist())]
        fname = f"{attr}.csv"
        (directory / fname).write_text("\n".join(lines) + "\n")
        written[attr] = fname
    return written

"""Anonymized network-sensing pipeline: pcap ingest, vertex anonymization
and traffic-matrix statistics over columnar edge tables."""

__version__ = "0.1.0"

from .analytics import NetworkProperties, UniqueIPs, all_properties  # noqa: E402
from .anonymize import AnonymizationMap, apply, make_permutation  # noqa: E402
from .edges import EdgeTable, VertexDictionary, aggregate, build, read_edges, write_edges  # noqa: E402
from .pcap import IngestStats, PacketBatch, PacketRecord, ingest_pcap  # noqa: E402
from .synth import SynthConfig, generate, write_pcap  # noqa: E402

__all__ = [
    "AnonymizationMap",
    "EdgeTable",
    "IngestStats",
    "NetworkProperties",
    "PacketBatch",
    "PacketRecord",
    "SynthConfig",
    "UniqueIPs",
    "VertexDictionary",
    "aggregate",
    "all_properties",
    "apply",
    "build",
    "generate",
    "ingest_pcap",
    "make_permutation",
    "read_edges",
    "write_edges",
    "write_pcap",
]

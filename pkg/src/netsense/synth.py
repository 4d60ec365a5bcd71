"""Synthetic traffic with known ground truth.

Ground truth is tallied from a ``scipy.sparse`` traffic matrix built
during generation, independently of :mod:`netsense.analytics` and of the
oracle. Vertex addresses are drawn from 10.0.0.0/8.
"""
from __future__ import annotations

import struct
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path
from typing import Iterable

import numpy as np
import scipy.sparse as sp

from .analytics import NetworkProperties, UniqueIPs
from .pcap import (ETHERTYPE_IPV4, ETHERTYPE_IPV6, LINKTYPE_ETHERNET, MAGIC_NSEC, MAGIC_USEC,
                   PacketBatch, PacketRecord)

PRIVATE_NET = 10 << 24
MODELS = ("uniform", "skewed")


@dataclass(frozen=True)
class SynthConfig:
    n_packets: int
    n_vertices: int
    model: str = "uniform"
    exponent: float = 2.0
    seed: int = 0
    invalid_fraction: float = 0.0

    def __post_init__(self):
        if self.n_packets < 0 or self.n_vertices < 0:
            raise ValueError("counts must be non-negative")
        if self.n_packets and self.n_vertices < 1:
            raise ValueError("n_vertices must be >= 1 when n_packets >= 1")
        if self.n_vertices > (1 << 24) - 2:
            raise ValueError("10.0.0.0/8 holds at most 2**24 - 2 host addresses")
        if self.model not in MODELS:
            raise ValueError(f"model must be one of {MODELS}")
        if not 0.0 <= self.invalid_fraction < 1.0:
            raise ValueError("invalid_fraction must lie in [0, 1)")


def _addresses(rng: np.random.Generator, n: int) -> np.ndarray:
    """``n`` distinct host addresses in 10.0.0.0/8, in random order."""
    picked = np.zeros(0, dtype=np.int64)
    while len(picked) < n:
        extra = rng.integers(1, (1 << 24) - 1, size=2 * (n - len(picked)) + 16)
        picked = np.concatenate([picked, extra])
        _, first = np.unique(picked, return_index=True)
        picked = picked[np.sort(first)]
    return (PRIVATE_NET + picked[:n]).astype(np.uint32)


def _endpoints(rng, cfg: SynthConfig) -> tuple[np.ndarray, np.ndarray]:
    n, V = cfg.n_packets, cfg.n_vertices
    if cfg.model == "uniform":
        src = rng.integers(0, V, size=n)
    else:
        ranks = np.arange(1, V + 1, dtype=np.float64)
        p = ranks ** -cfg.exponent
        src = rng.choice(V, size=n, p=p / p.sum())
    dst = rng.integers(0, V, size=n)
    return src, dst


def matrix_truth(src: np.ndarray, dst: np.ndarray, n_vertices: int) -> NetworkProperties:
    """Scalar properties read off the sparse traffic matrix of the given endpoints."""
    if not len(src):
        return NetworkProperties(unique_ips=UniqueIPs(0, 0, 0, 0))
    A = sp.coo_matrix((np.ones(len(src), dtype=np.int64), (src, dst)),
                      shape=(n_vertices, n_vertices)).tocsr()
    A.sum_duplicates()
    pattern = A.copy()
    pattern.data = np.ones_like(pattern.data)
    out_pk = np.asarray(A.sum(axis=1)).ravel()
    in_pk = np.asarray(A.sum(axis=0)).ravel()
    out_fan = np.asarray(pattern.sum(axis=1)).ravel()
    in_fan = np.asarray(pattern.sum(axis=0)).ravel()
    is_src, is_dst = out_pk > 0, in_pk > 0
    both = int(np.sum(is_src & is_dst))
    return NetworkProperties(
        valid_packets=int(A.sum()),
        unique_links=int(pattern.sum()),
        max_link_packets=int(A.max()),
        unique_sources=int(is_src.sum()),
        unique_destinations=int(is_dst.sum()),
        max_source_packets=int(out_pk.max()),
        max_destination_packets=int(in_pk.max()),
        max_fan_out=int(out_fan.max()),
        max_fan_in=int(in_fan.max()),
        unique_ips=UniqueIPs(int(np.sum(is_src | is_dst)), int(is_src.sum()) - both,
                             int(is_dst.sum()) - both, both),
    )


def generate(cfg: SynthConfig) -> tuple[PacketBatch, NetworkProperties]:
    """Packet records plus their ground-truth scalar properties."""
    rng = np.random.default_rng(cfg.seed)
    addrs = _addresses(rng, cfg.n_vertices)
    src, dst = _endpoints(rng, cfg)
    n = cfg.n_packets
    ts_sec = 1_700_000_000 + np.arange(n, dtype=np.int64) // 1000
    ts_frac = rng.integers(0, 1_000_000, size=n)
    batch = PacketBatch(ts_sec, ts_frac, addrs[src], addrs[dst])
    return batch, matrix_truth(src, dst, cfg.n_vertices)


def generate_table(cfg: SynthConfig):
    """Shortcut: generate and build straight into (dictionary, raw table, truth)."""
    from .edges import build

    batch, truth = generate(cfg)
    vertices, table = build(batch)
    return vertices, table, truth


# -- pcap emission ------------------------------------------------------------

@lru_cache(maxsize=1 << 16)
def _ipv4_frame(src: int, dst: int) -> bytes:
    eth = b"\x02\x00\x00\x00\x00\x02" + b"\x02\x00\x00\x00\x00\x01" + ETHERTYPE_IPV4.to_bytes(2, "big")
    hdr = bytearray(struct.pack("!BBHHHBBHII", 0x45, 0, 20, 0, 0, 64, 253, 0, src, dst))
    csum = sum(struct.unpack("!10H", hdr))
    csum = (csum & 0xFFFF) + (csum >> 16)
    csum = (csum & 0xFFFF) + (csum >> 16)
    hdr[10:12] = struct.pack("!H", ~csum & 0xFFFF)
    return eth + bytes(hdr)


def _ipv6_frame(rng: np.random.Generator) -> bytes:
    eth = b"\x02\x00\x00\x00\x00\x02" + b"\x02\x00\x00\x00\x00\x01" + ETHERTYPE_IPV6.to_bytes(2, "big")
    ip6 = struct.pack("!IHBB", 6 << 28, 0, 59, 64) + rng.bytes(32)
    return eth + ip6


def write_pcap(records: PacketBatch | Iterable[PacketRecord], path, invalid_fraction: float = 0.0,
               seed: int = 0, byteorder: str = "little", nanosecond: bool = False) -> int:
    """Write records as minimal Ethernet+IPv4 frames; returns bytes written.

    ``invalid_fraction`` is the share of IPv6 frames among all frames
    written: ``round(f * n / (1 - f))`` of them are inserted at random
    positions, leaving the order of the valid records intact.
    """
    if not 0.0 <= invalid_fraction < 1.0:
        raise ValueError("invalid_fraction must lie in [0, 1)")
    if byteorder not in ("little", "big"):
        raise ValueError("byteorder must be 'little' or 'big'")
    if not isinstance(records, PacketBatch):
        records = PacketBatch.from_records(records)
    order = "<" if byteorder == "little" else ">"
    rng = np.random.default_rng(seed)
    n = len(records)
    n_bad = int(round(invalid_fraction * n / (1.0 - invalid_fraction)))
    bad_slots = set(rng.choice(n + n_bad, size=n_bad, replace=False).tolist()) if n_bad else set()

    magic = MAGIC_NSEC if nanosecond else MAGIC_USEC
    out = [struct.pack(order + "IHHiIII", magic, 2, 4, 0, 0, 65535, LINKTYPE_ETHERNET)]
    rec_hdr = struct.Struct(order + "IIII")
    good = iter(records)
    for slot in range(n + n_bad):
        if slot in bad_slots:
            frame = _ipv6_frame(rng)
            out.append(rec_hdr.pack(0, 0, len(frame), len(frame)))
        else:
            r = next(good)
            frame = _ipv4_frame(r.src, r.dst)
            out.append(rec_hdr.pack(r.ts_sec, r.ts_frac, len(frame), len(frame)))
        out.append(frame)
    data = b"".join(out)
    Path(path).write_bytes(data)
    return len(data)

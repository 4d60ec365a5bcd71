"""Columnar edge tables, the IPv4 vertex dictionary and edge-file I/O.

Two on-disk formats are supported.

CSV (text)::

    # netsense-edges form=aggregated      <- optional, records the table form
    src_ip,dst_ip,n_packets               <- mandatory header
    10.0.0.1,10.0.0.2,3

Binary ("NSEG", version 1, all integers little-endian)::

    offset 0   4 bytes   magic b"NSEG"
    offset 4   u16       format version (1)
    offset 6   u8        form (0 = raw, 1 = aggregated)
    offset 7   u8        reserved, zero
    offset 8   u64       row count R
    then       u32[R]    src vertex ids
               u32[R]    dst vertex ids
               u64[R]    n_packets
               u64       dictionary length V
               u32[V]    IPv4 address of vertex id 0..V-1
"""
from __future__ import annotations

import ipaddress
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping

import numpy as np

from .errors import EdgeFormatError
from .pcap import PacketBatch, PacketRecord

RAW = "raw"
AGGREGATED = "aggregated"

CSV_HEADER = "src_ip,dst_ip,n_packets"
CSV_FORM_PREFIX = "# netsense-edges form="
BINARY_MAGIC = b"NSEG"
BINARY_VERSION = 1
_BIN_HEADER = struct.Struct("<4sHBBQ")
_FORM_CODES = {RAW: 0, AGGREGATED: 1}


def format_ipv4(addr: int) -> str:
    return f"{addr >> 24 & 255}.{addr >> 16 & 255}.{addr >> 8 & 255}.{addr & 255}"


def parse_ipv4(text: str) -> int:
    return int(ipaddress.IPv4Address(text))


class VertexDictionary:
    """Bijection between IPv4 addresses and dense vertex ids ``0..V-1``.

    ``reverse[i]`` is the address of vertex ``i``; ``forward`` is the
    inverse mapping, built on first use.
    """

    def __init__(self, addresses=()):
        reverse = np.asarray(addresses, dtype=np.uint64)
        if reverse.size and reverse.max() > 0xFFFFFFFF:
            raise ValueError("address outside the IPv4 range")
        reverse = reverse.astype(np.uint32)
        order = np.argsort(reverse, kind="stable")
        if np.any(reverse[order][1:] == reverse[order][:-1]):
            raise ValueError("duplicate address in vertex dictionary")
        self.reverse = reverse
        self.reverse.flags.writeable = False
        self._order = order
        self._forward = None

    @classmethod
    def identity(cls, n: int) -> "VertexDictionary":
        """Dictionary whose vertex ``i`` is the address with integer value ``i``."""
        return cls(np.arange(n, dtype=np.uint32))

    def __len__(self) -> int:
        return len(self.reverse)

    def __eq__(self, other):
        if not isinstance(other, VertexDictionary):
            return NotImplemented
        return np.array_equal(self.reverse, other.reverse)

    def __repr__(self):
        return f"VertexDictionary(V={len(self)})"

    @property
    def forward(self) -> Mapping[int, int]:
        if self._forward is None:
            self._forward = {addr: i for i, addr in enumerate(self.reverse.tolist())}
        return self._forward

    def encode(self, addresses) -> np.ndarray:
        """Vectorised address -> id lookup; unknown addresses raise ``KeyError``."""
        addresses = np.asarray(addresses, dtype=np.uint32)
        if not len(self):
            if addresses.size:
                raise KeyError("address not in dictionary")
            return np.zeros(addresses.shape, dtype=np.int64)
        sorted_addrs = self.reverse[self._order]
        pos = np.searchsorted(sorted_addrs, addresses)
        pos = np.minimum(pos, len(sorted_addrs) - 1)
        if not np.array_equal(sorted_addrs[pos], addresses):
            raise KeyError("address not in dictionary")
        return self._order[pos].astype(np.int64)

    def decode(self, ids) -> np.ndarray:
        return self.reverse[np.asarray(ids, dtype=np.int64)]


class EdgeTable:
    """Three-column edge table (src id, dst id, packet count).

    ``form`` is ``"raw"`` (one row per packet, counts all 1) or
    ``"aggregated"`` (distinct (src, dst) rows sorted ascending, counts >= 1).
    ``n_vertices`` fixes the length of per-vertex result vectors; it
    defaults to one past the largest id present.
    """

    __slots__ = ("src", "dst", "n_packets", "form", "n_vertices")

    def __init__(self, src, dst, n_packets=None, form: str = RAW, n_vertices: int | None = None,
                 validate: bool = True):
        src = np.ascontiguousarray(src, dtype=np.int64)
        dst = np.ascontiguousarray(dst, dtype=np.int64)
        if n_packets is None:
            n_packets = np.ones(len(src), dtype=np.int64)
        n_packets = np.ascontiguousarray(n_packets, dtype=np.int64)
        if form not in (RAW, AGGREGATED):
            raise ValueError(f"unknown table form {form!r}")
        if n_vertices is None:
            n_vertices = int(max(src.max(initial=-1), dst.max(initial=-1))) + 1
        self.src, self.dst, self.n_packets = src, dst, n_packets
        self.form = form
        self.n_vertices = int(n_vertices)
        for col in (self.src, self.dst, self.n_packets):
            col.flags.writeable = False
        if validate:
            self.validate()

    def validate(self) -> None:
        n = len(self.src)
        if len(self.dst) != n or len(self.n_packets) != n:
            raise ValueError("edge table columns must have equal length")
        if n:
            lo = min(self.src.min(), self.dst.min())
            hi = max(self.src.max(), self.dst.max())
            if lo < 0 or hi >= self.n_vertices:
                raise ValueError(f"vertex ids must lie in 0..{self.n_vertices - 1}")
        if self.form == RAW:
            if np.any(self.n_packets != 1):
                raise ValueError("raw tables carry n_packets == 1 on every row")
        else:
            if np.any(self.n_packets < 1):
                raise ValueError("aggregated tables need n_packets >= 1")
            key = pair_keys(self.src, self.dst, self.n_vertices)
            if np.any(key[1:] <= key[:-1]):
                raise ValueError("aggregated rows must be distinct and sorted by (src, dst)")

    def __len__(self) -> int:
        return len(self.src)

    def __eq__(self, other):
        if not isinstance(other, EdgeTable):
            return NotImplemented
        return (self.form == other.form and self.n_vertices == other.n_vertices
                and np.array_equal(self.src, other.src)
                and np.array_equal(self.dst, other.dst)
                and np.array_equal(self.n_packets, other.n_packets))

    def __repr__(self):
        return f"EdgeTable(rows={len(self)}, V={self.n_vertices}, form={self.form!r})"

    def swapped(self) -> "EdgeTable":
        """Reverse every edge (transpose of the traffic matrix)."""
        if self.form == RAW:
            return EdgeTable(self.dst, self.src, self.n_packets, RAW, self.n_vertices, validate=False)
        order = np.lexsort((self.src, self.dst))
        return EdgeTable(self.dst[order], self.src[order], self.n_packets[order],
                         AGGREGATED, self.n_vertices, validate=False)

    def to_dict(self, vertices: VertexDictionary | None = None) -> dict[tuple[int, int], int]:
        """{(src, dst): packets}; addresses instead of ids when a dictionary is given."""
        src, dst = self.src, self.dst
        if vertices is not None:
            src, dst = vertices.decode(src), vertices.decode(dst)
        out: dict[tuple[int, int], int] = {}
        for s, d, n in zip(src.tolist(), dst.tolist(), self.n_packets.tolist()):
            out[(s, d)] = out.get((s, d), 0) + n
        return out


def pair_keys(src: np.ndarray, dst: np.ndarray, n_vertices: int) -> np.ndarray:
    """Encode (src, dst) as one uint64 ordered like the pair; exact for V <= 2**32."""
    return src.astype(np.uint64) * np.uint64(n_vertices) + dst.astype(np.uint64)


def build(records: PacketBatch | Iterable[PacketRecord]) -> tuple[VertexDictionary, EdgeTable]:
    """Dictionary-encode packet records into a raw edge table.

    Vertex ids follow ascending address order; rows keep record order.
    """
    if not isinstance(records, PacketBatch):
        records = PacketBatch.from_records(records)
    addresses = np.unique(np.concatenate([records.src, records.dst]))
    vertices = VertexDictionary(addresses)
    src = np.searchsorted(addresses, records.src)
    dst = np.searchsorted(addresses, records.dst)
    return vertices, EdgeTable(src, dst, None, RAW, len(vertices), validate=False)


def aggregate(table: EdgeTable) -> EdgeTable:
    """Collapse duplicate (src, dst) rows, summing packet counts; output sorted by pair."""
    V = table.n_vertices
    if not len(table):
        return EdgeTable([], [], [], AGGREGATED, V, validate=False)
    keys = pair_keys(table.src, table.dst, V)
    uniq, inverse = np.unique(keys, return_inverse=True)
    if table.form == RAW:
        counts = np.bincount(inverse, minlength=len(uniq))
    else:
        counts = np.zeros(len(uniq), dtype=np.int64)
        np.add.at(counts, inverse, table.n_packets)
    V64 = np.uint64(V)
    return EdgeTable((uniq // V64).astype(np.int64), (uniq % V64).astype(np.int64), counts,
                     AGGREGATED, V, validate=False)


# -- interchange ------------------------------------------------------------

def write_edges(table: EdgeTable, vertices: VertexDictionary, path, format: str = "binary") -> int:
    """Write ``table`` with its dictionary; returns bytes written."""
    if len(vertices) != table.n_vertices:
        raise ValueError(f"dictionary has {len(vertices)} entries, table expects {table.n_vertices}")
    path = Path(path)
    if format == "csv":
        src = vertices.decode(table.src).tolist()
        dst = vertices.decode(table.dst).tolist()
        names = {}
        def name(a):
            s = names.get(a)
            if s is None:
                s = names[a] = format_ipv4(a)
            return s
        lines = [CSV_FORM_PREFIX + table.form, CSV_HEADER]
        lines += [f"{name(s)},{name(d)},{n}" for s, d, n in zip(src, dst, table.n_packets.tolist())]
        data = ("\n".join(lines) + "\n").encode("ascii")
    elif format == "binary":
        parts = [
            _BIN_HEADER.pack(BINARY_MAGIC, BINARY_VERSION, _FORM_CODES[table.form], 0, len(table)),
            table.src.astype("<u4").tobytes(),
            table.dst.astype("<u4").tobytes(),
            table.n_packets.astype("<u8").tobytes(),
            struct.pack("<Q", len(vertices)),
            vertices.reverse.astype("<u4").tobytes(),
        ]
        data = b"".join(parts)
    else:
        raise ValueError(f"unknown edge format {format!r}")
    path.write_bytes(data)
    return len(data)


def read_edges(path) -> tuple[VertexDictionary, EdgeTable]:
    """Read either format, sniffing the binary magic."""
    data = Path(path).read_bytes()
    if data[:4] == BINARY_MAGIC:
        return _read_binary(data)
    return _read_csv(data.decode("ascii", errors="replace"))


def _read_binary(data: bytes) -> tuple[VertexDictionary, EdgeTable]:
    if len(data) < _BIN_HEADER.size:
        raise EdgeFormatError("binary edge file shorter than its 16-byte header")
    magic, version, form_code, _, rows = _BIN_HEADER.unpack_from(data)
    if magic != BINARY_MAGIC:
        raise EdgeFormatError(f"bad magic {magic!r}")
    if version != BINARY_VERSION:
        raise EdgeFormatError(f"unsupported edge file version {version} (expected {BINARY_VERSION})")
    forms = {v: k for k, v in _FORM_CODES.items()}
    if form_code not in forms:
        raise EdgeFormatError(f"unknown form code {form_code}")
    off = _BIN_HEADER.size
    need = off + rows * 16 + 8
    if len(data) < need:
        raise EdgeFormatError(f"row count {rows} exceeds file size {len(data)}")
    src = np.frombuffer(data, "<u4", rows, off)
    dst = np.frombuffer(data, "<u4", rows, off + 4 * rows)
    npk = np.frombuffer(data, "<u8", rows, off + 8 * rows)
    off += 16 * rows
    (n_vertices,) = struct.unpack_from("<Q", data, off)
    off += 8
    if len(data) != off + 4 * n_vertices:
        raise EdgeFormatError("dictionary length does not match file size")
    vertices = VertexDictionary(np.frombuffer(data, "<u4", n_vertices, off))
    try:
        table = EdgeTable(src, dst, npk, forms[form_code], n_vertices)
    except ValueError as exc:
        raise EdgeFormatError(str(exc)) from exc
    return vertices, table


def _read_csv(text: str) -> tuple[VertexDictionary, EdgeTable]:
    lines = text.splitlines()
    lineno = 0
    form = None
    if lines and lines[0].startswith(CSV_FORM_PREFIX):
        form = lines[0][len(CSV_FORM_PREFIX):].strip()
        if form not in (RAW, AGGREGATED):
            raise EdgeFormatError(f"line 1: unknown form {form!r}")
        lineno = 1
    if lineno >= len(lines) or lines[lineno].strip() != CSV_HEADER:
        raise EdgeFormatError(f"line {lineno + 1}: expected header {CSV_HEADER!r}")

    cache: dict[str, int] = {}
    src, dst, npk = [], [], []
    for lineno, line in enumerate(lines[lineno + 1:], start=lineno + 2):
        if not line.strip():
            continue
        fields = line.split(",")
        if len(fields) != 3:
            raise EdgeFormatError(f"line {lineno}: expected 3 fields, got {len(fields)}")
        try:
            s = cache.get(fields[0])
            if s is None:
                s = cache[fields[0]] = parse_ipv4(fields[0].strip())
            d = cache.get(fields[1])
            if d is None:
                d = cache[fields[1]] = parse_ipv4(fields[1].strip())
        except ValueError as exc:
            raise EdgeFormatError(f"line {lineno}: bad IPv4 address ({exc})") from None
        try:
            n = int(fields[2])
        except ValueError:
            raise EdgeFormatError(f"line {lineno}: bad packet count {fields[2]!r}") from None
        if n < 1:
            raise EdgeFormatError(f"line {lineno}: packet count must be >= 1")
        src.append(s)
        dst.append(d)
        npk.append(n)

    src_a = np.array(src, dtype=np.uint32)
    dst_a = np.array(dst, dtype=np.uint32)
    npk_a = np.array(npk, dtype=np.int64)
    if form is None:
        form = RAW if np.all(npk_a == 1) else AGGREGATED
    addresses = np.unique(np.concatenate([src_a, dst_a]))
    vertices = VertexDictionary(addresses)
    try:
        table = EdgeTable(np.searchsorted(addresses, src_a), np.searchsorted(addresses, dst_a),
                          npk_a, form, len(vertices))
    except ValueError as exc:
        raise EdgeFormatError(str(exc)) from exc
    return vertices, table

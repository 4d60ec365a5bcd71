"""Classic libpcap reader producing (src, dst) IPv4 packet records.

Only Ethernet captures are accepted. Frames that do not carry IPv4 are
skipped and counted; a record whose declared length runs past the end of
the file aborts the stream with :class:`TruncatedFile`.

The reader is incremental: :class:`PcapStreamParser` accepts arbitrary
byte chunks, finds record boundaries with a sequential scan and then
classifies every complete record of the chunk with vectorised numpy
gathers. Chunk placement never changes the output.
"""
from __future__ import annotations

import enum
import struct
import time
from dataclasses import asdict, dataclass, field
from typing import Iterable, Iterator, NamedTuple

import numpy as np

from .errors import PcapError, TruncatedFile, UnknownMagic, UnsupportedLinktype

GLOBAL_HEADER_LEN = 24
RECORD_HEADER_LEN = 16
ETHERNET_HEADER_LEN = 14
IPV4_MIN_HEADER_LEN = 20

LINKTYPE_ETHERNET = 1
ETHERTYPE_IPV4 = 0x0800
ETHERTYPE_VLAN = 0x8100
ETHERTYPE_IPV6 = 0x86DD

MAGIC_USEC = 0xA1B2C3D4
MAGIC_NSEC = 0xA1B23C4D
PCAPNG_MAGIC = 0x0A0D0D0A

# magic read as a little-endian u32 -> (struct byte order, nanosecond resolution)
_MAGICS = {
    MAGIC_USEC: ("<", False),
    0xD4C3B2A1: (">", False),
    MAGIC_NSEC: ("<", True),
    0x4D3CB2A1: (">", True),
}


@dataclass(frozen=True)
class PcapHeader:
    magic: int
    byteorder: str
    nanosecond: bool
    version_major: int
    version_minor: int
    thiszone: int
    sigfigs: int
    snaplen: int
    linktype: int

    @property
    def endian(self) -> str:
        return "little" if self.byteorder == "<" else "big"

    @property
    def resolution(self) -> str:
        return "ns" if self.nanosecond else "us"


class PacketRecord(NamedTuple):
    ts_sec: int
    ts_frac: int
    src: int
    dst: int


class InvalidReason(enum.Enum):
    NON_IPV4 = "non-ipv4"
    TRUNCATED = "truncated"
    MALFORMED = "malformed"


class Invalid(NamedTuple):
    reason: InvalidReason


@dataclass
class PacketBatch:
    """Columnar block of packet records (timestamps and IPv4 addresses)."""

    ts_sec: np.ndarray = field(default_factory=lambda: np.zeros(0, np.uint32))
    ts_frac: np.ndarray = field(default_factory=lambda: np.zeros(0, np.uint32))
    src: np.ndarray = field(default_factory=lambda: np.zeros(0, np.uint32))
    dst: np.ndarray = field(default_factory=lambda: np.zeros(0, np.uint32))

    def __post_init__(self):
        self.ts_sec = np.asarray(self.ts_sec, dtype=np.uint32)
        self.ts_frac = np.asarray(self.ts_frac, dtype=np.uint32)
        self.src = np.asarray(self.src, dtype=np.uint32)
        self.dst = np.asarray(self.dst, dtype=np.uint32)
        n = len(self.src)
        if not (len(self.ts_sec) == len(self.ts_frac) == len(self.dst) == n):
            raise ValueError("PacketBatch columns must have equal length")

    def __len__(self) -> int:
        return len(self.src)

    def __iter__(self) -> Iterator[PacketRecord]:
        cols = (self.ts_sec.tolist(), self.ts_frac.tolist(), self.src.tolist(), self.dst.tolist())
        return (PacketRecord(*row) for row in zip(*cols))

    def __getitem__(self, i):
        if isinstance(i, slice):
            return PacketBatch(self.ts_sec[i], self.ts_frac[i], self.src[i], self.dst[i])
        return PacketRecord(int(self.ts_sec[i]), int(self.ts_frac[i]), int(self.src[i]), int(self.dst[i]))

    def __eq__(self, other):
        if not isinstance(other, PacketBatch):
            return NotImplemented
        return all(
            np.array_equal(getattr(self, c), getattr(other, c))
            for c in ("ts_sec", "ts_frac", "src", "dst")
        )

    def records(self) -> list[PacketRecord]:
        return list(self)

    @classmethod
    def from_records(cls, records: Iterable[PacketRecord]) -> "PacketBatch":
        rows = list(records)
        if not rows:
            return cls()
        ts_sec, ts_frac, src, dst = zip(*rows)
        return cls(ts_sec, ts_frac, src, dst)

    @classmethod
    def concat(cls, batches: Iterable["PacketBatch"]) -> "PacketBatch":
        batches = [b for b in batches if len(b)]
        if not batches:
            return cls()
        return cls(*(np.concatenate([getattr(b, c) for b in batches])
                     for c in ("ts_sec", "ts_frac", "src", "dst")))


@dataclass
class IngestStats:
    valid_packets: int = 0
    invalid_packets: int = 0
    truncated_packets: int = 0
    non_ipv4_packets: int = 0
    malformed_packets: int = 0
    bytes_read: int = 0
    wall_time: float = 0.0

    @property
    def total_packets(self) -> int:
        return self.valid_packets + self.invalid_packets

    def to_dict(self) -> dict:
        return asdict(self)


def parse_pcap_header(data: bytes) -> PcapHeader:
    """Decode the 24-byte global header, inferring byte order and resolution."""
    if len(data) != GLOBAL_HEADER_LEN:
        raise TruncatedFile(f"pcap global header needs {GLOBAL_HEADER_LEN} bytes, got {len(data)}", 0)
    (raw_magic,) = struct.unpack_from("<I", data)
    if raw_magic == PCAPNG_MAGIC:
        raise UnknownMagic("pcapng files are not supported; convert to classic pcap first")
    try:
        order, nsec = _MAGICS[raw_magic]
    except KeyError:
        raise UnknownMagic(f"not a pcap file (magic bytes {data[:4].hex()})") from None
    magic, vmaj, vmin, zone, sigfigs, snaplen, linktype = struct.unpack(order + "IHHiIII", data)
    if linktype != LINKTYPE_ETHERNET:
        raise UnsupportedLinktype(f"unsupported linktype {linktype}; only Ethernet (1) is handled")
    return PcapHeader(magic, order, nsec, vmaj, vmin, zone, sigfigs, snaplen, linktype)


def parse_packet(header: PcapHeader, record: bytes) -> PacketRecord | Invalid:
    """Decode one per-packet record (16-byte record header plus payload)."""
    if len(record) < RECORD_HEADER_LEN:
        raise TruncatedFile("record header cut short")
    ts_sec, ts_frac, incl_len, _ = struct.unpack_from(header.byteorder + "IIII", record)
    payload = record[RECORD_HEADER_LEN:RECORD_HEADER_LEN + incl_len]
    if len(payload) < incl_len:
        raise TruncatedFile(f"record declares {incl_len} bytes, only {len(payload)} present")

    if incl_len < ETHERNET_HEADER_LEN:
        return Invalid(InvalidReason.TRUNCATED)
    ip_off = ETHERNET_HEADER_LEN
    ethertype = int.from_bytes(payload[12:14], "big")
    if ethertype == ETHERTYPE_VLAN:
        if incl_len < ETHERNET_HEADER_LEN + 4:
            return Invalid(InvalidReason.TRUNCATED)
        ethertype = int.from_bytes(payload[16:18], "big")
        ip_off += 4
    if ethertype != ETHERTYPE_IPV4:
        return Invalid(InvalidReason.NON_IPV4)
    if incl_len - ip_off < IPV4_MIN_HEADER_LEN:
        return Invalid(InvalidReason.TRUNCATED)
    vihl = payload[ip_off]
    if vihl >> 4 != 4 or vihl & 0x0F < 5:
        return Invalid(InvalidReason.MALFORMED)
    src = int.from_bytes(payload[ip_off + 12:ip_off + 16], "big")
    dst = int.from_bytes(payload[ip_off + 16:ip_off + 20], "big")
    return PacketRecord(ts_sec, ts_frac, src, dst)


def _be16(buf: np.ndarray, idx: np.ndarray) -> np.ndarray:
    return (buf[idx].astype(np.uint32) << 8) | buf[idx + 1]


def _be32(buf: np.ndarray, idx: np.ndarray) -> np.ndarray:
    out = np.zeros(len(idx), dtype=np.uint32)
    for k in range(4):
        out = (out << 8) | buf[idx + k]
    return out


class PcapStreamParser:
    """Incremental parser: feed bytes in any chunking, collect batches.

    ``stats.bytes_read`` counts bytes consumed so far, including the global
    header. :meth:`close` must be called at end of input; it raises
    :class:`TruncatedFile` when a partial record is left over.
    """

    def __init__(self):
        self.header: PcapHeader | None = None
        self.stats = IngestStats()
        self._buf = bytearray()
        self._offset = 0
        self._rec = None

    def feed(self, data: bytes) -> PacketBatch:
        self._buf += data
        if self.header is None:
            if len(self._buf) < GLOBAL_HEADER_LEN:
                return PacketBatch()
            self.header = parse_pcap_header(bytes(self._buf[:GLOBAL_HEADER_LEN]))
            self._rec = struct.Struct(self.header.byteorder + "IIII")
            del self._buf[:GLOBAL_HEADER_LEN]
            self._offset = GLOBAL_HEADER_LEN
            self.stats.bytes_read = GLOBAL_HEADER_LEN

        buf = self._buf
        n = len(buf)
        unpack = self._rec.unpack_from
        starts, ts_sec, ts_frac, lens = [], [], [], []
        pos = 0
        while pos + RECORD_HEADER_LEN <= n:
            sec, frac, incl, _ = unpack(buf, pos)
            end = pos + RECORD_HEADER_LEN + incl
            if end > n:
                break
            starts.append(pos + RECORD_HEADER_LEN)
            ts_sec.append(sec)
            ts_frac.append(frac)
            lens.append(incl)
            pos = end
        if not starts:
            return PacketBatch()

        chunk = np.frombuffer(bytes(buf[:pos]), dtype=np.uint8)
        del buf[:pos]
        self._offset += pos
        self.stats.bytes_read += pos
        return self._classify(chunk, np.array(starts, np.int64), np.array(lens, np.int64),
                              np.array(ts_sec, np.uint32), np.array(ts_frac, np.uint32))

    def _classify(self, chunk, start, length, ts_sec, ts_frac) -> PacketBatch:
        last = len(chunk) - 1
        # indices past a record's end are clamped; the masks discard those lanes
        clip = lambda idx: np.minimum(idx, last)  # noqa: E731
        padded = np.concatenate([chunk, np.zeros(4, np.uint8)])

        short = length < ETHERNET_HEADER_LEN
        ethertype = _be16(padded, clip(start + 12))
        vlan = ~short & (ethertype == ETHERTYPE_VLAN)
        short_vlan = vlan & (length < ETHERNET_HEADER_LEN + 4)
        ethertype = np.where(vlan, _be16(padded, clip(start + 16)), ethertype)
        ip_off = np.where(vlan, ETHERNET_HEADER_LEN + 4, ETHERNET_HEADER_LEN)

        framed = ~short & ~short_vlan
        non_ipv4 = framed & (ethertype != ETHERTYPE_IPV4)
        candidate = framed & ~non_ipv4
        short_ip = candidate & (length - ip_off < IPV4_MIN_HEADER_LEN)
        candidate &= ~short_ip
        ip = clip(start + ip_off)
        vihl = padded[ip]
        malformed = candidate & (((vihl >> 4) != 4) | ((vihl & 0x0F) < 5))
        valid = candidate & ~malformed

        truncated = int(np.count_nonzero(short | short_vlan | short_ip))
        n_non_ipv4 = int(np.count_nonzero(non_ipv4))
        n_malformed = int(np.count_nonzero(malformed))
        st = self.stats
        st.truncated_packets += truncated
        st.non_ipv4_packets += n_non_ipv4
        st.malformed_packets += n_malformed
        st.invalid_packets += truncated + n_non_ipv4 + n_malformed
        st.valid_packets += int(np.count_nonzero(valid))

        ip = ip[valid]
        return PacketBatch(ts_sec[valid], ts_frac[valid], _be32(padded, ip + 12), _be32(padded, ip + 16))

    def close(self) -> None:
        if self.header is None:
            raise TruncatedFile(f"file ends inside the {GLOBAL_HEADER_LEN}-byte global header",
                                self._offset)
        if self._buf:
            raise TruncatedFile(f"{len(self._buf)} trailing bytes form an incomplete packet record",
                                self._offset)


class PcapReader:
    """Lazy reader over a capture file.

    Iterating yields :class:`PacketRecord` values in file order;
    :meth:`batches` yields columnar blocks instead. ``stats`` is complete
    once iteration finishes.
    """

    def __init__(self, path, chunk_size: int = 1 << 20):
        self.path = path
        self.chunk_size = chunk_size
        self._parser = PcapStreamParser()

    @property
    def stats(self) -> IngestStats:
        return self._parser.stats

    @property
    def header(self) -> PcapHeader | None:
        return self._parser.header

    def batches(self) -> Iterator[PacketBatch]:
        parser = self._parser
        with open(self.path, "rb") as fh:
            while True:
                try:
                    data = fh.read(self.chunk_size)
                except OSError as exc:
                    raise PcapError(f"read failed at file offset {parser.stats.bytes_read}: {exc}") from exc
                if not data:
                    break
                batch = parser.feed(data)
                if len(batch):
                    yield batch
        parser.close()

    def __iter__(self) -> Iterator[PacketRecord]:
        for batch in self.batches():
            yield from batch


def ingest_pcap(path, chunk_size: int = 1 << 20) -> tuple[PacketBatch, IngestStats]:
    """Read a whole capture. Wall time covers open through final record."""
    t0 = time.perf_counter()
    reader = PcapReader(path, chunk_size)
    batch = PacketBatch.concat(reader.batches())
    stats = reader.stats
    stats.wall_time = time.perf_counter() - t0
    return batch, stats

"""Vertex anonymization by a seeded uniform random permutation.

The permutation is the identity sequence ``0..N-1`` shuffled with
Fisher-Yates ``rounds`` times; the table is relabelled by gathering
through it. The pseudo-random stream is pinned so that any port can
reproduce a permutation bit for bit:

* generator: SplitMix64. With ``state0 = seed mod 2**64`` and
  ``gamma = 0x9E3779B97F4A7C15``, draw ``k`` (from 0) is
  ``mix(state0 + (k + 1) * gamma)`` where ``mix(z)`` is
  ``z ^= z >> 30; z *= 0xBF58476D1CE4E5B9; z ^= z >> 27;
  z *= 0x94D049BB133111EB; z ^= z >> 31`` (all mod 2**64).
* bounded draw in ``[0, m)``: Lemire's multiply-shift with rejection.
  ``p = x * m`` as a 128-bit product; reject while
  ``(p mod 2**64) < (2**64 - m) mod m``; the result is ``p >> 64``.
* shuffle: for ``i = N-1`` down to ``1``: ``j = bounded(i + 1)``, swap
  ``a[i]`` and ``a[j]``. Later rounds keep consuming the same stream.
"""
from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .edges import AGGREGATED, EdgeTable, VertexDictionary
from .errors import EdgeFormatError, LengthMismatch

MASK64 = (1 << 64) - 1
GAMMA = 0x9E3779B97F4A7C15
MIX1 = 0xBF58476D1CE4E5B9
MIX2 = 0x94D049BB133111EB

KEY_MAGIC = b"NSEK"
KEY_VERSION = 1
_KEY_HEADER = struct.Struct("<4sHHQ")


def splitmix64(state: int) -> tuple[int, int]:
    """One scalar SplitMix64 step: returns (new state, output)."""
    state = (state + GAMMA) & MASK64
    z = state
    z = ((z ^ (z >> 30)) * MIX1) & MASK64
    z = ((z ^ (z >> 27)) * MIX2) & MASK64
    return state, z ^ (z >> 31)


def splitmix64_block(seed: int, start: int, count: int) -> np.ndarray:
    """Draws ``start .. start+count-1`` of the stream as uint64, vectorised."""
    with np.errstate(over="ignore"):
        k = np.arange(start + 1, start + count + 1, dtype=np.uint64)
        z = np.uint64(seed & MASK64) + k * np.uint64(GAMMA)
        z = (z ^ (z >> np.uint64(30))) * np.uint64(MIX1)
        z = (z ^ (z >> np.uint64(27))) * np.uint64(MIX2)
        return z ^ (z >> np.uint64(31))


def _mul_hi_lo(x: np.ndarray, m: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """128-bit product of uint64 ``x`` and ``m < 2**32``; returns (high, low) words."""
    with np.errstate(over="ignore"):
        lo = x * m
        hi = ((x >> np.uint64(32)) * m + (((x & np.uint64(0xFFFFFFFF)) * m) >> np.uint64(32))) >> np.uint64(32)
    return hi, lo


class _Stream:
    """Sequential view of the SplitMix64 stream with Lemire bounded draws."""

    def __init__(self, seed: int):
        self.seed = seed & MASK64
        self.pos = 0

    def raw(self, k: int) -> int:
        return splitmix64((self.seed + k * GAMMA) & MASK64)[1]

    def raw_block(self, start: int, count: int) -> np.ndarray:
        return splitmix64_block(self.seed, start, count)

    def bounded_scalar(self, m: int) -> int:
        threshold = ((1 << 64) - m) % m
        while True:
            x = self.raw(self.pos)
            self.pos += 1
            p = x * m
            if (p & MASK64) >= threshold:
                return p >> 64

    def bounded_block(self, bounds: np.ndarray) -> np.ndarray:
        """Bounded draws for each entry of ``bounds`` in order."""
        n = len(bounds)
        x = self.raw_block(self.pos, n)
        m = bounds.astype(np.uint64)
        hi, lo = _mul_hi_lo(x, m)
        with np.errstate(over="ignore"):
            threshold = (np.uint64(0) - m) % m
        rejected = np.flatnonzero(lo < threshold)
        if not len(rejected):
            self.pos += n
            return hi.astype(np.int64)
        # a rejection shifts every later draw; redo the tail one at a time
        first = int(rejected[0])
        out = hi[:first].astype(np.int64)
        self.pos += first
        tail = [self.bounded_scalar(int(b)) for b in bounds[first:].tolist()]
        return np.concatenate([out, np.array(tail, dtype=np.int64)])


@dataclass(eq=False)
class AnonymizationMap:
    permutation: np.ndarray
    seed: int
    rounds: int

    def __len__(self) -> int:
        return len(self.permutation)

    def __eq__(self, other):
        if not isinstance(other, AnonymizationMap):
            return NotImplemented
        return (self.seed == other.seed and self.rounds == other.rounds
                and np.array_equal(self.permutation, other.permutation))

    def inverse(self) -> np.ndarray:
        inv = np.empty_like(self.permutation)
        inv[self.permutation] = np.arange(len(self.permutation), dtype=self.permutation.dtype)
        return inv


def fisher_yates(values, seed: int, rounds: int = 1, stream: _Stream | None = None) -> np.ndarray:
    """Shuffle a copy of ``values`` with the pinned stream; returns the shuffled array."""
    if rounds < 1:
        raise ValueError("rounds must be >= 1")
    arr = np.array(values, copy=True)
    n = len(arr)
    if n < 2:
        return arr
    if n >= 1 << 32:
        raise ValueError("permutations are limited to fewer than 2**32 elements")
    stream = _Stream(seed) if stream is None else stream
    bounds = np.arange(n, 1, -1, dtype=np.int64)  # i + 1 for i = n-1 .. 1
    items = arr.tolist()
    for _ in range(rounds):
        js = stream.bounded_block(bounds).tolist()
        i = n - 1
        for j in js:
            items[i], items[j] = items[j], items[i]
            i -= 1
    return np.array(items, dtype=arr.dtype)


def make_permutation(n: int, seed: int, rounds: int = 1) -> AnonymizationMap:
    """Uniform random permutation of ``0..n-1``, fully determined by (n, seed, rounds)."""
    if n < 0:
        raise ValueError("n must be >= 0")
    perm = fisher_yates(np.arange(n, dtype=np.int64), seed, rounds)
    return AnonymizationMap(perm, seed, rounds)


def apply(amap: AnonymizationMap, table: EdgeTable,
          vertices: VertexDictionary) -> tuple[EdgeTable, VertexDictionary]:
    """Relabel vertex ``i`` as ``permutation[i]``.

    The returned dictionary holds synthetic addresses only: new id ``k``
    maps to the IPv4 address whose 32-bit value is ``k``.
    """
    n = len(amap)
    if n != len(vertices) or n != table.n_vertices:
        raise LengthMismatch(
            f"permutation covers {n} vertices, dictionary has {len(vertices)}, table {table.n_vertices}")
    perm = amap.permutation
    src, dst = perm[table.src], perm[table.dst]
    npk = table.n_packets
    if table.form == AGGREGATED:
        order = np.lexsort((dst, src))
        src, dst, npk = src[order], dst[order], npk[order]
    return EdgeTable(src, dst, npk, table.form, n, validate=False), VertexDictionary.identity(n)


def compose(first: AnonymizationMap, second: AnonymizationMap) -> AnonymizationMap:
    """Map equivalent to applying ``first`` then ``second``."""
    if len(first) != len(second):
        raise LengthMismatch("cannot compose permutations of different lengths")
    return AnonymizationMap(second.permutation[first.permutation], seed=-1, rounds=0)


@dataclass(frozen=True)
class ShuffleQuality:
    n: int
    fixed_points: int
    min_displacement: int
    mean_displacement: float
    max_displacement: int
    histogram: tuple[int, ...]
    bin_edges: tuple[int, ...]


def shuffle_quality(amap: AnonymizationMap, bins: int = 16) -> ShuffleQuality:
    """Fixed points and |new - old| displacement statistics of a permutation."""
    n = len(amap)
    if n == 0:
        return ShuffleQuality(0, 0, 0, 0.0, 0, (), ())
    disp = np.abs(amap.permutation - np.arange(n))
    edges = np.unique(np.linspace(0, max(n - 1, 1), bins + 1).astype(np.int64))
    hist, _ = np.histogram(disp, bins=edges)
    return ShuffleQuality(
        n=n,
        fixed_points=int(np.count_nonzero(disp == 0)),
        min_displacement=int(disp.min()),
        mean_displacement=float(disp.mean()),
        max_displacement=int(disp.max()),
        histogram=tuple(int(h) for h in hist),
        bin_edges=tuple(int(e) for e in edges),
    )


# key file: 16-byte header (magic "NSEK", u16 version, u16 rounds, u64 N),
# u64 seed, u32[N] permutation, u32[N] original address of each old id

def write_key(amap: AnonymizationMap, vertices: VertexDictionary, path) -> int:
    if len(amap) != len(vertices):
        raise LengthMismatch("key file needs one address per permuted vertex")
    data = b"".join([
        _KEY_HEADER.pack(KEY_MAGIC, KEY_VERSION, amap.rounds, len(amap)),
        struct.pack("<Q", amap.seed & MASK64),
        amap.permutation.astype("<u4").tobytes(),
        vertices.reverse.astype("<u4").tobytes(),
    ])
    Path(path).write_bytes(data)
    return len(data)


def read_key(path) -> tuple[AnonymizationMap, VertexDictionary]:
    data = Path(path).read_bytes()
    if len(data) < _KEY_HEADER.size + 8:
        raise EdgeFormatError("key file too short")
    magic, version, rounds, n = _KEY_HEADER.unpack_from(data)
    if magic != KEY_MAGIC or version != KEY_VERSION:
        raise EdgeFormatError(f"not a version-{KEY_VERSION} key file")
    if len(data) != _KEY_HEADER.size + 8 + 8 * n:
        raise EdgeFormatError("key file length does not match its header")
    (seed,) = struct.unpack_from("<Q", data, _KEY_HEADER.size)
    off = _KEY_HEADER.size + 8
    perm = np.frombuffer(data, "<u4", n, off).astype(np.int64)
    addrs = np.frombuffer(data, "<u4", n, off + 4 * n)
    return AnonymizationMap(perm, seed, rounds), VertexDictionary(addrs)

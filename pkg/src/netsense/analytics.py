"""Traffic-matrix queries over an :class:`~netsense.edges.EdgeTable`.

Writing ``A`` for the traffic matrix (``A[i, j]`` = packets from vertex i
to vertex j) and ``|A|_0`` for its non-zero pattern:

===========================  ======================  =======================
query                        matrix form             function
===========================  ======================  =======================
valid packets                ``1' A 1``              :func:`valid_packets`
unique links                 ``1' |A|_0 1``          :func:`unique_links`
link packets                 ``A``                   :func:`link_packets`
max link packets             ``max(A)``              :func:`max_link_packets`
unique sources               ``1' |A 1|_0``          :func:`unique_sources`
packets from source          ``A 1``                 :func:`packets_from_source`
max source packets           ``max(A 1)``            :func:`max_source_packets`
source fan-out               ``|A|_0 1``             :func:`fan_out`
max source fan-out           ``max(|A|_0 1)``        :func:`max_fan_out`
===========================  ======================  =======================

plus the destination mirrors (``A' 1`` etc.). Every query gives the same
answer on a raw table and on its aggregation. Maxima of empty inputs are 0.
"""
from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor
from contextlib import contextmanager
from dataclasses import dataclass, fields

import numpy as np

from . import kernels
from .edges import AGGREGATED, RAW, EdgeTable, pair_keys

SCALAR_FIELDS = (
    "valid_packets",
    "unique_links",
    "max_link_packets",
    "unique_sources",
    "unique_destinations",
    "max_source_packets",
    "max_destination_packets",
    "max_fan_out",
    "max_fan_in",
)
VECTOR_FIELDS = ("packets_from_source", "packets_to_destination", "fan_out", "fan_in")


@dataclass(frozen=True)
class UniqueIPs:
    total: int
    src_only: int
    dst_only: int
    both: int


@dataclass(eq=False)
class NetworkProperties:
    valid_packets: int = 0
    unique_links: int = 0
    max_link_packets: int = 0
    unique_sources: int = 0
    unique_destinations: int = 0
    max_source_packets: int = 0
    max_destination_packets: int = 0
    max_fan_out: int = 0
    max_fan_in: int = 0
    link_packets: EdgeTable | None = None
    packets_from_source: np.ndarray | None = None
    packets_to_destination: np.ndarray | None = None
    fan_out: np.ndarray | None = None
    fan_in: np.ndarray | None = None
    unique_ips: UniqueIPs | None = None

    def scalars(self) -> dict[str, int]:
        return {name: int(getattr(self, name)) for name in SCALAR_FIELDS}

    def __eq__(self, other):
        if not isinstance(other, NetworkProperties):
            return NotImplemented
        for f in fields(self):
            a, b = getattr(self, f.name), getattr(other, f.name)
            if isinstance(a, np.ndarray) or isinstance(b, np.ndarray):
                if a is None or b is None or not np.array_equal(a, b):
                    return False
            elif a != b:
                return False
        return True

    def check_bounds(self) -> list[str]:
        """Return the violated ordering constraints (empty when consistent)."""
        bad = []
        if self.max_fan_out > self.unique_links:
            bad.append("max_fan_out > unique_links")
        if self.max_fan_in > self.unique_links:
            bad.append("max_fan_in > unique_links")
        if not self.max_link_packets <= self.max_source_packets <= self.valid_packets:
            bad.append("max_link_packets <= max_source_packets <= valid_packets")
        if not self.max_link_packets <= self.max_destination_packets <= self.valid_packets:
            bad.append("max_link_packets <= max_destination_packets <= valid_packets")
        return bad


def _weights(table: EdgeTable):
    return None if table.form == RAW else table.n_packets


def _pair_space(table: EdgeTable) -> int:
    return table.n_vertices * table.n_vertices


def _workers(workers):
    return kernels.default_workers() if workers is None else max(1, int(workers))


def valid_packets(table: EdgeTable) -> int:
    return len(table) if table.form == RAW else int(table.n_packets.sum())


def link_packets(table: EdgeTable, workers: int | None = 1) -> EdgeTable:
    """Aggregated table: one row per distinct (src, dst), sorted, with packet totals."""
    V = table.n_vertices
    if table.form == AGGREGATED:
        return table
    keys = pair_keys(table.src, table.dst, V)
    uniq, counts = kernels.group_sum_sparse(keys, None, _workers(workers), _pair_space(table),
                                            cap=kernels.DENSE_PAIR_CAP)
    V64 = np.uint64(max(V, 1))
    return EdgeTable((uniq // V64).astype(np.int64), (uniq % V64).astype(np.int64), counts,
                     AGGREGATED, V, validate=False)


def _distinct_pairs(table: EdgeTable, workers) -> np.ndarray:
    keys = pair_keys(table.src, table.dst, table.n_vertices)
    if table.form == AGGREGATED:
        return keys
    return kernels.distinct(keys, _pair_space(table), _workers(workers), cap=kernels.DENSE_PAIR_CAP)


def unique_links(table: EdgeTable, workers: int | None = 1) -> int:
    if table.form == AGGREGATED:
        return len(table)
    return len(_distinct_pairs(table, workers))


def max_link_packets(table: EdgeTable, workers: int | None = 1) -> int:
    return kernels.max_or_zero(link_packets(table, workers).n_packets)


def _unique_count(col: np.ndarray, n_vertices: int, workers) -> int:
    return len(kernels.distinct(col, n_vertices, _workers(workers)))


def unique_sources(table: EdgeTable, workers: int | None = 1) -> int:
    return _unique_count(table.src, table.n_vertices, workers)


def unique_destinations(table: EdgeTable, workers: int | None = 1) -> int:
    return _unique_count(table.dst, table.n_vertices, workers)


def packets_from_source(table: EdgeTable, workers: int | None = 1) -> np.ndarray:
    return kernels.group_sum(table.src, table.n_vertices, _weights(table), _workers(workers))


def packets_to_destination(table: EdgeTable, workers: int | None = 1) -> np.ndarray:
    return kernels.group_sum(table.dst, table.n_vertices, _weights(table), _workers(workers))


def _max_group(col, table, workers) -> int:
    # scalar only: the sparse path avoids a V-length vector when V >> rows
    _, sums = kernels.group_sum_sparse(col, _weights(table), _workers(workers), table.n_vertices)
    return kernels.max_or_zero(sums)


def max_source_packets(table: EdgeTable, workers: int | None = 1) -> int:
    return _max_group(table.src, table, workers)


def max_destination_packets(table: EdgeTable, workers: int | None = 1) -> int:
    return _max_group(table.dst, table, workers)


def _fan_from_pairs(pairs: np.ndarray, V: int, side: str) -> np.ndarray:
    V64 = np.uint64(max(V, 1))
    ends = pairs // V64 if side == "src" else pairs % V64
    return kernels.group_sum(ends.astype(np.int64), V)


def fan_out(table: EdgeTable, workers: int | None = 1) -> np.ndarray:
    """Distinct destinations per source vertex."""
    return _fan_from_pairs(_distinct_pairs(table, workers), table.n_vertices, "src")


def fan_in(table: EdgeTable, workers: int | None = 1) -> np.ndarray:
    """Distinct sources per destination vertex."""
    return _fan_from_pairs(_distinct_pairs(table, workers), table.n_vertices, "dst")


def max_fan_out(table: EdgeTable, workers: int | None = 1) -> int:
    return kernels.max_or_zero(fan_out(table, workers))


def max_fan_in(table: EdgeTable, workers: int | None = 1) -> int:
    return kernels.max_or_zero(fan_in(table, workers))


def unique_ips(table: EdgeTable, workers: int | None = 1) -> UniqueIPs:
    """Distinct vertices overall and split by role (source only, destination only, both)."""
    w = _workers(workers)
    srcs = kernels.distinct(table.src, table.n_vertices, w)
    dsts = kernels.distinct(table.dst, table.n_vertices, w)
    both = len(np.intersect1d(srcs, dsts, assume_unique=True))
    return UniqueIPs(len(srcs) + len(dsts) - both, len(srcs) - both, len(dsts) - both, both)


@contextmanager
def _timed(timings, name):
    t0 = time.perf_counter()
    yield
    if timings is not None:
        timings[name] = timings.get(name, 0.0) + time.perf_counter() - t0


def all_properties(table: EdgeTable, workers: int | None = 1,
                   timings: dict | None = None) -> NetworkProperties:
    """Every query in one plan: the pair grouping is done once and shared.

    When ``timings`` is a dict it receives wall seconds per query; with
    several workers the pair, source and destination groupings run
    concurrently, so their timings overlap.
    """
    w = _workers(workers)
    V = table.n_vertices
    with _timed(timings, "valid_packets"):
        total = valid_packets(table)

    def timed(name, fn):
        def run():
            with _timed(timings, name):
                return fn(table, w)
        return run

    # the three groupings are independent; with several workers they overlap
    tasks = [timed("link_packets", link_packets),
             timed("packets_from_source", packets_from_source),
             timed("packets_to_destination", packets_to_destination)]
    if w > 1 and len(table) >= kernels.MIN_CHUNK_ROWS:
        with ThreadPoolExecutor(max_workers=len(tasks)) as pool:
            links, from_src, to_dst = [f.result() for f in [pool.submit(t) for t in tasks]]
    else:
        links, from_src, to_dst = [t() for t in tasks]

    with _timed(timings, "unique_links"):
        n_links = len(links)
    with _timed(timings, "max_link_packets"):
        max_link = kernels.max_or_zero(links.n_packets)
    with _timed(timings, "max_source_packets"):
        max_src = kernels.max_or_zero(from_src)
    with _timed(timings, "max_destination_packets"):
        max_dst = kernels.max_or_zero(to_dst)
    # aggregated rows are distinct pairs, so fan counts are row counts there
    with _timed(timings, "fan_out"):
        fo = kernels.group_sum(links.src, V, None, w)
    with _timed(timings, "fan_in"):
        fi = kernels.group_sum(links.dst, V, None, w)
    with _timed(timings, "max_fan_out"):
        max_fo = kernels.max_or_zero(fo)
    with _timed(timings, "max_fan_in"):
        max_fi = kernels.max_or_zero(fi)
    # a vertex has nonzero fan-out iff it appears as a source
    with _timed(timings, "unique_sources"):
        n_src = int(np.count_nonzero(fo))
    with _timed(timings, "unique_destinations"):
        n_dst = int(np.count_nonzero(fi))
    with _timed(timings, "unique_ips"):
        both = int(np.count_nonzero((fo > 0) & (fi > 0)))
        ips = UniqueIPs(n_src + n_dst - both, n_src - both, n_dst - both, both)
    return NetworkProperties(
        valid_packets=total,
        unique_links=n_links,
        max_link_packets=max_link,
        unique_sources=n_src,
        unique_destinations=n_dst,
        max_source_packets=max_src,
        max_destination_packets=max_dst,
        max_fan_out=max_fo,
        max_fan_in=max_fi,
        link_packets=links,
        packets_from_source=from_src,
        packets_to_destination=to_dst,
        fan_out=fo,
        fan_in=fi,
        unique_ips=ips,
    )

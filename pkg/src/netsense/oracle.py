"""Brute-force reference for aggregation and every traffic-matrix query.

Deliberately naive: one pass over the rows in plain Python, tallying into
dicts and sets. Nothing here is shared with :mod:`netsense.kernels` or
:mod:`netsense.analytics` beyond the result container.
"""
from __future__ import annotations

import numpy as np

from .analytics import NetworkProperties, UniqueIPs
from .edges import AGGREGATED, EdgeTable
from .errors import TooLarge

MAX_ROWS = 1_000_000


def oracle_link_packets(table: EdgeTable) -> dict[tuple[int, int], int]:
    if len(table) > MAX_ROWS:
        raise TooLarge(f"oracle handles at most {MAX_ROWS} rows, got {len(table)}")
    counts: dict[tuple[int, int], int] = {}
    for s, d, n in zip(table.src.tolist(), table.dst.tolist(), table.n_packets.tolist()):
        counts[(s, d)] = counts.get((s, d), 0) + n
    return counts


def oracle_all_properties(table: EdgeTable) -> NetworkProperties:
    links = oracle_link_packets(table)

    out_packets: dict[int, int] = {}
    in_packets: dict[int, int] = {}
    out_nbrs: dict[int, set] = {}
    in_nbrs: dict[int, set] = {}
    for (s, d), n in links.items():
        out_packets[s] = out_packets.get(s, 0) + n
        in_packets[d] = in_packets.get(d, 0) + n
        out_nbrs.setdefault(s, set()).add(d)
        in_nbrs.setdefault(d, set()).add(s)

    def vector(tally):
        v = [0] * table.n_vertices
        for k, x in tally.items():
            v[k] = x
        return np.array(v, dtype=np.int64)

    fan_out = {k: len(v) for k, v in out_nbrs.items()}
    fan_in = {k: len(v) for k, v in in_nbrs.items()}
    sources, dests = set(out_packets), set(in_packets)
    pairs = sorted(links)
    link_table = EdgeTable([s for s, _ in pairs], [d for _, d in pairs], [links[p] for p in pairs],
                           AGGREGATED, table.n_vertices)
    return NetworkProperties(
        valid_packets=sum(links.values()),
        unique_links=len(links),
        max_link_packets=max(links.values(), default=0),
        unique_sources=len(sources),
        unique_destinations=len(dests),
        max_source_packets=max(out_packets.values(), default=0),
        max_destination_packets=max(in_packets.values(), default=0),
        max_fan_out=max(fan_out.values(), default=0),
        max_fan_in=max(fan_in.values(), default=0),
        link_packets=link_table,
        packets_from_source=vector(out_packets),
        packets_to_destination=vector(in_packets),
        fan_out=vector(fan_out),
        fan_in=vector(fan_in),
        unique_ips=UniqueIPs(len(sources | dests), len(sources - dests), len(dests - sources),
                             len(sources & dests)),
    )

from collections import Counter

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from netsense import analytics as an
from netsense import kernels
from netsense.edges import AGGREGATED, RAW, EdgeTable, aggregate
from netsense.oracle import oracle_all_properties

from conftest import random_raw_table

EMPTY = EdgeTable([], [], None, RAW, 0)


def test_valid_packets(weighted_table, rng):
    assert an.valid_packets(EdgeTable([0, 0], [1, 2], [3, 2], AGGREGATED, 3)) == 5
    assert an.valid_packets(EMPTY) == 0
    raw = random_raw_table(rng, 100_000, 300)
    assert an.valid_packets(raw) == len(raw) == int(raw.n_packets.sum())


def test_unique_links(abc_table, weighted_table, rng):
    assert an.unique_links(abc_table) == 2
    assert an.unique_links(weighted_table) == len(weighted_table) == 3
    raw = random_raw_table(rng, 50_000, 120)
    assert an.unique_links(raw) == len(set(zip(raw.src.tolist(), raw.dst.tolist())))


def test_link_packets_and_max(abc_table, rng):
    links = an.link_packets(abc_table)
    assert links == aggregate(abc_table)
    assert an.max_link_packets(abc_table) == 2
    assert an.max_link_packets(EMPTY) == 0
    raw = random_raw_table(rng, 50_000, 40)
    assert an.max_link_packets(raw) == max(Counter(zip(raw.src.tolist(), raw.dst.tolist())).values())


def test_unique_sources_destinations(rng):
    t = EdgeTable([0, 0, 1], [1, 2, 2], None, RAW, 3)
    assert an.unique_sources(t) == 2 and an.unique_destinations(t) == 2
    assert an.unique_sources(EMPTY) == 0
    raw = random_raw_table(rng, 1000, 5000)
    assert an.unique_sources(raw) == len(set(raw.src.tolist()))
    assert an.unique_destinations(raw) == len(set(raw.dst.tolist()))


def test_packets_from_source(weighted_table, rng):
    assert an.packets_from_source(weighted_table).tolist() == [5, 1, 0]
    assert an.packets_to_destination(weighted_table).tolist() == [0, 3, 3]
    assert an.max_source_packets(weighted_table) == 5
    assert an.packets_from_source(EdgeTable([], [], None, RAW, 4)).tolist() == [0, 0, 0, 0]
    assert an.max_source_packets(EMPTY) == 0
    raw = random_raw_table(rng, 20_000, 70)
    tally = {}
    for s in raw.src.tolist():
        tally[s] = tally.get(s, 0) + 1
    vec = an.packets_from_source(raw)
    assert {i: int(x) for i, x in enumerate(vec) if x} == tally
    assert an.max_source_packets(raw) == max(tally.values())


def test_fan_out_fan_in(rng):
    t = EdgeTable([0, 0, 0], [1, 1, 2], None, RAW, 3)
    assert an.fan_out(t)[0] == 2
    assert an.fan_out(EdgeTable([], [], None, RAW, 3)).tolist() == [0, 0, 0]
    star = EdgeTable([0, 0, 0, 1], [1, 2, 3, 0], None, RAW, 4)
    assert an.max_fan_out(star) == 3 and an.max_fan_in(star) == 1
    assert an.max_fan_out(EdgeTable([0], [1], None, RAW, 2)) == 1
    assert an.max_fan_out(EMPTY) == 0
    raw = random_raw_table(rng, 20_000, 90)
    nbrs = {}
    for s, d in zip(raw.src.tolist(), raw.dst.tolist()):
        nbrs.setdefault(d, set()).add(s)
    fi = an.fan_in(raw)
    assert {i: int(x) for i, x in enumerate(fi) if x} == {k: len(v) for k, v in nbrs.items()}


def test_unique_ips():
    t = EdgeTable([0, 1], [1, 2], None, RAW, 3)
    assert an.unique_ips(t) == an.UniqueIPs(3, 1, 1, 1)
    assert an.unique_ips(EMPTY) == an.UniqueIPs(0, 0, 0, 0)


def test_unique_ips_random(rng):
    raw = random_raw_table(rng, 300, 1000)
    s, d = set(raw.src.tolist()), set(raw.dst.tolist())
    assert an.unique_ips(raw) == an.UniqueIPs(len(s | d), len(s - d), len(d - s), len(s & d))
    assert an.all_properties(raw).unique_ips == an.unique_ips(raw)


def _per_op(table):
    return an.NetworkProperties(
        valid_packets=an.valid_packets(table),
        unique_links=an.unique_links(table),
        max_link_packets=an.max_link_packets(table),
        unique_sources=an.unique_sources(table),
        unique_destinations=an.unique_destinations(table),
        max_source_packets=an.max_source_packets(table),
        max_destination_packets=an.max_destination_packets(table),
        max_fan_out=an.max_fan_out(table),
        max_fan_in=an.max_fan_in(table),
        link_packets=an.link_packets(table),
        packets_from_source=an.packets_from_source(table),
        packets_to_destination=an.packets_to_destination(table),
        fan_out=an.fan_out(table),
        fan_in=an.fan_in(table),
        unique_ips=an.unique_ips(table),
    )


def test_all_properties_small(abc_table):
    props = an.all_properties(abc_table)
    assert props.scalars() == {
        "valid_packets": 3, "unique_links": 2, "max_link_packets": 2,
        "unique_sources": 2, "unique_destinations": 2,
        "max_source_packets": 2, "max_destination_packets": 2,
        "max_fan_out": 1, "max_fan_in": 1,
    }
    assert props == _per_op(abc_table)


def test_all_properties_empty():
    props = an.all_properties(EMPTY)
    assert set(props.scalars().values()) == {0}
    assert props == oracle_all_properties(EMPTY)


@pytest.mark.parametrize("n_rows, n_vertices", [(100_000, 1000), (5000, 200_000), (30_000, 7)])
def test_all_properties_matches_per_op_and_oracle(rng, n_rows, n_vertices):
    raw = random_raw_table(rng, n_rows, n_vertices)
    props = an.all_properties(raw)
    assert props == _per_op(raw)
    assert props == oracle_all_properties(raw)
    assert props.check_bounds() == []


def _relabel(table, perm):
    src, dst = perm[table.src], perm[table.dst]
    return EdgeTable(src, dst, None, RAW, table.n_vertices)


tables = st.builds(
    lambda seed, n, v: random_raw_table(np.random.default_rng(seed), n, v),
    st.integers(0, 2**32), st.integers(0, 3000), st.integers(1, 400),
)


@settings(max_examples=60, deadline=None)
@given(raw=tables)
def test_invariants(raw):
    props = an.all_properties(raw)
    expected = oracle_all_properties(raw)
    assert props == expected

    # raw and aggregated forms agree
    assert an.all_properties(aggregate(raw)) == props
    assert _per_op(aggregate(raw)) == props

    # mirror symmetry
    mirrored = an.all_properties(raw.swapped())
    s, m = props.scalars(), mirrored.scalars()
    for a, b in [("unique_sources", "unique_destinations"),
                 ("max_source_packets", "max_destination_packets"),
                 ("max_fan_out", "max_fan_in")]:
        assert (m[a], m[b]) == (s[b], s[a])
    for k in ("valid_packets", "unique_links", "max_link_packets"):
        assert m[k] == s[k]
    assert an.all_properties(aggregate(raw).swapped()) == mirrored

    assert props.check_bounds() == []
    assert props.unique_links <= props.valid_packets


@settings(max_examples=40, deadline=None)
@given(raw=tables, seed=st.integers(0, 2**32))
def test_permutation_invariance(raw, seed):
    perm = np.random.default_rng(seed).permutation(raw.n_vertices)
    before, after = an.all_properties(raw), an.all_properties(_relabel(raw, perm))
    assert before.scalars() == after.scalars()
    for name in an.VECTOR_FIELDS:
        old, new = getattr(before, name), getattr(after, name)
        assert np.array_equal(new[perm], old)


@pytest.mark.parametrize("workers", [1, 2, 3, 8])
def test_worker_count_independence(rng, workers, monkeypatch):
    monkeypatch.setattr(kernels, "MIN_CHUNK_ROWS", 1000)
    for V in (50, 3000, 500_000):
        raw = random_raw_table(rng, 40_000, V)
        assert an.all_properties(raw, workers=workers) == an.all_properties(raw, workers=1)
        agg = aggregate(raw)
        assert an.all_properties(agg, workers=workers) == an.all_properties(raw, workers=1)


def test_dense_and_sparse_strategies_agree(rng, monkeypatch):
    raw = random_raw_table(rng, 20_000, 150)
    dense = an.all_properties(raw)
    monkeypatch.setattr(kernels, "DENSE_FACTOR", 0)
    monkeypatch.setattr(kernels, "DENSE_FLOOR", 0)
    assert an.all_properties(raw) == dense
    assert an.all_properties(aggregate(raw)) == dense


def test_weighted_sums_exact_beyond_float_precision():
    big = 2**60
    t = EdgeTable([0, 0, 1], [1, 2, 2], [big, 3, 5], AGGREGATED, 3)
    assert an.packets_from_source(t).tolist() == [big + 3, 5, 0]
    assert an.valid_packets(t) == big + 8

import numpy as np
import pytest

from netsense.analytics import all_properties
from netsense.edges import build
from netsense.oracle import oracle_all_properties
from netsense.pcap import ingest_pcap
from netsense.synth import SynthConfig, generate, generate_table, write_pcap


def test_empty():
    batch, truth = generate(SynthConfig(0, 0))
    assert len(batch) == 0 and set(truth.scalars().values()) == {0}


def test_single_vertex_self_loop():
    batch, truth = generate(SynthConfig(17, 1, seed=3))
    assert len(set(batch.src.tolist()) | set(batch.dst.tolist())) == 1
    s = truth.scalars()
    assert (s["valid_packets"], s["unique_links"], s["max_fan_out"], s["max_link_packets"]) == (17, 1, 1, 17)


@pytest.mark.parametrize("model", ["uniform", "skewed"])
def test_truth_matches_oracle(model):
    vertices, table, truth = generate_table(SynthConfig(100_000, 100, model=model, seed=5))
    oracle = oracle_all_properties(table)
    assert truth.scalars() == oracle.scalars()
    assert truth.unique_ips == oracle.unique_ips
    assert all_properties(table) == oracle


def test_addresses_are_private_and_deterministic():
    a, _ = generate(SynthConfig(1000, 200, seed=9))
    b, _ = generate(SynthConfig(1000, 200, seed=9))
    assert a == b
    assert np.all(a.src >> 24 == 10) and np.all(a.dst >> 24 == 10)


def test_skewed_model_is_heavy_tailed():
    _, uniform = generate(SynthConfig(50_000, 500, seed=1))
    _, skewed = generate(SynthConfig(50_000, 500, model="skewed", seed=1))
    assert skewed.max_source_packets > 5 * uniform.max_source_packets


@pytest.mark.parametrize("kwargs", [
    dict(n_packets=-1, n_vertices=1), dict(n_packets=5, n_vertices=0),
    dict(n_packets=1, n_vertices=1, model="rmat"), dict(n_packets=1, n_vertices=1, invalid_fraction=1.0),
])
def test_config_validation(kwargs):
    with pytest.raises(ValueError):
        SynthConfig(**kwargs)


def test_pcap_sizes(tmp_path):
    batch, _ = generate(SynthConfig(1, 1))
    assert write_pcap(batch, tmp_path / "one.pcap") == 24 + 16 + 34
    assert write_pcap(batch[:0], tmp_path / "none.pcap") == 24


def test_ipv4_checksum_valid(tmp_path):
    batch, _ = generate(SynthConfig(3, 3, seed=2))
    write_pcap(batch, tmp_path / "c.pcap")
    data = (tmp_path / "c.pcap").read_bytes()
    ip = data[24 + 16 + 14:24 + 16 + 34]
    total = sum(int.from_bytes(ip[i:i + 2], "big") for i in range(0, 20, 2))
    while total >> 16:
        total = (total & 0xFFFF) + (total >> 16)
    assert total == 0xFFFF


@pytest.mark.parametrize("byteorder", ["little", "big"])
def test_pcap_round_trip_with_invalid(tmp_path, byteorder):
    batch, _ = generate(SynthConfig(1000, 80, seed=12))
    write_pcap(batch, tmp_path / "p.pcap", invalid_fraction=0.01, seed=4, byteorder=byteorder)
    got, stats = ingest_pcap(tmp_path / "p.pcap")
    assert got == batch
    assert stats.invalid_packets == round(0.01 * 1000 / 0.99) == stats.non_ipv4_packets


def test_full_pipeline_million_packets(tmp_path):
    batch, truth = generate(SynthConfig(1_000_000, 1000, model="skewed", seed=21))
    write_pcap(batch, tmp_path / "big.pcap", invalid_fraction=0.001, seed=2)
    got, stats = ingest_pcap(tmp_path / "big.pcap")
    assert stats.valid_packets == 1_000_000
    _, table = build(got)
    assert all_properties(table).scalars() == truth.scalars()

import logging
import pickle

import numpy as np
import pytest

import lagwurm
from lagwurm import nulltable
from lagwurm.distcorr import copula_transform, distance_correlation
from lagwurm.indep_tests import GPDC
from lagwurm.nulltable import (
    HEADER, GpdcNullTable, build_gpdc_null_table, null_statistics,
    read_sidecar, sidecar_name, write_sidecar)
from lagwurm.pcmci import DiscoveryConfig, run_pcmci
from lagwurm.synthgen import simulate


@pytest.fixture
def table():
    return GpdcNullTable(B_null=100, seed=1)


def test_null_statistics_sorted_and_seeded():
    a = null_statistics(30, 100, 0)
    assert np.all(np.diff(a) >= 0)
    assert np.all((a >= 0) & (a <= 1))
    assert np.array_equal(a, null_statistics(30, 100, 0))
    assert not np.array_equal(a, null_statistics(30, 100, 1))


def test_table_builds_once(table):
    first = table.get(40)
    assert table.get(40) is first
    assert 40 in table
    assert len(table) == 1
    assert table.sizes() == [40]
    with pytest.raises(ValueError):
        first[0] = 0.0


def test_p_value(table):
    values = table.get(40)
    assert table.p_value(40, 2.0) == 0.0
    assert table.p_value(40, -1.0) == 1.0
    assert table.p_value(40, values[50]) == pytest.approx(0.5, abs=0.05)
    assert table.quantile(40, 0.0) == values[0]


def test_b_null_minimum():
    with pytest.raises(lagwurm.ContractError, match='at least 100'):
        GpdcNullTable(B_null=99)


def test_sidecar_cache(tmp_path):
    table = GpdcNullTable(B_null=100, seed=2, cache_dir=tmp_path)
    values = table.get(25)
    path = tmp_path / sidecar_name(25, 100, 2)
    assert path.exists()
    assert path.stat().st_size == HEADER.size + 8 * 100
    assert np.array_equal(read_sidecar(path, 25, 100, 2), values)
    again = build_gpdc_null_table([25], B_null=100, seed=2,
                                  cache_dir=tmp_path)
    assert np.array_equal(again.get(25), values)


def test_sidecar_wrong_key(tmp_path):
    path = tmp_path / 'table.bin'
    write_sidecar(path, 25, 100, 2, np.zeros(100))
    with pytest.raises(lagwurm.NullTableError, match='n=25, B_null=100'):
        read_sidecar(path, 26, 100, 2)


def test_sidecar_corrupt(tmp_path):
    path = tmp_path / 'table.bin'
    path.write_bytes(b'not a table at all, just some bytes')
    with pytest.raises(lagwurm.NullTableError, match='not a GPDC null '
                       'table'):
        read_sidecar(path, 25, 100, 2)
    path.write_bytes(b'short')
    with pytest.raises(lagwurm.NullTableError, match='truncated'):
        read_sidecar(path, 25, 100, 2)


def test_pickled_table_is_frozen(table):
    table.get(30)
    clone = pickle.loads(pickle.dumps(table))
    assert not table.frozen
    assert clone.frozen
    assert clone.sizes() == [30]
    assert np.array_equal(clone.get(30), table.get(30))
    with pytest.raises(lagwurm.NullTableError, match='n=31 was not prebuilt'):
        clone.get(31)


def test_frozen_table_reads_sidecars(tmp_path):
    table = GpdcNullTable(B_null=100, seed=4, cache_dir=tmp_path)
    clone = pickle.loads(pickle.dumps(table))
    values = table.get(35)
    assert np.array_equal(clone.get(35), values)


def test_ensure(table):
    table.ensure([30, 32, 30, 31.0])
    assert table.sizes() == [30, 31, 32]


def test_memory_only_table_is_logged(caplog, tmp_path):
    with caplog.at_level(logging.INFO, logger='lagwurm.nulltable'):
        GpdcNullTable(B_null=100, seed=9)
    assert 'in memory only' in caplog.text
    caplog.clear()
    with caplog.at_level(logging.INFO, logger='lagwurm.nulltable'):
        GpdcNullTable(B_null=100, seed=9, cache_dir=tmp_path)
    assert 'in memory only' not in caplog.text


def test_parallel_run_builds_each_size_once(monkeypatch, chain_spec):
    built = []
    original = nulltable.null_statistics

    def counting(n, B_null, seed):
        built.append(n)
        return original(n, B_null, seed)

    monkeypatch.setattr(nulltable, 'null_statistics', counting)
    ds = simulate(chain_spec, 60, seed=2).standardize()
    test = GPDC(seed=1, B_null=100)
    cfg = DiscoveryConfig(tau_max=2, workers=2)
    graph = run_pcmci(ds, cfg, test)
    assert graph.tested.any()
    assert sorted(built) == test.null_table.sizes()
    assert 58 in test.null_table
    assert not test.null_table.frozen


@pytest.mark.slow
def test_null_quantile_is_self_consistent():
    table = GpdcNullTable(B_null=1000, seed=3)
    threshold = table.quantile(100, 0.95)
    rng = np.random.default_rng(11)
    below = [distance_correlation(copula_transform(rng.random(100)),
                                  copula_transform(rng.random(100)))
             < threshold for _ in range(400)]
    assert np.mean(below) == pytest.approx(0.95, abs=0.03)

import numpy as np
import pytest

import lagwurm
from lagwurm.dataset import (
    LaggedVariable, TimeSeriesDataset, build_lagged_arrays, lagged_matrix,
    load_csv, unique_conditions, write_csv)


@pytest.fixture
def ds():
    values = np.arange(20, dtype=float).reshape(10, 2)
    values[:, 1] = values[:, 1] ** 2
    return TimeSeriesDataset(values, ('a', 'b'))


def test_lagged_variable_order():
    nodes = [LaggedVariable(1, 2), LaggedVariable(0, 2), LaggedVariable(3, 1)]
    assert sorted(nodes) == [LaggedVariable(3, 1), LaggedVariable(0, 2),
                             LaggedVariable(1, 2)]
    assert LaggedVariable(2, 1).shifted(3) == LaggedVariable(2, 4)
    assert repr(LaggedVariable(2, 1)) == 'LaggedVariable(2, -1)'


def test_lagged_variable_negative():
    with pytest.raises(lagwurm.ContractError, match='non-negative'):
        LaggedVariable(0, -1)


def test_dataset_is_read_only(ds):
    with pytest.raises(ValueError):
        ds.values[0, 0] = 1.0
    assert ds.T == 10
    assert ds.N == 2


def test_dataset_rejects_nan():
    with pytest.raises(lagwurm.MissingDataError, match="column 'y'"):
        TimeSeriesDataset([[1.0, 2.0], [3.0, np.nan]], ('x', 'y'))


def test_dataset_name_count():
    with pytest.raises(lagwurm.DataError, match='1 names given'):
        TimeSeriesDataset(np.zeros((3, 2)), ('x',))


def test_standardize(ds):
    standardized = ds.standardize()
    assert standardized.standardized
    assert np.allclose(standardized.values.mean(axis=0), 0.0)
    assert np.allclose(standardized.values.std(axis=0), 1.0)


def test_standardize_constant():
    ds = TimeSeriesDataset(np.ones((5, 1)), ('c',))
    with pytest.raises(lagwurm.DegenerateVarianceError, match="'c'"):
        ds.standardize()


def test_check_length(ds):
    ds.check_length(4)
    with pytest.raises(lagwurm.InsufficientSamplesError, match='need at '
                       'least 12'):
        ds.check_length(5)


def test_fingerprint(ds):
    same = TimeSeriesDataset(np.array(ds.values), ds.names)
    other = ds.with_values(ds.values + 1.0)
    assert ds.fingerprint == same.fingerprint
    assert ds.fingerprint != other.fingerprint


def test_lagged_matrix(ds):
    block = lagged_matrix(ds, [LaggedVariable(0, 0), LaggedVariable(0, 2)],
                          3)
    assert block.shape == (7, 2)
    assert np.array_equal(block[:, 0], ds.values[3:, 0])
    assert np.array_equal(block[:, 1], ds.values[1:8, 0])


def test_unique_conditions():
    x, y = LaggedVariable(0, 1), LaggedVariable(1, 0)
    z = LaggedVariable(1, 1)
    assert unique_conditions([z, x, z, y], exclude=(x, y)) == [z]


def test_build_lagged_arrays(ds):
    x, y = LaggedVariable(0, 1), LaggedVariable(1, 0)
    arrays = build_lagged_arrays(ds, x, y, [LaggedVariable(1, 2), x], 2)
    assert arrays.n == 8
    assert arrays.dim_z == 1
    assert arrays.z_nodes == (LaggedVariable(1, 2),)
    assert np.array_equal(arrays.x, ds.values[1:9, 0])
    assert np.array_equal(arrays.y, ds.values[2:, 1])
    assert arrays.source == ds.fingerprint
    swapped = arrays.swapped()
    assert swapped.x_node == y and np.array_equal(swapped.y, arrays.x)


def test_build_lagged_arrays_lag_too_large(ds):
    with pytest.raises(lagwurm.ContractError, match='exceeds tau_max=2'):
        build_lagged_arrays(ds, LaggedVariable(0, 3), LaggedVariable(1, 0),
                            [], 2)


def test_build_lagged_arrays_extended_window(ds):
    arrays = build_lagged_arrays(ds, LaggedVariable(0, 1),
                                 LaggedVariable(1, 0), [LaggedVariable(0, 4)],
                                 2, cutoff=4)
    assert arrays.n == 6
    assert arrays.cutoff == 4


def test_build_lagged_arrays_too_few_samples():
    ds = TimeSeriesDataset(np.random.default_rng(0).normal(size=(6, 3)),
                           ('a', 'b', 'c'))
    with pytest.raises(lagwurm.InsufficientSamplesError, match='n=5'):
        build_lagged_arrays(ds, LaggedVariable(0, 1), LaggedVariable(1, 0),
                            [LaggedVariable(1, 1), LaggedVariable(2, 1),
                             LaggedVariable(2, 0)], 1)


def test_csv_round_trip(tmp_path):
    values = np.random.default_rng(1).normal(size=(30, 3))
    ds = TimeSeriesDataset(values, ('x', 'y', 'z'))
    path = tmp_path / 'data.csv'
    write_csv(ds, path)
    text = path.read_text()
    assert 'np.' not in text
    first = text.splitlines()[1]
    assert first == ','.join(repr(float(v)) for v in values[0])
    loaded = load_csv(path, standardize=False)
    assert loaded.names == ('x', 'y', 'z')
    assert np.array_equal(loaded.values, values)
    assert load_csv(path).standardized


def test_csv_parse_error(tmp_path):
    path = tmp_path / 'bad.csv'
    path.write_text('x,y\n1,2\n3,abc\n4,5\n')
    with pytest.raises(lagwurm.ParseError) as excinfo:
        load_csv(path)
    assert excinfo.value.row == 2
    assert excinfo.value.column == 'y'


@pytest.mark.parametrize('cell', ['', 'NaN', 'NA'])
def test_csv_missing(tmp_path, cell):
    path = tmp_path / 'missing.csv'
    path.write_text(f'x,y\n1,2\n3,{cell}\n4,5\n')
    with pytest.raises(lagwurm.MissingDataError, match='row 2'):
        load_csv(path)


def test_csv_empty(tmp_path):
    path = tmp_path / 'empty.csv'
    path.write_text('x,y\n')
    with pytest.raises(lagwurm.DataError, match='no data rows'):
        load_csv(path)

__version__ = '0.1.0'

from .errors import (
    LagwurmError, ConfigError, UnsatisfiableModelError, ContractError,
    DataError, ParseError, MissingDataError, DegenerateVarianceError,
    InsufficientSamplesError, DegenerateTestError, ConditioningError,
    DimensionalityError, EstimationError, SimulationDivergedError,
    NullTableError, StoreError)
from .dataset import (
    LaggedVariable, TimeSeriesDataset, load_csv, write_csv,
    build_lagged_arrays)
from .registry import register_test, register_method, make_test, method_for
from .indep_tests import CITest, CITestOutcome, ParCorr, GPDC, CMIknn
from .nulltable import GpdcNullTable, build_gpdc_null_table
from .graph import TimeSeriesGraph, LinkResult
from .pcmci import DiscoveryConfig, ParentSet, run_pcmci
from .baselines import (
    fullci, bivci, pairwise, pc_stable_standalone, pc1_standalone,
    adaptive_lasso, mci0, mci0pw)
from .synthgen import (
    ModelLink, SyntheticModelSpec, GroundTruthGraph, draw_model, simulate,
    export_ground_truth)
from .oracle import SeparationOracle, LinearGaussianModel
from .connection import open_store, setup_connection, close_connection
from .records import Record, NetworkRecord, RunRecord, Query
from .bench import ExperimentConfig, MethodSpec, run_experiment

__all__ = [
    'LagwurmError', 'ConfigError', 'UnsatisfiableModelError',
    'ContractError', 'DataError', 'ParseError', 'MissingDataError',
    'DegenerateVarianceError', 'InsufficientSamplesError',
    'DegenerateTestError', 'ConditioningError', 'DimensionalityError',
    'EstimationError', 'SimulationDivergedError', 'NullTableError',
    'StoreError',
    'LaggedVariable', 'TimeSeriesDataset', 'load_csv', 'write_csv',
    'build_lagged_arrays', 'register_test', 'register_method', 'make_test',
    'method_for', 'CITest', 'CITestOutcome', 'ParCorr', 'GPDC', 'CMIknn',
    'GpdcNullTable', 'build_gpdc_null_table', 'TimeSeriesGraph',
    'LinkResult', 'DiscoveryConfig', 'ParentSet', 'run_pcmci', 'fullci',
    'bivci', 'pairwise', 'pc_stable_standalone', 'pc1_standalone',
    'adaptive_lasso', 'mci0', 'mci0pw', 'ModelLink', 'SyntheticModelSpec',
    'GroundTruthGraph', 'draw_model', 'simulate', 'export_ground_truth',
    'SeparationOracle', 'LinearGaussianModel', 'open_store',
    'setup_connection', 'close_connection', 'Record', 'NetworkRecord',
    'RunRecord', 'Query', 'ExperimentConfig', 'MethodSpec',
    'run_experiment']

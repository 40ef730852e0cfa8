"""Benchmark harness: ensembles of random models, method runs, metrics.

An experiment is the cartesian product of settings ``(N, c, T, sigma)``.
Each setting gets ``networks`` random models and each model
``realizations`` simulated datasets. Every method of the experiment runs
on every dataset; one such run is a *cell*. Cells are persisted in the
run store (:mod:`lagwurm.records`) and all metrics are computed from the
stored records only.
"""

from dataclasses import asdict, dataclass, field, fields
import itertools
import json
import logging
from pathlib import Path
import time
from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple

from joblib import Parallel, delayed
import numpy as np
import pandas as pd

from .baselines import lag1_autocorrelation
from .connection import open_store
from .dataset import format_float, write_csv
from .errors import ConfigError, ContractError, LagwurmError
from .graph import TimeSeriesGraph
from .nulltable import GpdcNullTable
from .pcmci import AIC_GRID, DiscoveryConfig
from .records import NetworkRecord, RunRecord
from .registry import make_test, method_for, registered_test
from .seeding import derive_seed
from .synthgen import (
    MODES, POOLS, TRANSIENT, GroundTruthGraph, SyntheticModelSpec,
    draw_model, export_ground_truth, simulate)

logger = logging.getLogger(__name__)

AUTOCORR_THRESHOLD = 0.7
QUANTILES = (('q01', 0.01), ('q25', 0.25), ('q50', 0.5), ('q75', 0.75),
             ('q99', 0.99))
CLASSES = ('weak', 'strong')
AIC_METHODS = ('pcmci', 'mci0', 'mci0pw')
CONFIG_OVERRIDES = frozenset(
    f.name for f in fields(DiscoveryConfig)) - {'tau_max', 'workers'}


def _as_tuple(value):
    if isinstance(value, (list, tuple)):
        return tuple(value)
    return (value,)


def parse_alpha_pc(value):
    """``'aic'`` stands for the default AIC grid."""
    if value == 'aic':
        return AIC_GRID
    if isinstance(value, list):
        return tuple(value)
    return value


@dataclass(frozen=True)
class MethodSpec:
    """One method of an experiment.

    :param str label: Name in the metrics, defaults to *method*
    :param str method: Registered method name
    :param test: Registered test name, ``None`` for methods that need
        no test
    :param test_params: Keyword arguments of the test
    :param config: Overrides of the experiment's discovery configuration
    """
    label: str
    method: str
    test: Optional[str] = 'parcorr'
    test_params: Mapping[str, Any] = field(default_factory=dict)
    config: Mapping[str, Any] = field(default_factory=dict)

    @classmethod
    def from_dict(cls, doc) -> 'MethodSpec':
        if isinstance(doc, str):
            doc = {'method': doc}
        unknown = set(doc) - {'label', 'method', 'test', 'test_params',
                              'config'}
        if unknown:
            raise ConfigError(f'unknown method keys: {sorted(unknown)}')
        if 'method' not in doc:
            raise ConfigError(f'method entry without a method: {doc}')
        registered = method_for(doc['method'])
        test = doc.get('test', 'parcorr' if registered.needs_test else None)
        if registered.needs_test and test is None:
            raise ConfigError(f'method {doc["method"]!r} needs a test')
        if test is not None:
            registered_test(test)
        config = dict(doc.get('config', {}))
        bad = set(config) - CONFIG_OVERRIDES
        if bad:
            raise ConfigError(f'unknown configuration keys for '
                              f'{doc["method"]!r}: {sorted(bad)}')
        if 'alpha_pc' in config:
            config['alpha_pc'] = parse_alpha_pc(config['alpha_pc'])
        label = doc.get('label') or (
            doc['method'] if test is None else f'{doc["method"]}-{test}')
        return cls(label, doc['method'], test,
                   dict(doc.get('test_params', {})), config)

    def to_dict(self):
        config = dict(self.config)
        if isinstance(config.get('alpha_pc'), tuple):
            config['alpha_pc'] = list(config['alpha_pc'])
        return {'label': self.label, 'method': self.method,
                'test': self.test, 'test_params': dict(self.test_params),
                'config': config}


@dataclass(frozen=True)
class ExperimentConfig:
    """Parameters of a benchmark experiment.

    *N*, *c*, *T* and *obs_noise_sd* are tuples; every combination is a
    setting. *L* ``None`` draws ``N`` cross links per model.
    """
    methods: Tuple[MethodSpec, ...] = ()
    N: Tuple[int, ...] = (5,)
    c: Tuple[float, ...] = (0.287,)
    T: Tuple[int, ...] = (150,)
    obs_noise_sd: Tuple[float, ...] = (0.0,)
    L: Optional[int] = None
    mode: str = 'linear'
    pool: str = 'mixed'
    networks: int = 5
    realizations: int = 50
    tau_max: int = 5
    alpha_pc: Any = 0.2
    alpha_mci: float = 0.05
    transient: int = TRANSIENT
    B_null: int = 1000
    seed: int = 0
    workers: int = 1

    def __post_init__(self):
        for name in ('N', 'c', 'T', 'obs_noise_sd'):
            object.__setattr__(self, name, _as_tuple(getattr(self, name)))
            if not getattr(self, name):
                raise ConfigError(f'{name} lists no values')
        object.__setattr__(self, 'alpha_pc', parse_alpha_pc(self.alpha_pc))
        labels = [m.label for m in self.methods]
        if len(set(labels)) != len(labels):
            raise ConfigError(f'duplicate method labels in {labels}')
        if self.mode not in MODES:
            raise ConfigError(f'mode must be one of {MODES}')
        if self.pool not in POOLS:
            raise ConfigError(f'pool must be one of {POOLS}')
        if self.networks < 1 or self.realizations < 1:
            raise ConfigError('networks and realizations must be positive')
        if any(n < 1 for n in self.N):
            raise ConfigError(f'invalid N values {self.N}')
        if any(s < 0 for s in self.obs_noise_sd):
            raise ConfigError('obs_noise_sd must be non-negative')
        if self.workers == 0 or self.workers < -1:
            raise ConfigError(f'invalid worker count {self.workers}')
        for m in self.methods:
            dcfg = self.discovery_config(m, 0)
            if dcfg.aic and m.method in AIC_METHODS and \
                    registered_test(m.test).measure != 'corr':
                raise ConfigError(f'{m.label}: alpha_pc selection by AIC '
                                  f'needs the parcorr test')

    @classmethod
    def from_dict(cls, doc) -> 'ExperimentConfig':
        known = {f.name for f in fields(cls)}
        unknown = set(doc) - known
        if unknown:
            raise ConfigError(f'unknown experiment keys: {sorted(unknown)}')
        values = dict(doc)
        values['methods'] = tuple(MethodSpec.from_dict(m)
                                  for m in doc.get('methods', ()))
        try:
            return cls(**values)
        except TypeError as e:
            raise ConfigError(f'invalid experiment configuration: {e}') \
                from e

    @classmethod
    def from_json(cls, text) -> 'ExperimentConfig':
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as e:
            raise ConfigError(f'experiment file is not valid JSON: {e}') \
                from e
        if not isinstance(doc, dict):
            raise ConfigError('experiment file must hold a JSON object')
        return cls.from_dict(doc)

    def to_dict(self):
        doc = asdict(self)
        doc['methods'] = [m.to_dict() for m in self.methods]
        for name in ('N', 'c', 'T', 'obs_noise_sd'):
            doc[name] = list(doc[name])
        if isinstance(self.alpha_pc, tuple):
            doc['alpha_pc'] = list(self.alpha_pc)
        return doc

    def settings(self) -> List['Setting']:
        return [Setting(N, c, T, sigma) for N, c, T, sigma in
                itertools.product(self.N, self.c, self.T,
                                  self.obs_noise_sd)]

    def discovery_config(self, method: MethodSpec, seed) -> DiscoveryConfig:
        values = {'tau_max': self.tau_max, 'alpha_pc': self.alpha_pc,
                  'alpha_mci': self.alpha_mci, 'seed': seed}
        values.update(method.config)
        return DiscoveryConfig(**values)


@dataclass(frozen=True)
class Setting:
    N: int
    c: float
    T: int
    obs_noise_sd: float

    @property
    def key(self) -> str:
        return (f'N={self.N},c={self.c:g},T={self.T},'
                f'sigma={self.obs_noise_sd:g}')

    @property
    def slug(self) -> str:
        return (f'N{self.N}_c{self.c:g}_T{self.T}_'
                f'sigma{self.obs_noise_sd:g}')


PRESETS: Dict[str, Dict[str, Any]] = {
    'highdim-parcorr': {
        'methods': [
            {'method': 'pcmci', 'config': {'alpha_pc': 'aic'}},
            'fullci', 'pc', 'lasso',
            {'method': 'pairwise', 'label': 'corr'},
            'bivci'],
        'N': [5, 10], 'c': 0.287, 'T': 150,
        'networks': 5, 'realizations': 50,
    },
    'samplesize-parcorr': {
        'methods': [{'method': 'pcmci', 'config': {'alpha_pc': 'aic'}},
                    'fullci', 'lasso'],
        'N': 10, 'c': 0.287, 'T': [150, 300, 500],
        'networks': 5, 'realizations': 20,
    },
    'causal-strength': {
        'methods': [{'method': 'pcmci', 'config': {'alpha_pc': 'aic'}},
                    'fullci'],
        'N': 10, 'c': [0.2, 0.247, 0.287, 0.324, 0.414], 'T': 150,
        'networks': 5, 'realizations': 20,
    },
    'obs-noise': {
        'methods': [{'method': 'pcmci', 'config': {'alpha_pc': 'aic'}},
                    'fullci'],
        'N': 10, 'c': 0.287, 'T': 150, 'obs_noise_sd': [0.0, 0.3, 0.6],
        'networks': 5, 'realizations': 20,
    },
    'alpha-parcorr': {
        'methods': [
            {'method': 'pcmci', 'label': f'pcmci-alpha{alpha:g}',
             'config': {'alpha_pc': alpha}} for alpha in AIC_GRID
        ] + [{'method': 'pcmci', 'label': 'pcmci-aic',
              'config': {'alpha_pc': 'aic'}}],
        'N': 10, 'c': 0.287, 'T': 150,
        'networks': 5, 'realizations': 20,
    },
    'highdim-gpdc': {
        'methods': [{'method': 'pcmci', 'test': 'gpdc'},
                    {'method': 'pairwise', 'test': 'gpdc',
                     'label': 'dcor'}],
        'N': 5, 'c': 0.4, 'T': 250, 'mode': 'nonlinear', 'L': 5,
        'networks': 3, 'realizations': 10, 'B_null': 200,
    },
    'highdim-cmi': {
        'methods': [{'method': 'pcmci', 'test': 'cmi',
                     'test_params': {'k_cmi': 50, 'B': 100}}],
        'N': 3, 'c': 0.5, 'T': 500, 'mode': 'nonlinear', 'L': 3,
        'tau_max': 3, 'networks': 2, 'realizations': 10,
    },
}


def preset(name, **overrides) -> ExperimentConfig:
    try:
        doc = PRESETS[name]
    except KeyError:
        raise ConfigError(f'unknown preset {name!r}, expected one of '
                          f'{", ".join(sorted(PRESETS))}') from None
    return ExperimentConfig.from_dict({**doc, **overrides})


def network_seed(cfg: ExperimentConfig, setting_index, net) -> int:
    """Seed of a model; its parity alternates over the networks."""
    seed = derive_seed(cfg.seed, setting_index, net)
    return (seed & ~1) | (net % 2)


def draw_network(cfg: ExperimentConfig, setting: Setting, setting_index,
                 net) -> SyntheticModelSpec:
    if cfg.L is not None:
        L = cfg.L
    else:
        L = 1 if setting.N == 2 else setting.N
    return draw_model(setting.N, L, setting.c, mode=cfg.mode,
                      autocorr_pool=cfg.pool,
                      seed=network_seed(cfg, setting_index, net),
                      obs_noise_sd=setting.obs_noise_sd)


@dataclass(frozen=True)
class Cell:
    setting: str
    net: int
    rep: int
    method_index: int
    method: MethodSpec
    spec: SyntheticModelSpec
    T: int
    seed: int


@dataclass(frozen=True)
class CellOutcome:
    status: str
    autocorr: Tuple[float, ...]
    graph_json: Optional[str] = None
    error: Optional[str] = None
    runtime_ms: Optional[float] = None


def run_cell(cell: Cell, cfg: ExperimentConfig, null_tables,
             timing=True) -> CellOutcome:
    """Simulate one realization and run one method on it.

    Failures of the method or the simulation are returned as a failed
    outcome instead of being raised."""
    autocorr = ()
    try:
        ds = simulate(cell.spec, cell.T, cfg.transient, seed=cell.rep)
        ds = ds.standardize()
        autocorr = tuple(float(a) for a in lag1_autocorrelation(ds.values))
        registered = method_for(cell.method.method)
        dcfg = cfg.discovery_config(cell.method, cell.seed)
        test = None
        if cell.method.test is not None:
            params = dict(cell.method.test_params)
            if cell.method.test == 'gpdc':
                B_null = params.pop('B_null', cfg.B_null)
                params['null_table'] = null_tables[(B_null, cfg.seed)]
            test = make_test(cell.method.test, seed=cell.seed, **params)
        started = time.perf_counter()
        graph = registered.run(ds, dcfg, test)
        elapsed = (time.perf_counter() - started) * 1000.0
    except (LagwurmError, np.linalg.LinAlgError) as e:
        logger.warning('%s net %d rep %d %s failed: %s', cell.setting,
                       cell.net, cell.rep, cell.method.label, e)
        return CellOutcome('failed', autocorr,
                           error=f'{type(e).__name__}: {e}')
    return CellOutcome('ok', autocorr, graph.to_json(timing=timing),
                       runtime_ms=elapsed if timing else None)


def null_sample_sizes(T, tau_max) -> List[int]:
    """Every sample size a method can test on for series of length *T*.

    Extended MCI windows reach down to ``T - 2 tau_max`` and
    pre-whitening shortens a series by one step."""
    return [n for n in range(T - 2 * tau_max - 1, T - tau_max + 1)
            if n >= 2]


def gpdc_null_tables(cfg: ExperimentConfig):
    """Shared null tables of the GPDC methods.

    Tables reach the cell workers as frozen copies, so every size a cell
    may need is built here."""
    tables = {}
    for m in cfg.methods:
        if m.test != 'gpdc':
            continue
        key = (m.test_params.get('B_null', cfg.B_null), cfg.seed)
        if key not in tables:
            tables[key] = GpdcNullTable(key[0], key[1])
        for T in cfg.T:
            tables[key].ensure(null_sample_sizes(T, cfg.tau_max))
    return tables


def populate_store(cfg: ExperimentConfig, timing=True) -> int:
    """Draw all networks, run all cells and store them.

    Must be called with a connected run store. Returns the number of
    failed cells."""
    null_tables = gpdc_null_tables(cfg)
    cells = []
    for s_index, setting in enumerate(cfg.settings()):
        for net in range(cfg.networks):
            spec = draw_network(cfg, setting, s_index, net)
            NetworkRecord(setting.key, net, spec.seed, spec.to_json(),
                          export_ground_truth(spec).to_json()).insert()
            for rep, (m_index, method) in itertools.product(
                    range(cfg.realizations), enumerate(cfg.methods)):
                seed = derive_seed(cfg.seed, s_index, net, rep, m_index)
                cells.append(Cell(setting.key, net, rep, m_index, method,
                                  spec, setting.T, seed))
    logger.info('running %d cells with %d workers', len(cells),
                cfg.workers)
    outcomes = Parallel(n_jobs=cfg.workers)(
        delayed(run_cell)(cell, cfg, null_tables, timing) for cell in cells)
    failures = 0
    for cell, outcome in zip(cells, outcomes):
        RunRecord(cell.setting, cell.net, cell.rep, cell.method.label,
                  outcome.status, json.dumps(list(outcome.autocorr)),
                  outcome.graph_json, outcome.error,
                  outcome.runtime_ms).insert()
        failures += outcome.status != 'ok'
    if failures:
        logger.warning('%d of %d cells failed', failures, len(cells))
    return failures


@dataclass
class LinkScores:
    """Outcome ``'TP'``, ``'FP'``, ``'TN'`` or ``'FN'`` of every lagged
    cross link ``(source, lag, target)`` of a graph."""
    outcomes: Dict[Tuple[int, int, int], str]

    def count(self, kind) -> int:
        return sum(1 for value in self.outcomes.values() if value == kind)

    @property
    def tpr(self) -> Optional[float]:
        positives = self.count('TP') + self.count('FN')
        return self.count('TP') / positives if positives else None

    @property
    def fpr(self) -> Optional[float]:
        negatives = self.count('FP') + self.count('TN')
        return self.count('FP') / negatives if negatives else None


def score_against_truth(graph: TimeSeriesGraph, truth: GroundTruthGraph
                        ) -> LinkScores:
    """Compare the lagged cross links of *graph* with *truth*.

    Autolinks and contemporaneous links are not scored; true links with
    lags beyond the graph's ``tau_max`` are ignored."""
    if graph.N != truth.N:
        raise ContractError(f'graph has N={graph.N}, truth N={truth.N}')
    true_adj = truth.adjacency(graph.tau_max)
    detected = graph.decisions
    outcomes = {}
    for j in range(graph.N):
        for tau in range(1, graph.tau_max + 1):
            for i in range(graph.N):
                if i == j:
                    continue
                hit = bool(detected[i, j, tau])
                if true_adj[i, j, tau]:
                    outcomes[(i, tau, j)] = 'TP' if hit else 'FN'
                else:
                    outcomes[(i, tau, j)] = 'FP' if hit else 'TN'
    return LinkScores(outcomes)


def summarize(values) -> Dict[str, Optional[float]]:
    if not len(values):
        return {**{name: None for name, _ in QUANTILES}, 'mean': None}
    values = np.asarray(values, dtype=float)
    summary = {name: float(np.quantile(values, q)) for name, q in QUANTILES}
    summary['mean'] = float(values.mean())
    return summary


def autocorr_class(autocorr, i, j) -> str:
    """``'strong'`` if the mean lag-1 autocorrelation of *i* and *j*
    exceeds the threshold."""
    level = (autocorr[i] + autocorr[j]) / 2.0
    return 'strong' if level > AUTOCORR_THRESHOLD else 'weak'


def mean_autocorrelations(runs: Sequence[RunRecord]) -> np.ndarray:
    values = [r.autocorrelations() for r in runs if r.autocorrelations()]
    return np.mean(values, axis=0) if values else None


def _selection_stats(graphs, truth: GroundTruthGraph, tau_max):
    sizes = []
    found = true_found = n_true = 0
    for graph in graphs:
        parents = graph.metadata.get('parents')
        if parents is None:
            return None
        for target, name in enumerate(graph.names):
            selected = {tuple(p) for p in parents.get(name, [])}
            true = {(s, lag) for s, lag in truth.parents_of(target)
                    if lag <= tau_max}
            sizes.append(len(selected) / (truth.N * tau_max))
            found += len(selected)
            true_found += len(selected & true)
            n_true += len(true)
    if not sizes:
        return None
    return {
        'dimensionality': float(np.mean(sizes)),
        'tpr': true_found / n_true if n_true else None,
        'fdr': (found - true_found) / found if found else None,
    }


def compute_metrics(cfg: ExperimentConfig) -> Dict[str, Any]:
    """Aggregate the stored runs of *cfg* into the metrics document.

    Must be called with a connected run store."""
    per_link = []
    summaries: Dict[str, Dict[str, Any]] = {}
    selection: Dict[str, Dict[str, Any]] = {}
    failures: Dict[str, Dict[str, int]] = {}
    runtimes: Dict[str, Dict[str, Any]] = {}
    tau_max = cfg.tau_max
    for method in cfg.methods:
        label = method.label
        for setting in cfg.settings():
            rates = {(cls, metric): [] for cls in CLASSES
                     for metric in ('fpr', 'tpr')}
            strengths = {cls: [] for cls in CLASSES}
            ok_graphs = []
            times = []
            n_failed = 0
            selection_stats = []
            for net in range(cfg.networks):
                network = NetworkRecord.query(setting=setting.key,
                                              net=net).one()
                truth = network.truth()
                all_runs = list(RunRecord.query(setting=setting.key,
                                                net=network.net))
                autocorr = mean_autocorrelations(all_runs)
                runs = [r for r in all_runs if r.method == label]
                ok = [r for r in runs if r.ok]
                n_failed += len(runs) - len(ok)
                graphs = [r.graph() for r in ok]
                ok_graphs.extend(graphs)
                times.extend(r.runtime_ms for r in ok)
                stats = _selection_stats(graphs, truth, tau_max)
                if stats is not None:
                    selection_stats.append(stats)
                if not graphs:
                    continue
                detected = np.mean([g.decisions for g in graphs], axis=0)
                strength = np.mean([np.abs(g.statistic) for g in graphs],
                                   axis=0)
                true_adj = truth.adjacency(tau_max)
                for j in range(setting.N):
                    for tau in range(1, tau_max + 1):
                        for i in range(setting.N):
                            if i == j:
                                continue
                            is_true = bool(true_adj[i, j, tau])
                            metric = 'tpr' if is_true else 'fpr'
                            cls = autocorr_class(autocorr, i, j)
                            rate = float(detected[i, j, tau])
                            stat = float(strength[i, j, tau])
                            rates[(cls, metric)].append(rate)
                            if is_true:
                                strengths[cls].append(stat)
                            per_link.append({
                                'method': label, 'setting': setting.key,
                                'net': network.net, 'i': i, 'tau': tau,
                                'j': j, 'true': is_true,
                                metric: rate, 'mean_stat': stat,
                                'autocorr_class': cls, 'runs': len(graphs),
                            })
            summaries.setdefault(label, {})[setting.key] = {
                cls: {'fpr': summarize(rates[(cls, 'fpr')]),
                      'tpr': summarize(rates[(cls, 'tpr')]),
                      'stat': summarize(strengths[cls])}
                for cls in CLASSES}
            failures.setdefault(label, {})[setting.key] = n_failed
            if times and all(t is not None for t in times):
                runtimes.setdefault(label, {})[setting.key] = {
                    'mean_ms': float(np.mean(times)),
                    'std_ms': float(np.std(times))}
            else:
                runtimes.setdefault(label, {})[setting.key] = None
            if selection_stats:
                selection.setdefault(label, {})[setting.key] = {
                    key: _mean_or_none([s[key] for s in selection_stats])
                    for key in ('dimensionality', 'tpr', 'fdr')}
    return {
        'config': cfg.to_dict(),
        'summaries': summaries,
        'selection': selection,
        'failures': failures,
        'runtimes': runtimes,
        'per_link': per_link,
    }


def _mean_or_none(values):
    values = [v for v in values if v is not None]
    return float(np.mean(values)) if values else None


def boxplot_frame(metrics, cfg: ExperimentConfig) -> pd.DataFrame:
    """One row per (method, setting, class, metric, quantile)."""
    settings = {s.key: s for s in cfg.settings()}
    rows = []
    for label, by_setting in metrics['summaries'].items():
        for key, by_class in by_setting.items():
            setting = settings[key]
            for cls, by_metric in by_class.items():
                for metric in ('fpr', 'tpr'):
                    for quantile, value in by_metric[metric].items():
                        rows.append((label, setting.N, setting.c, setting.T,
                                     setting.obs_noise_sd, cls, metric,
                                     quantile, value))
    return pd.DataFrame(rows, columns=[
        'method', 'N', 'c', 'T', 'sigma', 'class', 'metric', 'quantile',
        'value'])


def write_outputs(metrics, cfg: ExperimentConfig, out_dir) -> None:
    out_dir = Path(out_dir)
    (out_dir / 'metrics.json').write_text(
        json.dumps(metrics, indent=1) + '\n', encoding='utf-8')
    boxplot_frame(metrics, cfg).to_csv(
        out_dir / 'boxplot.csv', index=False, lineterminator='\n',
        float_format=format_float)


def clear_store() -> int:
    """Delete all networks and runs from the connected store and return
    the number of deleted runs."""
    removed = RunRecord.query().delete()
    networks = NetworkRecord.query().delete()
    if removed or networks:
        logger.info('replacing %d runs on %d networks of an earlier '
                    'experiment', removed, networks)
    return removed


def run_experiment(cfg: ExperimentConfig, out_dir=None, timing=True
                   ) -> Dict[str, Any]:
    """Run all cells of *cfg* and return the metrics document.

    With *out_dir* the run store is kept as ``runs.sqlite`` next to
    ``metrics.json`` and ``boxplot.csv``; otherwise an in-memory store
    is used. Runs of an earlier experiment in the same store are
    replaced."""
    if not cfg.methods:
        raise ConfigError('the experiment lists no methods')
    store = ':memory:'
    if out_dir is not None:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        store = out_dir / 'runs.sqlite'
    with open_store(store):
        clear_store()
        populate_store(cfg, timing)
        metrics = compute_metrics(cfg)
    if out_dir is not None:
        write_outputs(metrics, cfg, out_dir)
    return metrics


def generate_ensemble(cfg: ExperimentConfig, out_dir) -> List[Path]:
    """Write the models and raw realizations of *cfg* to *out_dir*.

    The layout is ``<setting>/net<k>/{spec.json,truth.json,rep<r>.csv}``.
    Returns the written CSV files."""
    out_dir = Path(out_dir)
    written = []
    for s_index, setting in enumerate(cfg.settings()):
        for net in range(cfg.networks):
            spec = draw_network(cfg, setting, s_index, net)
            net_dir = out_dir / setting.slug / f'net{net:03d}'
            net_dir.mkdir(parents=True, exist_ok=True)
            (net_dir / 'spec.json').write_text(spec.to_json() + '\n',
                                               encoding='utf-8')
            (net_dir / 'truth.json').write_text(
                export_ground_truth(spec).to_json() + '\n',
                encoding='utf-8')
            for rep in range(cfg.realizations):
                path = net_dir / f'rep{rep:03d}.csv'
                write_csv(simulate(spec, setting.T, cfg.transient,
                                   seed=rep), path)
                written.append(path)
    logger.info('wrote %d realizations to %s', len(written), out_dir)
    return written

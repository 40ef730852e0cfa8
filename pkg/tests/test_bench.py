import json

import numpy as np
import pytest

import lagwurm
from lagwurm.bench import (
    PRESETS, ExperimentConfig, MethodSpec, Setting, autocorr_class,
    draw_network, generate_ensemble, network_seed, null_sample_sizes,
    preset, run_experiment, score_against_truth, summarize)
from lagwurm.connection import open_store
from lagwurm.graph import TimeSeriesGraph
from lagwurm.indep_tests import ParCorr
from lagwurm.pcmci import AIC_GRID
from lagwurm.records import NetworkRecord, RunRecord
from lagwurm.synthgen import export_ground_truth


@pytest.fixture
def small_config():
    return ExperimentConfig.from_dict({
        'methods': ['pcmci', 'fullci'],
        'N': 3, 'T': 100, 'networks': 2, 'realizations': 2,
        'tau_max': 2, 'seed': 7,
    })


def test_method_spec_defaults():
    spec = MethodSpec.from_dict('pcmci')
    assert spec.label == 'pcmci-parcorr'
    assert spec.test == 'parcorr'
    lasso = MethodSpec.from_dict('lasso')
    assert lasso.label == 'lasso'
    assert lasso.test is None


def test_method_spec_config():
    spec = MethodSpec.from_dict({'method': 'pcmci', 'label': 'aic',
                                 'config': {'alpha_pc': 'aic', 'p_x': 1}})
    assert spec.config == {'alpha_pc': AIC_GRID, 'p_x': 1}
    assert spec.to_dict()['config']['alpha_pc'] == list(AIC_GRID)
    assert MethodSpec.from_dict(spec.to_dict()) == spec


@pytest.mark.parametrize('doc, message', [
    ({'method': 'pcmci', 'colour': 'red'}, 'unknown method keys'),
    ({'test': 'parcorr'}, 'without a method'),
    ({'method': 'granger'}, "unknown method 'granger'"),
    ({'method': 'pcmci', 'test': 'kendall'}, "unknown test 'kendall'"),
    ({'method': 'pcmci', 'test': None}, 'needs a test'),
    ({'method': 'pcmci', 'config': {'tau_max': 3}}, 'configuration keys'),
])
def test_method_spec_invalid(doc, message):
    with pytest.raises(lagwurm.ConfigError, match=message):
        MethodSpec.from_dict(doc)


def test_experiment_config_lists(small_config):
    assert small_config.N == (3,)
    assert small_config.c == (0.287,)
    assert [m.label for m in small_config.methods] == [
        'pcmci-parcorr', 'fullci-parcorr']
    assert small_config.settings() == [Setting(3, 0.287, 100, 0.0)]


def test_experiment_config_roundtrip(small_config):
    doc = small_config.to_dict()
    assert doc['N'] == [3]
    assert ExperimentConfig.from_dict(doc) == small_config
    text = json.dumps(doc)
    assert ExperimentConfig.from_json(text) == small_config


@pytest.mark.parametrize('doc, message', [
    ({'methods': ['pcmci', 'pcmci']}, 'duplicate method labels'),
    ({'mode': 'chaotic'}, 'mode'),
    ({'pool': 'medium'}, 'pool'),
    ({'networks': 0}, 'positive'),
    ({'N': []}, 'no values'),
    ({'obs_noise_sd': -0.1}, 'non-negative'),
    ({'workers': 0}, 'worker count'),
    ({'methods': ['pcmci'], 'alpha_pc': 2.0}, 'alpha_pc'),
    ({'replicas': 3}, 'unknown experiment keys'),
    ({'methods': [{'method': 'pcmci', 'test': 'gpdc',
                   'config': {'alpha_pc': 'aic'}}]}, 'parcorr'),
])
def test_experiment_config_invalid(doc, message):
    with pytest.raises(lagwurm.ConfigError, match=message):
        ExperimentConfig.from_dict(doc)


def test_experiment_config_from_json_invalid():
    with pytest.raises(lagwurm.ConfigError, match='not valid JSON'):
        ExperimentConfig.from_json('{methods')
    with pytest.raises(lagwurm.ConfigError, match='JSON object'):
        ExperimentConfig.from_json('[]')


def test_discovery_config_overrides():
    cfg = ExperimentConfig.from_dict({
        'methods': [{'method': 'pcmci', 'config': {'alpha_pc': 0.4}}],
        'tau_max': 3, 'alpha_mci': 0.01})
    dcfg = cfg.discovery_config(cfg.methods[0], 99)
    assert (dcfg.tau_max, dcfg.alpha_pc, dcfg.alpha_mci, dcfg.seed) == \
        (3, 0.4, 0.01, 99)


def test_setting_key():
    setting = Setting(5, 0.287, 150, 0.0)
    assert setting.key == 'N=5,c=0.287,T=150,sigma=0'
    assert setting.slug == 'N5_c0.287_T150_sigma0'


@pytest.mark.parametrize('name', sorted(PRESETS))
def test_presets_are_valid(name):
    cfg = preset(name)
    assert cfg.methods


def test_preset_labels_and_overrides():
    cfg = preset('highdim-parcorr', networks=1)
    assert cfg.networks == 1
    assert [m.label for m in cfg.methods] == [
        'pcmci-parcorr', 'fullci-parcorr', 'pc-parcorr', 'lasso', 'corr',
        'bivci-parcorr']
    assert [m.label for m in preset('alpha-parcorr').methods] == [
        'pcmci-alpha0.1', 'pcmci-alpha0.2', 'pcmci-alpha0.3',
        'pcmci-alpha0.4', 'pcmci-aic']
    with pytest.raises(lagwurm.ConfigError, match='unknown preset'):
        preset('everything')


def test_network_seed_parity(small_config):
    seeds = [network_seed(small_config, 0, net) for net in range(6)]
    assert [s % 2 for s in seeds] == [0, 1, 0, 1, 0, 1]
    assert len(set(seeds)) == 6


def test_score_against_truth(chain_spec):
    truth = export_ground_truth(chain_spec)
    graph = TimeSeriesGraph.empty(('X1', 'X2', 'X3'), 2, 0.05)
    for i in range(3):
        for j in range(3):
            for tau in (1, 2):
                graph.set_link(i, tau, j, 0.0, 0.5)
    graph.set_link(0, 1, 1, 0.5, 0.001)
    graph.set_link(2, 1, 0, 0.5, 0.001)
    graph.set_link(1, 1, 1, 0.5, 0.001)
    scores = score_against_truth(graph, truth)
    assert len(scores.outcomes) == 12
    assert (scores.count('TP'), scores.count('FN')) == (1, 1)
    assert (scores.count('FP'), scores.count('TN')) == (1, 9)
    assert scores.tpr == 0.5
    assert scores.fpr == pytest.approx(0.1)


def test_score_against_truth_size_mismatch(chain_spec):
    graph = TimeSeriesGraph.empty(('a', 'b'), 2, 0.05)
    with pytest.raises(lagwurm.ContractError, match='N=2'):
        score_against_truth(graph, export_ground_truth(chain_spec))


def test_summarize():
    summary = summarize([0.0, 1.0])
    assert summary['q50'] == 0.5
    assert summary['mean'] == 0.5
    assert summary['q01'] == pytest.approx(0.01)
    assert set(summarize([]).values()) == {None}


def test_autocorr_class():
    autocorr = [0.9, 0.6, 0.1, 0.7]
    assert autocorr_class(autocorr, 0, 1) == 'strong'
    assert autocorr_class(autocorr, 0, 2) == 'weak'
    assert autocorr_class(autocorr, 3, 3) == 'weak'


def test_run_experiment_requires_methods():
    with pytest.raises(lagwurm.ConfigError, match='no methods'):
        run_experiment(ExperimentConfig())


def test_run_experiment(small_config):
    metrics = run_experiment(small_config)
    assert set(metrics) == {'config', 'summaries', 'selection', 'failures',
                            'runtimes', 'per_link'}
    key = 'N=3,c=0.287,T=100,sigma=0'
    assert metrics['failures'] == {'pcmci-parcorr': {key: 0},
                                   'fullci-parcorr': {key: 0}}
    summary = metrics['summaries']['pcmci-parcorr'][key]
    assert set(summary) == {'weak', 'strong'}
    assert set(summary['weak']) == {'fpr', 'tpr', 'stat'}
    assert len(metrics['per_link']) == 2 * 2 * 3 * 2 * 2
    link = metrics['per_link'][0]
    assert {'i', 'tau', 'j'} <= set(link)
    assert link['i'] != link['j'] and 1 <= link['tau'] <= 2
    assert link['runs'] == 2
    assert ('tpr' in link) != ('fpr' in link)
    assert metrics['runtimes']['fullci-parcorr'][key]['mean_ms'] > 0
    selection = metrics['selection']['pcmci-parcorr'][key]
    assert 0.0 <= selection['dimensionality'] <= 1.0
    assert 'fullci-parcorr' not in metrics['selection']


def test_run_experiment_outputs_are_reproducible(small_config, tmp_path):
    first = tmp_path / 'first'
    second = tmp_path / 'second'
    metrics = run_experiment(small_config, first, timing=False)
    run_experiment(small_config, second, timing=False)
    for name in ('metrics.json', 'boxplot.csv'):
        assert (first / name).read_bytes() == (second / name).read_bytes()
    assert (first / 'runs.sqlite').exists()
    assert metrics['runtimes']['pcmci-parcorr'] == {
        'N=3,c=0.287,T=100,sigma=0': None}
    header = (first / 'boxplot.csv').read_text().splitlines()[0]
    assert header == 'method,N,c,T,sigma,class,metric,quantile,value'


def test_run_experiment_replaces_store(small_config, tmp_path):
    run_experiment(small_config, tmp_path, timing=False)
    metrics = run_experiment(small_config, tmp_path, timing=False)
    assert json.loads((tmp_path / 'metrics.json').read_text()) == \
        json.loads(json.dumps(metrics))
    with open_store(tmp_path / 'runs.sqlite'):
        assert len(NetworkRecord) == 2
        assert len(RunRecord) == 2 * 2 * 2


def test_run_experiment_counts_failures():
    cfg = ExperimentConfig.from_dict({
        'methods': ['fullci'], 'N': 3, 'T': 20, 'tau_max': 5,
        'networks': 1, 'realizations': 2})
    metrics = run_experiment(cfg)
    key = 'N=3,c=0.287,T=20,sigma=0'
    assert metrics['failures']['fullci-parcorr'][key] == 2
    assert metrics['per_link'] == []
    assert metrics['runtimes']['fullci-parcorr'][key] is None
    assert metrics['summaries']['fullci-parcorr'][key]['weak']['fpr'][
        'mean'] is None


def test_generate_ensemble(tmp_path):
    cfg = ExperimentConfig(N=2, T=50, networks=2, realizations=2, seed=1)
    written = generate_ensemble(cfg, tmp_path / 'a')
    generate_ensemble(cfg, tmp_path / 'b')
    assert len(written) == 4
    net_dir = tmp_path / 'a' / 'N2_c0.287_T50_sigma0' / 'net001'
    assert sorted(p.name for p in net_dir.iterdir()) == [
        'rep000.csv', 'rep001.csv', 'spec.json', 'truth.json']
    for path in written:
        twin = tmp_path / 'b' / path.relative_to(tmp_path / 'a')
        assert path.read_bytes() == twin.read_bytes()
    spec = lagwurm.SyntheticModelSpec.from_json(
        (net_dir / 'spec.json').read_text())
    assert spec.seed % 2 == 1


def test_run_experiment_counts_estimation_failures(monkeypatch):
    def broken(self, arrays):
        raise ValueError('Input contains NaN')

    monkeypatch.setattr(ParCorr, 'run', broken)
    cfg = ExperimentConfig.from_dict({
        'methods': ['pcmci'], 'N': 2, 'T': 60, 'tau_max': 2,
        'networks': 1, 'realizations': 2})
    metrics = run_experiment(cfg)
    key = 'N=2,c=0.287,T=60,sigma=0'
    assert metrics['failures']['pcmci-parcorr'][key] == 2
    assert metrics['per_link'] == []


def test_draw_network_link_count():
    cfg = ExperimentConfig(seed=3)
    assert draw_network(cfg, Setting(2, 0.287, 100, 0.0), 0, 0).L == 1
    assert draw_network(cfg, Setting(3, 0.287, 100, 0.0), 0, 0).L == 3
    cfg = ExperimentConfig(L=2, seed=3)
    assert draw_network(cfg, Setting(3, 0.287, 100, 0.0), 0, 0).L == 2


def test_null_sample_sizes():
    assert null_sample_sizes(100, 5) == list(range(89, 96))
    assert null_sample_sizes(4, 2) == [2]


def _mean_fpr(metrics, label, key):
    return [by_class['fpr']['mean']
            for by_class in metrics['summaries'][label][key].values()
            if by_class['fpr']['mean'] is not None]


def _mean_tpr(metrics, label, key):
    rates = [link['tpr'] for link in metrics['per_link']
             if link['method'] == label and link['setting'] == key
             and link['true']]
    return float(np.mean(rates))


@pytest.fixture(scope='module')
def linear_experiment():
    cfg = ExperimentConfig.from_dict({
        'methods': ['pcmci', 'fullci'], 'N': [5, 10, 20], 'T': 150,
        'networks': 5, 'realizations': 50, 'seed': 5, 'workers': -1})
    return cfg, run_experiment(cfg, timing=False)


@pytest.mark.slow
def test_pcmci_false_positive_rate_at_level(linear_experiment):
    cfg, metrics = linear_experiment
    for setting in cfg.settings():
        rates = _mean_fpr(metrics, 'pcmci-parcorr', setting.key)
        assert rates
        for rate in rates:
            assert 0.02 <= rate <= 0.08


@pytest.mark.slow
def test_pcmci_outperforms_fullci_in_high_dimensions(linear_experiment):
    _, metrics = linear_experiment
    key = 'N=20,c=0.287,T=150,sigma=0'
    assert _mean_tpr(metrics, 'pcmci-parcorr', key) >= \
        _mean_tpr(metrics, 'fullci-parcorr', key) + 0.10


@pytest.mark.slow
def test_pcmci_estimates_causal_strength():
    cfg = ExperimentConfig.from_dict({
        'methods': ['pcmci'], 'N': 20, 'T': 150, 'c': [0.2, 0.287, 0.414],
        'networks': 5, 'realizations': 50, 'seed': 6, 'workers': -1})
    metrics = run_experiment(cfg, timing=False)
    for setting in cfg.settings():
        stats = [link['mean_stat'] for link in metrics['per_link']
                 if link['setting'] == setting.key and link['true']]
        expected = setting.c / np.sqrt(1 + setting.c ** 2)
        assert np.median(stats) == pytest.approx(expected, abs=0.03)


@pytest.mark.slow
def test_pcmci_gpdc_on_nonlinear_models():
    cfg = ExperimentConfig.from_dict({
        'methods': [{'method': 'pcmci', 'test': 'gpdc'}], 'N': 5,
        'T': 250, 'c': 0.287, 'mode': 'nonlinear', 'networks': 3,
        'realizations': 30, 'seed': 8, 'workers': -1})
    metrics = run_experiment(cfg, timing=False)
    setting = cfg.settings()[0]
    links = [link for link in metrics['per_link']
             if link['method'] == 'pcmci-gpdc']
    fpr = [link['fpr'] for link in links if not link['true']]
    assert 0.02 <= np.mean(fpr) <= 0.10
    linear = set()
    for net in range(cfg.networks):
        spec = draw_network(cfg, setting, 0, net)
        linear.update((net, l.source, l.lag, l.target) for l in spec.links
                      if l.func == 'f1')
    tpr = [link['tpr'] for link in links if link['true'] and
           (link['net'], link['i'], link['tau'], link['j']) in linear]
    assert tpr
    assert np.mean(tpr) >= 0.5


@pytest.mark.slow
def test_pcmci_cmi_false_positive_rate():
    cfg = ExperimentConfig.from_dict({
        'methods': [{'method': 'pcmci', 'test': 'cmi',
                     'test_params': {'B': 100}}],
        'N': 3, 'T': 500, 'tau_max': 2, 'networks': 1, 'realizations': 10,
        'seed': 9, 'workers': -1})
    metrics = run_experiment(cfg, timing=False)
    fpr = [link['fpr'] for link in metrics['per_link'] if not link['true']]
    assert fpr
    assert np.mean(fpr) <= 0.12

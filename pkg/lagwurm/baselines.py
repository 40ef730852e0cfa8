"""Comparison methods sharing the :class:`~lagwurm.graph.TimeSeriesGraph`
output of PCMCI."""

from dataclasses import dataclass
import logging
import time
import warnings
from typing import Optional

from joblib import Parallel, delayed
import numpy as np
from sklearn.exceptions import ConvergenceWarning
from sklearn.linear_model import Lasso, LassoCV
from sklearn.model_selection import TimeSeriesSplit
import statsmodels.api as sm

from .dataset import LaggedVariable, TimeSeriesDataset, build_lagged_arrays, \
    lagged_matrix
from .errors import ConfigError, DimensionalityError, estimation_errors
from .graph import TimeSeriesGraph
from .indep_tests import CITest, ParCorr
from .pcmci import (
    DiscoveryConfig, check_run, parents_metadata, finish_graph, link_slots,
    run_pcmci, run_test, select_all_parents)
from .registry import TEST_REGISTRY, make_test, register_method

logger = logging.getLogger(__name__)

PC_Q_MAX = 10
LASSO_K_MAX = 5
LASSO_SPLITS = 5
MIN_FOLD = 20


def _all_lagged(N, tau_max):
    return [LaggedVariable(i, tau) for tau in range(1, tau_max + 1)
            for i in range(N)]


def _run_link_tests(ds, cfg, test, slots, conditions):
    def one(i, tau, j):
        x = LaggedVariable(i, tau)
        arrays = build_lagged_arrays(
            ds, x, LaggedVariable(j, 0), conditions(x, j), cfg.tau_max)
        outcome = run_test(test, arrays)
        return outcome.statistic, outcome.p_value

    test.prepare([ds.T - cfg.tau_max])
    results = Parallel(n_jobs=cfg.workers)(
        delayed(one)(i, tau, j) for i, tau, j in slots)
    graph = TimeSeriesGraph.empty(ds.names, cfg.tau_max, cfg.alpha_mci)
    for (i, tau, j), (stat, pval) in zip(slots, results):
        graph.set_link(i, tau, j, stat, pval)
    return graph


def _fullci_regression(ds, cfg):
    tau_max = cfg.tau_max
    nodes = _all_lagged(ds.N, tau_max)
    regressors = sm.add_constant(lagged_matrix(ds, nodes, tau_max),
                                 has_constant='add')
    graph = TimeSeriesGraph.empty(ds.names, tau_max, cfg.alpha_mci)
    for j in range(ds.N):
        target = ds.values[tau_max:, j]
        with estimation_errors(f'FullCI regression of {ds.names[j]}'):
            fit = sm.OLS(target, regressors).fit()
        dof = fit.df_resid
        for col, node in enumerate(nodes, start=1):
            t = fit.tvalues[col]
            rho = t / np.sqrt(t * t + dof)
            graph.set_link(node.var, node.lag, j, float(rho),
                           float(fit.pvalues[col]))
    return graph


def fullci(ds: TimeSeriesDataset, cfg: DiscoveryConfig, test,
           regression: Optional[bool] = None) -> TimeSeriesGraph:
    """Test every link conditional on the whole past up to ``tau_max``.

    With the partial correlation test the statistics come from one
    multivariate regression per target, with partial correlations
    ``t / sqrt(t^2 + dof)`` of the coefficient t-values.

    :param regression: Force (``True``) or avoid (``False``) the
        regression route; by default it is used for :class:`ParCorr`
    :raises DimensionalityError: if ``N * tau_max`` regressors leave no
        residual degrees of freedom"""
    started = time.perf_counter()
    ds.check_length(cfg.tau_max)
    n = ds.T - cfg.tau_max
    n_regressors = ds.N * cfg.tau_max
    if n_regressors + 1 >= n:
        raise DimensionalityError(
            f'FullCI needs N*tau_max < n - 1, got N*tau_max={n_regressors} '
            f'and n={n}')
    if regression is None:
        regression = isinstance(test, ParCorr)
    if regression:
        graph = _fullci_regression(ds, cfg)
    else:
        past = _all_lagged(ds.N, cfg.tau_max)
        graph = _run_link_tests(
            ds, cfg, test, link_slots(ds.N, cfg.tau_max),
            lambda x, j: [node for node in past if node != x])
    return finish_graph(graph, ds, cfg, test, 'fullci', started)


def bivci(ds, cfg, test) -> TimeSeriesGraph:
    """Lag-specific bivariate Granger causality.

    Each cross link is tested conditional on the past of the target
    only."""
    started = time.perf_counter()
    ds.check_length(cfg.tau_max)
    slots = link_slots(ds.N, cfg.tau_max, cross_only=True)
    graph = _run_link_tests(
        ds, cfg, test, slots,
        lambda x, j: [LaggedVariable(j, tau)
                      for tau in range(1, cfg.tau_max + 1)])
    return finish_graph(graph, ds, cfg, test, 'bivci', started,
                        n_tests=len(slots))


def measure_test(measure, seed=0) -> CITest:
    for name, registered in TEST_REGISTRY.items():
        if registered.measure == measure:
            return make_test(name, seed=seed)
    raise ConfigError(f'unknown measure {measure!r}, expected one of '
                      f'{sorted(r.measure for r in TEST_REGISTRY.values())}')


def pairwise(ds, cfg, test) -> TimeSeriesGraph:
    """Unconditional association of every lagged pair.

    :param test: A test, used without conditions, or the name of its
        measure (``'corr'``, ``'dcor'`` or ``'mi'``)"""
    started = time.perf_counter()
    ds.check_length(cfg.tau_max)
    if isinstance(test, str):
        test = measure_test(test, cfg.seed)
    graph = _run_link_tests(ds, cfg, test, link_slots(ds.N, cfg.tau_max),
                            lambda x, j: [])
    return finish_graph(graph, ds, cfg, test, 'pairwise', started,
                        measure=test.measure)


def _selection_graph(ds, cfg, parent_sets):
    graph = TimeSeriesGraph.empty(ds.names, cfg.tau_max, cfg.alpha_mci)
    for ps in parent_sets:
        for node, trace in ps.trace.items():
            graph.set_link(node.var, node.lag, ps.target, trace.last_stat,
                           trace.max_p)
    return graph


def _standalone_selection(ds, cfg, test, q_max, method):
    started = time.perf_counter()
    selection_cfg = cfg.replace(alpha_pc=cfg.alpha_mci)
    check_run(ds, selection_cfg, test)
    parent_sets = select_all_parents(ds, selection_cfg, test, q_max=q_max)
    graph = _selection_graph(ds, cfg, parent_sets)
    return finish_graph(graph, ds, cfg, test, method, started,
                        q_max=q_max,
                        parents=parents_metadata(ds, parent_sets))


def pc_stable_standalone(ds, cfg, test) -> TimeSeriesGraph:
    """PC-stable skeleton search on lagged links.

    Runs condition selection at level ``alpha_mci`` with up to
    ``PC_Q_MAX`` condition subsets per iteration. The p-value of a link
    is the largest p-value of all its tests, so a link is detected
    exactly when it survives."""
    return _standalone_selection(ds, cfg, test, PC_Q_MAX, 'pc')


def pc1_standalone(ds, cfg, test) -> TimeSeriesGraph:
    """As :func:`pc_stable_standalone` with ``cfg.q_max`` subsets."""
    return _standalone_selection(ds, cfg, test, cfg.q_max, 'pc1')


@dataclass(frozen=True)
class LassoResult:
    """Adaptive Lasso fit of one target.

    :ivar coefficients: OLS refit coefficients on the active set, zero
        elsewhere
    :ivar active: indices of regressors with nonzero weighted
        coefficients after the last iteration
    :ivar p_values: refit p-values, exactly 1 off the active set
    :ivar lam: regularization chosen in the last iteration"""
    coefficients: np.ndarray
    active: np.ndarray
    p_values: np.ndarray
    lam: float


def solve_lasso(X, y, lam) -> np.ndarray:
    """Coordinate descent Lasso without intercept at fixed *lam*.

    Minimizes ``||y - X b||^2 / (2 n) + lam ||b||_1``."""
    model = Lasso(alpha=lam, fit_intercept=False, tol=1e-12,
                  max_iter=100000)
    with warnings.catch_warnings():
        warnings.simplefilter('ignore', ConvergenceWarning)
        with estimation_errors('Lasso fit'):
            model.fit(X, y)
    return model.coef_


def fit_adaptive_lasso(X, y, k_max=LASSO_K_MAX,
                       n_splits=LASSO_SPLITS) -> LassoResult:
    """Iteratively re-weighted Lasso with time series cross-validation.

    Each iteration scales the regressors by the inverse weights, picks
    the regularization by expanding-window cross-validation and updates
    the weights to ``1 / (2 sqrt|b| + tiny)``.

    :raises ConfigError: if a validation fold is shorter than 20"""
    n, d = X.shape
    fold = n // (n_splits + 1)
    if fold < MIN_FOLD:
        raise ConfigError(
            f'cross-validation folds of {fold} samples are shorter than '
            f'{MIN_FOLD}, n={n} is too small for {n_splits} splits')
    weights = np.ones(d)
    beta = np.zeros(d)
    lam = np.nan
    for _ in range(k_max):
        scaled = X / weights[np.newaxis, :]
        model = LassoCV(cv=TimeSeriesSplit(n_splits=n_splits),
                        fit_intercept=False, max_iter=10000)
        with warnings.catch_warnings():
            warnings.simplefilter('ignore', ConvergenceWarning)
            with estimation_errors('Lasso cross-validation'):
                model.fit(scaled, y)
        beta = model.coef_ / weights
        lam = float(model.alpha_)
        weights = 1.0 / (2.0 * np.sqrt(np.abs(beta))
                         + np.finfo(float).tiny)
    active = np.flatnonzero(beta)
    coefficients = np.zeros(d)
    p_values = np.ones(d)
    if len(active):
        with estimation_errors('Lasso refit'):
            fit = sm.OLS(y, X[:, active]).fit()
        coefficients[active] = fit.params
        p_values[active] = fit.pvalues
    return LassoResult(coefficients, active, p_values, lam)


def adaptive_lasso(ds, cfg, test=None) -> TimeSeriesGraph:
    """Adaptive Lasso regression of every target on the lagged past.

    The link statistic is the refit coefficient."""
    started = time.perf_counter()
    ds.check_length(cfg.tau_max)
    nodes = _all_lagged(ds.N, cfg.tau_max)
    X = lagged_matrix(ds, nodes, cfg.tau_max)
    results = Parallel(n_jobs=cfg.workers)(
        delayed(fit_adaptive_lasso)(X, ds.values[cfg.tau_max:, j])
        for j in range(ds.N))
    graph = TimeSeriesGraph.empty(ds.names, cfg.tau_max, cfg.alpha_mci)
    for j, result in enumerate(results):
        for col, node in enumerate(nodes):
            graph.set_link(node.var, node.lag, j,
                           float(result.coefficients[col]),
                           float(result.p_values[col]))
    return finish_graph(graph, ds, cfg, test, 'lasso', started,
                        lam={ds.names[j]: r.lam
                             for j, r in enumerate(results)})


def lag1_autocorrelation(values) -> np.ndarray:
    """Lag-1 correlation of every column of a ``T x N`` array."""
    values = np.asarray(values)
    return np.array([np.corrcoef(values[:-1, k], values[1:, k])[0, 1]
                     for k in range(values.shape[1])])


def prewhiten(ds: TimeSeriesDataset):
    """Remove the AR(1) part of every series.

    Returns the dataset ``X[1:] - a X[:-1]`` (one step shorter) and the
    estimated coefficients ``a``."""
    a = lag1_autocorrelation(ds.values)
    values = ds.values[1:] - a * ds.values[:-1]
    return ds.with_values(values), a


def mci0_and_prewhiten(ds, cfg, test, prewhiten_first=False
                       ) -> TimeSeriesGraph:
    """PCMCI without source parents, optionally on pre-whitened data."""
    method = 'mci0'
    details = {}
    if prewhiten_first:
        ds, a = prewhiten(ds)
        method = 'mci0pw'
        details['ar1'] = {name: float(v) for name, v in zip(ds.names, a)}
    graph = run_pcmci(ds, cfg.replace(p_x=0), test, method=method)
    graph.metadata.update(details)
    return graph


def mci0(ds, cfg, test):
    return mci0_and_prewhiten(ds, cfg, test)


def mci0pw(ds, cfg, test):
    return mci0_and_prewhiten(ds, cfg, test, prewhiten_first=True)


register_method('fullci', fullci)
register_method('bivci', bivci)
register_method('pairwise', pairwise)
register_method('pc', pc_stable_standalone)
register_method('pc1', pc1_standalone)
register_method('lasso', adaptive_lasso, needs_test=False)
register_method('mci0', mci0)
register_method('mci0pw', mci0pw)

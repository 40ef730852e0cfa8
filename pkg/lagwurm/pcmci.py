"""PCMCI: condition selection followed by momentary conditional
independence (MCI) tests.

The first stage estimates a superset of the lagged parents of every
variable with the PC1 algorithm, a PC-stable variant that only tests
the most strongly associated conditions. The second stage tests every
lagged link conditional on the parents of the target and on the
parents of the lagged source.
"""

from dataclasses import asdict, dataclass, field, replace
import itertools
import logging
import time
from typing import Dict, List, Optional, Sequence, Tuple, Union

from joblib import Parallel, delayed
import numpy as np
import scipy.stats

from .dataset import (
    LaggedVariable, TimeSeriesDataset, build_lagged_arrays, lagged_matrix)
from .errors import ConfigError, ContractError, estimation_errors
from .graph import TimeSeriesGraph
from .indep_tests import ols_residuals
from .registry import register_method

logger = logging.getLogger(__name__)

AIC_GRID = (0.1, 0.2, 0.3, 0.4)
MCI_WINDOWS = ('extend', 'truncate')


@dataclass(frozen=True)
class DiscoveryConfig:
    """Parameters of a discovery run.

    :param int tau_max: Maximum lag
    :param alpha_pc: Significance level of condition selection, or a
        tuple of levels to choose from by AIC
    :param float alpha_mci: Significance level of the link decisions
    :param p_x: Number of source parents used as conditions, ``None``
        for all of them
    :param int q_max: Condition subsets tested per candidate and
        iteration
    :param p_max: Largest condition set size, ``None`` for no limit
    :param bool fdr: Decide on FDR-adjusted q-values
    :param bool contemporaneous: Also test lag-0 links (undirected)
    :param str mci_window: ``'extend'`` widens the sample window when
        shifted source parents exceed ``tau_max``, ``'truncate'`` drops
        those conditions instead
    :param int seed: Seed handed to the tests
    :param int workers: Number of joblib workers
    """
    tau_max: int = 5
    alpha_pc: Union[float, Tuple[float, ...]] = 0.2
    alpha_mci: float = 0.05
    p_x: Optional[int] = None
    q_max: int = 1
    p_max: Optional[int] = None
    fdr: bool = False
    contemporaneous: bool = False
    mci_window: str = 'extend'
    seed: int = 0
    workers: int = 1

    def __post_init__(self):
        if isinstance(self.alpha_pc, list):
            object.__setattr__(self, 'alpha_pc', tuple(self.alpha_pc))
        if self.tau_max < 1:
            raise ConfigError(f'tau_max must be at least 1, got '
                              f'{self.tau_max}')
        grid = self.alpha_pc if self.aic else (self.alpha_pc,)
        if not grid:
            raise ConfigError('the alpha_pc grid is empty')
        for alpha in grid:
            if not 0 < alpha <= 1:
                raise ConfigError(f'alpha_pc {alpha} outside (0, 1]')
        if not 0 < self.alpha_mci < 1:
            raise ConfigError(f'alpha_mci {self.alpha_mci} outside (0, 1)')
        if self.p_x is not None and self.p_x < 0:
            raise ConfigError(f'p_x must be non-negative, got {self.p_x}')
        if self.q_max < 1:
            raise ConfigError(f'q_max must be at least 1, got {self.q_max}')
        if self.p_max is not None and self.p_max < 0:
            raise ConfigError(f'p_max must be non-negative, got '
                              f'{self.p_max}')
        if self.mci_window not in MCI_WINDOWS:
            raise ConfigError(f'mci_window must be one of {MCI_WINDOWS}, '
                              f'got {self.mci_window!r}')
        if self.workers == 0 or self.workers < -1:
            raise ConfigError(f'invalid worker count {self.workers}')

    @property
    def aic(self) -> bool:
        return isinstance(self.alpha_pc, tuple)

    def replace(self, **changes) -> 'DiscoveryConfig':
        return replace(self, **changes)

    def to_dict(self):
        doc = asdict(self)
        if self.aic:
            doc['alpha_pc'] = list(self.alpha_pc)
        return doc

    def check_dimensions(self, N):
        if self.p_max is not None and self.p_max > N * self.tau_max:
            raise ConfigError(
                f'p_max={self.p_max} exceeds N*tau_max={N * self.tau_max}')


@dataclass
class CandidateTrace:
    """Test history of one candidate parent during condition selection."""
    min_stat: float = np.inf
    max_p: float = 0.0
    last_stat: float = 0.0
    n_tests: int = 0
    removed_at: Optional[int] = None


@dataclass(frozen=True)
class ParentSet:
    """Estimated parents of *target*, strongest first.

    :ivar min_stats: smallest absolute test statistic of each parent
    :ivar trace: test history of every initial candidate, including the
        removed ones"""
    target: int
    parents: Tuple[LaggedVariable, ...]
    min_stats: Tuple[float, ...]
    alpha: Optional[float] = None
    trace: Dict[LaggedVariable, CandidateTrace] = field(
        default_factory=dict, compare=False, repr=False)

    def __len__(self):
        return len(self.parents)

    def __iter__(self):
        return iter(self.parents)

    def top(self, p_x: Optional[int]) -> Tuple[LaggedVariable, ...]:
        return self.parents if p_x is None else self.parents[:p_x]

    def to_list(self):
        return [[node.var, node.lag] for node in self.parents]


def run_test(test, arrays):
    """Run *test* on *arrays*, reporting estimator failures as
    :class:`~lagwurm.errors.EstimationError`."""
    with estimation_errors(f'{test!r} on n={arrays.n}'):
        return test.run(arrays)


def _sort_key(trace):
    def key(node):
        return (-trace[node].min_stat, node.lag, node.var)
    return key


def pc1_select(ds: TimeSeriesDataset, target: int, cfg: DiscoveryConfig,
               test, alpha: Optional[float] = None,
               q_max: Optional[int] = None) -> ParentSet:
    """Select the condition set of *target* with the PC1 algorithm.

    In iteration ``p`` every remaining candidate is tested conditional
    on up to ``q_max`` subsets of size ``p`` of the other candidates,
    taken in order of decreasing association. Candidates with a p-value
    above *alpha* are removed after the iteration, so decisions do not
    depend on the order of the candidates within an iteration.

    :param alpha: Level to use instead of ``cfg.alpha_pc``
    :param q_max: Subset count to use instead of ``cfg.q_max``
    """
    if alpha is None:
        if cfg.aic:
            raise ContractError('pc1_select needs a fixed alpha_pc')
        alpha = cfg.alpha_pc
    q_max = cfg.q_max if q_max is None else q_max
    tau_max = cfg.tau_max
    p_max = ds.N * tau_max if cfg.p_max is None else cfg.p_max
    y = LaggedVariable(target, 0)
    candidates = [LaggedVariable(i, tau) for tau in range(1, tau_max + 1)
                  for i in range(ds.N)]
    trace = {node: CandidateTrace() for node in candidates}
    p = 0
    while True:
        if len(candidates) - 1 < p:
            break
        if p > p_max:
            break
        removed = []
        for node in candidates:
            others = [other for other in candidates if other != node]
            record = trace[node]
            for conds in itertools.islice(
                    itertools.combinations(others, p), q_max):
                outcome = run_test(
                    test, build_lagged_arrays(ds, node, y, conds, tau_max))
                stat = abs(outcome.statistic)
                record.min_stat = min(record.min_stat, stat)
                record.max_p = max(record.max_p, outcome.p_value)
                record.last_stat = outcome.statistic
                record.n_tests += 1
                if outcome.p_value > alpha:
                    record.removed_at = p
                    removed.append(node)
                    break
        for node in removed:
            logger.debug('target %d: removed %r at p=%d', target, node, p)
        candidates = [node for node in candidates if node not in removed]
        candidates.sort(key=_sort_key(trace))
        p += 1
    return ParentSet(target, tuple(candidates),
                     tuple(trace[node].min_stat for node in candidates),
                     alpha, trace)


def aic_score(ds, parent_set: ParentSet, tau_max) -> float:
    """``n log(RSS) + 2 |parents|`` of the regression on the parents."""
    y = LaggedVariable(parent_set.target, 0)
    block = lagged_matrix(ds, [y, *parent_set.parents], tau_max)
    residuals = ols_residuals(block[:, 0], block[:, 1:])
    n = block.shape[0]
    rss = float(np.dot(residuals, residuals))
    return n * np.log(rss) + 2 * len(parent_set)


def select_alpha_by_aic(ds, target, grid: Sequence[float],
                        cfg: DiscoveryConfig, test
                        ) -> Tuple[float, ParentSet]:
    """Pick the level of the grid whose parents minimize the AIC.

    Ties go to the smaller level.

    :raises ContractError: if *grid* is empty"""
    if not grid:
        raise ContractError('the alpha grid is empty')
    best = None
    for alpha in sorted(grid):
        parent_set = pc1_select(ds, target, cfg, test, alpha=alpha)
        score = aic_score(ds, parent_set, cfg.tau_max)
        logger.debug('target %d: alpha=%g, %d parents, AIC=%.4f',
                     target, alpha, len(parent_set), score)
        if best is None or score < best[0]:
            best = (score, alpha, parent_set)
    return best[1], best[2]


def _select_parents(ds, target, cfg, test):
    if cfg.aic:
        return select_alpha_by_aic(ds, target, cfg.alpha_pc, cfg, test)[1]
    return pc1_select(ds, target, cfg, test)


def select_all_parents(ds, cfg, test, q_max=None) -> List[ParentSet]:
    """Run condition selection for every variable."""
    if cfg.aic and q_max is not None:
        raise ContractError('AIC selection uses the configured q_max')
    test.prepare([ds.T - cfg.tau_max])
    if q_max is not None:
        work = (delayed(pc1_select)(ds, j, cfg, test, q_max=q_max)
                for j in range(ds.N))
    else:
        work = (delayed(_select_parents)(ds, j, cfg, test)
                for j in range(ds.N))
    return Parallel(n_jobs=cfg.workers)(work)


def mci_conditions(x: LaggedVariable, y: LaggedVariable,
                   parent_sets: Sequence[ParentSet], cfg: DiscoveryConfig):
    """Condition set and sample window of the MCI test of ``x -> y``."""
    conds = [node for node in parent_sets[y.var].parents if node != x]
    shifted = [node.shifted(x.lag)
               for node in parent_sets[x.var].top(cfg.p_x)]
    if cfg.mci_window == 'truncate':
        shifted = [node for node in shifted if node.lag <= cfg.tau_max]
    conds.extend(shifted)
    cutoff = max([cfg.tau_max, *(node.lag for node in conds)])
    return conds, cutoff


def _mci_test(ds, x, y, conds, cutoff, cfg, test):
    arrays = build_lagged_arrays(ds, x, y, conds, cfg.tau_max, cutoff)
    outcome = run_test(test, arrays)
    return outcome.statistic, outcome.p_value


def link_slots(N, tau_max, contemporaneous=False, cross_only=False):
    """``(source, lag, target)`` of every tested link."""
    slots = []
    for j in range(N):
        if contemporaneous:
            slots.extend((i, 0, j) for i in range(j))
        for tau in range(1, tau_max + 1):
            slots.extend((i, tau, j) for i in range(N)
                         if not (cross_only and i == j))
    return slots


def mci_sweep(ds: TimeSeriesDataset, parent_sets: Sequence[ParentSet],
              cfg: DiscoveryConfig, test) -> TimeSeriesGraph:
    """Test every link conditional on the parents of both ends.

    Conditions are the parents of the target, without the tested link,
    and the first ``p_x`` parents of the source shifted by the lag."""
    if len(parent_sets) != ds.N:
        raise ContractError(
            f'{len(parent_sets)} parent sets given for N={ds.N}')
    slots = link_slots(ds.N, cfg.tau_max, cfg.contemporaneous)
    tests = []
    for i, tau, j in slots:
        x = LaggedVariable(i, tau)
        y = LaggedVariable(j, 0)
        conds, cutoff = mci_conditions(x, y, parent_sets, cfg)
        tests.append((x, y, conds, cutoff))
    test.prepare([ds.T - cutoff for *_, cutoff in tests])
    work = [delayed(_mci_test)(ds, x, y, conds, cutoff, cfg, test)
            for x, y, conds, cutoff in tests]
    results = Parallel(n_jobs=cfg.workers)(work)
    graph = TimeSeriesGraph.empty(ds.names, cfg.tau_max, cfg.alpha_mci)
    for (i, tau, j), (stat, pval) in zip(slots, results):
        graph.set_link(i, tau, j, stat, pval)
    return graph


def fdr_adjust(graph: TimeSeriesGraph) -> TimeSeriesGraph:
    """Return a copy of *graph* with q-values of all tested links.

    ``q = min(p m / r, 1)`` with ``m`` the number of tests and ``r`` the
    ascending rank of ``p``, ties sharing the smallest rank."""
    keys = graph.link_keys()
    p = np.array([graph.p_value[s, t, lag] for s, lag, t in keys])
    q_value = np.full_like(graph.p_value, np.nan)
    if len(p):
        m = len(p)
        ranks = scipy.stats.rankdata(p, method='min')
        q = np.minimum(p * m / ranks, 1.0)
        for (s, lag, t), value in zip(keys, q):
            q_value[s, t, lag] = value
            if lag == 0:
                q_value[t, s, 0] = value
    return TimeSeriesGraph(
        graph.names, graph.tau_max, graph.alpha_mci, graph.statistic.copy(),
        graph.p_value.copy(), q_value, dict(graph.metadata))


def parents_metadata(ds, parent_sets):
    return {ds.names[ps.target]: ps.to_list() for ps in parent_sets}


def finish_graph(graph, ds, cfg, test, method, started, **details):
    """Apply FDR control and fill in the run metadata."""
    if cfg.fdr:
        graph = fdr_adjust(graph)
    graph.metadata.update(details)
    graph.metadata.update(
        method=method, config=cfg.to_dict(), seed=cfg.seed,
        test=getattr(test, 'name', None),
        runtime_ms=(time.perf_counter() - started) * 1000.0)
    logger.info('%s finished: %d of %d links detected in %.1f ms', method,
                int(graph.decisions.sum()), len(graph.link_keys()),
                graph.metadata['runtime_ms'])
    return graph


def check_run(ds, cfg, test):
    ds.check_length(cfg.tau_max)
    cfg.check_dimensions(ds.N)
    if cfg.aic and getattr(test, 'measure', None) != 'corr':
        raise ConfigError(
            'alpha_pc selection by AIC needs the parcorr test, use a '
            'fixed alpha_pc with ' + str(getattr(test, 'name', test)))


def run_pcmci(ds: TimeSeriesDataset, cfg: DiscoveryConfig, test,
              method='pcmci') -> TimeSeriesGraph:
    """Run condition selection and the MCI sweep on *ds*."""
    started = time.perf_counter()
    check_run(ds, cfg, test)
    logger.info('%s: T=%d, N=%d, tau_max=%d, test=%s', method, ds.T, ds.N,
                cfg.tau_max, getattr(test, 'name', test))
    parent_sets = select_all_parents(ds, cfg, test)
    graph = mci_sweep(ds, parent_sets, cfg, test)
    return finish_graph(
        graph, ds, cfg, test, method, started,
        parents=parents_metadata(ds, parent_sets),
        alpha_pc={ds.names[ps.target]: ps.alpha for ps in parent_sets})


register_method('pcmci', run_pcmci)

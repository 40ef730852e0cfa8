"""Population-level counterparts of the statistical tests.

:class:`SeparationOracle` answers conditional independence queries by
d-separation in the time-unrolled graph of a known model, and
:class:`LinearGaussianModel` gives exact partial correlations of the
linearized model. Both make the large-sample behavior of the discovery
methods checkable without sampling error.
"""

import logging
from typing import Dict, Sequence, Tuple

import networkx as nx
import numpy as np
import scipy.linalg

from .dataset import LaggedVariable, unique_conditions
from .errors import ContractError
from .indep_tests import CITest, CITestOutcome
from .synthgen import (
    GroundTruthGraph, SyntheticModelSpec, companion_matrix,
    export_ground_truth, linear_coefficients)

logger = logging.getLogger(__name__)


def unrolled_graph(truth: GroundTruthGraph, horizon) -> nx.DiGraph:
    """DAG over the nodes ``(var, lag)`` with lags up to *horizon*."""
    graph = nx.DiGraph()
    graph.add_nodes_from((var, lag) for var in range(truth.N)
                         for lag in range(horizon + 1))
    for source, link_lag, target in truth.links:
        if link_lag == 0:
            raise ContractError('contemporaneous links are not supported')
        for lag in range(horizon + 1 - link_lag):
            graph.add_edge((source, lag + link_lag), (target, lag))
    return graph


def d_separated(graph: nx.DiGraph, xs, ys, zs) -> bool:
    """Whether *xs* and *ys* are d-separated by *zs* in the DAG *graph*.

    Uses the moral graph of the ancestral set of all involved nodes."""
    involved = set(xs) | set(ys) | set(zs)
    ancestral = set(involved)
    for node in involved:
        ancestral |= nx.ancestors(graph, node)
    moral = nx.moral_graph(graph.subgraph(ancestral))
    moral.remove_nodes_from(zs)
    return not any(nx.has_path(moral, x, y) for x in xs for y in ys)


class SeparationOracle(CITest):
    """Conditional independence test that knows the true graph.

    Returns ``p = 1`` (statistic 0) for d-separated and ``p = 0``
    (statistic 1) for d-connected nodes. The graph is unrolled
    ``2 N tau`` steps beyond the oldest queried node, ``tau`` being
    the largest link lag of the model.

    :param truth: The true graph
    """
    name = 'oracle'
    measure = None

    def __init__(self, truth: GroundTruthGraph, seed=0):
        super().__init__(seed)
        self.truth = truth
        self.margin = 2 * truth.N * max(truth.tau_max, 1)
        self._graphs: Dict[int, nx.DiGraph] = {}
        self._answers: Dict[tuple, bool] = {}

    def graph_for(self, max_lag) -> nx.DiGraph:
        horizon = max_lag + self.margin
        graph = self._graphs.get(horizon)
        if graph is None:
            graph = self._graphs[horizon] = unrolled_graph(self.truth,
                                                           horizon)
        return graph

    def separated(self, x: LaggedVariable, y: LaggedVariable,
                  conds: Sequence[LaggedVariable]) -> bool:
        shift = min(x.lag, y.lag, *(z.lag for z in conds))
        key = ((x.var, x.lag - shift), (y.var, y.lag - shift),
               frozenset((z.var, z.lag - shift) for z in conds))
        if key[1] < key[0]:
            key = (key[1], key[0], key[2])
        answer = self._answers.get(key)
        if answer is None:
            max_lag = max(x.lag, y.lag, *(z.lag for z in conds)) - shift
            answer = d_separated(self.graph_for(max_lag), [key[0]],
                                 [key[1]], key[2])
            self._answers[key] = answer
        return answer

    def run(self, arrays) -> CITestOutcome:
        if arrays.x_node is None or arrays.y_node is None:
            raise ContractError('the separation oracle needs node '
                                'identities')
        if self.separated(arrays.x_node, arrays.y_node, arrays.z_nodes):
            return CITestOutcome(0.0, 1.0, arrays.n)
        return CITestOutcome(1.0, 0.0, arrays.n)


class LinearGaussianModel:
    """Stationary covariances of the linearized model of *spec*.

    The process covariance comes from a discrete Lyapunov equation of
    the companion system with unit innovations; observational noise adds
    ``obs_noise_sd ** 2`` to the lag-0 variances."""

    def __init__(self, spec: SyntheticModelSpec):
        self.spec = spec
        A = linear_coefficients(spec)
        self.lags, self.N, _ = A.shape
        self.companion = companion_matrix(A)
        Q = np.zeros_like(self.companion)
        Q[:self.N, :self.N] = np.eye(self.N)
        self.state_cov = scipy.linalg.solve_discrete_lyapunov(
            self.companion, Q)
        self._gammas = [self.state_cov[:self.N, :self.N].copy()]
        self._power = np.eye(len(self.companion))

    def gamma(self, k) -> np.ndarray:
        """``Cov(X_t, X_{t-k})`` of the noise-free process."""
        while len(self._gammas) <= k:
            self._power = self._power @ self.companion
            self._gammas.append(
                (self._power @ self.state_cov)[:self.N, :self.N])
        return self._gammas[k]

    def covariance(self, a: LaggedVariable, b: LaggedVariable) -> float:
        if a.lag <= b.lag:
            value = self.gamma(b.lag - a.lag)[a.var, b.var]
        else:
            value = self.gamma(a.lag - b.lag)[b.var, a.var]
        if a == b:
            value += self.spec.obs_noise_sd ** 2
        return float(value)

    def covariance_matrix(self, nodes: Sequence[LaggedVariable]):
        return np.array([[self.covariance(a, b) for b in nodes]
                         for a in nodes])

    def partial_correlation(self, x, y, conds=()) -> float:
        """Population partial correlation from the precision matrix."""
        nodes = [x, y, *unique_conditions(conds, exclude=(x, y))]
        precision = np.linalg.inv(self.covariance_matrix(nodes))
        return float(-precision[0, 1]
                     / np.sqrt(precision[0, 0] * precision[1, 1]))

    def mci_conditions(self, link: Tuple[int, int, int], truth=None):
        """MCI conditions of *link* with the true parents."""
        if truth is None:
            truth = export_ground_truth(self.spec)
        source, lag, target = link
        x = LaggedVariable(source, lag)
        conds = [LaggedVariable(s, l) for s, l in truth.parents_of(target)
                 if LaggedVariable(s, l) != x]
        conds.extend(LaggedVariable(s, l + lag)
                     for s, l in truth.parents_of(source))
        return x, LaggedVariable(target, 0), conds

    def mci_partial_correlation(self, link, truth=None) -> float:
        return self.partial_correlation(*self.mci_conditions(link, truth))

    def fullci_partial_correlation(self, link, tau_max) -> float:
        source, lag, target = link
        x = LaggedVariable(source, lag)
        past = [LaggedVariable(i, tau) for tau in range(1, tau_max + 1)
                for i in range(self.N) if LaggedVariable(i, tau) != x]
        return self.partial_correlation(x, LaggedVariable(target, 0), past)
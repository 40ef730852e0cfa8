"""Estimated time series graphs and their JSON form."""

from dataclasses import dataclass, field
import json
from typing import Any, Dict, Iterator, Optional, Sequence

import numpy as np

from .errors import ContractError, DataError


@dataclass(frozen=True)
class LinkResult:
    """Test result for the link ``source(t - lag) -> target(t)``."""
    source: int
    lag: int
    target: int
    statistic: float
    p_value: float
    q_value: Optional[float]
    decided: bool

    @property
    def undirected(self):
        return self.lag == 0


@dataclass(eq=False)
class TimeSeriesGraph:
    """Per-link statistics, p-values and decisions of one discovery run.

    The arrays are indexed ``[source, target, lag]`` and hold NaN for
    links that were not tested. Contemporaneous results (lag 0) are
    stored symmetrically.

    :ivar metadata: method name, configuration, seed, runtime and
        method specific details such as the selected parents"""
    names: Sequence[str]
    tau_max: int
    alpha_mci: float
    statistic: np.ndarray
    p_value: np.ndarray
    q_value: Optional[np.ndarray] = None
    metadata: Dict[str, Any] = field(default_factory=dict)

    @classmethod
    def empty(cls, names, tau_max, alpha_mci, **metadata):
        shape = (len(names), len(names), tau_max + 1)
        return cls(tuple(names), tau_max, alpha_mci,
                   np.full(shape, np.nan), np.full(shape, np.nan),
                   metadata=dict(metadata))

    @property
    def N(self):
        return len(self.names)

    def set_link(self, source, lag, target, statistic, p_value):
        if lag == 0 and source == target:
            raise ContractError(f'no self-link at lag 0 for {source}')
        if not 0 <= lag <= self.tau_max:
            raise ContractError(
                f'lag {lag} outside [0, tau_max={self.tau_max}]')
        self.statistic[source, target, lag] = statistic
        self.p_value[source, target, lag] = p_value
        if lag == 0:
            self.statistic[target, source, 0] = statistic
            self.p_value[target, source, 0] = p_value

    @property
    def tested(self) -> np.ndarray:
        return ~np.isnan(self.p_value)

    def adjusted_p(self) -> np.ndarray:
        return self.p_value if self.q_value is None else self.q_value

    @property
    def decisions(self) -> np.ndarray:
        """Boolean ``[source, target, lag]`` array of detected links."""
        adjusted = self.adjusted_p()
        with np.errstate(invalid='ignore'):
            return self.tested & (adjusted <= self.alpha_mci)

    def link_keys(self):
        """Tested links as ``(source, lag, target)`` in output order.

        Lag-0 links are listed once, with ``source < target``."""
        keys = []
        for source, target, lag in zip(*np.nonzero(self.tested)):
            if lag == 0 and source > target:
                continue
            keys.append((int(source), int(lag), int(target)))
        keys.sort(key=lambda k: (k[2], k[1], k[0]))
        return keys

    def links(self) -> Iterator[LinkResult]:
        decisions = self.decisions
        for source, lag, target in self.link_keys():
            q = None if self.q_value is None \
                else float(self.q_value[source, target, lag])
            yield LinkResult(
                source, lag, target,
                float(self.statistic[source, target, lag]),
                float(self.p_value[source, target, lag]), q,
                bool(decisions[source, target, lag]))

    def link(self, source, lag, target) -> LinkResult:
        if lag == 0 and source > target:
            source, target = target, source
        for result in self.links():
            if (result.source, result.lag, result.target) == \
                    (source, lag, target):
                return result
        raise KeyError((source, lag, target))

    def parents_of(self, target):
        """Detected lagged parents of *target* as ``(source, lag)``."""
        return [(r.source, r.lag) for r in self.links()
                if r.target == target and r.lag > 0 and r.decided]

    def to_dict(self, timing=True) -> Dict[str, Any]:
        meta = dict(self.metadata)
        runtime = meta.pop('runtime_ms', None)
        seed = meta.pop('seed', None)
        config = meta.pop('config', {})
        method = meta.pop('method', None)
        links = []
        for r in self.links():
            entry = {'source': r.source, 'lag': r.lag, 'target': r.target,
                     'stat': r.statistic, 'p': r.p_value}
            if r.q_value is not None:
                entry['q'] = r.q_value
            entry['decided'] = r.decided
            if r.undirected:
                entry['undirected'] = True
            links.append(entry)
        return {
            'method': method,
            'config': config,
            'names': list(self.names),
            'tau_max': self.tau_max,
            'alpha_mci': self.alpha_mci,
            'links': links,
            'details': meta,
            'runtime_ms': runtime if timing else None,
            'seed': seed,
        }

    def to_json(self, timing=True) -> str:
        return json.dumps(self.to_dict(timing), indent=1)

    @classmethod
    def from_dict(cls, doc) -> 'TimeSeriesGraph':
        try:
            graph = cls.empty(doc['names'], doc['tau_max'], doc['alpha_mci'])
            has_q = any('q' in entry for entry in doc['links'])
            if has_q:
                graph.q_value = np.full_like(graph.p_value, np.nan)
            for entry in doc['links']:
                s, lag, t = entry['source'], entry['lag'], entry['target']
                graph.set_link(s, lag, t, entry['stat'], entry['p'])
                if has_q:
                    graph.q_value[s, t, lag] = entry['q']
                    if lag == 0:
                        graph.q_value[t, s, 0] = entry['q']
            graph.metadata.update(doc.get('details', {}))
            for key in ('method', 'config', 'seed', 'runtime_ms'):
                graph.metadata[key] = doc.get(key)
        except (KeyError, TypeError, IndexError) as e:
            raise DataError(f'malformed graph document: {e!r}') from e
        return graph

    @classmethod
    def from_json(cls, text) -> 'TimeSeriesGraph':
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as e:
            raise DataError(f'graph is not valid JSON: {e}') from e
        return cls.from_dict(doc)

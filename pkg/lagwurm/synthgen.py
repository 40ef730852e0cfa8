"""Random lagged structural models for benchmarking.

A model is the process

    X^j_t = a_j X^j_{t-1} + sum_i c_i f_i(X^i_{t-tau_i}) + eta^j_t

with unit Gaussian innovations, lags in {1, 2} and coupling functions
``f1`` (linear), ``f2`` and ``f3`` (nonlinear, linear for large x).
"""

from dataclasses import dataclass, field
import json
import logging
import math
from typing import Dict, FrozenSet, Tuple

import numpy as np

from .dataset import TimeSeriesDataset
from .errors import (
    ConfigError, ContractError, DataError, SimulationDivergedError,
    UnsatisfiableModelError)
from .seeding import derive_rng

logger = logging.getLogger(__name__)

LOW_POOL = (0.0, 0.2, 0.4, 0.6, 0.8, 0.9)
HIGH_POOL = (0.6, 0.8, 0.9, 0.95)
POOLS = ('low', 'high', 'mixed')
MODES = ('linear', 'nonlinear')
LINK_LAGS = (1, 2)
MAX_ATTEMPTS = 1000
STATIONARITY_MARGIN = 1e-6
DIVERGENCE_BOUND = 1e6
TRANSIENT = 1000


def f1(x):
    return x


def f2(x):
    return (1.0 - 4.0 * np.exp(-x ** 2 / 2.0)) * x


def f3(x):
    return (1.0 - 4.0 * x ** 3 * np.exp(-x ** 2 / 2.0)) * x


COUPLINGS = {'f1': f1, 'f2': f2, 'f3': f3}


@dataclass(frozen=True)
class ModelLink:
    """Link ``source(t - lag) -> target(t)`` with coupling ``coeff * f``."""
    source: int
    target: int
    lag: int
    coeff: float
    func: str = 'f1'

    def __post_init__(self):
        if self.source == self.target:
            raise ContractError(f'self cross-link on variable {self.source}')
        if self.lag not in LINK_LAGS:
            raise ContractError(f'link lag {self.lag} not in {LINK_LAGS}')
        if self.func not in COUPLINGS:
            raise ContractError(f'unknown coupling function {self.func!r}')


@dataclass(frozen=True)
class SyntheticModelSpec:
    N: int
    links: Tuple[ModelLink, ...]
    autos: Tuple[float, ...]
    obs_noise_sd: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if len(self.autos) != self.N:
            raise ContractError(
                f'{len(self.autos)} autocoefficients for N={self.N}')
        if self.obs_noise_sd < 0:
            raise ContractError('obs_noise_sd must be non-negative')
        for link in self.links:
            if not (0 <= link.source < self.N and 0 <= link.target < self.N):
                raise ContractError(f'link {link} outside N={self.N}')

    @property
    def L(self):
        return len(self.links)

    def names(self):
        return tuple(f'X{k + 1}' for k in range(self.N))

    def to_dict(self):
        return {
            'N': self.N,
            'L': self.L,
            'links': [{'i': l.source, 'j': l.target, 'tau': l.lag,
                       'coeff': l.coeff, 'func': l.func}
                      for l in self.links],
            'autos': list(self.autos),
            'obs_noise_sd': self.obs_noise_sd,
            'seed': self.seed,
        }

    def to_json(self):
        return json.dumps(self.to_dict(), indent=1)

    @classmethod
    def from_dict(cls, doc):
        try:
            links = tuple(ModelLink(l['i'], l['j'], l['tau'], l['coeff'],
                                    l.get('func', 'f1'))
                          for l in doc['links'])
            spec = cls(doc['N'], links, tuple(doc['autos']),
                       doc.get('obs_noise_sd', 0.0), doc.get('seed', 0))
        except (KeyError, TypeError) as e:
            raise DataError(f'malformed model spec: {e!r}') from e
        if 'L' in doc and doc['L'] != spec.L:
            raise DataError(f'model spec says L={doc["L"]} but has '
                            f'{spec.L} links')
        return spec

    @classmethod
    def from_json(cls, text):
        try:
            return cls.from_dict(json.loads(text))
        except json.JSONDecodeError as e:
            raise DataError(f'model spec is not valid JSON: {e}') from e


@dataclass(frozen=True)
class GroundTruthGraph:
    """True lagged links ``(source, lag, target)`` of a model.

    Autodependency links ``(j, 1, j)`` are present for nonzero
    autocoefficients."""
    N: int
    links: FrozenSet[Tuple[int, int, int]] = field(default_factory=frozenset)

    @property
    def tau_max(self):
        return max((lag for _, lag, _ in self.links), default=0)

    def adjacency(self, tau_max=None) -> np.ndarray:
        """Boolean ``[source, target, lag]`` array of the links."""
        tau_max = self.tau_max if tau_max is None else tau_max
        adj = np.zeros((self.N, self.N, tau_max + 1), dtype=bool)
        for source, lag, target in self.links:
            if lag <= tau_max:
                adj[source, target, lag] = True
        return adj

    def parents_of(self, target):
        return sorted((s, lag) for s, lag, t in self.links if t == target)

    def cross_links(self):
        return {link for link in self.links if link[0] != link[2]}

    def to_json(self):
        return json.dumps({'N': self.N, 'links': [
            {'source': s, 'lag': lag, 'target': t}
            for s, lag, t in sorted(self.links,
                                    key=lambda k: (k[2], k[1], k[0]))
        ]}, indent=1)

    @classmethod
    def from_json(cls, text):
        try:
            doc = json.loads(text)
            return cls(doc['N'], frozenset(
                (l['source'], l['lag'], l['target']) for l in doc['links']))
        except (json.JSONDecodeError, KeyError, TypeError) as e:
            raise DataError(f'malformed ground truth: {e!r}') from e


def export_ground_truth(spec: SyntheticModelSpec) -> GroundTruthGraph:
    links = {(l.source, l.lag, l.target) for l in spec.links}
    links.update((j, 1, j) for j, a in enumerate(spec.autos) if a != 0)
    return GroundTruthGraph(spec.N, frozenset(links))


def linear_coefficients(spec: SyntheticModelSpec) -> np.ndarray:
    """Lag matrices ``A[lag - 1][target, source]`` of the linearized model.

    Nonlinear couplings are replaced by the identity."""
    A = np.zeros((max(LINK_LAGS), spec.N, spec.N))
    A[0][np.diag_indices(spec.N)] = spec.autos
    for link in spec.links:
        A[link.lag - 1][link.target, link.source] += link.coeff
    return A


def companion_matrix(A) -> np.ndarray:
    lags, N, _ = A.shape
    companion = np.zeros((lags * N, lags * N))
    companion[:N, :] = np.hstack(list(A))
    companion[N:, :-N] = np.eye((lags - 1) * N)
    return companion


def spectral_radius(spec) -> float:
    return float(np.max(np.abs(np.linalg.eigvals(
        companion_matrix(linear_coefficients(spec))))))


def check_stationarity(spec: SyntheticModelSpec) -> bool:
    """Whether the linearized model has spectral radius below one."""
    return spectral_radius(spec) < 1.0 - STATIONARITY_MARGIN


def pool_for(autocorr_pool, seed):
    if autocorr_pool == 'low':
        return LOW_POOL
    if autocorr_pool == 'high':
        return HIGH_POOL
    if autocorr_pool == 'mixed':
        return LOW_POOL if seed % 2 == 0 else HIGH_POOL
    raise ConfigError(f'unknown autocorrelation pool {autocorr_pool!r}, '
                      f'expected one of {POOLS}')


def coupling_tags(L, mode, rng):
    """Coupling functions of *L* links in exact proportions."""
    if mode == 'linear':
        return ['f1'] * L
    if mode != 'nonlinear':
        raise ConfigError(f'unknown mode {mode!r}, expected one of {MODES}')
    n1 = math.ceil(L / 2)
    n2 = math.ceil((L - n1) / 2)
    tags = ['f1'] * n1 + ['f2'] * n2 + ['f3'] * (L - n1 - n2)
    return [tags[k] for k in rng.permutation(L)]


def draw_model(N, L, c, mode='linear', autocorr_pool='low', seed=0,
               obs_noise_sd=0.0, max_attempts=MAX_ATTEMPTS
               ) -> SyntheticModelSpec:
    """Draw a random stationary model.

    *L* cross links are drawn without replacement from all slots
    ``(i != j, lag in {1, 2})``, each with coefficient ``+c`` or ``-c``.
    Autocoefficients come uniformly from the chosen pool; ``'mixed'``
    uses the low pool for even and the high pool for odd seeds. Drawn
    models failing :func:`check_stationarity` are redrawn.

    :raises ConfigError: if *L* exceeds the number of slots
    :raises UnsatisfiableModelError: if no stationary model is found in
        *max_attempts* draws"""
    if N < 1:
        raise ConfigError(f'N must be at least 1, got {N}')
    slots = [(i, j, lag) for i in range(N) for j in range(N) if i != j
             for lag in LINK_LAGS]
    if not 0 <= L <= len(slots):
        raise ConfigError(f'L={L} links do not fit the {len(slots)} link '
                          f'slots of N={N}')
    pool = pool_for(autocorr_pool, seed)
    if mode not in MODES:
        raise ConfigError(f'unknown mode {mode!r}, expected one of {MODES}')
    rng = derive_rng(seed)
    for attempt in range(max_attempts):
        autos = tuple(float(a) for a in rng.choice(pool, size=N))
        chosen = rng.choice(len(slots), size=L, replace=False)
        signs = rng.choice([-1.0, 1.0], size=L)
        tags = coupling_tags(L, mode, rng)
        links = tuple(
            ModelLink(slots[k][0], slots[k][1], slots[k][2],
                      float(sign * c), tag)
            for k, sign, tag in zip(sorted(chosen), signs, tags))
        spec = SyntheticModelSpec(N, links, autos, obs_noise_sd, seed)
        if check_stationarity(spec):
            logger.debug('drew model N=%d, L=%d after %d attempts', N, L,
                         attempt + 1)
            return spec
    raise UnsatisfiableModelError(
        f'no stationary model with N={N}, L={L}, c={c} in {max_attempts} '
        f'attempts')


def simulate(spec: SyntheticModelSpec, T, transient=TRANSIENT, seed=0
             ) -> TimeSeriesDataset:
    """Simulate *T* steps of *spec* after discarding *transient* steps.

    Observational noise of sd ``spec.obs_noise_sd`` is added to the
    result. The returned data are not standardized.

    :raises SimulationDivergedError: if the process escapes to
        non-finite or very large values"""
    if T < 10:
        raise ContractError(f'T must be at least 10, got {T}')
    if transient < 100:
        raise ContractError(f'transient must be at least 100, got '
                            f'{transient}')
    rng = derive_rng(spec.seed, seed)
    total = T + transient
    lags = max(LINK_LAGS)
    autos = np.asarray(spec.autos)
    by_target: Dict[int, list] = {}
    for link in spec.links:
        by_target.setdefault(link.target, []).append(
            (link.source, link.lag, link.coeff, COUPLINGS[link.func]))
    X = np.zeros((total + lags, spec.N))
    eta = rng.standard_normal((total + lags, spec.N))
    with np.errstate(over='ignore', invalid='ignore'):
        for t in range(lags, total + lags):
            X[t] = autos * X[t - 1] + eta[t]
            for target, terms in by_target.items():
                for source, lag, coeff, f in terms:
                    X[t, target] += coeff * f(X[t - lag, source])
    data = X[lags + transient:]
    if not np.all(np.isfinite(data)) or np.max(np.abs(data)) > \
            DIVERGENCE_BOUND:
        raise SimulationDivergedError(
            f'simulation of N={spec.N}, seed={spec.seed} diverged')
    if spec.obs_noise_sd > 0:
        data = data + spec.obs_noise_sd * rng.standard_normal(data.shape)
    return TimeSeriesDataset(data, spec.names())

"""Distance correlation and the copula transform used by GPDC."""

import numpy as np
import scipy.spatial
import scipy.stats

from .errors import DegenerateTestError


def _centered_distances(x):
    a = scipy.spatial.distance.squareform(
        scipy.spatial.distance.pdist(x.reshape(len(x), -1),
                                     metric='euclidean'))
    return a - a.mean(axis=0)[None, :] - a.mean(axis=1)[:, None] + a.mean()


def distance_correlation(x, y) -> float:
    """Sample distance correlation of two equally long samples.

    Computed as ``dCov / sqrt(dVar_x * dVar_y)`` where the squared
    distance covariance is the mean of the elementwise product of the
    doubly-centered distance matrices.

    :raises DegenerateTestError: if one sample is constant"""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if len(x) != len(y):
        raise ValueError(f'sample lengths differ: {len(x)} != {len(y)}')
    A = _centered_distances(x)
    B = _centered_distances(y)
    dcov2_xy = np.mean(A * B)
    dcov2_xx = np.mean(A * A)
    dcov2_yy = np.mean(B * B)
    if not (dcov2_xx > 0 and dcov2_yy > 0):
        raise DegenerateTestError(
            'distance correlation is undefined for a constant sample')
    dcor = np.sqrt(max(dcov2_xy, 0.0) / np.sqrt(dcov2_xx * dcov2_yy))
    return float(min(dcor, 1.0))


def copula_transform(r) -> np.ndarray:
    """Map a sample to uniform marginals by its ranks.

    Average ranks divided by *n*; the value 1 is mapped to ``(n-0.5)/n``
    so that no transformed value lies on the boundary.

    :raises DegenerateTestError: if all values are tied"""
    r = np.asarray(r, dtype=np.float64)
    n = len(r)
    if n == 0 or np.ptp(r) == 0:
        raise DegenerateTestError(
            'all values are tied, ranks are degenerate')
    u = scipy.stats.rankdata(r) / n
    u[u == 1.0] = (n - 0.5) / n
    return u

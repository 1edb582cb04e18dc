"""Domain partitioning: code pass-through and k-means clustering."""

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import ConfigError, DataError


@dataclass
class DomainPartition:
    assignments: dict  # id -> domain index in [0, k)
    k: int
    centroids: Optional[np.ndarray] = None  # present iff produced by k-means
    inertia: float = 0.0
    inertia_trace: list = field(default_factory=list)

    def labels_for(self, ids):
        return np.array([self.assignments[i] for i in ids], dtype=np.int64)

    def offset(self, delta):
        """Same partition with every index shifted by delta."""
        return DomainPartition(
            assignments={i: d + delta for i, d in self.assignments.items()},
            k=self.k,
            centroids=self.centroids,
            inertia=self.inertia,
            inertia_trace=list(self.inertia_trace),
        )


def partition_by_code(data, code_field="code"):
    """One domain per distinct code value, indices in sorted code order."""
    codes = {}
    for rec in data:
        value = getattr(rec, code_field, None)
        if value is None:
            raise DataError(f"record {rec.id!r} is missing the {code_field!r} field")
        codes[rec.id] = value
    distinct = sorted(set(codes.values()))
    index = {c: i for i, c in enumerate(distinct)}
    return DomainPartition(
        assignments={rec_id: index[c] for rec_id, c in codes.items()},
        k=len(distinct),
    )


def single_partition(data):
    """Everything in one domain (the merged-domain condition)."""
    return DomainPartition(assignments={rec.id: 0 for rec in data}, k=1)


def _assign(x, centroids):
    # lowest centroid index wins distance ties (argmin is first-match)
    d2 = ((x[:, None, :] - centroids[None, :, :]) ** 2).sum(axis=2)
    labels = d2.argmin(axis=1)
    return labels, d2[np.arange(x.shape[0]), labels]


def _kmeans_pp_init(x, k, rng):
    n = x.shape[0]
    centroids = np.empty((k, x.shape[1]))
    centroids[0] = x[rng.integers(n)]
    d2 = ((x - centroids[0]) ** 2).sum(axis=1)
    for j in range(1, k):
        total = d2.sum()
        if total <= 0:
            idx = rng.integers(n)
        else:
            idx = int(np.searchsorted(np.cumsum(d2 / total), rng.random()))
            idx = min(idx, n - 1)
        centroids[j] = x[idx]
        d2 = np.minimum(d2, ((x - centroids[j]) ** 2).sum(axis=1))
    return centroids


def lloyd(x, k, seed=0, max_iter=100, tol=1e-6):
    """k-means with k-means++ seeding; returns (labels, centroids, trace).

    The inertia trace is recorded after every assignment step and is
    non-increasing. Empty clusters are re-seeded at the point farthest
    from its current centroid.
    """
    x = np.asarray(x, dtype=np.float64)
    n = x.shape[0]
    if k < 1:
        raise ConfigError("k must be >= 1")
    if k > n:
        raise ConfigError(f"k={k} exceeds the number of points ({n})")
    rng = np.random.default_rng(seed)
    centroids = _kmeans_pp_init(x, k, rng)
    trace = []
    labels, d2 = _assign(x, centroids)
    trace.append(float(d2.sum()))
    for _ in range(max_iter):
        new_centroids = centroids.copy()
        for j in range(k):
            members = labels == j
            if members.any():
                new_centroids[j] = x[members].mean(axis=0)
            else:
                new_centroids[j] = x[int(d2.argmax())]
        shift = np.sqrt(((new_centroids - centroids) ** 2).sum(axis=1)).max()
        centroids = new_centroids
        labels, d2 = _assign(x, centroids)
        trace.append(float(d2.sum()))
        if shift < tol:
            break
    return labels, centroids, trace


def kmeans(data, k, seed=0, max_iter=100, tol=1e-6):
    """Cluster a LabeledVectorSet's vectors into k domains."""
    labels, centroids, trace = lloyd(data.vectors(), k, seed=seed,
                                     max_iter=max_iter, tol=tol)
    return DomainPartition(
        assignments={rec.id: int(labels[i]) for i, rec in enumerate(data)},
        k=k,
        centroids=centroids,
        inertia=trace[-1],
        inertia_trace=trace,
    )

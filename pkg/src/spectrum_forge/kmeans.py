"""Seeded K-means (k-means++ init, Lloyd iterations).

Shared by corpus clustering and codebook training. Implemented here
rather than via sklearn so the empty-cluster reseeding rule and the
lowest-index tie-breaks are exactly the documented ones and fully
deterministic for a given seed.
"""

import numpy as np

from .errors import TooFewPrograms


def _plusplus_init(x: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = x.shape[0]
    centroids = np.empty((k, x.shape[1]), dtype=np.float64)
    centroids[0] = x[rng.integers(n)]
    d2 = np.sum((x - centroids[0]) ** 2, axis=1)
    for i in range(1, k):
        total = d2.sum()
        if total <= 0:
            # All remaining points coincide with a centroid; pick any.
            idx = int(rng.integers(n))
        else:
            idx = int(rng.choice(n, p=d2 / total))
        centroids[i] = x[idx]
        d2 = np.minimum(d2, np.sum((x - centroids[i]) ** 2, axis=1))
    return centroids


def assign(x: np.ndarray, centroids: np.ndarray) -> np.ndarray:
    """Nearest-centroid labels; ties break to the lowest centroid index
    (argmin convention)."""
    d2 = ((x[:, None, :] - centroids[None, :, :]) ** 2).sum(axis=2)
    return np.argmin(d2, axis=1)


def kmeans(
    x: np.ndarray,
    k: int,
    seed: int,
    max_iters: int = 100,
    tol: float = 1e-6,
) -> tuple[np.ndarray, np.ndarray]:
    """Cluster rows of x into k groups.

    Returns (centroids, labels). Deterministic given seed. Empty
    clusters are reseeded from the point farthest from its assigned
    centroid, so no cluster is ever empty.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2:
        raise ValueError("expected a 2-D data matrix")
    n = x.shape[0]
    if n < k:
        raise TooFewPrograms(f"{n} points for {k} clusters")

    rng = np.random.default_rng(seed)
    centroids = _plusplus_init(x, k, rng)
    labels = assign(x, centroids)

    for _ in range(max_iters):
        new_centroids = centroids.copy()
        for i in range(k):
            members = x[labels == i]
            if len(members):
                new_centroids[i] = members.mean(axis=0)
        labels = assign(x, new_centroids)
        # Reseed empties from the worst-fit point.
        for i in range(k):
            if not np.any(labels == i):
                d2 = ((x - new_centroids[labels]) ** 2).sum(axis=1)
                far = int(np.argmax(d2))
                new_centroids[i] = x[far]
                labels = assign(x, new_centroids)
        shift = np.abs(new_centroids - centroids).max()
        centroids = new_centroids
        if shift < tol:
            break

    return centroids, labels

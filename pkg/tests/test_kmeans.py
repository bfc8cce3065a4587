import numpy as np
import pytest

from spectrum_forge.errors import TooFewPrograms
from spectrum_forge.features import AUTOPHASE_DIM, FeatureVector
from spectrum_forge.kmeans import assign, kmeans
from spectrum_forge.probes import cluster_corpus


def blobs(seed=0, n_per=20, centers=((0.0, 0.0), (50.0, 50.0)), spread=0.5):
    rng = np.random.default_rng(seed)
    points, membership = [], []
    for label, c in enumerate(centers):
        pts = rng.normal(loc=c, scale=spread, size=(n_per, len(c)))
        points.append(pts)
        membership += [label] * n_per
    return np.concatenate(points), np.array(membership)


def test_single_cluster_centroid_is_mean():
    x = np.array([[0.0, 0.0], [2.0, 0.0], [4.0, 6.0]])
    centroids, labels = kmeans(x, 1, seed=0)
    assert np.allclose(centroids[0], x.mean(axis=0))
    assert (labels == 0).all()


def test_two_separated_blobs_recovered():
    x, truth = blobs()
    centroids, labels = kmeans(x, 2, seed=3)
    # Verify against brute-force nearest-centroid assignment.
    assert np.array_equal(labels, assign(x, centroids))
    # Cluster ids may be permuted relative to blob ids.
    same = (labels == truth).mean()
    assert same in (0.0, 1.0)


def test_k_equals_n_each_point_own_cluster():
    x = np.array([[0.0], [10.0], [20.0], [30.0]])
    centroids, labels = kmeans(x, 4, seed=1)
    assert sorted(labels.tolist()) == [0, 1, 2, 3]
    assert sorted(centroids.ravel().tolist()) == [0.0, 10.0, 20.0, 30.0]


def test_no_empty_clusters():
    # 30 identical points plus 2 outliers, k=4: reseeding must fill all.
    x = np.concatenate([np.zeros((30, 2)), [[100.0, 0.0]], [[0.0, 100.0]]])
    _, labels = kmeans(x, 3, seed=0)
    assert set(labels.tolist()) == {0, 1, 2}


def test_deterministic_given_seed():
    x, _ = blobs(seed=7, centers=((0, 0), (10, 0), (0, 10)))
    c1, l1 = kmeans(x, 3, seed=42)
    c2, l2 = kmeans(x, 3, seed=42)
    assert np.array_equal(c1, c2)
    assert np.array_equal(l1, l2)


def test_too_few_points_raises():
    with pytest.raises(TooFewPrograms):
        kmeans(np.zeros((2, 3)), 5, seed=0)


def _fv(values) -> FeatureVector:
    v = np.zeros(AUTOPHASE_DIM, dtype=np.int64)
    v[: len(values)] = values
    return FeatureVector(values=v)


def test_cluster_corpus_p1_mean_centroid():
    feats = [_fv([0, 0]), _fv([2, 4]), _fv([4, 8])]
    centroids, labels = cluster_corpus(feats, 1, seed=0)
    assert np.allclose(centroids[0][:2], [2.0, 4.0])
    assert (labels == 0).all()


def test_cluster_corpus_two_blobs():
    feats = [_fv([0, 0]), _fv([1, 0]), _fv([100, 100]), _fv([101, 100])]
    _, labels = cluster_corpus(feats, 2, seed=0)
    assert labels[0] == labels[1]
    assert labels[2] == labels[3]
    assert labels[0] != labels[2]


def test_cluster_corpus_p_equals_n():
    feats = [_fv([i * 10]) for i in range(5)]
    _, labels = cluster_corpus(feats, 5, seed=0)
    assert sorted(labels.tolist()) == [0, 1, 2, 3, 4]

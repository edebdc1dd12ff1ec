"""Recurring connectivity states from pairwise synchronization tensors.

Each subject's :class:`~phasesync.psmetrics.PsTensor` is a ``(P, T')``
matrix whose columns are the lower-triangle connectivity patterns at each
time point.  Columns of all subjects are concatenated and clustered with
k-means (squared Euclidean distance, many random restarts); the centroids are
the states.  The number of states is chosen by the Davies-Bouldin index
unless it is forced.
"""

import logging
from dataclasses import dataclass, field

import numpy as np

from ._parallel import ordered_map
from .exceptions import InfeasibleError, InputError
from .psmetrics import Metric, PsTensor, pair_index
from .surrogates import make_rng

log = logging.getLogger(__name__)

MAX_ITER = 300

# diagonal written into centroid matrices: every metric equals 1 for a
# region paired with itself
DIAGONAL = {m: 1.0 for m in Metric}


def vectorize_lower(tensor):
    """The ``(P, T')`` pair-by-time matrix of ``tensor`` (rows in pair order)."""
    return np.array(tensor.values, dtype=float)


def devectorize(matrix, like):
    """Inverse of :func:`vectorize_lower`, taking metadata from ``like``."""
    return PsTensor(np.asarray(matrix, dtype=float), like.n_regions, like.metric,
                    like.window, like.offset, like.tr_seconds, like.region_labels)


def to_square(vector, n_regions, diagonal=1.0):
    """Symmetric ``(R, R)`` matrix from a lower-triangle vector."""
    out = np.full((n_regions, n_regions), float(diagonal))
    for value, (i, j) in zip(vector, pair_index(n_regions)):
        out[i, j] = out[j, i] = value
    return out


@dataclass
class GroupMatrix:
    """Columns of all subjects side by side.

    ``subject_boundaries[s]`` is the first column of subject ``s`` (with a
    final entry equal to the column count); ``time_index`` holds the sample
    each column belongs to.  ``dropped`` records ``(subject, sample)`` of
    columns removed because they contained missing values.
    """

    values: np.ndarray
    subject_boundaries: list
    time_index: np.ndarray
    subject_index: np.ndarray
    n_regions: int
    metric: Metric
    dropped: list = field(default_factory=list)

    @property
    def pair_index(self):
        return pair_index(self.n_regions)

    @property
    def n_columns(self):
        return self.values.shape[1]


def build_group_matrix(tensors):
    """Concatenate subjects' tensors, dropping columns with missing entries."""
    tensors = list(tensors)
    if not tensors:
        raise InputError("no tensors to concatenate")
    first = tensors[0]
    blocks, bounds, times, subjects, dropped = [], [0], [], [], []
    for s, tensor in enumerate(tensors):
        if tensor.n_regions != first.n_regions or tensor.metric != first.metric:
            raise InputError(
                f"tensor {s} ({tensor.metric.value}, R={tensor.n_regions}) does not match "
                f"tensor 0 ({first.metric.value}, R={first.n_regions})")
        mat = vectorize_lower(tensor)
        keep = ~np.isnan(mat).any(axis=0)
        samples = tensor.offset + np.arange(mat.shape[1])
        dropped.extend((s, int(t)) for t in samples[~keep])
        blocks.append(mat[:, keep])
        times.append(samples[keep])
        subjects.append(np.full(keep.sum(), s))
        bounds.append(bounds[-1] + int(keep.sum()))
    if dropped:
        log.info("dropped %d columns with missing values", len(dropped))
    return GroupMatrix(np.hstack(blocks), bounds, np.concatenate(times),
                       np.concatenate(subjects), first.n_regions, first.metric, dropped)


@dataclass
class StateResult:
    k: int
    centroids: np.ndarray
    labels: np.ndarray
    inertia: float
    dbi_by_k: dict = field(default_factory=dict)
    restarts_used: int = 0
    n_iter: int = 0
    inertia_history: list = field(default_factory=list)


def _columns(data):
    values = data.values if isinstance(data, GroupMatrix) else data
    return np.ascontiguousarray(np.asarray(values, dtype=float).T)


def _sq_distances(points, centroids):
    d = (np.einsum("ij,ij->i", points, points)[:, None]
         - 2.0 * points @ centroids.T
         + np.einsum("ij,ij->i", centroids, centroids)[None, :])
    return np.maximum(d, 0.0)


def _inertia(points, centroids, labels):
    diff = points - centroids[labels]
    return float(np.einsum("ij,ij->", diff, diff))


def _init_centroids(points, k, rng, init):
    n = points.shape[0]
    if init == "random":
        return points[rng.choice(n, size=k, replace=False)].copy()
    if init == "kmeans++":
        chosen = [int(rng.integers(n))]
        d2 = _sq_distances(points, points[chosen])[:, 0]
        for _ in range(1, k):
            total = d2.sum()
            nxt = int(rng.choice(n, p=d2 / total)) if total > 0 else int(rng.integers(n))
            chosen.append(nxt)
            d2 = np.minimum(d2, _sq_distances(points, points[[nxt]])[:, 0])
        return points[chosen].copy()
    raise InputError(f"unknown init {init!r} (use 'random' or 'kmeans++')")


def lloyd(points, centroids, max_iter=MAX_ITER):
    """Lloyd iterations from ``centroids`` until the assignment is stable.

    Empty clusters are re-seeded with the point farthest from its current
    centroid.  Returns ``(centroids, labels, inertia, n_iter, history)``.
    """
    centroids = np.array(centroids, dtype=float)
    k = centroids.shape[0]
    n = points.shape[0]
    p2 = np.einsum("ij,ij->i", points, points)
    rows = np.arange(n)
    labels = None
    history = []
    n_iter = 0
    for n_iter in range(1, max_iter + 1):
        d = np.maximum(p2[:, None] - 2.0 * points @ centroids.T
                       + np.einsum("ij,ij->i", centroids, centroids)[None, :], 0.0)
        if labels is not None:
            # inertia of the previous update, read off the fresh distances
            history.append(float(d[rows, labels].sum()))
        new_labels = np.argmin(d, axis=1)
        if labels is not None and np.array_equal(new_labels, labels):
            break
        labels = new_labels
        counts = np.bincount(labels, minlength=k)
        for c in np.flatnonzero(counts == 0):
            far = int(np.argmax(d[rows, labels]))
            labels[far] = c
            d[far, c] = 0.0
            counts = np.bincount(labels, minlength=k)
        onehot = np.zeros((n, k))
        onehot[rows, labels] = 1.0
        centroids = (onehot.T @ points) / counts[:, None]
    return centroids, labels, _inertia(points, centroids, labels), n_iter, history


def kmeans(data, k, restarts=200, seed=0, init="random", max_iter=MAX_ITER):
    """Best-of-``restarts`` k-means over the columns of ``data``.

    Restart ``r`` draws its initial centroids from stream ``(seed, r)``; by
    default these are ``k`` distinct columns chosen uniformly.  The restart
    with the lowest inertia wins, ties going to the lowest restart index.
    """
    if int(k) != k or k < 2:
        raise InputError(f"k must be an integer >= 2, got {k}")
    if restarts < 1:
        raise InputError("restarts must be >= 1")
    points = _columns(data)
    if k > points.shape[0]:
        raise InfeasibleError(f"cannot form {k} clusters from {points.shape[0]} columns")

    def one(r):
        rng = make_rng(seed, r)
        return lloyd(points, _init_centroids(points, k, rng, init), max_iter)

    runs = ordered_map(one, range(restarts))
    best = min(range(restarts), key=lambda r: (runs[r][2], r))
    centroids, labels, inertia, n_iter, history = runs[best]
    return StateResult(int(k), centroids, labels, inertia, restarts_used=restarts,
                       n_iter=n_iter, inertia_history=history)


def davies_bouldin(data, result):
    """Davies-Bouldin index of a clustering (lower is better).

    ``s_i`` is the mean Euclidean distance of cluster ``i``'s members to its
    centroid and ``d_ij`` the distance between centroids; the index is the
    mean over clusters of ``max_{j != i} (s_i + s_j) / d_ij``.  Coincident
    centroids give ``inf``.
    """
    points = _columns(data)
    centroids = np.asarray(result.centroids, dtype=float)
    labels = np.asarray(result.labels)
    k = centroids.shape[0]
    scatter = np.empty(k)
    for c in range(k):
        members = points[labels == c]
        if len(members) == 0:
            raise InputError(f"cluster {c} is empty")
        scatter[c] = np.sqrt(((members - centroids[c]) ** 2).sum(axis=1)).mean()
    sep = np.sqrt(((centroids[:, None, :] - centroids[None, :, :]) ** 2).sum(axis=-1))
    worst = np.empty(k)
    for i in range(k):
        ratios = [np.inf if sep[i, j] == 0 else (scatter[i] + scatter[j]) / sep[i, j]
                  for j in range(k) if j != i]
        worst[i] = max(ratios)
    return float(worst.mean())


@dataclass
class StatePipelineResult:
    result: StateResult
    sweep: dict
    group: GroupMatrix
    state_matrices: np.ndarray
    seed: int

    @property
    def labels_by_subject(self):
        g = self.group
        return [self.result.labels[a:b] for a, b in zip(g.subject_boundaries[:-1], g.subject_boundaries[1:])]


def run_state_pipeline(tensors, k_range=range(2, 7), restarts=200, seed=0,
                       force_k=None, init="random"):
    """Cluster subjects' tensors into recurring states.

    Every ``k`` in ``k_range`` (plus ``force_k``) is fitted and scored with
    the Davies-Bouldin index.  The reported clustering is ``force_k`` when
    given, otherwise the ``k`` with the smallest index.  Centroids are
    returned as symmetric ``(k, R, R)`` matrices with unit diagonal.
    """
    group = build_group_matrix(tensors)
    ks = sorted(set(int(k) for k in k_range) | ({int(force_k)} if force_k else set()))
    if not ks:
        raise InputError("empty k range")
    sweep = {}
    for k in ks:
        res = kmeans(group, k, restarts=restarts, seed=seed, init=init)
        sweep[k] = res
    dbi = {k: davies_bouldin(group, res) for k, res in sweep.items()}
    chosen_k = int(force_k) if force_k else min(dbi, key=lambda k: (dbi[k], k))
    result = sweep[chosen_k]
    result.dbi_by_k = dbi
    diag = DIAGONAL[group.metric]
    mats = np.stack([to_square(c, group.n_regions, diag) for c in result.centroids])
    return StatePipelineResult(result, sweep, group, mats, seed)

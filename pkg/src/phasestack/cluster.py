"""Pattern classification of pre-processed wrapped frames: pairwise
distances, average-linkage agglomeration, and minimum-sampling cluster
selection.

Distances are RMS pixel differences of the piston-shifted, pooled wrapped
values (direct subtraction, no circular difference); the RMS normalization
keeps cut thresholds comparable across pupil sizes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial.distance import pdist, squareform

from .core import wrapped_diff


class NoClusterError(RuntimeError):
    """No cluster met the minimum sampling number."""

    def __init__(self, message: str, clusters: "ClusterSet | None" = None):
        super().__init__(message)
        self.clusters = clusters


def pairwise_distances(
    frames: np.ndarray, mask: np.ndarray, circular: bool = False
) -> np.ndarray:
    """Symmetric matrix of RMS pixel differences over the valid region.

    d(i, j) = sqrt( sum_valid (W_i - W_j)^2 / n_valid )

    Direct subtraction of the wrapped values by default; circular=True
    substitutes the wrapped difference per pixel instead.
    """
    frames = np.asarray(frames, dtype=np.float64)
    mask = np.asarray(mask, dtype=bool)
    if frames.ndim != 3 or frames.shape[0] < 2:
        raise ValueError("pairwise_distances: need at least 2 frames")
    if frames.shape[1:] != mask.shape:
        raise ValueError("pairwise_distances: frame/mask shape mismatch")
    n_valid = int(mask.sum())
    if n_valid == 0:
        raise ValueError("pairwise_distances: no valid pixels")
    x = frames[:, mask]
    if not circular:
        return squareform(pdist(x, metric="euclidean") / math.sqrt(n_valid))
    n = x.shape[0]
    d = np.zeros((n, n))
    for i in range(n - 1):
        diff = wrapped_diff(x[i + 1 :], x[i])
        d[i, i + 1 :] = d[i + 1 :, i] = np.sqrt(np.mean(diff * diff, axis=1))
    return d


def check_distance_matrix(d: np.ndarray) -> None:
    d = np.asarray(d)
    if d.ndim != 2 or d.shape[0] != d.shape[1] or d.shape[0] < 2:
        raise ValueError("distance matrix must be square with n >= 2")
    if not np.allclose(d, d.T, atol=0.0, rtol=0.0, equal_nan=False):
        raise ValueError("distance matrix must be symmetric")
    if np.any(np.diag(d) != 0.0):
        raise ValueError("distance matrix must have a zero diagonal")
    if np.any(d < 0.0):
        raise ValueError("distance matrix must be nonnegative")


@dataclass
class Dendrogram:
    """Merge tree of agglomerative clustering.

    merges[t] = (a, b, height): clusters a and b (leaves are 0..n-1, the
    t-th merge creates cluster n + t) joined at the given height, with
    min-leaf(a) < min-leaf(b).  Heights are nondecreasing.
    """

    n_leaves: int
    merges: list = field(default_factory=list)

    @property
    def heights(self) -> np.ndarray:
        return np.array([m[2] for m in self.merges], dtype=np.float64)

    @property
    def normalized_heights(self) -> np.ndarray:
        h = self.heights
        top = h[-1] if len(h) else 0.0
        if top == 0.0:
            return np.zeros_like(h)
        return h / top

    def to_dict(self) -> dict:
        """JSON-friendly form for external plotting."""
        return {
            "leaf_count": self.n_leaves,
            "merges": [[int(a), int(b), float(h)] for a, b, h in self.merges],
            "normalized_heights": [float(v) for v in self.normalized_heights],
        }

    def to_linkage(self) -> np.ndarray:
        """Scipy-style (n-1, 4) linkage matrix [a, b, height, size]."""
        sizes = {i: 1 for i in range(self.n_leaves)}
        out = np.zeros((len(self.merges), 4))
        for t, (a, b, h) in enumerate(self.merges):
            s = sizes[a] + sizes[b]
            sizes[self.n_leaves + t] = s
            out[t] = [a, b, h, s]
        return out


def agglomerate(d: np.ndarray) -> Dendrogram:
    """Average-linkage (UPGMA) agglomeration of a distance matrix.

    At each step the pair of clusters with the minimal average
    inter-cluster distance is merged; exact ties are broken by the lowest
    min-leaf index of the first cluster, then of the second.  This makes
    the output fully deterministic.
    """
    check_distance_matrix(d)
    n = d.shape[0]
    work = np.asarray(d, dtype=np.float64).copy()
    np.fill_diagonal(work, np.inf)
    active = np.ones(n, dtype=bool)
    cluster_id = np.arange(n)
    size = np.ones(n, dtype=np.int64)
    min_leaf = np.arange(n)

    merges = []
    last_height = 0.0
    for step in range(n - 1):
        masked = np.where(active[:, None] & active[None, :], work, np.inf)
        h = masked.min()
        ties = np.argwhere(masked == h)
        # orient each candidate pair by min-leaf, then pick lexicographically
        best = None
        for i, j in ties:
            if i >= j:
                continue
            a, b = (i, j) if min_leaf[i] <= min_leaf[j] else (j, i)
            key = (min_leaf[a], min_leaf[b])
            if best is None or key < best[0]:
                best = (key, a, b)
        _, p, q = best
        if h < last_height:
            raise AssertionError("average-linkage heights must be nondecreasing")
        last_height = h
        merges.append((int(cluster_id[p]), int(cluster_id[q]), float(h)))

        # Lance-Williams update for average linkage; slot p keeps the merge
        rest = active.copy()
        rest[[p, q]] = False
        work[p, rest] = (size[p] * work[p, rest] + size[q] * work[q, rest]) / (
            size[p] + size[q]
        )
        work[rest, p] = work[p, rest]
        active[q] = False
        size[p] += size[q]
        cluster_id[p] = n + step
        min_leaf[p] = min(min_leaf[p], min_leaf[q])

    return Dendrogram(n_leaves=n, merges=merges)


@dataclass
class ClusterSet:
    """Partition of frame indices into chosen and abandoned clusters.

    Clusters are sorted-index lists, ordered by their smallest member.
    """

    chosen: list
    abandoned: list
    min_samples: int
    cut: float

    @property
    def all_frames(self) -> int:
        return sum(len(c) for c in self.chosen) + sum(len(c) for c in self.abandoned)

    @property
    def abandoned_frame_indices(self) -> list:
        return sorted(i for c in self.abandoned for i in c)


def min_samples_from_fraction(fraction: float, n_frames: int) -> int:
    """Convert a minimum sampling fraction of N into a frame count (ceil)."""
    if not 0.0 < fraction < 1.0:
        raise ValueError("min_fraction must be in (0, 1)")
    return max(1, math.ceil(fraction * n_frames))


def select_clusters(dendrogram: Dendrogram, cut: float, min_samples: int) -> ClusterSet:
    """Cut the dendrogram at a normalized height and apply the minimum
    sampling number.

    Clusters are the connected groups produced by merges strictly below
    ``cut`` (a fraction of the maximum merge height).  Clusters with at
    least ``min_samples`` members are chosen; the rest are abandoned as
    insufficiently sampled.

    Raises
    ------
    NoClusterError
        If no cluster meets the minimum sampling number.  The exception
        carries the all-abandoned ClusterSet for reporting.
    """
    if not 0.0 < cut <= 1.0:
        raise ValueError("cut must be in (0, 1]")
    if min_samples < 1:
        raise ValueError("min_samples must be >= 1")
    n = dendrogram.n_leaves
    parent = list(range(n))

    def find(i: int) -> int:
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    members: dict[int, list] = {i: [i] for i in range(n)}
    norm = dendrogram.normalized_heights
    for t, (a, b, _h) in enumerate(dendrogram.merges):
        if norm[t] >= cut:
            break
        # cluster ids >= n refer to earlier merges; map to any leaf inside
        ra = find(a if a < n else members[a][0])
        rb = find(b if b < n else members[b][0])
        parent[rb] = ra
        members[n + t] = [ra]
    else:
        t = len(dendrogram.merges)

    groups: dict[int, list] = {}
    for leaf in range(n):
        groups.setdefault(find(leaf), []).append(leaf)
    clusters = sorted(groups.values(), key=lambda c: c[0])

    chosen = [sorted(c) for c in clusters if len(c) >= min_samples]
    abandoned = [sorted(c) for c in clusters if len(c) < min_samples]
    result = ClusterSet(chosen=chosen, abandoned=abandoned, min_samples=min_samples, cut=cut)
    if not chosen:
        raise NoClusterError("no cluster met the minimum sampling number", clusters=result)
    return result

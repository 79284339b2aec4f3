"""Ranks of the response and exact Euclidean nearest neighbours of the predictors.

These two ingredients produce the rank pairs ``(R_i, R_{N(i)})`` that drive
both dependence-function estimators.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ._random import make_rng
from .errors import ConfigError, InputError

# Above this size ``nearest_neighbors(method="auto")`` switches to the k-d tree.
KDTREE_THRESHOLD = 2000
_BLOCK_BYTES = 32 * 2**20


@dataclass(frozen=True)
class Dataset:
    """``n`` paired observations ``(y_i, x_i)`` with ``y_i`` real and ``x_i`` in R^d."""

    y: np.ndarray
    x: np.ndarray

    def __post_init__(self):
        y = np.asarray(self.y, dtype=float)
        x = np.asarray(self.x, dtype=float)
        if y.ndim != 1:
            raise InputError(f"y must be one-dimensional, got shape {y.shape}")
        if x.ndim == 1:
            x = x[:, None]
        if x.ndim != 2 or x.shape[1] < 1:
            raise InputError(f"x must have shape (n, d) with d >= 1, got {x.shape}")
        if len(x) != len(y):
            raise InputError(f"y and x have different lengths: {len(y)} vs {len(x)}")
        if len(y) < 2:
            raise InputError("a dataset needs at least two observations")
        if not (np.all(np.isfinite(y)) and np.all(np.isfinite(x))):
            raise InputError("dataset contains non-finite values")
        y.flags.writeable = False
        x.flags.writeable = False
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "x", x)

    @property
    def n(self) -> int:
        return len(self.y)

    @property
    def d(self) -> int:
        return self.x.shape[1]


@dataclass(frozen=True)
class TieRule:
    """How tied response values are ordered when ranking.

    ``TieRule.by_index()`` gives the earlier observation the smaller rank.
    ``TieRule.random(seed)`` orders tied observations by a seeded shuffle.
    """

    kind: str = "index"
    seed: int | None = None

    def __post_init__(self):
        if self.kind not in ("index", "random"):
            raise ConfigError(f"unknown tie rule {self.kind!r}")
        if self.kind == "random" and self.seed is None:
            raise ConfigError("the random tie rule needs an explicit seed")

    @classmethod
    def by_index(cls) -> "TieRule":
        return cls("index")

    @classmethod
    def random(cls, seed: int) -> "TieRule":
        return cls("random", int(seed))

    def describe(self) -> dict:
        return {"kind": self.kind, "seed": self.seed}


@dataclass(frozen=True)
class RankPairs:
    """Rank of every response and the rank of its nearest neighbour's response."""

    ranks: np.ndarray
    neighbor_ranks: np.ndarray
    neighbors: np.ndarray | None = field(default=None, compare=False)

    def __post_init__(self):
        r = np.asarray(self.ranks, dtype=np.int64)
        s = np.asarray(self.neighbor_ranks, dtype=np.int64)
        n = len(r)
        if r.shape != (n,) or s.shape != (n,) or n < 2:
            raise InputError("ranks and neighbour ranks must be 1-d of equal length >= 2")
        if not np.array_equal(np.sort(r), np.arange(1, n + 1)):
            raise InputError("ranks are not a permutation of 1..n")
        if np.any(s < 1) or np.any(s > n) or np.any(s == r):
            raise InputError("each neighbour rank must be the rank of a different observation")
        object.__setattr__(self, "ranks", r)
        object.__setattr__(self, "neighbor_ranks", s)

    @property
    def n(self) -> int:
        return len(self.ranks)

    @property
    def pairs(self) -> np.ndarray:
        return np.column_stack([self.ranks, self.neighbor_ranks])


def compute_ranks(y, rule: TieRule | None = None) -> np.ndarray:
    """Ranks ``1..n`` of ``y``; ties are ordered according to ``rule``.

    Examples
    --------
    >>> compute_ranks([3.1, 1.2, 2.7]).tolist()
    [3, 1, 2]
    >>> compute_ranks([5.0, 5.0, 1.0]).tolist()
    [2, 3, 1]
    """
    rule = rule or TieRule.by_index()
    y = np.asarray(y, dtype=float)
    if y.ndim != 1 or len(y) < 2:
        raise InputError("need a one-dimensional sample of length >= 2")
    if not np.all(np.isfinite(y)):
        raise InputError("cannot rank non-finite values")
    n = len(y)
    if rule.kind == "index":
        order = np.argsort(y, kind="stable")
    else:
        perm = make_rng(rule.seed).permutation(n)
        order = perm[np.argsort(y[perm], kind="stable")]
    ranks = np.empty(n, dtype=np.int64)
    ranks[order] = np.arange(1, n + 1)
    return ranks


def _as_points(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    if x.ndim != 2 or x.shape[1] < 1:
        raise InputError(f"points must have shape (n, d), got {x.shape}")
    if len(x) < 2:
        raise InputError("nearest neighbours need at least two points")
    if not np.all(np.isfinite(x)):
        raise InputError("points contain non-finite values")
    return x


def _squared_distances(block: np.ndarray, points: np.ndarray) -> np.ndarray:
    # Coordinate-wise accumulation so both search paths produce identical floats.
    out = np.zeros((len(block), len(points)))
    for k in range(points.shape[1]):
        diff = block[:, k, None] - points[None, :, k]
        out += diff * diff
    return out


def _nn_brute(x: np.ndarray) -> np.ndarray:
    n = len(x)
    rows = max(1, _BLOCK_BYTES // (8 * n))
    nn = np.empty(n, dtype=np.int64)
    for start in range(0, n, rows):
        stop = min(n, start + rows)
        dist = _squared_distances(x[start:stop], x)
        dist[np.arange(stop - start), np.arange(start, stop)] = np.inf
        nn[start:stop] = np.argmin(dist, axis=1)  # first minimum = smallest index
    return nn


def _nn_kdtree(x: np.ndarray) -> np.ndarray:
    from scipy.spatial import cKDTree

    n = len(x)
    tree = cKDTree(x)
    dist, idx = tree.query(x, k=2)
    own = np.arange(n)
    # Self appears at most once among the two hits, so one hit is a genuine neighbour.
    radius = np.where(idx[:, 0] == own, dist[:, 1], dist[:, 0])
    radius = radius * (1 + 1e-9) + 1e-300
    candidates = tree.query_ball_point(x, r=radius)
    nn = np.empty(n, dtype=np.int64)
    for i, cand in enumerate(candidates):
        cand = np.fromiter((j for j in cand if j != i), dtype=np.int64)
        if len(cand) == 1:
            nn[i] = cand[0]
            continue
        cand.sort()
        d2 = _squared_distances(x[i : i + 1], x[cand])[0]
        nn[i] = cand[np.argmin(d2)]
    return nn


def nearest_neighbors(x, method: str = "auto") -> np.ndarray:
    """Index of the nearest other point for every point (0-based).

    Distances are Euclidean. When several points are equally close the one
    with the smallest index wins; exact duplicates are not jittered, so a
    duplicated point is matched to its smallest-index copy.

    ``method`` is ``"brute"`` (exhaustive O(n^2) scan, the reference),
    ``"kdtree"`` (scipy's k-d tree with an exact tie-resolution pass) or
    ``"auto"``.  Both return identical indices.
    """
    x = _as_points(x)
    if method == "auto":
        method = "kdtree" if len(x) > KDTREE_THRESHOLD else "brute"
    if method == "brute":
        return _nn_brute(x)
    if method == "kdtree":
        return _nn_kdtree(x)
    raise ConfigError(f"unknown nearest-neighbour method {method!r}")


def make_rank_pairs(data: Dataset, rule: TieRule | None = None, method: str = "auto") -> RankPairs:
    """Pairs ``(R_i, R_{N(i)})`` for a dataset."""
    ranks = compute_ranks(data.y, rule)
    nn = nearest_neighbors(data.x, method=method)
    return RankPairs(ranks, ranks[nn], neighbors=nn)

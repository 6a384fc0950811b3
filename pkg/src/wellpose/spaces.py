"""Finite metric spaces, balls, diameters, and set distances.

Every downstream object (objectives, parametric families, perturbations)
lives on a :class:`FiniteMetricSpace`: an indexed point set with a
symmetric distance oracle.  Geometry (grids, point clouds) is baked into
a distance matrix at construction time so that all later set operations
are exact enumeration on indices.  Ball membership and set comparisons
use plain float comparisons with zero tolerance.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Iterator

import numpy as np

__all__ = [
    "EAGER_MATRIX_LIMIT",
    "FiniteMetricSpace",
    "PointSubset",
    "ball",
    "diam",
    "set_distance",
    "space_from_json",
    "space_to_json",
]

# Above this size the full matrix is not materialized; rows are computed
# on demand from coordinates.
EAGER_MATRIX_LIMIT = 4096

_METRICS = ("euclidean", "linf", "l1")


def _pairwise(a: np.ndarray, b: np.ndarray, metric: str) -> np.ndarray:
    """Distance block between point arrays of shape (na, d) and (nb, d)."""
    diff = a[:, None, :] - b[None, :, :]
    if metric == "euclidean":
        return np.sqrt((diff * diff).sum(axis=2))
    if metric == "l1":
        return np.abs(diff).sum(axis=2)
    if metric == "linf":
        return np.abs(diff).max(axis=2)
    raise ValueError(f"unknown metric {metric!r}")


class FiniteMetricSpace:
    """Indexed point set with a symmetric distance oracle.

    Points are addressed by index 0..n-1; ``labels`` carries an opaque
    per-point label (grid coordinates for generated grids).  For
    n <= EAGER_MATRIX_LIMIT the distance matrix is materialized eagerly;
    larger coordinate-backed spaces compute distance rows on demand.
    """

    def __init__(
        self,
        *,
        matrix: np.ndarray | None = None,
        coords: np.ndarray | None = None,
        metric: str = "euclidean",
        labels: tuple | None = None,
    ):
        if matrix is None and coords is None:
            raise ValueError("need a distance matrix or point coordinates")
        self._metric = metric
        self._coords = None
        self._matrix = None
        if coords is not None:
            if metric not in _METRICS:
                raise ValueError(f"unknown metric {metric!r}")
            coords = np.ascontiguousarray(np.asarray(coords, dtype=np.float64))
            if coords.ndim != 2 or coords.shape[0] == 0:
                raise ValueError("coords must be a non-empty (n, d) array")
            self._coords = coords
            self.n = coords.shape[0]
            if matrix is None and self.n <= EAGER_MATRIX_LIMIT:
                matrix = _pairwise(coords, coords, metric)
        if matrix is not None:
            matrix = np.asarray(matrix, dtype=np.float64)
            if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1] or matrix.shape[0] == 0:
                raise ValueError("distance matrix must be square and non-empty")
            if self._coords is None:
                self.n = matrix.shape[0]
            elif matrix.shape[0] != self.n:
                raise ValueError("matrix size does not match coords")
            if np.any(np.diagonal(matrix) != 0.0):
                raise ValueError("nonzero diagonal in distance matrix")
            if np.any(matrix < 0.0) or np.any(~np.isfinite(matrix)):
                raise ValueError("distances must be finite and nonnegative")
            if not np.array_equal(matrix, matrix.T):
                raise ValueError("distance matrix must be exactly symmetric")
            matrix.setflags(write=False)
            self._matrix = matrix
        if self._coords is not None:
            self._coords.setflags(write=False)
        if labels is None:
            if self._coords is not None:
                labels = tuple(map(tuple, self._coords.tolist()))
            else:
                labels = tuple(range(self.n))
        if len(labels) != self.n:
            raise ValueError("labels length does not match point count")
        self.labels = tuple(labels)

    # ------------------------------------------------------------------
    # constructors

    @classmethod
    def from_matrix(cls, matrix, labels: tuple | None = None) -> "FiniteMetricSpace":
        return cls(matrix=matrix, labels=labels)

    @classmethod
    def grid1d(cls, start: float = 0.0, stop: float = 1.0, steps: int = 1) -> "FiniteMetricSpace":
        """Uniform grid with ``steps`` intervals (steps + 1 points).

        For the unit interval the coordinates are the correctly rounded
        rationals i/steps, which keeps interval-membership claims exact.
        """
        if steps < 1:
            raise ValueError("steps must be >= 1")
        frac = np.arange(steps + 1, dtype=np.float64) / steps
        if start == 0.0 and stop == 1.0:
            xs = frac
        else:
            xs = start + frac * (stop - start)
        coords = xs[:, None]
        labels = tuple(float(v) for v in xs.tolist())
        return cls(coords=coords, metric="linf", labels=labels)

    @classmethod
    def grid2d(
        cls,
        x: tuple[float, float, int],
        y: tuple[float, float, int],
        metric: str = "euclidean",
    ) -> "FiniteMetricSpace":
        """Cartesian product grid, x-major ordering."""
        x0, x1, nx = x
        y0, y1, ny = y
        if nx < 1 or ny < 1:
            raise ValueError("steps must be >= 1")
        xs = x0 + (np.arange(nx + 1, dtype=np.float64) / nx) * (x1 - x0)
        ys = y0 + (np.arange(ny + 1, dtype=np.float64) / ny) * (y1 - y0)
        gx, gy = np.meshgrid(xs, ys, indexing="ij")
        coords = np.column_stack([gx.ravel(), gy.ravel()])
        return cls(coords=coords, metric=metric)

    @classmethod
    def pointcloud(cls, points, metric: str = "euclidean") -> "FiniteMetricSpace":
        return cls(coords=np.asarray(points, dtype=np.float64), metric=metric)

    # ------------------------------------------------------------------
    # distance access

    def dist(self, i: int, j: int) -> float:
        if self._matrix is not None:
            return float(self._matrix[i, j])
        return float(_pairwise(self._coords[[i]], self._coords[[j]], self._metric)[0, 0])

    def row(self, i: int) -> np.ndarray:
        """Distances from point i to every point, shape (n,)."""
        if self._matrix is not None:
            return self._matrix[i]
        return _pairwise(self._coords[[i]], self._coords, self._metric)[0]

    def block(self, idx: np.ndarray) -> np.ndarray:
        """Distance block, shape (len(idx), n)."""
        if self._matrix is not None:
            return self._matrix[idx]
        return _pairwise(self._coords[idx], self._coords, self._metric)

    def diameter(self) -> float:
        """Max pairwise distance of the whole space (its scale)."""
        return diam(PointSubset(self, frozenset(range(self.n))))

    # ------------------------------------------------------------------
    # validation

    def validate(self, rng: np.random.Generator | None = None, tol: float | None = None) -> bool:
        """Check metric axioms: zero diagonal, symmetry, triangle inequality.

        Exhaustive for n <= 200, on 200_000 random triples beyond.  The
        triangle check allows float-noise slack ``tol`` (default scales
        with the largest distance) because a+b may round below an exactly
        stored a+b distance.  Returns True; raises ValueError naming the
        first violated axiom otherwise.
        """
        rng = rng if rng is not None else np.random.default_rng(0)
        if self._matrix is not None:
            m = self._matrix
            if tol is None:
                tol = 64.0 * np.finfo(np.float64).eps * float(m.max(initial=0.0))
            if np.any(np.diagonal(m) != 0.0):
                raise ValueError("metric violation: nonzero self-distance")
            if not np.array_equal(m, m.T):
                raise ValueError("metric violation: asymmetric distances")
            if self.n <= 200:
                through = np.min(m[:, :, None] + m[None, :, :], axis=1)
                if np.any(m > through + tol):
                    raise ValueError("metric violation: triangle inequality fails")
                return True
            i, j, k = rng.integers(0, self.n, size=(3, 200_000))
            if np.any(m[i, k] > m[i, j] + m[j, k] + tol):
                raise ValueError("metric violation: triangle inequality fails (sampled)")
            return True
        # coordinate-backed space too large for an eager matrix: sample triples
        c = self._coords

        def pd(a, b):
            v = c[a] - c[b]
            if self._metric == "euclidean":
                return np.sqrt((v * v).sum(axis=1))
            if self._metric == "l1":
                return np.abs(v).sum(axis=1)
            return np.abs(v).max(axis=1)

        i, j, k = rng.integers(0, self.n, size=(3, 200_000))
        lhs = pd(i, k)
        rhs = pd(i, j) + pd(j, k)
        if tol is None:
            tol = 64.0 * np.finfo(np.float64).eps * float(rhs.max(initial=0.0))
        if np.any(lhs > rhs + tol):
            raise ValueError("metric violation: triangle inequality fails (sampled)")
        return True

    def __repr__(self) -> str:  # pragma: no cover
        kind = "matrix" if self._coords is None else self._metric
        return f"FiniteMetricSpace(n={self.n}, {kind})"


@dataclass(frozen=True, eq=False)
class PointSubset:
    """Subset of a space's points, stored as an index set.

    Set claims (inclusion, disjointness, equality) are exact operations
    on these index sets; no float tolerance is ever involved.
    """

    space: FiniteMetricSpace
    members: frozenset[int]

    def __post_init__(self):
        for i in self.members:
            if not (0 <= i < self.space.n):
                raise ValueError(f"point index {i} out of range")

    @classmethod
    def of(cls, space: FiniteMetricSpace, indices: Iterable[int]) -> "PointSubset":
        return cls(space, frozenset(int(i) for i in indices))

    def sorted_indices(self) -> np.ndarray:
        return np.array(sorted(self.members), dtype=np.int64)

    def issubset(self, other: "PointSubset") -> bool:
        self._same_space(other)
        return self.members <= other.members

    def isdisjoint(self, other: "PointSubset") -> bool:
        self._same_space(other)
        return self.members.isdisjoint(other.members)

    def intersection(self, other: "PointSubset") -> "PointSubset":
        self._same_space(other)
        return PointSubset(self.space, self.members & other.members)

    def _same_space(self, other: "PointSubset") -> None:
        if self.space is not other.space:
            raise ValueError("subsets live on different spaces")

    def __len__(self) -> int:
        return len(self.members)

    def __contains__(self, i: int) -> bool:
        return i in self.members

    def __iter__(self) -> Iterator[int]:
        return iter(sorted(self.members))


def ball(space: FiniteMetricSpace, center: int, eps: float) -> PointSubset:
    """Closed ball {x : d(x, center) <= eps} as an index subset.

    The boundary is included via plain float <=; eps must be >= 0.
    """
    if not (0 <= center < space.n):
        raise ValueError(f"center index {center} out of range")
    if not (eps >= 0.0):
        raise ValueError("ball radius must be nonnegative")
    row = space.row(center)
    return PointSubset(space, frozenset(np.flatnonzero(row <= eps).tolist()))


def diam(subset: PointSubset) -> float:
    """Max pairwise distance over the subset; 0 for singletons.

    The diameter of the empty set is undefined and raises.
    """
    if len(subset) == 0:
        raise ValueError("diameter of the empty set is undefined")
    idx = subset.sorted_indices()
    if len(idx) == 1:
        return 0.0
    block = subset.space.block(idx)
    return float(block[:, idx].max())


def set_distance(a: PointSubset, b: PointSubset) -> float:
    """Min distance over pairs (one point from each subset)."""
    a._same_space(b)
    if len(a) == 0 or len(b) == 0:
        raise ValueError("set distance needs non-empty subsets")
    ia = a.sorted_indices()
    ib = b.sorted_indices()
    block = a.space.block(ia)
    return float(block[:, ib].min())


# ----------------------------------------------------------------------
# JSON descriptors
#
# { "kind": "grid1d"|"grid2d"|"pointcloud",
#   "params": {...},
#   "metric": "euclidean"|"linf"|"l1"|"matrix" }
# For metric "matrix", params carries an explicit row-major distance
# matrix under "matrix" (nested lists).


def space_from_json(desc: dict) -> FiniteMetricSpace:
    """Build a space from its JSON descriptor dict."""
    if not isinstance(desc, dict):
        raise ValueError("space descriptor must be an object")
    kind = desc.get("kind")
    params = desc.get("params", {})
    metric = desc.get("metric", "euclidean")
    if metric == "matrix":
        mat = params.get("matrix")
        if mat is None:
            raise ValueError("metric 'matrix' needs params.matrix")
        space = FiniteMetricSpace.from_matrix(np.asarray(mat, dtype=np.float64),
                                              labels=tuple(params["labels"]) if "labels" in params else None)
        space.validate()
        return space
    if kind == "grid1d":
        return FiniteMetricSpace.grid1d(params.get("start", 0.0), params.get("stop", 1.0), int(params["steps"]))
    if kind == "grid2d":
        return FiniteMetricSpace.grid2d(
            (params["x"][0], params["x"][1], int(params["x"][2])),
            (params["y"][0], params["y"][1], int(params["y"][2])),
            metric=metric,
        )
    if kind == "pointcloud":
        return FiniteMetricSpace.pointcloud(params["points"], metric=metric)
    raise ValueError(f"unknown space kind {kind!r}")


def space_to_json(space: FiniteMetricSpace) -> dict:
    """Serialize a space as an explicit-matrix descriptor (always exact)."""
    m = space._matrix if space._matrix is not None else space.block(np.arange(space.n))
    return {
        "kind": "pointcloud",
        "metric": "matrix",
        "params": {"matrix": [[float(v) for v in row] for row in m.tolist()]},
    }

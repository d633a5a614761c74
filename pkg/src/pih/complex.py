"""Simplices, filtered simplicial complexes, Vietoris-Rips construction and
barycentric subdivision.

Simplices are plain tuples of strictly ascending non-negative vertex ids.
Chains carry Z/2 coefficients, so a chain is just a set of simplices.
"""
from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from typing import Iterable, Iterator, Sequence

import numpy as np
from scipy.spatial import cKDTree

Simplex = tuple[int, ...]


def simplex(vertices: Iterable[int]) -> Simplex:
    """Normalise `vertices` into a simplex (sorted tuple), rejecting duplicates."""
    s = tuple(sorted(int(v) for v in vertices))
    if not s:
        raise ValueError("a simplex needs at least one vertex")
    if s[0] < 0:
        raise ValueError(f"negative vertex id in {s}")
    if any(a == b for a, b in zip(s, s[1:])):
        raise ValueError(f"duplicate vertex in {s}")
    return s


def dim(sigma: Simplex) -> int:
    return len(sigma) - 1


@dataclass(frozen=True)
class Chain:
    """A Z/2 chain: the set of simplices with coefficient one."""

    dimension: int
    simplices: frozenset = frozenset()

    def __post_init__(self):
        for s in self.simplices:
            if len(s) - 1 != self.dimension:
                raise ValueError(f"simplex {s} does not have dimension {self.dimension}")

    def __add__(self, other: "Chain") -> "Chain":
        if self.simplices and other.simplices and self.dimension != other.dimension:
            raise ValueError("cannot add chains of different dimension")
        return Chain(self.dimension, self.simplices ^ other.simplices)

    def __bool__(self) -> bool:
        return bool(self.simplices)

    def __len__(self) -> int:
        return len(self.simplices)

    def __iter__(self):
        return iter(self.simplices)


def faces(sigma: Simplex) -> list[Simplex]:
    """Codimension-one faces of `sigma`, dropping vertex i for i = 0..dim."""
    if len(sigma) == 1:
        return []
    return [sigma[:i] + sigma[i + 1:] for i in range(len(sigma))]


def boundary(sigma: Simplex) -> Chain:
    return Chain(len(sigma) - 2, frozenset(faces(sigma))) if len(sigma) > 1 else Chain(-1)


def chain_boundary(chain: Chain) -> Chain:
    out: set = set()
    for s in chain:
        out.symmetric_difference_update(faces(s))
    return Chain(chain.dimension - 1, frozenset(out))


def enumerate_faces_reverse_lex(sigma: Simplex, l: int) -> Iterator[Simplex]:
    """Yield every `l`-dimensional face of `sigma` in reverse lexicographic order."""
    if l < 0 or l > len(sigma) - 1:
        return iter(())
    return reversed(list(combinations(sigma, l + 1)))


def all_faces(sigma: Simplex) -> Iterator[Simplex]:
    for r in range(1, len(sigma) + 1):
        yield from combinations(sigma, r)


@dataclass(frozen=True)
class PointCloud:
    """n points in R^D with the Euclidean metric."""

    points: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim == 1:
            pts = pts.reshape(-1, 1)
        if pts.ndim != 2:
            raise ValueError("point cloud must be an n x D array")
        if pts.shape[0] == 0:
            raise ValueError("empty input")
        if pts.shape[1] == 0:
            raise ValueError("points need at least one coordinate")
        if not np.all(np.isfinite(pts)):
            raise ValueError("point coordinates must be finite")
        pts = pts.copy()
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    def __len__(self) -> int:
        return self.points.shape[0]

    @property
    def dimension(self) -> int:
        return self.points.shape[1]


class FilteredComplex:
    """A simplicial complex with a face-monotone filtration.

    Simplices are stored in the total order (value, dimension, vertices); every
    face therefore precedes its cofaces. Instances are treated as immutable.

    Parameters
    ----------
    simplices : iterable of vertex sequences
    values : iterable of float, one per simplex
    check : bool
        Verify face closure and monotonicity (O(sum of 2^dim)).
    """

    def __init__(self, simplices: Iterable[Sequence[int]], values: Iterable[float], *, check: bool = True):
        items = [(float(v), simplex(s)) for s, v in zip(simplices, values, strict=True)]
        items.sort(key=lambda item: (item[0], len(item[1]), item[1]))
        self.simplices: tuple[Simplex, ...] = tuple(s for _, s in items)
        self.values = np.array([v for v, _ in items], dtype=float)
        self.values.setflags(write=False)
        self.index: dict[Simplex, int] = {s: i for i, s in enumerate(self.simplices)}
        if len(self.index) != len(self.simplices):
            raise ValueError("duplicate simplex in complex")
        if check:
            self._check()

    def _check(self):
        if not np.all(np.isfinite(self.values)):
            raise ValueError("filtration values must be finite")
        for i, s in enumerate(self.simplices):
            for f in faces(s):
                j = self.index.get(f)
                if j is None:
                    raise ValueError(f"complex is not closed under faces: {f} missing for {s}")
                if self.values[j] > self.values[i]:
                    raise ValueError(f"filtration not monotone: {f} enters after {s}")

    @classmethod
    def from_simplices(cls, simplices: Iterable[Sequence[int]]) -> "FilteredComplex":
        """Face closure of `simplices`, each simplex entering at its dimension."""
        closed = set()
        for s in simplices:
            closed.update(all_faces(simplex(s)))
        closed = sorted(closed)
        return cls(closed, [float(len(s) - 1) for s in closed])

    def __len__(self) -> int:
        return len(self.simplices)

    def __iter__(self) -> Iterator[Simplex]:
        return iter(self.simplices)

    def __contains__(self, s) -> bool:
        return tuple(s) in self.index

    def __repr__(self) -> str:
        return f"FilteredComplex({len(self)} simplices, dim={self.dimension})"

    def __eq__(self, other) -> bool:
        if not isinstance(other, FilteredComplex):
            return NotImplemented
        return self.simplices == other.simplices and np.array_equal(self.values, other.values)

    @property
    def dimension(self) -> int:
        return max((len(s) - 1 for s in self.simplices), default=-1)

    @property
    def vertices(self) -> list[int]:
        return [s[0] for s in self.simplices if len(s) == 1]

    def value(self, s: Sequence[int]) -> float:
        return float(self.values[self.index[tuple(s)]])

    def count(self, p: int) -> int:
        return sum(1 for s in self.simplices if len(s) == p + 1)

    def indices_by_dim(self) -> dict[int, list[int]]:
        out: dict[int, list[int]] = {}
        for i, s in enumerate(self.simplices):
            out.setdefault(len(s) - 1, []).append(i)
        return out

    def boundary_indices(self, i: int) -> list[int]:
        idx = self.index
        return [idx[f] for f in faces(self.simplices[i])]

    def sublevel(self, t: float) -> "FilteredComplex":
        keep = self.values <= t
        return FilteredComplex([s for s, k in zip(self.simplices, keep) if k], self.values[keep], check=False)


def build_rips(cloud: PointCloud | np.ndarray, epsilon: float, max_dim: int) -> FilteredComplex:
    """Vietoris-Rips complex of `cloud` at scale `epsilon`.

    A simplex enters at the largest pairwise distance among its vertices
    (not half of it); vertices enter at 0.
    """
    if not isinstance(cloud, PointCloud):
        if np.asarray(cloud).size == 0:
            raise ValueError("empty input")
        cloud = PointCloud(cloud)
    if not np.isfinite(epsilon) or epsilon < 0:
        raise ValueError("epsilon must be finite and non-negative")
    n = len(cloud)
    if max_dim < 0 or max_dim > n - 1:
        raise ValueError(f"max_dim must lie in [0, {n - 1}]")
    pts = cloud.points
    pairs = cKDTree(pts).query_pairs(epsilon, output_type="ndarray")
    if len(pairs):
        lengths = np.linalg.norm(pts[pairs[:, 0]] - pts[pairs[:, 1]], axis=1)
        keep = lengths <= epsilon
        pairs, lengths = pairs[keep], lengths[keep]
    else:
        lengths = np.empty(0)

    upper: list[dict[int, float]] = [dict() for _ in range(n)]
    for (u, v), w in zip(pairs.tolist(), lengths.tolist()):
        if u > v:
            u, v = v, u
        upper[u][v] = w

    simplices: list[Simplex] = [(v,) for v in range(n)]
    values: list[float] = [0.0] * n

    def expand(sigma: Simplex, value: float, candidates: list[int]):
        for pos, w in enumerate(candidates):
            new_value = value
            for v in sigma:
                d = upper[v][w]
                if d > new_value:
                    new_value = d
            tau = sigma + (w,)
            simplices.append(tau)
            values.append(new_value)
            if len(tau) <= max_dim:
                nbrs = upper[w]
                expand(tau, new_value, [x for x in candidates[pos + 1:] if x in nbrs])

    if max_dim >= 1:
        for u in range(n):
            expand((u,), 0.0, sorted(upper[u]))
    return FilteredComplex(simplices, values, check=False)


def barycentric_subdivision(complex: FilteredComplex) -> FilteredComplex:
    """First barycentric subdivision.

    Vertex i of the result is the barycentre of ``complex.simplices[i]``; a
    k-simplex is a flag sigma_0 < ... < sigma_k of strict face inclusions and
    enters at the largest value along its flag.
    """
    idx = complex.index
    vals = complex.values
    # flags ending at simplex i, as tuples of input positions (ascending because faces precede cofaces)
    flags_ending: list[list[tuple[int, ...]]] = []
    out_simplices: list[Simplex] = []
    out_values: list[float] = []
    for i, s in enumerate(complex.simplices):
        ending = [(i,)]
        for r in range(1, len(s)):
            for f in combinations(s, r):
                ending.extend(flag + (i,) for flag in flags_ending[idx[f]])
        flags_ending.append(ending)
        v = float(vals[i])
        for flag in ending:
            out_simplices.append(flag)
            out_values.append(max(v, max(float(vals[j]) for j in flag)))
    return FilteredComplex(out_simplices, out_values, check=False)

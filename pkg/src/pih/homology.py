"""Persistent homology over Z/2 by boundary-matrix column reduction,
persistence diagrams, Betti numbers and diagram distances."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import maximum_bipartite_matching

from .complex import FilteredComplex

INF = math.inf


@dataclass(frozen=True, order=True)
class PersistencePair:
    dimension: int
    birth: float
    death: float
    birth_index: int = field(default=-1, compare=False)
    death_index: int | None = field(default=None, compare=False)

    def __post_init__(self):
        if self.dimension < 0:
            raise ValueError("negative dimension")
        if self.death < self.birth:
            raise ValueError(f"death {self.death} precedes birth {self.birth}")

    @property
    def essential(self) -> bool:
        return math.isinf(self.death)

    @property
    def persistence(self) -> float:
        return self.death - self.birth


@dataclass(frozen=True)
class PersistenceDiagram:
    """Multiset of persistence pairs of one dimension."""

    dimension: int
    pairs: tuple[PersistencePair, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "pairs", tuple(self.pairs))
        for p in self.pairs:
            if p.dimension != self.dimension:
                raise ValueError(f"pair of dimension {p.dimension} in a dimension-{self.dimension} diagram")

    def __len__(self) -> int:
        return len(self.pairs)

    def __iter__(self):
        return iter(self.pairs)

    @property
    def finite(self) -> list[PersistencePair]:
        return [p for p in self.pairs if not p.essential]

    @property
    def essential(self) -> list[PersistencePair]:
        return [p for p in self.pairs if p.essential]

    def points(self) -> np.ndarray:
        """(m, 2) array of (birth, death)."""
        return np.array([(p.birth, p.death) for p in self.pairs], dtype=float).reshape(-1, 2)

    def multiset(self) -> list[tuple[float, float]]:
        return sorted((p.birth, p.death) for p in self.pairs)

    def without_zero_persistence(self) -> "PersistenceDiagram":
        return PersistenceDiagram(self.dimension, [p for p in self.pairs if p.death > p.birth])


def reduce_columns(
    order_by_dim: Mapping[int, Sequence[int]],
    column: Callable[[int], set],
    *,
    clearing: bool = True,
) -> list[tuple[int, int]]:
    """Reduce a Z/2 boundary matrix given column by column.

    Columns are keyed by their position in the filtration order; ``column(j)``
    returns the set of row keys. With `clearing`, dimensions are processed from
    the top down and columns already known to be positive are skipped; the
    resulting pairing is the same as textbook left-to-right reduction.

    Returns the list of (birth key, death key) pairs.
    """
    pivot: dict[int, set] = {}
    pairs: list[tuple[int, int]] = []
    if clearing:
        sequence = [(p, order_by_dim[p]) for p in sorted(order_by_dim, reverse=True)]
    else:
        merged = sorted(j for p in order_by_dim for j in order_by_dim[p])
        sequence = [(None, merged)]
    for _, keys in sequence:
        for j in keys:
            if clearing and j in pivot:
                continue
            col = column(j)
            while col:
                low = max(col)
                other = pivot.get(low)
                if other is None:
                    pivot[low] = col
                    pairs.append((low, j))
                    break
                col ^= other
    return pairs


def _diagrams_from_pairs(
    pairs: Iterable[tuple[int, int]],
    candidates: Mapping[int, Sequence[int]],
    dim_of: Callable[[int], int],
    values: np.ndarray,
    max_dim: int,
    keep_zero: bool,
) -> list[PersistenceDiagram]:
    out: list[list[PersistencePair]] = [[] for _ in range(max_dim + 1)]
    used = set()
    for b, d in pairs:
        used.add(b)
        used.add(d)
        p = dim_of(b)
        if p > max_dim:
            continue
        if keep_zero or values[d] > values[b]:
            out[p].append(PersistencePair(p, float(values[b]), float(values[d]), b, d))
    for p in range(max_dim + 1):
        for j in candidates.get(p, ()):
            if j not in used:
                out[p].append(PersistencePair(p, float(values[j]), INF, j, None))
    for lst in out:
        lst.sort(key=lambda q: (q.birth_index, q.death_index if q.death_index is not None else math.inf))
    return [PersistenceDiagram(p, lst) for p, lst in enumerate(out)]


def persistence_pairs(complex: FilteredComplex, max_dim: int | None = None, *, clearing: bool = True) -> list[tuple[int, int]]:
    """All (birth index, death index) pairs of `complex`, zero persistence included."""
    by_dim = complex.indices_by_dim()
    if max_dim is not None:
        by_dim = {p: v for p, v in by_dim.items() if p <= max_dim + 1}
    index, simplices = complex.index, complex.simplices

    def column(j: int) -> set:
        s = simplices[j]
        if len(s) == 1:
            return set()
        return {index[s[:i] + s[i + 1:]] for i in range(len(s))}

    return reduce_columns(by_dim, column, clearing=clearing)


def compute_persistence(
    complex: FilteredComplex,
    max_dim: int | None = None,
    *,
    keep_zero: bool = False,
    clearing: bool = True,
) -> list[PersistenceDiagram]:
    """Persistence diagrams of dimensions 0..max_dim.

    Pairs with birth == death are dropped unless `keep_zero` is set. Classes
    never killed within the complex are essential (death = inf).
    """
    if max_dim is None:
        max_dim = max(complex.dimension, 0)
    pairs = persistence_pairs(complex, max_dim, clearing=clearing)
    by_dim = complex.indices_by_dim()
    simplices = complex.simplices
    return _diagrams_from_pairs(pairs, by_dim, lambda i: len(simplices[i]) - 1, complex.values, max_dim, keep_zero)


def betti_numbers(diagrams: Sequence[PersistenceDiagram], at: float | str = "infinity") -> list[int]:
    """Betti numbers read off persistence diagrams.

    ``at="infinity"`` counts essential classes; a finite `at` counts pairs with
    birth <= at < death.
    """
    if isinstance(at, str):
        if at not in ("infinity", "inf"):
            raise ValueError(f"unknown evaluation point {at!r}")
        return [sum(1 for p in d if p.essential) for d in diagrams]
    t = float(at)
    return [sum(1 for p in d if p.birth <= t < p.death) for d in diagrams]


def total_persistence(diagram: PersistenceDiagram, q: float = 1.0) -> float:
    """Sum of (death - birth)^q over finite pairs."""
    if q < 1:
        raise ValueError("q must be >= 1")
    # fsum is exactly rounded, so the result does not depend on pair order
    return float(math.fsum((p.death - p.birth) ** q for p in diagram.finite))


def _finite_points(d: PersistenceDiagram | np.ndarray) -> np.ndarray:
    pts = d.points() if isinstance(d, PersistenceDiagram) else np.asarray(d, dtype=float).reshape(-1, 2)
    return pts[np.isfinite(pts[:, 1])]


def _essential_births(d: PersistenceDiagram | np.ndarray) -> np.ndarray:
    pts = d.points() if isinstance(d, PersistenceDiagram) else np.asarray(d, dtype=float).reshape(-1, 2)
    return np.sort(pts[~np.isfinite(pts[:, 1]), 0])


def _augmented_cost(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """(m+n) x (m+n) cost matrix: points of a and diagonal copies of b against
    points of b and diagonal copies of a; L-infinity ground metric."""
    m, n = len(a), len(b)
    C = np.zeros((m + n, m + n))
    if m and n:
        C[:m, :n] = np.max(np.abs(a[:, None, :] - b[None, :, :]), axis=2)
    da = (a[:, 1] - a[:, 0]) / 2.0
    db = (b[:, 1] - b[:, 0]) / 2.0
    C[:m, n:] = np.inf
    C[:m, n:][np.arange(m), np.arange(m)] = da
    C[m:, :n] = np.inf
    C[m:, :n][np.arange(n), np.arange(n)] = db
    return C


def wasserstein_distance(
    a: PersistenceDiagram | np.ndarray,
    b: PersistenceDiagram | np.ndarray,
    q: float = 2.0,
    *,
    finite_only: bool = False,
) -> float:
    """q-Wasserstein distance between two persistence diagrams.

    Finite points are matched exactly (Hungarian assignment on the diagonal-
    augmented cost matrix, O(n^3)); point-to-diagonal cost is half the
    vertical gap. Essential classes are matched by sorted birth when their
    counts agree, otherwise the distance is infinite. `finite_only` ignores
    essential classes altogether.
    """
    if q < 1:
        raise ValueError("q must be >= 1")
    A, B = _finite_points(a), _finite_points(b)
    total = 0.0
    if not finite_only:
        ea, eb = _essential_births(a), _essential_births(b)
        if len(ea) != len(eb):
            return INF
        total += float(np.sum(np.abs(ea - eb) ** q))
    if len(A) or len(B):
        C = _augmented_cost(A, B)
        big = np.where(np.isinf(C), 0.0, C).max() * 4 + 1.0
        Cq = np.where(np.isinf(C), big ** q, C ** q)
        rows, cols = linear_sum_assignment(Cq)
        total += float(Cq[rows, cols].sum())
    return total ** (1.0 / q)


def bottleneck_distance(a: PersistenceDiagram | np.ndarray, b: PersistenceDiagram | np.ndarray) -> float:
    """Bottleneck distance; essential classes matched by sorted birth."""
    ea, eb = _essential_births(a), _essential_births(b)
    if len(ea) != len(eb):
        return INF
    ess = float(np.max(np.abs(ea - eb))) if len(ea) else 0.0
    A, B = _finite_points(a), _finite_points(b)
    if not (len(A) or len(B)):
        return ess
    C = _augmented_cost(A, B)
    m, n = len(A), len(B)
    # diagonal-to-diagonal matches are free
    C[m:, n:] = 0.0
    candidates = np.unique(C[np.isfinite(C)])

    def feasible(t: float) -> bool:
        adj = csr_matrix((C <= t).astype(np.int8))
        match = maximum_bipartite_matching(adj, perm_type="column")
        return bool(np.all(match >= 0))

    lo, hi = 0, len(candidates) - 1
    while lo < hi:
        mid = (lo + hi) // 2
        if feasible(candidates[mid]):
            hi = mid
        else:
            lo = mid + 1
    return max(ess, float(candidates[lo]))

"""Per-point geometric descriptors and stratifications built from singular vertices.

Descriptors (local dimension, density, curvature) give one value per point;
outliers of a descriptor are taken as singular points and placed in X_0.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Iterable, Literal, Sequence

import numpy as np
from scipy.spatial import cKDTree

from .complex import FilteredComplex, PointCloud, Simplex, faces, simplex

log = logging.getLogger(__name__)

DescriptorKind = Literal["local-dimension", "density", "curvature"]
Direction = Literal["low", "high", "two-sided"]

MAD_SCALE = 1.4826
MEAN_AD_SCALE = 1.2533  # sqrt(pi/2), mean absolute deviation of a normal
FLAT_CUTOFF = 1e6


class Stratification:
    """Nested closed subcomplexes X_{-1} <= X_0 <= ... <= X_d = K.

    Parameters
    ----------
    complex : FilteredComplex
        The full complex K = X_d.
    strata : sequence of iterables of simplices
        ``strata[i]`` is X_i for i = 0..d-1. X_{-1} is empty.
    """

    def __init__(self, complex: FilteredComplex, strata: Sequence[Iterable[Sequence[int]]]):
        self.complex = complex
        self.depth = len(strata)
        self._strata: list[frozenset[Simplex]] = [frozenset(simplex(s) for s in X) for X in strata]
        self._validate()

    def _validate(self):
        prev: frozenset = frozenset()
        for i, X in enumerate(self._strata):
            for s in X:
                if s not in self.complex.index:
                    raise ValueError(f"stratum X_{i} contains {s}, which is not in the complex")
                if len(s) - 1 > i:
                    raise ValueError(f"stratum X_{i} contains the {len(s) - 1}-simplex {s}")
                for f in faces(s):
                    if f not in X:
                        raise ValueError(f"stratum X_{i} is not closed: face {f} of {s} missing")
            if not prev <= X:
                raise ValueError(f"strata not nested: X_{i - 1} is not contained in X_{i}")
            prev = X

    def __getitem__(self, i: int) -> frozenset[Simplex] | FilteredComplex:
        """X_i; the top stratum X_d is the complex itself."""
        if i == -1:
            return frozenset()
        if i == self.depth:
            return self.complex
        if 0 <= i < self.depth:
            return self._strata[i]
        raise IndexError(f"no stratum X_{i} in a depth-{self.depth} stratification")

    def contains(self, i: int, s: Sequence[int]) -> bool:
        return tuple(s) in self[i]

    def stratum(self, i: int) -> set[Simplex]:
        """The i-dimensional stratum X_i minus X_{i-1}."""
        upper = set(self[i]) if i < self.depth else set(self.complex.simplices)
        return upper - set(self[i - 1])

    @property
    def singular_vertices(self) -> list[int]:
        return sorted({v for X in self._strata for s in X for v in s})

    def is_trivial(self) -> bool:
        return all(not X for X in self._strata)

    def __repr__(self) -> str:
        sizes = ", ".join(str(len(X)) for X in self._strata)
        return f"Stratification(depth={self.depth}, |X_i|=[{sizes}])"


def build_stratification(complex: FilteredComplex, singular_vertices: Iterable[int], d: int) -> Stratification:
    """X_0 = the singular vertices, X_i = X_0 for 1 <= i < d, X_d = K."""
    if d < 1:
        raise ValueError("stratification depth must be >= 1")
    verts = sorted({int(v) for v in singular_vertices})
    for v in verts:
        if (v,) not in complex.index:
            raise ValueError(f"unknown vertex id {v}")
    X0 = [(v,) for v in verts]
    return Stratification(complex, [X0] * d)


def trivial_stratification(complex: FilteredComplex, d: int) -> Stratification:
    return Stratification(complex, [()] * d)


def subdivide_stratification(strat: Stratification, subdivided: FilteredComplex) -> Stratification:
    """Carry a stratification of K over to its barycentric subdivision.

    Vertex i of the subdivision is the barycentre of ``K.simplices[i]``; a flag
    lies in sd(X_j) when every simplex of the flag lies in X_j.
    """
    originals = strat.complex.simplices
    strata = []
    for j in range(strat.depth):
        X = strat[j]
        strata.append([s for s in subdivided.simplices if all(originals[v] in X for v in s)])
    return Stratification(subdivided, strata)


@dataclass(frozen=True)
class DescriptorField:
    values: np.ndarray
    kind: DescriptorKind

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float).ravel().copy()
        if not np.all(np.isfinite(vals)):
            raise ValueError("descriptor values must be finite")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    def __len__(self) -> int:
        return len(self.values)


def _as_cloud(cloud) -> PointCloud:
    return cloud if isinstance(cloud, PointCloud) else PointCloud(cloud)


def _check_k(k: int, n: int):
    if k >= n:
        raise ValueError("patch larger than cloud")
    if k < 1:
        raise ValueError("k must be positive")


def nearest_neighbors(points: np.ndarray, k: int, *, include_self: bool = False, block: int = 256) -> np.ndarray:
    """Indices of the k nearest neighbours of every point, exact, ties broken by index.

    With `include_self` the point itself comes first and is counted in k.
    """
    n = len(points)
    want = min(k, n)
    out = np.empty((n, want), dtype=np.intp)
    for start in range(0, n, block):
        stop = min(start + block, n)
        d2 = np.sum((points[start:stop, None, :] - points[None, :, :]) ** 2, axis=2)
        rows = np.arange(stop - start)
        d2[rows, rows + start] = -1.0 if include_self else np.inf
        kth = np.partition(d2, want - 1, axis=1)[:, want - 1]
        for r in rows:
            pool = np.flatnonzero(d2[r] <= kth[r])
            out[start + r] = pool[np.argsort(d2[r, pool], kind="stable")][:want]
    return out


def local_dimension(cloud, k: int) -> DescriptorField:
    """Local intrinsic dimension from the largest PCA spectral gap.

    For each point the covariance of its k nearest neighbours (itself
    excluded) has eigenvalues l_1 >= ... >= l_D; the estimate is
    argmax_{j in 2..D} |l_j - l_{j-1}| - 1, smallest j on ties. A patch of
    identical points scores 0.
    """
    cloud = _as_cloud(cloud)
    pts = cloud.points
    n, D = pts.shape
    if k < 2:
        raise ValueError("k must be >= 2")
    _check_k(k, n)
    if D < 2:
        raise ValueError("local dimension needs ambient dimension >= 2")
    nbrs = nearest_neighbors(pts, k)
    patches = pts[nbrs]  # (n, k, D)
    centered = patches - patches.mean(axis=1, keepdims=True)
    cov = np.einsum("nki,nkj->nij", centered, centered) / k
    eig = np.linalg.eigvalsh(cov)[:, ::-1]
    gaps = np.abs(np.diff(eig, axis=1))  # gap j-1 -> j for j = 2..D
    dims = (np.argmax(gaps, axis=1) + 2 - 1).astype(float)
    degenerate = np.ptp(patches, axis=1).max(axis=1) == 0
    dims[degenerate] = 0.0
    return DescriptorField(dims, "local-dimension")


def smooth_field(field: DescriptorField, cloud, k: int, iterations: int) -> DescriptorField:
    """Repeatedly replace each value by the mean over its k nearest neighbours
    (the point itself counted among the k)."""
    if iterations < 0:
        raise ValueError("iterations must be >= 0")
    cloud = _as_cloud(cloud)
    if len(field) != len(cloud):
        raise ValueError("field and cloud differ in length")
    vals = np.array(field.values)
    if iterations == 0:
        return DescriptorField(vals, field.kind)
    if k < 2:
        raise ValueError("k must be >= 2")
    _check_k(k, len(cloud))
    nbrs = nearest_neighbors(cloud.points, k, include_self=True)
    for _ in range(iterations):
        vals = vals[nbrs].mean(axis=1)
    return DescriptorField(vals, field.kind)


def density(cloud, h: float, *, bandwidth_squared: bool = False) -> DescriptorField:
    """Truncated Gaussian kernel density.

    f(x) = sum_{y != x, |x-y| <= h} exp(-|x-y|^2 / (2h)). The denominator is
    2h, not 2h^2; `bandwidth_squared` switches to the conventional 2h^2.
    """
    if not h > 0:
        raise ValueError("bandwidth h must be positive")
    cloud = _as_cloud(cloud)
    pts = cloud.points
    n = len(pts)
    f = np.zeros(n)
    pairs = cKDTree(pts).query_pairs(h * (1 + 1e-12), output_type="ndarray")
    if len(pairs):
        d2 = np.sum((pts[pairs[:, 0]] - pts[pairs[:, 1]]) ** 2, axis=1)
        keep = np.sqrt(d2) <= h
        pairs, d2 = pairs[keep], d2[keep]
        denom = 2.0 * h * h if bandwidth_squared else 2.0 * h
        w = np.exp(-d2 / denom)
        np.add.at(f, pairs[:, 0], w)
        np.add.at(f, pairs[:, 1], w)
    return DescriptorField(f, "density")


def pratt_fit(points: np.ndarray) -> tuple[np.ndarray, float]:
    """Algebraic least-squares hypersphere fit with Pratt's normalisation.

    Minimises sum (A|x|^2 + b.x + c)^2 subject to |b|^2 - 4Ac = 1. Returns
    (centre, radius); radius is inf when the best fit is a hyperplane.

    Follows the SVD formulation of the Pratt fit (Chernov, "Circular and
    linear regression", 2010) extended to R^D.
    """
    pts = np.asarray(points, dtype=float)
    n, D = pts.shape
    if n < D + 1:
        raise ValueError("underdetermined sphere fit")
    mean = pts.mean(axis=0)
    x = pts - mean
    scale = np.sqrt(np.mean(np.sum(x * x, axis=1)))
    if scale == 0:
        return mean, 0.0
    x = x / scale
    Z = np.column_stack([np.sum(x * x, axis=1), x, np.ones(n)])
    _, S, Vt = np.linalg.svd(Z, full_matrices=n < D + 2)
    if n < D + 2 or S[-1] < 1e-12 * S[0]:
        # exact fit: the residual has a null vector
        a = Vt[-1]
    else:
        Y = Vt.T @ np.diag(S) @ Vt
        Binv = np.zeros((D + 2, D + 2))
        Binv[0, -1] = Binv[-1, 0] = -0.5
        Binv[1:-1, 1:-1] = np.eye(D)
        w, E = np.linalg.eigh(Y @ Binv @ Y)
        pos = np.flatnonzero(w > 0)
        a = np.linalg.solve(Y, E[:, pos[np.argmin(w[pos])]])
    A, b, c = a[0], a[1:-1], a[-1]
    disc = float(b @ b - 4 * A * c)
    if A == 0 or disc <= 0:
        return mean, np.inf
    centre = -b / (2 * A)
    radius = np.sqrt(disc) / (2 * abs(A))
    return mean + scale * centre, float(scale * radius)


def curvature(cloud, k: int) -> DescriptorField:
    """Curvature 1/radius of a Pratt sphere fitted to each point's k-nearest-
    neighbour patch (the point itself included); 0 for numerically flat patches."""
    cloud = _as_cloud(cloud)
    pts = cloud.points
    n, D = pts.shape
    if k < D + 1:
        raise ValueError("underdetermined sphere fit")
    _check_k(k, n)
    nbrs = nearest_neighbors(pts, k, include_self=True)
    out = np.zeros(n)
    for i in range(n):
        patch = pts[nbrs[i]]
        _, radius = pratt_fit(patch)
        diameter = np.max(np.linalg.norm(patch - patch[0], axis=1)) * 2
        if not np.isfinite(radius) or radius > FLAT_CUTOFF * max(diameter, 1e-300) or radius == 0:
            out[i] = 0.0
        else:
            out[i] = 1.0 / radius
    return DescriptorField(out, "curvature")


def robust_spread(values: np.ndarray) -> tuple[float, float]:
    """(median, spread): scaled MAD, or scaled mean absolute deviation when the MAD vanishes."""
    med = float(np.median(values))
    dev = np.abs(values - med)
    spread = MAD_SCALE * float(np.median(dev))
    if spread == 0:
        spread = MEAN_AD_SCALE * float(np.mean(dev))
    return med, spread


def detect_outliers(field: DescriptorField | np.ndarray, direction: Direction = "two-sided", z: float = 3.0) -> np.ndarray:
    """Indices deviating from the median by more than z robust spreads.

    The spread is 1.4826 * MAD; a field whose MAD is zero but which is not
    constant falls back to 1.2533 * mean absolute deviation. A constant field
    has no outliers.
    """
    values = field.values if isinstance(field, DescriptorField) else np.asarray(field, dtype=float)
    if len(values) == 0:
        raise ValueError("empty field")
    if not z > 0:
        raise ValueError("z must be positive")
    med, spread = robust_spread(values)
    if spread == 0:
        return np.empty(0, dtype=np.intp)
    score = (values - med) / spread
    if direction == "high":
        mask = score > z
    elif direction == "low":
        mask = score < -z
    elif direction == "two-sided":
        mask = np.abs(score) > z
    else:
        raise ValueError(f"unknown direction {direction!r}")
    return np.flatnonzero(mask)

"""Deterministic fixtures: explicit complexes and seeded point-cloud samplers
for the wedge, whisker and pinched-torus examples."""
from __future__ import annotations

import itertools
from dataclasses import asdict, dataclass, field

import numpy as np

from .complex import FilteredComplex, PointCloud

RNG_ALGORITHM = "numpy.PCG64"
GENERATOR_VERSION = "1"

KINDS = (
    "circle-whisker",
    "wedge-circles",
    "wedge-spheres",
    "wedge-spheres-cloud",
    "wedge-circles-cloud",
    "pinched-torus-cloud",
    "torus-cloud",
    "sphere-cloud",
    "triangle-whisker-cloud",
)

# vertex labels of the circle-with-whisker complex
CIRCLE_WHISKER_LABELS = {"A": 0, "B": 1, "C": 2, "D": 3}
WEDGE_POINT = 0


def rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


def circle_whisker_complex() -> FilteredComplex:
    """Triangle boundary A-B-C plus the whisker A-D; vertices at 0, edges at 1."""
    A, B, C, D = 0, 1, 2, 3
    return FilteredComplex.from_simplices([(A, B), (B, C), (A, C), (A, D)])


def wedge_circles_complex() -> FilteredComplex:
    """Two 4-cycles sharing the vertex x = 0."""
    return FilteredComplex.from_simplices([(0, 1), (1, 2), (2, 3), (0, 3), (0, 4), (4, 5), (5, 6), (0, 6)])


def _octahedron(antipodes: list[tuple[int, int]]) -> list[tuple[int, int, int]]:
    return [tuple(sorted(t)) for t in itertools.product(*antipodes)]


def wedge_spheres_complex() -> FilteredComplex:
    """Two octahedral 2-spheres glued at vertex 0 (11 vertices)."""
    first = _octahedron([(0, 1), (2, 3), (4, 5)])
    second = _octahedron([(0, 6), (7, 8), (9, 10)])
    return FilteredComplex.from_simplices(first + second)


def _sphere(gen: np.random.Generator, n: int, dim: int) -> np.ndarray:
    v = gen.standard_normal((n, dim))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


def sample_sphere(n: int, radius: float = 1.0, seed: int = 0, dim: int = 3) -> PointCloud:
    """Uniform sample of the (dim-1)-sphere of the given radius, centred at 0."""
    return PointCloud(radius * _sphere(rng(seed), n, dim))


def sample_wedge_spheres(n_per_sphere: int, radius: float = 1.0, seed: int = 0) -> PointCloud:
    """Two spheres centred at (+-radius, 0, 0), tangent at the origin.

    Each sphere gets `n_per_sphere` area-uniform points; the tangency point is
    appended once, as the last point.
    """
    if n_per_sphere < 1:
        raise ValueError("need at least one point per sphere")
    gen = rng(seed)
    parts = []
    for sign in (-1.0, 1.0):
        centre = np.array([sign * radius, 0.0, 0.0])
        parts.append(centre + radius * _sphere(gen, n_per_sphere, 3))
    parts.append(np.zeros((1, 3)))
    return PointCloud(np.vstack(parts))


def sample_wedge_circles(n_per_circle: int, radius: float = 1.0, seed: int = 0, jitter: float = 0.0) -> PointCloud:
    """Two circles in the plane centred at (+-radius, 0), tangent at the origin.

    Points sit at equally spaced angles starting from the tangency point,
    which is shared and appears once (as point 0). `jitter` perturbs the
    other angles by up to that fraction of the angular step.
    """
    if n_per_circle < 3:
        raise ValueError("need at least three points per circle")
    gen = rng(seed)
    step = 2 * np.pi / n_per_circle
    out = [np.zeros((1, 2))]
    for sign in (-1.0, 1.0):
        centre = np.array([sign * radius, 0.0])
        start = 0.0 if sign < 0 else np.pi
        angles = start + step * np.arange(1, n_per_circle)
        if jitter:
            angles = angles + gen.uniform(-jitter, jitter, len(angles)) * step
        out.append(centre + radius * np.column_stack([np.cos(angles), np.sin(angles)]))
    return PointCloud(np.vstack(out))


def pinched_torus_point(theta, phi, R: float = 2.0, r: float = 1.0) -> np.ndarray:
    rho = r * np.sin(np.asarray(theta) / 2.0)
    w = R + rho * np.cos(phi)
    return np.stack([w * np.cos(theta), w * np.sin(theta), rho * np.sin(phi)], axis=-1)


def sample_pinched_torus(n: int, R: float = 2.0, r: float = 1.0, seed: int = 0, return_angles: bool = False):
    """Torus whose minor radius r*sin(theta/2) collapses to 0 at theta = 0.

    (theta, phi) are drawn uniformly from [0, 2pi)^2; the pinch is (R, 0, 0).
    """
    if not R > r > 0:
        raise ValueError("need R > r > 0")
    gen = rng(seed)
    theta = gen.uniform(0.0, 2 * np.pi, n)
    phi = gen.uniform(0.0, 2 * np.pi, n)
    cloud = PointCloud(pinched_torus_point(theta, phi, R, r))
    return (cloud, theta) if return_angles else cloud


def sample_torus(n: int, R: float = 2.0, r: float = 1.0, seed: int = 0) -> PointCloud:
    """Area-uniform sample of the ordinary torus (rejection on the minor angle)."""
    if not R > r > 0:
        raise ValueError("need R > r > 0")
    gen = rng(seed)
    theta = np.empty(0)
    phi = np.empty(0)
    while len(phi) < n:
        t = gen.uniform(0.0, 2 * np.pi, n)
        p = gen.uniform(0.0, 2 * np.pi, n)
        keep = gen.uniform(0.0, R + r, n) < R + r * np.cos(p)
        theta = np.concatenate([theta, t[keep]])
        phi = np.concatenate([phi, p[keep]])
    theta, phi = theta[:n], phi[:n]
    w = R + r * np.cos(phi)
    return PointCloud(np.column_stack([w * np.cos(theta), w * np.sin(theta), r * np.sin(phi)]))


def sample_triangle_whisker(n_triangle: int = 300, n_whisker: int = 60, seed: int = 0, length: float = 1.0) -> PointCloud:
    """Filled triangle in the plane z = 0 with a segment rising from its vertex
    at the origin along z: a 2-dimensional piece and a 1-dimensional piece
    joined at one point. Triangle points come first, then the whisker."""
    gen = rng(seed)
    u = gen.uniform(0.0, 1.0, (n_triangle, 2))
    flip = u.sum(axis=1) > 1
    u[flip] = 1 - u[flip]
    tri = np.column_stack([u[:, 0], u[:, 1], np.zeros(n_triangle)])
    t = np.sort(gen.uniform(0.0, length, n_whisker))
    whisker = np.column_stack([np.zeros(n_whisker), np.zeros(n_whisker), t])
    return PointCloud(np.vstack([tri, whisker]))


@dataclass(frozen=True)
class GeneratorSpec:
    """What to generate; identical spec and seed give identical output."""

    kind: str
    n: int = 400
    radii: tuple[float, ...] = ()
    seed: int = 0
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown generator kind {self.kind!r}; choose from {', '.join(KINDS)}")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")

    def header(self) -> str:
        radii = ",".join(repr(float(r)) for r in self.radii) or "default"
        return (
            f"generator=pih-{GENERATOR_VERSION} kind={self.kind} n={self.n} radii={radii} "
            f"seed={self.seed} rng={RNG_ALGORITHM}"
        )

    def as_dict(self) -> dict:
        return asdict(self)


def generate(spec: GeneratorSpec) -> PointCloud | FilteredComplex:
    k, n, r, s = spec.kind, spec.n, spec.radii, spec.seed
    if k == "circle-whisker":
        return circle_whisker_complex()
    if k == "wedge-circles":
        return wedge_circles_complex()
    if k == "wedge-spheres":
        return wedge_spheres_complex()
    if k == "wedge-spheres-cloud":
        return sample_wedge_spheres(n, *(r[:1] or (1.0,)), seed=s)
    if k == "wedge-circles-cloud":
        return sample_wedge_circles(n, *(r[:1] or (1.0,)), seed=s, **spec.extra)
    if k == "pinched-torus-cloud":
        R, rr = r if len(r) == 2 else (2.0, 1.0)
        return sample_pinched_torus(n, R, rr, seed=s)
    if k == "torus-cloud":
        R, rr = r if len(r) == 2 else (2.0, 1.0)
        return sample_torus(n, R, rr, seed=s)
    if k == "sphere-cloud":
        return sample_sphere(n, *(r[:1] or (1.0,)), seed=s)
    return sample_triangle_whisker(n, max(n // 5, 2), seed=s)

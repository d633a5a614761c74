import itertools
import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from pih.complex import FilteredComplex, all_faces  # noqa: E402


def random_complex(gen: np.random.Generator, n_vertices: int = 7, n_top: int = 6, top_dim: int = 3,
                   max_simplices: int = 60) -> FilteredComplex:
    """Face closure of a few random simplices with random monotone values."""
    while True:
        tops = []
        for _ in range(gen.integers(1, n_top + 1)):
            k = int(gen.integers(1, top_dim + 2))
            tops.append(tuple(sorted(gen.choice(n_vertices, size=min(k, n_vertices), replace=False).tolist())))
        closed = sorted({f for s in tops for f in all_faces(s)}, key=lambda s: (len(s), s))
        if len(closed) <= max_simplices:
            break
    raw = {s: float(gen.integers(0, 5)) for s in closed}
    value = {}
    for s in closed:
        value[s] = max([raw[s]] + [value[f] for f in itertools.combinations(s, len(s) - 1) if f])
    return FilteredComplex(closed, [value[s] for s in closed])


def random_strata(gen: np.random.Generator, K: FilteredComplex, depth: int) -> list[list[tuple]]:
    """Nested closed subcomplexes X_0 <= ... <= X_{depth-1} with dim X_i <= i."""
    strata, acc = [], set()
    for i in range(depth):
        pool = [s for s in K.simplices if len(s) - 1 <= i]
        pick = gen.random(len(pool)) < gen.uniform(0.0, 0.5)
        for s, keep in zip(pool, pick):
            if keep:
                acc.update(all_faces(s))
        strata.append(sorted(acc, key=lambda s: (len(s), s)))
    return strata


@pytest.fixture
def gen():
    return np.random.Generator(np.random.PCG64(12345))


def pytest_terminal_summary(terminalreporter):
    module = sys.modules.get("test_acceptance")
    lines = getattr(module, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)

"""Persistent intersection homology.

A simplex is proper for a perversity p and a stratification of depth d when

    dim(sigma ∩ X_{d-k}) <= dim(sigma) - k + p_k      for every k in 1..d,

with an empty intersection always allowed. Allowable p-chains are chains
supported on proper simplices whose boundary is supported on proper simplices
too; they form a sub chain complex whose persistence is computed here.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Literal, Sequence

import numpy as np

from .complex import FilteredComplex, Simplex, enumerate_faces_reverse_lex
from .homology import PersistenceDiagram, _diagrams_from_pairs, reduce_columns
from .stratify import Stratification

PerversityForm = Literal["general", "gm"]


@dataclass(frozen=True)
class Perversity:
    """Integer sequence bounding how far simplices may meet the singular strata.

    ``form="general"`` holds (p_1, ..., p_d) with -1 <= p_k <= k-1.
    ``form="gm"`` holds the Goresky-MacPherson (p'_2, ..., p'_d) with
    p'_2 = 0 and unit-or-zero steps; call :meth:`to_general` before use.
    """

    entries: tuple[int, ...]
    form: PerversityForm = "general"

    def __post_init__(self):
        entries = tuple(int(e) for e in self.entries)
        object.__setattr__(self, "entries", entries)
        if not entries:
            raise ValueError("perversity needs at least one entry")
        if self.form == "general":
            for k, p in enumerate(entries, start=1):
                if not -1 <= p <= k - 1:
                    raise ValueError(f"p_{k} = {p} outside [-1, {k - 1}]")
        elif self.form == "gm":
            if entries[0] != 0:
                raise ValueError("Goresky-MacPherson perversity must start with p'_2 = 0")
            for a, b in zip(entries, entries[1:]):
                if b - a not in (0, 1):
                    raise ValueError("Goresky-MacPherson perversity steps must be 0 or 1")
        else:
            raise ValueError(f"unknown perversity form {self.form!r}")

    @property
    def depth(self) -> int:
        """Depth d of the stratifications this perversity applies to."""
        return len(self.entries) + (1 if self.form == "gm" else 0)

    def to_general(self, p1: int = 0) -> "Perversity":
        """General form of a GM perversity, (p_1, p'_2, ..., p'_d)."""
        if self.form == "general":
            return self
        return Perversity((p1,) + self.entries, "general")

    def __call__(self, k: int) -> int:
        if self.form != "general":
            raise ValueError("convert a Goresky-MacPherson perversity with to_general() first")
        return self.entries[k - 1]

    def __le__(self, other: "Perversity") -> bool:
        return len(self.entries) == len(other.entries) and all(a <= b for a, b in zip(self.entries, other.entries))

    def __str__(self) -> str:
        body = ",".join(str(e) for e in self.entries)
        return f"gm:{body}" if self.form == "gm" else body

    @classmethod
    def parse(cls, text: str) -> "Perversity":
        """Parse "-1", "-1,0,1" (general) or "gm:0", "gm:0,1" (Goresky-MacPherson)."""
        text = text.strip()
        form: PerversityForm = "general"
        if text.lower().startswith("gm:"):
            form, text = "gm", text[3:]
        try:
            entries = tuple(int(t) for t in text.split(","))
        except ValueError:
            raise ValueError(f"cannot parse perversity {text!r}") from None
        return cls(entries, form)


def _check_inputs(strat: Stratification, pbar: Perversity):
    if pbar.form != "general":
        raise ValueError("convert a Goresky-MacPherson perversity with to_general() first")
    if len(pbar.entries) != strat.depth:
        raise ValueError(
            f"perversity has {len(pbar.entries)} entries but the stratification has depth {strat.depth}"
        )


def intersection_dimension(sigma: Simplex, stratum, cap: int | None = None) -> int | None:
    """Largest dimension of a face of `sigma` lying in `stratum`; None stands
    for the empty intersection. Faces above dimension `cap` are not probed."""
    return _intersection_dimension_capped(sigma, stratum, len(sigma) - 1 if cap is None else cap)


def _intersection_dimension_capped(sigma: Simplex, stratum, cap: int) -> int | None:
    for l in range(min(len(sigma) - 1, cap), -1, -1):
        for tau in enumerate_faces_reverse_lex(sigma, l):
            if tau in stratum:
                return l
    return None


def _intersection_dimension_scan(sigma: Simplex, stratum) -> int | None:
    found = None
    verts = set(sigma)
    for tau in stratum:
        if (found is None or len(tau) - 1 > found) and verts.issuperset(tau):
            found = len(tau) - 1
    return found


def is_proper(sigma: Sequence[int], strat: Stratification, pbar: Perversity) -> bool:
    _check_inputs(strat, pbar)
    return _proper_fast(tuple(sigma), strat, pbar.entries)


def _proper_fast(sigma: Simplex, strat: Stratification, entries: tuple[int, ...]) -> bool:
    d = strat.depth
    q = len(sigma) - 1
    for k in range(1, d + 1):
        X = strat[d - k]
        if not X:
            continue
        m = _intersection_dimension_capped(sigma, X, d - k)
        if m is not None and m > q - k + entries[k - 1]:
            return False
    return True


def _proper_naive(sigma: Simplex, strat: Stratification, entries: tuple[int, ...]) -> bool:
    d = strat.depth
    q = len(sigma) - 1
    for k in range(1, d + 1):
        m = _intersection_dimension_scan(sigma, strat[d - k])
        if m is not None and m > q - k + entries[k - 1]:
            return False
    return True


def _mask(proper, complex, strat, pbar, indices) -> np.ndarray:
    _check_inputs(strat, pbar)
    simplices = complex.simplices
    if indices is None:
        indices = range(len(simplices))
    return np.array([proper(simplices[i], strat, pbar.entries) for i in indices], dtype=bool)


def allowability_mask_fast(complex: FilteredComplex, strat: Stratification, pbar: Perversity, indices=None) -> np.ndarray:
    """Proper flag per simplex, in filtration order.

    For each k the faces of sigma of dimension l = min(dim sigma, d-k) are
    probed in reverse lexicographic order, then l-1, and so on; the first hit
    in X_{d-k} gives dim(sigma ∩ X_{d-k}). At most 2^(dim sigma + 1) hashed
    lookups per k.
    """
    return _mask(_proper_fast, complex, strat, pbar, indices)


def allowability_mask_naive(complex: FilteredComplex, strat: Stratification, pbar: Perversity, indices=None) -> np.ndarray:
    """Reference mask scanning every simplex of X_{d-k}; linear in |X_{d-k}|."""
    return _mask(_proper_naive, complex, strat, pbar, indices)


def allowable_basis(complex: FilteredComplex, proper: np.ndarray) -> dict[int, dict[int, frozenset[int]]]:
    """Filtration-compatible bases of the allowable chain groups.

    Proper p-simplices are taken in filtration order and the improper part of
    their boundary is column-reduced; every column that reduces to zero
    yields a basis chain (as a set of simplex indices) whose largest simplex
    is the column's own. Returns ``{p: {leading index: chain}}``.
    """
    simplices = complex.simplices
    index = complex.index
    by_dim: dict[int, dict[int, frozenset[int]]] = {}
    pivot: dict[int, tuple[set, set]] = {}
    for j, s in enumerate(simplices):
        if not proper[j]:
            continue
        p = len(s) - 1
        basis = by_dim.setdefault(p, {})
        if p == 0:
            basis[j] = frozenset((j,))
            continue
        col = {i for i in (index[s[:t] + s[t + 1:]] for t in range(len(s))) if not proper[i]}
        if not col:
            basis[j] = frozenset((j,))
            continue
        chain = {j}
        while col:
            low = max(col)
            hit = pivot.get(low)
            if hit is None:
                pivot[low] = (col, chain)
                break
            col ^= hit[0]
            chain ^= hit[1]
        else:
            basis[j] = frozenset(chain)
    return by_dim


def compute_intersection_persistence(
    complex: FilteredComplex,
    strat: Stratification,
    pbar: Perversity,
    max_dim: int | None = None,
    *,
    keep_zero: bool = False,
    mask: np.ndarray | None = None,
) -> list[PersistenceDiagram]:
    """Persistence diagrams of the allowable chain complex, dimensions 0..max_dim.

    Each allowable basis chain enters the filtration with its largest
    simplex; the boundary matrix over these chains is then reduced exactly as
    for ordinary persistence.
    """
    if max_dim is None:
        max_dim = max(complex.dimension, 0)
    if strat.complex is not complex:
        for i in range(strat.depth):
            for s in strat[i]:
                if s not in complex.index:
                    raise ValueError(f"stratification is not a subcomplex family of this complex: {s}")
    if mask is None:
        mask = allowability_mask_fast(complex, strat, pbar)
    proper = np.asarray(mask, dtype=bool)
    if proper.shape != (len(complex),):
        raise ValueError("allowability mask does not match the complex")

    basis = allowable_basis(complex, proper)
    basis = {p: b for p, b in basis.items() if p <= max_dim + 1}
    simplices, index = complex.simplices, complex.index
    chain_of = {j: c for b in basis.values() for j, c in b.items()}

    def column(j: int) -> set:
        out: set = set()
        for i in chain_of[j]:
            s = simplices[i]
            if len(s) > 1:
                out.symmetric_difference_update(index[s[:t] + s[t + 1:]] for t in range(len(s)))
        return out

    order = {p: sorted(b) for p, b in basis.items()}
    pairs = reduce_columns(order, column)
    return _diagrams_from_pairs(pairs, order, lambda i: len(simplices[i]) - 1, complex.values, max_dim, keep_zero)

"""Plain-text formats for clouds, complexes, descriptor fields, singular sets,
stratifications, persistence diagrams, barcodes and key-value summaries.

Every writer is paired with a reader, and floats are written so that reading
them back gives the identical value. Lines starting with '#' are comments;
the first comment line of a file written here names its format
(``# format=<name> ...``) so readers can detect it.
"""
from __future__ import annotations

import math
import sys
from contextlib import contextmanager
from typing import Iterable, Sequence

import numpy as np

from .complex import FilteredComplex, PointCloud, all_faces, simplex
from .homology import PersistenceDiagram, PersistencePair
from .stratify import DescriptorField, Stratification

FORMATS = ("cloud", "complex", "field", "singular", "stratification", "diagram", "barcode", "summary")


class FormatError(ValueError):
    """Malformed input file."""


def fmt_float(x: float) -> str:
    """Shortest round-tripping text for x; integral values without '.0'."""
    x = float(x)
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    if x.is_integer() and abs(x) < 1e16:
        return str(int(x))
    return repr(x)


def parse_float(token: str) -> float:
    try:
        return float(token)
    except ValueError:
        raise FormatError(f"not a number: {token!r}") from None


@contextmanager
def open_text(path, mode: str = "r"):
    """Open `path` for text I/O; "-" or None means stdin/stdout."""
    if path is None or str(path) == "-":
        yield sys.stdin if "r" in mode else sys.stdout
        return
    with open(path, mode, encoding="utf-8", newline="\n") as fh:
        yield fh


def _header(kind: str, extra: str = "") -> str:
    return f"# format={kind}" + (f" {extra}" if extra else "") + "\n"


def detect_format(text: str) -> str | None:
    """Format named in the first header line, or None."""
    for line in text.splitlines():
        line = line.strip()
        if not line:
            continue
        if line.startswith("#"):
            for token in line[1:].split():
                if token.startswith("format="):
                    return token.split("=", 1)[1]
            continue
        return None
    return None


def header_fields(text: str) -> dict[str, str]:
    """key=value tokens of the leading comment lines."""
    out: dict[str, str] = {}
    for line in text.splitlines():
        line = line.strip()
        if not line:
            continue
        if not line.startswith("#"):
            break
        for token in line[1:].split():
            if "=" in token:
                k, v = token.split("=", 1)
                out[k] = v
    return out


def _data_lines(text: str) -> Iterable[tuple[int, list[str]]]:
    for no, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if line:
            yield no, line.split()


# ---------------------------------------------------------------- clouds

def format_cloud(cloud: PointCloud, header: str = "") -> str:
    out = [_header("cloud", header)]
    for row in cloud.points:
        out.append(" ".join(fmt_float(x) for x in row) + "\n")
    return "".join(out)


def parse_cloud(text: str) -> PointCloud:
    rows = []
    width = None
    for no, tokens in _data_lines(text):
        if width is None:
            width = len(tokens)
        elif len(tokens) != width:
            raise FormatError(f"line {no}: expected {width} coordinates, got {len(tokens)}")
        rows.append([parse_float(t) for t in tokens])
    if not rows:
        raise FormatError("empty input")
    try:
        return PointCloud(np.array(rows, dtype=float))
    except ValueError as exc:
        raise FormatError(str(exc)) from None


# ---------------------------------------------------------------- complexes

def format_complex(complex: FilteredComplex, header: str = "") -> str:
    out = [_header("complex", header)]
    for s, v in zip(complex.simplices, complex.values):
        out.append(" ".join(map(str, s)) + " " + fmt_float(v) + "\n")
    return "".join(out)


def parse_complex(text: str) -> FilteredComplex:
    """One simplex per line, "v0 ... vk value"; faces must be listed too."""
    simplices, values = [], []
    for no, tokens in _data_lines(text):
        if len(tokens) < 2:
            raise FormatError(f"line {no}: need vertices followed by a value")
        try:
            simplices.append(simplex(int(t) for t in tokens[:-1]))
        except ValueError as exc:
            raise FormatError(f"line {no}: {exc}") from None
        values.append(parse_float(tokens[-1]))
    if not simplices:
        raise FormatError("empty input")
    try:
        return FilteredComplex(simplices, values)
    except ValueError as exc:
        raise FormatError(str(exc)) from None


# ---------------------------------------------------------------- descriptor fields and singular sets

def format_field(field: DescriptorField, header: str = "") -> str:
    out = [_header("field", f"kind={field.kind}" + (f" {header}" if header else ""))]
    out.extend(fmt_float(v) + "\n" for v in field.values)
    return "".join(out)


def parse_field(text: str) -> DescriptorField:
    kind = header_fields(text).get("kind", "density")
    vals = []
    for no, tokens in _data_lines(text):
        if len(tokens) != 1:
            raise FormatError(f"line {no}: expected one value")
        vals.append(parse_float(tokens[0]))
    try:
        return DescriptorField(np.array(vals), kind)
    except ValueError as exc:
        raise FormatError(str(exc)) from None


def format_singular(indices: Iterable[int], header: str = "") -> str:
    idx = sorted(int(i) for i in indices)
    return _header("singular", f"count={len(idx)}" + (f" {header}" if header else "")) + "".join(f"{i}\n" for i in idx)


def parse_singular(text: str) -> list[int]:
    out = []
    for no, tokens in _data_lines(text):
        for t in tokens:
            try:
                out.append(int(t))
            except ValueError:
                raise FormatError(f"line {no}: not a vertex id: {t!r}") from None
    return sorted(set(out))


# ---------------------------------------------------------------- stratifications

def format_strata(strata, depth: int | None = None) -> str:
    """Lines "i: s s ..." for i < depth; vertices as ids, higher simplices as
    dash-joined ids. Only maximal simplices are listed; readers close under faces."""
    strata = [set(map(tuple, X)) for X in strata]
    out = [_header("stratification", f"depth={len(strata) if depth is None else depth}")]
    for i, X in enumerate(strata):
        maximal = [s for s in X if not any(len(t) > len(s) and set(s) <= set(t) for t in X)]
        maximal.sort(key=lambda s: (len(s), s))
        out.append(f"{i}:" + "".join(" " + "-".join(map(str, s)) for s in maximal) + "\n")
    return "".join(out)


def format_stratification(strat: Stratification) -> str:
    return format_strata([strat[i] for i in range(strat.depth)])


def parse_stratification_spec(text: str, depth: int | None = None) -> list[list[tuple[int, ...]]]:
    """Strata X_0..X_{d-1} as face-closed simplex lists.

    Lines read "i: v0 v1 a-b ..."; each X_i also receives X_{i-1}, so listing
    singular vertices once on line 0 is enough. The depth comes from the
    header, else from `depth`, else from the largest line index plus one.
    """
    listed: dict[int, set] = {}
    for no, tokens in _data_lines(text):
        head = tokens[0]
        if not head.endswith(":"):
            raise FormatError(f"line {no}: expected 'i: ...'")
        try:
            i = int(head[:-1])
            items = [simplex(int(v) for v in t.split("-")) for t in tokens[1:]]
        except ValueError as exc:
            raise FormatError(f"line {no}: {exc}") from None
        if i < 0:
            raise FormatError(f"line {no}: negative stratum index")
        listed.setdefault(i, set()).update(items)
    hdr = header_fields(text).get("depth")
    if hdr is not None:
        depth = int(hdr)
    elif depth is None:
        depth = max(listed, default=0) + 1
    if any(i >= depth for i in listed):
        raise FormatError(f"stratum index beyond depth {depth}")
    strata, acc = [], set()
    for i in range(depth):
        for s in listed.get(i, ()):
            acc.update(all_faces(s))
        strata.append(sorted(acc, key=lambda s: (len(s), s)))
    return strata


# ---------------------------------------------------------------- diagrams and barcodes

def format_diagrams(diagrams: Sequence[PersistenceDiagram], header: str = "") -> str:
    """One block per dimension, "birth death" lines, blocks separated by two
    blank lines (a gnuplot index each)."""
    blocks = [_header("diagram", header).rstrip("\n")]
    for d in diagrams:
        lines = [f"# dimension {d.dimension}"]
        lines += [f"{fmt_float(p.birth)} {fmt_float(p.death)}" for p in d]
        blocks.append("\n".join(lines))
    return blocks[0] + "\n" + "\n\n\n".join(blocks[1:]) + "\n"


def _blocks(text: str) -> dict[int, list[tuple[int, list[str]]]]:
    out: dict[int, list] = {}
    current = None
    for no, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if line.startswith("#"):
            tokens = line[1:].split()
            if len(tokens) == 2 and tokens[0] == "dimension":
                try:
                    current = int(tokens[1])
                except ValueError:
                    raise FormatError(f"line {no}: bad dimension header") from None
                out.setdefault(current, [])
            continue
        if not line:
            continue
        if current is None:
            raise FormatError(f"line {no}: data before any '# dimension' header")
        out[current].append((no, line.split()))
    return out


def parse_diagrams(text: str) -> list[PersistenceDiagram]:
    blocks = _blocks(text)
    top = max(blocks, default=-1)
    diagrams = []
    for p in range(top + 1):
        pairs = []
        for no, tokens in blocks.get(p, []):
            if len(tokens) != 2:
                raise FormatError(f"line {no}: expected 'birth death'")
            try:
                pairs.append(PersistencePair(p, parse_float(tokens[0]), parse_float(tokens[1])))
            except FormatError:
                raise
            except ValueError as exc:
                raise FormatError(f"line {no}: {exc}") from None
        diagrams.append(PersistenceDiagram(p, pairs))
    return diagrams


def format_barcodes(diagrams: Sequence[PersistenceDiagram], header: str = "") -> str:
    """Per interval two lines "birth index" and "death index" then a blank
    line, so a line plot draws one horizontal bar per interval. Bars are
    indexed from 0 within each dimension."""
    out = [_header("barcode", header)]
    for d in diagrams:
        out.append(f"# dimension {d.dimension}\n")
        for j, p in enumerate(sorted(d.pairs, key=lambda q: (q.birth, q.death))):
            out.append(f"{fmt_float(p.birth)} {j}\n{fmt_float(p.death)} {j}\n\n")
    return "".join(out)


def parse_barcodes(text: str) -> list[PersistenceDiagram]:
    blocks = _blocks(text)
    diagrams = []
    for p in range(max(blocks, default=-1) + 1):
        rows = blocks.get(p, [])
        if len(rows) % 2:
            raise FormatError(f"dimension {p}: odd number of barcode lines")
        pairs = []
        for (n1, a), (n2, b) in zip(rows[::2], rows[1::2]):
            if len(a) != 2 or len(b) != 2 or a[1] != b[1]:
                raise FormatError(f"lines {n1}-{n2}: malformed bar")
            try:
                pairs.append(PersistencePair(p, parse_float(a[0]), parse_float(b[0])))
            except FormatError:
                raise
            except ValueError as exc:
                raise FormatError(f"lines {n1}-{n2}: {exc}") from None
        diagrams.append(PersistenceDiagram(p, pairs))
    return diagrams


# ---------------------------------------------------------------- summaries

def format_summary(items: Iterable[tuple[str, object]]) -> str:
    out = []
    for k, v in items:
        if isinstance(v, (float, np.floating)):
            v = fmt_float(v)
        out.append(f"{k} = {v}\n")
    return "".join(out)


def parse_summary(text: str) -> dict[str, str]:
    out = {}
    for no, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if " = " not in line:
            raise FormatError(f"line {no}: expected 'key = value'")
        k, v = line.split(" = ", 1)
        out[k.strip()] = v.strip()
    return out


# ---------------------------------------------------------------- files

def read_text(path) -> str:
    with open_text(path) as fh:
        return fh.read()


def write_text(path, text: str):
    with open_text(path, "w") as fh:
        fh.write(text)


def read_input(text: str, hint: str | None = None) -> PointCloud | FilteredComplex:
    """A cloud or a complex, chosen by the header, else by `hint`, else cloud."""
    kind = detect_format(text) or hint or "cloud"
    if kind == "complex":
        return parse_complex(text)
    if kind == "cloud":
        return parse_cloud(text)
    raise FormatError(f"expected a cloud or complex file, got format={kind}")


def write_diagrams(diagrams: Sequence[PersistenceDiagram], destination, header: str = ""):
    write_text(destination, format_diagrams(diagrams, header))


def write_barcodes(diagrams: Sequence[PersistenceDiagram], destination, header: str = ""):
    write_text(destination, format_barcodes(diagrams, header))


def read_diagrams(source) -> list[PersistenceDiagram]:
    text = read_text(source)
    kind = detect_format(text)
    return parse_barcodes(text) if kind == "barcode" else parse_diagrams(text)

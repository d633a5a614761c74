"""Command line front end.

Subcommands compose through files (``-`` is stdin/stdout):

    pih generate wedge-spheres-cloud --n 400 --seed 2 -o cloud.txt
    pih rips cloud.txt --epsilon 0.45 --max-dim 3 -o complex.txt
    pih stratify cloud.txt --strat density --h 1.0 -o strata.txt
    pih ph complex.txt --diagram ph.txt
    pih ih cloud.txt --epsilon 0.45 --max-dim 3 --strat file:strata.txt --perversity gm:0
    pih compare ph.txt ih.txt
    pih pipeline --generate wedge-spheres-cloud --n 400 --seed 2 --epsilon 0.45 \\
        --max-dim 3 --strat density --h 1.0 --perversity gm:0 --out run/

Rips filtration values are the largest pairwise distance among a simplex's
vertices (not half of it). Exit status: 0 success, 1 usage error,
2 computation error, 3 I/O error.
"""
from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from . import io as pio
from .complex import FilteredComplex, PointCloud, barycentric_subdivision, build_rips
from .datasets import KINDS, GeneratorSpec, generate
from .homology import betti_numbers, compute_persistence, total_persistence, wasserstein_distance
from .intersection import Perversity, compute_intersection_persistence
from .stratify import (
    DescriptorField,
    Stratification,
    build_stratification,
    curvature,
    density,
    detect_outliers,
    local_dimension,
    smooth_field,
    subdivide_stratification,
)

log = logging.getLogger("pih")

EXIT_OK, EXIT_USAGE, EXIT_COMPUTE, EXIT_IO = 0, 1, 2, 3
DESCRIPTOR_STRATEGIES = ("density", "dimension", "curvature")
DEFAULT_DIRECTION = {"density": "high", "dimension": "low"}


class UsageError(Exception):
    pass


class StageError(Exception):
    def __init__(self, stage: str, exc: Exception, code: int):
        super().__init__(f"{stage}: {exc}")
        self.stage, self.code = stage, code


class Parser(argparse.ArgumentParser):
    """ArgumentParser whose usage errors exit with status 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


class stage:
    """Tag exceptions raised inside the block with a stage name and exit code."""

    def __init__(self, name: str):
        self.name = name

    def __enter__(self):
        log.debug("stage %s", self.name)

    def __exit__(self, kind, exc, tb):
        if exc is None or isinstance(exc, (StageError, UsageError)):
            return False
        if isinstance(exc, (OSError, pio.FormatError)):
            raise StageError(self.name, exc, EXIT_IO) from exc
        if isinstance(exc, (ValueError, IndexError, KeyError, ArithmeticError, np.linalg.LinAlgError)):
            raise StageError(self.name, exc, EXIT_COMPUTE) from exc
        return False


@dataclass
class Outputs:
    """Files written so far, removed again if a later stage fails."""

    written: list[Path] = field(default_factory=list)
    made_dir: Path | None = None

    def write(self, path, text: str):
        if path is None:
            return
        if str(path) == "-":
            sys.stdout.write(text)
            return
        path = Path(path)
        with stage(f"write {path}"):
            pio.write_text(path, text)
        self.written.append(path)

    def rollback(self):
        for p in self.written:
            try:
                p.unlink()
            except OSError:
                pass
        if self.made_dir is not None:
            try:
                self.made_dir.rmdir()
            except OSError:
                pass


# ---------------------------------------------------------------- argument groups

def _perversity(text: str) -> Perversity:
    try:
        return Perversity.parse(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _radii(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(t) for t in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad radii {text!r}") from None


def _add_input(p: argparse.ArgumentParser, positional: bool = True):
    if positional:
        p.add_argument("input", nargs="?", default="-", help="cloud or complex file; '-' reads stdin (default)")
    p.add_argument("--format", choices=("cloud", "complex"), help="input format when the file has no header")
    p.add_argument("--epsilon", type=float, help="Rips scale for cloud input (max pairwise distance)")
    p.add_argument("--max-dim", type=int, default=2, help="largest Rips simplex dimension (default 2)")


def _add_generator(p: argparse.ArgumentParser, positional: bool):
    if positional:
        p.add_argument("kind", choices=KINDS)
    else:
        p.add_argument("--generate", dest="kind", choices=KINDS, help="generate the input instead of reading it")
    p.add_argument("--n", type=int, default=400, help="points (per sphere or circle for the wedges)")
    p.add_argument("--radii", type=_radii, default=(), help="comma-separated radii, e.g. '2,1' for tori")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--jitter", type=float, default=0.0, help="angular jitter of wedge-circles-cloud")


def _add_strat(p: argparse.ArgumentParser):
    g = p.add_argument_group("stratification")
    g.add_argument(
        "--strat",
        default="none",
        help="none | explicit:A,3,... | file:PATH | density | dimension | curvature (default none)",
    )
    g.add_argument("--depth", type=int, help="stratification depth (default: that of the perversity)")
    g.add_argument("--k", type=int, default=20, help="neighbourhood size for dimension/curvature (default 20)")
    g.add_argument("--smooth-k", type=int, default=10, help="neighbours averaged per smoothing pass")
    g.add_argument("--iterations", type=int, default=0, help="smoothing passes of the descriptor field")
    g.add_argument("--h", type=float, default=0.3, help="density bandwidth (default 0.3)")
    g.add_argument("--bandwidth-squared", action="store_true", help="density kernel exp(-d^2/(2h^2)) instead of exp(-d^2/(2h))")
    g.add_argument("--z", type=float, default=3.0, help="outlier threshold in robust standard deviations")
    g.add_argument("--direction", choices=("low", "high", "two-sided"),
                   help="outlier side; defaults: density high, dimension low; required for curvature")


def _add_homology(p: argparse.ArgumentParser, with_ih: bool):
    g = p.add_argument_group("homology")
    g.add_argument("--hom-dim", type=int, help="largest homology dimension reported (default: complex dimension)")
    g.add_argument("--subdivide", action="store_true", help="use the first barycentric subdivision")
    g.add_argument("--keep-zero", action="store_true", help="keep zero-persistence pairs")
    g.add_argument("-q", type=float, default=2.0, help="Wasserstein exponent (default 2)")
    if with_ih:
        g.add_argument("--perversity", type=_perversity, default=Perversity.parse("gm:0"),
                       help="'-1', '-1,0,1' (general) or 'gm:0' (Goresky-MacPherson); default gm:0")
        g.add_argument("--gm-p1", type=int, default=0, help="p_1 prepended when converting a gm: perversity (default 0)")


def build_parser() -> argparse.ArgumentParser:
    parser = Parser(prog="pih", description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("--version", action="version", version=f"pih {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=Parser)

    p = sub.add_parser("generate", help="write a synthetic cloud or fixture complex")
    _add_generator(p, positional=True)
    p.add_argument("-o", "--output", default="-")

    p = sub.add_parser("rips", help="build a Vietoris-Rips complex from a cloud")
    _add_input(p)
    p.add_argument("-o", "--output", default="-")

    p = sub.add_parser("stratify", help="descriptor field, singular vertices and stratification file")
    _add_input(p)
    _add_strat(p)
    p.add_argument("--field", help="write the descriptor field here")
    p.add_argument("--singular", help="write the singular vertex ids here")
    p.add_argument("-o", "--output", default="-", help="stratification file")

    for name, with_ih in (("ph", False), ("ih", True)):
        p = sub.add_parser(name, help="persistent homology" if not with_ih else "persistent intersection homology")
        _add_input(p)
        if with_ih:
            _add_strat(p)
        _add_homology(p, with_ih)
        p.add_argument("--diagram", help="write diagrams here")
        p.add_argument("--barcode", help="write barcodes here")
        p.add_argument("-o", "--summary", default="-", help="summary destination (default stdout)")

    p = sub.add_parser("compare", help="compare two diagram files")
    p.add_argument("a")
    p.add_argument("b")
    p.add_argument("-q", type=float, default=2.0, help="Wasserstein exponent (default 2)")
    p.add_argument("-o", "--output", default="-")

    p = sub.add_parser("pipeline", help="generate or read, stratify, PH, IH and compare in one run")
    p.add_argument("--input", help="cloud or complex file")
    _add_generator(p, positional=False)
    _add_input(p, positional=False)
    _add_strat(p)
    _add_homology(p, with_ih=True)
    p.add_argument("--out", required=True, help="output directory")
    return parser


# ---------------------------------------------------------------- stages

def load_input(args) -> PointCloud | FilteredComplex:
    with stage("read input"):
        return pio.read_input(pio.read_text(args.input), args.format)


def generated(args) -> tuple[GeneratorSpec, PointCloud | FilteredComplex]:
    extra = {"jitter": args.jitter} if args.kind == "wedge-circles-cloud" and args.jitter else {}
    with stage("generate"):
        spec = GeneratorSpec(args.kind, args.n, args.radii, args.seed, extra)
        return spec, generate(spec)


def to_complex(data, args) -> FilteredComplex:
    if isinstance(data, FilteredComplex):
        return data
    if args.epsilon is None:
        raise UsageError("--epsilon is required for point-cloud input")
    args.from_cloud = True
    with stage("rips"):
        return build_rips(data, args.epsilon, args.max_dim)


def _explicit_vertices(text: str) -> list[int]:
    out = []
    for token in filter(None, (t.strip() for t in text.split(","))):
        if len(token) == 1 and token.isalpha():
            out.append(ord(token.upper()) - ord("A"))
        else:
            try:
                out.append(int(token))
            except ValueError:
                raise UsageError(f"bad vertex {token!r} in explicit stratification") from None
    return out


@dataclass
class Singular:
    vertices: list[int] | None = None
    strata: list | None = None
    field: DescriptorField | None = None


def singular_set(data, args) -> Singular:
    """Singular vertices (or explicit strata) chosen by --strat."""
    name, _, arg = args.strat.partition(":")
    if name == "none":
        return Singular(vertices=[])
    if name == "explicit":
        return Singular(vertices=_explicit_vertices(arg))
    if name == "file":
        with stage("read stratification"):
            return Singular(strata=pio.parse_stratification_spec(pio.read_text(arg), args.depth))
    if name not in DESCRIPTOR_STRATEGIES:
        raise UsageError(f"unknown stratification strategy {args.strat!r}")
    if not isinstance(data, PointCloud):
        raise UsageError(f"--strat {name} needs point-cloud input")
    direction = args.direction or DEFAULT_DIRECTION.get(name)
    if direction is None:
        raise UsageError("--direction is required with --strat curvature")
    with stage(f"descriptor {name}"):
        if name == "density":
            f = density(data, args.h, bandwidth_squared=args.bandwidth_squared)
        elif name == "dimension":
            f = local_dimension(data, args.k)
        else:
            f = curvature(data, args.k)
        if args.iterations:
            f = smooth_field(f, data, args.smooth_k, args.iterations)
        found = detect_outliers(f, direction, args.z)
    log.info("%s: %d singular points", name, len(found))
    return Singular(vertices=[int(i) for i in found], field=f)


def stratify_complex(K: FilteredComplex, sing: Singular, depth: int) -> Stratification:
    with stage("stratify"):
        if sing.strata is not None:
            if len(sing.strata) != depth:
                raise ValueError(f"stratification file has depth {len(sing.strata)}, perversity needs {depth}")
            return Stratification(K, sing.strata)
        return build_stratification(K, sing.vertices, depth)


def general_perversity(args) -> Perversity:
    pbar = args.perversity
    return pbar.to_general(args.gm_p1) if pbar.form == "gm" else pbar


def _hom_dim(K: FilteredComplex, args) -> int:
    """--hom-dim, else one below the Rips dimension (the top dimension has no
    cofaces to kill its cycles), else the dimension of an explicit complex."""
    if args.hom_dim is not None:
        return args.hom_dim
    if getattr(args, "from_cloud", False):
        return max(args.max_dim - 1, 0)
    return max(K.dimension, 0)


def summary_items(prefix: str, diagrams) -> list[tuple[str, object]]:
    items: list[tuple[str, object]] = []
    for p, b in enumerate(betti_numbers(diagrams)):
        items.append((f"{prefix}.betti{p}", b))
    for d in diagrams:
        items.append((f"{prefix}.finite_pairs{d.dimension}", len(d.finite)))
    for d in diagrams:
        items.append((f"{prefix}.total_persistence{d.dimension}", total_persistence(d, 1.0)))
    return items


def comparison_items(a, b, q: float, prefix: str = "") -> list[tuple[str, object]]:
    items: list[tuple[str, object]] = []
    for p in range(max(len(a), len(b))):
        da = a[p] if p < len(a) else None
        db = b[p] if p < len(b) else None
        w = wasserstein_distance(da.points() if da else np.empty((0, 2)), db.points() if db else np.empty((0, 2)),
                                 q, finite_only=True)
        ea = len(da.essential) if da else 0
        eb = len(db.essential) if db else 0
        ta = total_persistence(da, 1.0) if da else 0.0
        tb = total_persistence(db, 1.0) if db else 0.0
        items += [
            (f"{prefix}wasserstein{p}", w),
            (f"{prefix}essential_diff{p}", ea - eb),
            (f"{prefix}total_persistence_diff{p}", ta - tb),
        ]
    return items


# ---------------------------------------------------------------- commands

def cmd_generate(args, out: Outputs):
    spec, data = generated(args)
    if isinstance(data, PointCloud):
        out.write(args.output, pio.format_cloud(data, spec.header()))
    else:
        out.write(args.output, pio.format_complex(data, spec.header()))


def cmd_rips(args, out: Outputs):
    data = load_input(args)
    K = to_complex(data, args)
    out.write(args.output, pio.format_complex(K, f"epsilon={args.epsilon} max_dim={args.max_dim}"))


def cmd_stratify(args, out: Outputs):
    data = load_input(args)
    sing = singular_set(data, args)
    depth = args.depth or 2
    if sing.strata is not None:
        verts = sorted({v for X in sing.strata for s in X for v in s})
        text = pio.format_strata(sing.strata)
    else:
        verts = sing.vertices
        text = pio.format_strata([[(v,) for v in verts]], depth)
    if sing.field is not None and args.field:
        out.write(args.field, pio.format_field(sing.field))
    if args.singular:
        out.write(args.singular, pio.format_singular(verts))
    out.write(args.output, text)


def _maybe_subdivide(K, strat, args):
    if not args.subdivide:
        return K, strat
    with stage("subdivide"):
        sd = barycentric_subdivision(K)
        return sd, (subdivide_stratification(strat, sd) if strat is not None else None)


def cmd_ph(args, out: Outputs):
    K = to_complex(load_input(args), args)
    K, _ = _maybe_subdivide(K, None, args)
    with stage("ph"):
        ph = compute_persistence(K, _hom_dim(K, args), keep_zero=args.keep_zero)
    if args.diagram:
        out.write(args.diagram, pio.format_diagrams(ph, "source=ph"))
    if args.barcode:
        out.write(args.barcode, pio.format_barcodes(ph, "source=ph"))
    out.write(args.summary, pio.format_summary([("simplices", len(K))] + summary_items("ph", ph)))


def _ih(data, K, args):
    pbar = general_perversity(args)
    sing = singular_set(data, args)
    strat = stratify_complex(K, sing, args.depth or pbar.depth)
    if strat.depth != pbar.depth:
        raise StageError("stratify", ValueError(f"stratification depth {strat.depth} != perversity depth {pbar.depth}"), EXIT_USAGE)
    K, strat = _maybe_subdivide(K, strat, args)
    with stage("ih"):
        ih = compute_intersection_persistence(K, strat, pbar, _hom_dim(K, args), keep_zero=args.keep_zero)
    return K, pbar, sing, strat, ih


def cmd_ih(args, out: Outputs):
    data = load_input(args)
    K, pbar, sing, strat, ih = _ih(data, to_complex(data, args), args)
    if args.diagram:
        out.write(args.diagram, pio.format_diagrams(ih, "source=ih"))
    if args.barcode:
        out.write(args.barcode, pio.format_barcodes(ih, "source=ih"))
    items = [("simplices", len(K)), ("perversity", str(args.perversity)), ("singular", len(strat.singular_vertices))]
    out.write(args.summary, pio.format_summary(items + summary_items("ih", ih)))


def cmd_compare(args, out: Outputs):
    with stage("read diagrams"):
        a = pio.read_diagrams(args.a)
        b = pio.read_diagrams(args.b)
    with stage("compare"):
        items = comparison_items(a, b, args.q)
    out.write(args.output, pio.format_summary(items))


def cmd_pipeline(args, out: Outputs):
    if (args.input is None) == (args.kind is None):
        raise UsageError("give exactly one of --input and --generate")
    if args.kind is not None:
        spec, data = generated(args)
        header = spec.header()
    else:
        data = load_input(argparse.Namespace(input=args.input, format=args.format))
        header = f"source={Path(args.input).name}"
    K0 = to_complex(data, args)
    with stage("ph"):
        K_ph, _ = _maybe_subdivide(K0, None, args)
        ph = compute_persistence(K_ph, _hom_dim(K_ph, args), keep_zero=args.keep_zero)
    K, pbar, sing, strat, ih = _ih(data, K0, args)

    outdir = Path(args.out)
    with stage("output directory"):
        if not outdir.exists():
            outdir.mkdir(parents=True)
            out.made_dir = outdir
    if isinstance(data, PointCloud):
        out.write(outdir / "input.txt", pio.format_cloud(data, header))
    else:
        out.write(outdir / "input.txt", pio.format_complex(data, header))
    if sing.field is not None:
        out.write(outdir / "field.txt", pio.format_field(sing.field))
    out.write(outdir / "singular.txt", pio.format_singular(strat.singular_vertices if sing.vertices is None else sing.vertices))
    out.write(outdir / "stratification.txt", pio.format_stratification(strat))
    out.write(outdir / "ph_diagram.txt", pio.format_diagrams(ph, "source=ph"))
    out.write(outdir / "ph_barcode.txt", pio.format_barcodes(ph, "source=ph"))
    out.write(outdir / "ih_diagram.txt", pio.format_diagrams(ih, "source=ih"))
    out.write(outdir / "ih_barcode.txt", pio.format_barcodes(ih, "source=ih"))
    with stage("compare"):
        items = [
            ("simplices", len(K)),
            ("epsilon", "none" if args.epsilon is None else args.epsilon),
            ("perversity", str(args.perversity)),
            ("singular", len(strat.singular_vertices)),
        ]
        items += summary_items("ph", ph) + summary_items("ih", ih) + comparison_items(ph, ih, args.q)
    out.write(outdir / "summary.txt", pio.format_summary(items))


COMMANDS = {
    "generate": cmd_generate,
    "rips": cmd_rips,
    "stratify": cmd_stratify,
    "ph": cmd_ph,
    "ih": cmd_ih,
    "compare": cmd_compare,
    "pipeline": cmd_pipeline,
}


def run(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(name)s: %(message)s")
    out = Outputs()
    try:
        COMMANDS[args.command](args, out)
    except UsageError as exc:
        out.rollback()
        print(f"pih {args.command}: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except StageError as exc:
        out.rollback()
        print(f"pih {args.command}: {exc}", file=sys.stderr)
        return exc.code
    return EXIT_OK


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()

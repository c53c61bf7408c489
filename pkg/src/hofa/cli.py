"""``hofa`` command line: one binary, many subcommands, JSON in and out.

Exit codes: 0 success, 2 malformed input, 3 budget exceeded,
4 precondition violated (witness written next to the output), 5 internal
assertion.  Output files never contain timings, so identical inputs and
seeds give byte-identical files.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .errors import BudgetError, PreconditionError, SchemaError
from .freiman import (
    PartialMap,
    affine_extension,
    drc_filter,
    drc_kept_rate,
    is_freiman_hom,
    is_multi_hom,
    multiaffine_inverse_search,
    respected_census,
)
from .generators import TABLE_KINDS, corruption, random_multiaffine, random_poly, random_restriction, random_table, variety
from .harmonic import FunctionTable, Spectrum, box_norm, conv, dir_conv, fourier, inverse_fourier, mixed_conv, uk_norm
from .multiaffine import (
    MultiAffineMap,
    analytic_rank,
    bias,
    check_quasirandom,
    partition_rank_search,
)
from .oracles import SUITES, compare_goldens, run_suite
from .polynomial import (
    GroupFunctionH,
    MonomialPoly,
    approx_poly_fraction,
    best_poly_agreement,
    best_poly_correlation,
    degree_test,
    phase_correlation,
    polarize,
)
from .records import ResultRecord, config_hash, dump, write_csv
from .space import Coset, ProductSpace


# --------------------------------------------------------------------------- io helpers


def _load(path: str):
    try:
        text = sys.stdin.read() if path == "-" else Path(path).read_text()
        return json.loads(text)
    except FileNotFoundError as exc:
        raise SchemaError(f"no such file: {path}") from exc
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: invalid JSON ({exc})") from exc


def _space(arg: str | None) -> ProductSpace:
    if arg is None:
        raise SchemaError("--space is required")
    obj = json.loads(arg) if arg.lstrip().startswith("{") else _load(arg)
    return ProductSpace.from_json(obj)


def _ints(text: str | None) -> tuple:
    if not text:
        return ()
    try:
        return tuple(int(t) for t in text.replace(" ", "").split(",") if t)
    except ValueError as exc:
        raise SchemaError(f"expected comma-separated integers, got {text!r}") from exc


def _words(text: str) -> list:
    return [_ints(w) for w in text.split(";") if w.strip()]


_FILE_ARGS = ("inp", "in2", "poly", "cosets", "coset")


def _config(args, **extra) -> dict:
    """Flags plus a content hash of every input file, so renaming a file keeps the hash."""
    skip = {"func", "out", "timing", "t0"} | set(_FILE_ARGS)
    cfg = {k: v for k, v in vars(args).items() if k not in skip and v is not None}
    for key in _FILE_ARGS:
        path = getattr(args, key, None)
        if path:
            cfg[f"{key}_hash"] = config_hash(_load(path))
    cfg.update(extra)
    return cfg


def _emit(args, record: ResultRecord):
    record.wall_time = time.perf_counter() - args.t0
    text = dump(record.to_json(timing=args.timing), args.out)
    if args.out is None or args.out == "-":
        sys.stdout.write(text)


def _emit_obj(args, obj):
    text = dump(obj, args.out)
    if args.out is None or args.out == "-":
        sys.stdout.write(text)


def _coset_arg(obj) -> Coset | None:
    if obj is None:
        return None
    return Coset(int(obj["p"]), tuple(obj["u0"]), tuple(tuple(b) for b in obj.get("basis", [])))


# --------------------------------------------------------------------------- harmonic


def cmd_fourier(args):
    obj = _load(args.inp)
    if args.inverse:
        _emit_obj(args, inverse_fourier(Spectrum.from_json(obj)).to_json())
    else:
        _emit_obj(args, fourier(FunctionTable.from_json(obj)).to_json())


def cmd_conv(args):
    f = FunctionTable.from_json(_load(args.inp))
    if args.dirs:
        out = mixed_conv(f, _ints(args.dirs))
    elif args.dir is not None:
        out = dir_conv(f, args.dir)
    else:
        g = FunctionTable.from_json(_load(args.in2)) if args.in2 else f
        out = conv(f, g)
    _emit_obj(args, out.to_json())


def cmd_uknorm(args):
    f = FunctionTable.from_json(_load(args.inp))
    _emit_obj(args, {"uk": uk_norm(f, args.k)})


def cmd_boxnorm(args):
    f = FunctionTable.from_json(_load(args.inp))
    _emit_obj(args, {"box": box_norm(f)})


# --------------------------------------------------------------------------- multiaffine


def _scalar_map(args) -> MultiAffineMap:
    phi = MultiAffineMap.from_json(_load(args.inp))
    if phi.h != 1:
        raise SchemaError("expected a scalar map (h = 1)")
    return phi


def cmd_bias(args):
    b = bias(_scalar_map(args))
    imag = 0.0 if abs(b.imag) <= args.tolerance else b.imag
    _emit(args, ResultRecord("bias", _config(args), {"bias": b.real, "bias_imag": imag}))


def cmd_arank(args):
    r = analytic_rank(_scalar_map(args))
    _emit(args, ResultRecord("arank", _config(args), {"analytic_rank": r, "infinite": r == float("inf")}))


def cmd_prank(args):
    phi = _scalar_map(args)
    k = phi.space.k
    top = frozenset(range(1, k + 1))
    if any(I != top for I in phi.nonzero_parts()):
        raise SchemaError("prank expects a multilinear form (only the [k] part may be nonzero)")
    res = partition_rank_search(phi.form(top), args.max_rank)
    if res is None:
        metrics = {"rank": None, "exceeds": True, "max_rank": args.max_rank}
        _emit(args, ResultRecord("prank", _config(args), metrics))
        return
    metrics = {"rank": res.rank, "exceeds": False, "verified": res.verified}
    _emit(args, ResultRecord("prank", _config(args), metrics, res.to_json()["terms"]))


def cmd_qr(args):
    obj = _load(args.inp)
    phi = MultiAffineMap.from_json(obj)
    target = _ints(args.target) if args.target else tuple(obj.get("target", (0,) * phi.h))
    cos = _load(args.cosets) if args.cosets else {}
    rep = check_quasirandom(phi, target, _coset_arg(cos.get("c1")), _coset_arg(cos.get("c2")))
    _emit(args, ResultRecord("qr", _config(args), rep.to_json()))


# --------------------------------------------------------------------------- freiman


def _pmap(args) -> PartialMap:
    return PartialMap.from_json(_load(args.inp))


def cmd_freiman_verify(args):
    phi = _pmap(args)
    if args.whole:
        res = is_freiman_hom(phi, args.order, args.mode, args.samples, args.seed or 0)
    else:
        res = is_multi_hom(phi, args.order)
    _emit(args, ResultRecord("freiman-verify", _config(args), {"ok": res.ok}, res.to_json()["witness"]))


def cmd_freiman_extend(args):
    phi = _pmap(args)
    coset = _coset_arg(_load(args.coset)) if args.coset else None
    ext = affine_extension(phi, coset, strict=not args.no_uniqueness)
    _emit(args, ResultRecord("freiman-extend", _config(args), {"ok": True}, ext.to_json()))


def cmd_freiman_census(args):
    phi = _pmap(args)
    rep = respected_census(phi, _words(args.words), args.lengths, args.per_lengths, _seed(args))
    out = rep.to_json()
    metrics = {"equal_fraction": out["equal_fraction"], "tuples_valid": out["tuples_valid"], "tuples_drawn": out["tuples_drawn"]}
    _emit(args, ResultRecord("freiman-census", _config(args), metrics, out["per_lengths"]))


def cmd_freiman_drc(args):
    phi = _pmap(args)
    seed = _seed(args)
    if args.trials > 1:
        _emit(args, ResultRecord("freiman-drc", _config(args), drc_kept_rate(phi, args.t, args.trials, seed)))
        return
    kept = drc_filter(phi, args.t, seed)
    _emit(args, ResultRecord("freiman-drc", _config(args), {"kept": kept.size, "domain": phi.size}, kept.to_json()))


def cmd_freiman_inverse(args):
    phi = _pmap(args)
    m, count = multiaffine_inverse_search(phi)
    _emit(args, ResultRecord("freiman-inverse-search", _config(args), {"agreement": count, "domain": phi.size}, m.to_json()))


# --------------------------------------------------------------------------- polynomial


def _group_function(obj) -> GroupFunctionH:
    if "terms" in obj:
        return MonomialPoly.from_json(obj).as_function()
    return GroupFunctionH.from_json(obj)


def cmd_poly_degree(args):
    f = _group_function(_load(args.inp))
    res = degree_test(f, args.d, args.mode, args.samples, args.seed or 0)
    _emit(args, ResultRecord("poly-degree-test", _config(args), {"ok": res.ok}, res.to_json()["witness"]))


def cmd_poly_fraction(args):
    f = _group_function(_load(args.inp))
    frac = approx_poly_fraction(f, args.d, args.mode, args.samples, args.seed or 0)
    _emit(args, ResultRecord("poly-approx-fraction", _config(args), {"fraction": frac}))


def cmd_poly_polarize(args):
    g = MonomialPoly.from_json(_load(args.inp))
    sigma = polarize(g, args.k)
    _emit(args, ResultRecord("poly-polarize", _config(args), {"k": args.k}, {"sigma": sigma.coeffs.tolist()}))


def cmd_poly_correlate(args):
    f = FunctionTable.from_json(_load(args.inp))
    if args.best is not None:
        g, val = best_poly_correlation(f, args.best)
        _emit(args, ResultRecord("poly-correlate", _config(args), {"correlation": val}, g.to_json()))
        return
    if not args.poly:
        raise SchemaError("correlate needs --poly FILE or --best D")
    g = MonomialPoly.from_json(_load(args.poly))
    _emit(args, ResultRecord("poly-correlate", _config(args), {"correlation": phase_correlation(f, g)}))


def cmd_poly_fit(args):
    f = _group_function(_load(args.inp))
    polys, count = best_poly_agreement(f, args.d)
    _emit(args, ResultRecord("poly-fit", _config(args), {"agreement": count, "size": f.space.total_size},
                             [g.to_json() for g in polys]))


# --------------------------------------------------------------------------- generators and oracles


def _seed(args) -> int:
    if args.seed is None:
        raise SchemaError("--seed is required for stochastic commands")
    return args.seed


def cmd_gen(args):
    seed = _seed(args)
    kind = args.kind
    if kind == "table":
        obj = random_table(_space(args.space), seed, args.table_kind).to_json()
    elif kind == "multiaffine":
        obj = random_multiaffine(_space(args.space), args.h, seed).to_json()
    elif kind == "restriction":
        _, pm = random_restriction(_space(args.space), args.h, args.density, seed)
        obj = pm.to_json()
    elif kind == "corruption":
        if not args.inp:
            raise SchemaError("gen corruption needs --in PARTIAL_MAP")
        obj = corruption(PartialMap.from_json(_load(args.inp)), args.fraction, seed).to_json()
    elif kind == "variety":
        obj = variety(_space(args.space), args.codim, seed).to_json()
    elif kind == "poly":
        space = _space(args.space)
        if space.k != 1:
            raise SchemaError("polynomials live on a single group")
        obj = random_poly(space.p, space.dims[0], args.d, seed, args.homogeneous).to_json()
    else:
        raise SchemaError(f"unknown generator {kind!r}")
    _emit_obj(args, obj)


def cmd_oracle(args):
    out_dir = Path(args.out_dir)
    names = sorted(SUITES) if args.suite == "all" else [args.suite]
    seed = args.seed or 0
    failures = 0
    for name in names:
        golden = run_suite(name, seed)
        path = out_dir / f"{name}.json"
        if args.check:
            if not path.exists():
                raise SchemaError(f"missing golden file {path}")
            hit = compare_goldens(json.loads(path.read_text()), json.loads(dump(golden, None)), args.tolerance)
            if hit:
                failures += 1
                print(f"{name}: first divergence at {hit[0]}: expected {hit[1]!r}, got {hit[2]!r}", file=sys.stderr)
            else:
                print(f"{name}: ok")
        else:
            dump(golden, path)
            print(f"{name}: {len(golden['entries'])} entries -> {path}")
    if failures:
        raise AssertionError(f"{failures} golden suite(s) diverged")


def cmd_csv(args):
    records = [_load(p) for p in args.records]
    cols = write_csv(records, args.out)
    print(",".join(cols))


# --------------------------------------------------------------------------- parser


def _common(p: argparse.ArgumentParser, inp=True):
    if inp:
        p.add_argument("--in", dest="inp", metavar="FILE", required=True, help="input JSON file ('-' for stdin)")
    p.add_argument("--out", metavar="FILE", help="output file (default stdout)")
    p.add_argument("--seed", type=int, metavar="U64")
    p.add_argument("--mode", choices=("exhaustive", "sample"), default="exhaustive")
    p.add_argument("--samples", type=int, default=100_000, metavar="N")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hofa", allow_abbrev=False, description="Exact higher-order Fourier analysis over F_p^n.")
    parser.add_argument("--version", action="version", version=f"hofa {__version__}")
    parser.add_argument("--budget", type=int, metavar="N", help="enumeration budget (overrides HOFA_BUDGET)")
    parser.add_argument("--tolerance", type=float, default=1e-9, metavar="FLOAT")
    parser.add_argument("--timing", action="store_true", help="include wall time in result records")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fourier", help="Fourier transform of a table (or inverse of a spectrum)")
    _common(p)
    p.add_argument("--inverse", action="store_true")
    p.set_defaults(func=cmd_fourier)

    p = sub.add_parser("conv", help="convolution, directional or mixed convolution")
    _common(p)
    p.add_argument("--in2", metavar="FILE", help="second table (default: the first)")
    p.add_argument("--dir", type=int, help="convolve in this direction only")
    p.add_argument("--dirs", help="mixed convolution, comma-separated, first applied first")
    p.set_defaults(func=cmd_conv)

    p = sub.add_parser("uknorm", help="Gowers U^k norm")
    _common(p)
    p.add_argument("--k", type=int, required=True)
    p.set_defaults(func=cmd_uknorm)

    p = sub.add_parser("boxnorm", help="box norm over the product structure")
    _common(p)
    p.set_defaults(func=cmd_boxnorm)

    for name, fn, what in (("bias", cmd_bias, "bias"), ("arank", cmd_arank, "analytic rank")):
        p = sub.add_parser(name, help=f"{what} of a scalar multiaffine map")
        _common(p)
        p.set_defaults(func=fn)

    p = sub.add_parser("prank", help="exhaustive partition rank of a multilinear form")
    _common(p)
    p.add_argument("--max-rank", type=int, default=4)
    p.set_defaults(func=cmd_prank)

    p = sub.add_parser("qr", help="quasirandomness of a biaffine variety")
    _common(p)
    p.add_argument("--target", help="comma-separated target (default: the file's target or 0)")
    p.add_argument("--cosets", metavar="FILE", help='{"c1": {"p","u0","basis"}, "c2": ...}')
    p.set_defaults(func=cmd_qr)

    fr = sub.add_parser("freiman", help="Freiman homomorphism tools").add_subparsers(dest="action", required=True)
    p = fr.add_parser("verify")
    _common(p)
    p.add_argument("--order", type=int, default=2)
    p.add_argument("--whole", action="store_true", help="test the whole group instead of every axis-parallel slice")
    p.set_defaults(func=cmd_freiman_verify)
    p = fr.add_parser("extend")
    _common(p)
    p.add_argument("--coset", metavar="FILE")
    p.add_argument("--no-uniqueness", action="store_true")
    p.set_defaults(func=cmd_freiman_extend)
    p = fr.add_parser("census")
    _common(p)
    p.add_argument("--words", required=True, help="direction words, e.g. '2,1;2,1'")
    p.add_argument("--lengths", type=int, default=16)
    p.add_argument("--per-lengths", type=int, default=64)
    p.set_defaults(func=cmd_freiman_census)
    p = fr.add_parser("drc")
    _common(p)
    p.add_argument("--t", type=int, required=True)
    p.add_argument("--trials", type=int, default=1)
    p.set_defaults(func=cmd_freiman_drc)
    p = fr.add_parser("inverse-search")
    _common(p)
    p.set_defaults(func=cmd_freiman_inverse)

    po = sub.add_parser("poly", help="polynomial tools").add_subparsers(dest="action", required=True)
    p = po.add_parser("degree-test")
    _common(p)
    p.add_argument("--d", type=int, required=True)
    p.set_defaults(func=cmd_poly_degree)
    p = po.add_parser("approx-fraction")
    _common(p)
    p.add_argument("--d", type=int, required=True)
    p.set_defaults(func=cmd_poly_fraction)
    p = po.add_parser("polarize")
    _common(p)
    p.add_argument("--k", type=int, required=True)
    p.set_defaults(func=cmd_poly_polarize)
    p = po.add_parser("correlate")
    _common(p)
    p.add_argument("--poly", metavar="FILE")
    p.add_argument("--best", type=int, metavar="D", help="search all polynomials of degree <= D")
    p.set_defaults(func=cmd_poly_correlate)
    p = po.add_parser("fit")
    _common(p)
    p.add_argument("--d", type=int, required=True)
    p.set_defaults(func=cmd_poly_fit)

    p = sub.add_parser("gen", help="seeded instance generators")
    p.add_argument("kind", choices=("table", "multiaffine", "restriction", "corruption", "variety", "poly"))
    p.add_argument("--space", metavar="FILE", help="space JSON file or inline JSON")
    p.add_argument("--in", dest="inp", metavar="FILE")
    p.add_argument("--out", metavar="FILE")
    p.add_argument("--seed", type=int, metavar="U64")
    p.add_argument("--table-kind", choices=TABLE_KINDS, default="disc")
    p.add_argument("--h", type=int, default=1)
    p.add_argument("--density", type=float, default=0.5)
    p.add_argument("--fraction", type=float, default=0.1)
    p.add_argument("--codim", type=int, default=1)
    p.add_argument("--d", type=int, default=2)
    p.add_argument("--homogeneous", action="store_true")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("oracle", help="write or check golden oracle files")
    p.add_argument("--suite", default="all", choices=["all"] + sorted(SUITES))
    p.add_argument("--out-dir", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--check", action="store_true", help="regenerate and compare instead of writing")
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("csv", help="export result records as CSV")
    p.add_argument("records", nargs="+")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_csv)
    return parser


EXIT_OK, EXIT_SCHEMA, EXIT_BUDGET, EXIT_PRECONDITION, EXIT_INTERNAL = 0, 2, 3, 4, 5


def _witness_path(args) -> str | None:
    out = getattr(args, "out", None)
    return f"{out}.witness.json" if out and out != "-" else None


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    args.t0 = time.perf_counter()
    saved = os.environ.get("HOFA_BUDGET")
    if args.budget is not None:
        os.environ["HOFA_BUDGET"] = str(args.budget)
    try:
        return _dispatch(args)
    finally:
        if saved is None:
            os.environ.pop("HOFA_BUDGET", None)
        else:
            os.environ["HOFA_BUDGET"] = saved


def _dispatch(args) -> int:
    try:
        args.func(args)
    except SchemaError as exc:
        print(f"hofa: schema error: {exc}", file=sys.stderr)
        return EXIT_SCHEMA
    except BudgetError as exc:
        print(f"hofa: budget exceeded: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except PreconditionError as exc:
        print(f"hofa: precondition failed: {exc}", file=sys.stderr)
        path = _witness_path(args)
        payload = {"error": str(exc), "witness": exc.witness}
        if path:
            dump(payload, path)
        else:
            sys.stderr.write(dump(payload, None))
        return EXIT_PRECONDITION
    except AssertionError as exc:
        print(f"hofa: internal assertion failed: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())

"""Command-line front door.

Subcommands: ``embed``, ``extract``, ``analyze``, ``bench``.  Every
stochastic choice flows from explicit --seed/--key arguments, so reruns
with identical inputs write bit-identical stego files, key files, and
reports.

Exit codes: 0 success, 1 I/O or parse failure, 2 capacity exceeded,
3 corrupt stream or wrong keys, 64 usage error.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys

import numpy as np

from . import bench as bench_mod
from .exceptions import CapacityError, CorruptStreamError, PgmFormatError, StegolabError, TruncatedStreamError
from .imageio import read_pgm, write_pgm
from .ica_watermark import (
    dump_basis,
    ica_block_watermark_embed,
    ica_block_watermark_extract,
    load_basis,
)
from .lsb_stego import (
    KeySet,
    improved_embed,
    improved_extract,
    lsb_embed,
    lsb_extract,
    lsbplus_embed,
    lsbplus_extract,
)
from .payload import frame_message, parse_frame
from .prng import parse_key
from .sparse_coding import dump_dictionary, load_dictionary
from .sparse_stego import (
    SparseStegoParams,
    dump_code,
    load_code,
    sparse_embed,
    sparse_extract,
)
from .steganalysis import ber, chi_square_attack, cooccurrence, hist_change, histogram, psnr

EXIT_OK = 0
EXIT_IO = 1
EXIT_CAPACITY = 2
EXIT_CORRUPT = 3
EXIT_USAGE = 64

METHODS = ("lsb", "lsbplus", "lsbplus-improved", "sparse", "ica-qim")


class UsageError(Exception):
    pass


def _jsonable(obj):
    if isinstance(obj, float):
        if math.isinf(obj):
            return "+inf" if obj > 0 else "-inf"
        return obj
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return _jsonable(float(obj))
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def emit_report(report: dict, path: str | None) -> None:
    text = json.dumps(_jsonable(report), indent=2, sort_keys=True) + "\n"
    if path:
        with open(path, "w") as f:
            f.write(text)
    else:
        sys.stdout.write(text)


def _read_image(path: str):
    with open(path, "rb") as f:
        return read_pgm(f.read())


def _need_keys(args, names: list[str]) -> dict:
    out = {}
    for name in names:
        value = getattr(args, name, None)
        if value is None:
            raise UsageError("--%s is required for method %s" % (name, args.method))
        out[name] = parse_key(value)
    return out


def _sparse_params(args) -> SparseStegoParams:
    return SparseStegoParams(
        block_side=args.block_side or 8,
        atom_count=args.atoms or 129,
        sparsity=args.sparsity or 31,
        ksvd_iters=args.ksvd_iters,
        seed=args.seed,
    )


def cmd_embed(args) -> int:
    cover = _read_image(args.cover)
    with open(args.message, "rb") as f:
        msg = f.read()
    report: dict = {"method": args.method}

    if args.method == "lsb":
        keys = _need_keys(args, ["key3"])
        bits = frame_message(msg)
        stego = lsb_embed(cover, bits, keys["key3"])
        report.update({"capacity_bits": int(cover.size), "used_bits": int(bits.size),
                       "psnr_db": psnr(cover, stego), "hist_change": hist_change(cover)})
    elif args.method == "lsbplus":
        keys = _need_keys(args, ["key1", "key3"])
        stego, rep = lsbplus_embed(cover, msg, keys["key3"], keys["key1"])
        report.update(rep)
    elif args.method == "lsbplus-improved":
        keys = _need_keys(args, ["key1", "key2", "key3"])
        stego, rep = improved_embed(cover, msg, KeySet(**keys))
        report.update(rep)
    elif args.method == "sparse":
        if not args.key:
            raise UsageError("--key PATH (dictionary output) is required for sparse embed")
        p = _sparse_params(args)
        res = sparse_embed(cover, msg, p)
        stego = res.stego
        report.update(res.report)
        with open(args.key, "wb") as f:
            f.write(dump_dictionary(res.key))
        if args.oracle_code:
            with open(args.oracle_code, "wb") as f:
                f.write(dump_code(res.code))
    elif args.method == "ica-qim":
        if not args.key:
            raise UsageError("--key PATH (basis output) is required for ica-qim embed")
        bits = frame_message(msg)
        stego, basis = ica_block_watermark_embed(
            cover, bits, delta=args.delta, block_side=args.block_side or 16, seed=args.seed)
        with open(args.key, "wb") as f:
            f.write(dump_basis(basis))
        report.update({"capacity_bits": int((cover.shape[0] // basis.block_side)
                                            * (cover.shape[1] // basis.block_side)),
                       "used_bits": int(bits.size), "delta": basis.delta,
                       "psnr_db": psnr(cover, stego)})
    else:
        raise UsageError("unknown method %r" % args.method)

    with open(args.out, "wb") as f:
        f.write(write_pgm(stego))
    emit_report(report, args.report)
    return EXIT_OK


def cmd_extract(args) -> int:
    stego = _read_image(args.stego)
    report: dict = {"method": args.method}

    if args.method == "lsb":
        keys = _need_keys(args, ["key3"])
        header = lsb_extract(stego, keys["key3"], 32)
        nbits = int.from_bytes(np.packbits(header).tobytes(), "big")
        if nbits % 8 or nbits > stego.size - 32:
            raise CorruptStreamError("implausible length header %d" % nbits)
        msg = parse_frame(lsb_extract(stego, keys["key3"], 32 + nbits))
    elif args.method == "lsbplus":
        keys = _need_keys(args, ["key1", "key3"])
        msg = lsbplus_extract(stego, keys["key3"], keys["key1"])
    elif args.method == "lsbplus-improved":
        keys = _need_keys(args, ["key1", "key2", "key3"])
        msg = improved_extract(stego, KeySet(**keys))
    elif args.method == "sparse":
        if not args.key:
            raise UsageError("--key PATH (dictionary) is required for sparse extract")
        with open(args.key, "rb") as f:
            dictionary = load_dictionary(f.read())
        oracle = None
        if args.oracle_code:
            with open(args.oracle_code, "rb") as f:
                oracle = load_code(f.read())
        p = _sparse_params(args)
        msg, diag = sparse_extract(stego, dictionary, p, oracle_code=oracle)
        report.update(diag)
    elif args.method == "ica-qim":
        if not args.key:
            raise UsageError("--key PATH (basis) is required for ica-qim extract")
        with open(args.key, "rb") as f:
            basis = load_basis(f.read())
        bits = ica_block_watermark_extract(stego, basis)
        msg = parse_frame(bits)
    else:
        raise UsageError("unknown method %r" % args.method)

    with open(args.out, "wb") as f:
        f.write(msg)
    report["message_bytes"] = len(msg)
    if args.expected_message:
        with open(args.expected_message, "rb") as f:
            want = f.read()
        if len(want) == len(msg):
            report["ber"] = ber(np.unpackbits(np.frombuffer(want, dtype=np.uint8)),
                                np.unpackbits(np.frombuffer(msg, dtype=np.uint8)))
        else:
            report["ber"] = 1.0
            report["length_mismatch"] = True
    emit_report(report, args.report)
    return EXIT_OK


def cmd_analyze(args) -> int:
    img = _read_image(args.image)
    h = histogram(img)
    chi2, dof, p = chi_square_attack(img)
    report = {
        "image": args.image,
        "width": int(img.shape[1]),
        "height": int(img.shape[0]),
        "histogram_nonzero_bins": int(np.count_nonzero(h)),
        "hist_change": hist_change(img),
        "chi_square": {"chi2": chi2, "dof": dof, "p_value": p},
    }
    if args.reference:
        ref = _read_image(args.reference)
        report["psnr_db_vs_reference"] = psnr(ref, img)
        report["histogram_identical_to_reference"] = bool(
            np.array_equal(h, histogram(ref)))
    if args.cooccurrence:
        try:
            dx, dy = (int(t) for t in args.cooccurrence.split(","))
        except ValueError:
            raise UsageError("--cooccurrence expects DX,DY") from None
        mat = cooccurrence(img, dx, dy)
        report["cooccurrence_sum"] = int(mat.sum())
        if args.cooccurrence_out:
            np.savetxt(args.cooccurrence_out, mat, fmt="%d", delimiter=",")
    emit_report(report, args.report)
    return EXIT_OK


BENCH_SUITES = ("sparse", "sparse-oracle", "sparse-noise", "lsb-props",
                "lsb-compare", "chi2", "fastica", "woa", "qim")


def cmd_bench(args) -> int:
    results: dict = {"seed": args.seed}
    suites = BENCH_SUITES if args.suite == "all" else (args.suite,)
    for suite in suites:
        if suite == "sparse":
            results[suite] = bench_mod.bench_sparse_fullscale(seed=args.seed)
        elif suite == "sparse-oracle":
            results[suite] = bench_mod.bench_sparse_oracle_roundtrips(
                trials=args.trials or 100, master_seed=args.seed + 31)
        elif suite == "sparse-noise":
            results[suite] = bench_mod.bench_sparse_noise(master_seed=args.seed + 61)
        elif suite == "lsb-props":
            results[suite] = bench_mod.bench_lsb_property_trials(
                trials=args.trials or 500, master_seed=args.seed + 91)
        elif suite == "lsb-compare":
            results[suite] = bench_mod.bench_lsb_compare(master_seed=args.seed + 17)
        elif suite == "chi2":
            results[suite] = bench_mod.bench_chi_square(master_seed=args.seed + 23)
        elif suite == "fastica":
            results[suite] = bench_mod.bench_fastica(
                seeds=args.trials or 20, master_seed=args.seed + 37)
        elif suite == "woa":
            res = bench_mod.bench_woa(trials=args.trials or 100, master_seed=args.seed + 47)
            if args.out_dir:
                os.makedirs(args.out_dir, exist_ok=True)
                with open(os.path.join(args.out_dir, "woa_scatter.csv"), "w") as f:
                    f.write(bench_mod.woa_scatter_csv(res["rows"]))
            res = {k: v for k, v in res.items() if k != "rows"}
            results[suite] = res
        elif suite == "qim":
            results[suite] = bench_mod.bench_qim(master_seed=args.seed + 53)
        else:
            raise UsageError("unknown bench suite %r" % suite)
    if args.out_dir:
        os.makedirs(args.out_dir, exist_ok=True)
        with open(os.path.join(args.out_dir, "results.json"), "w") as f:
            f.write(json.dumps(_jsonable(results), indent=2, sort_keys=True) + "\n")
    emit_report(results, args.report)
    failed = [k for k, v in results.items()
              if isinstance(v, dict) and not all(
                  bool(val) for key, val in v.items() if key.startswith("pass"))]
    sys.stderr.write("bench: %s\n" % ("all suites passed" if not failed
                                      else "FAILED: %s" % ", ".join(failed)))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="stegolab",
                                 description="steganography and watermark-security workbench")
    sub = ap.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--method", choices=METHODS, required=True)
        p.add_argument("--key1", help="16 hex digits (message encryption)")
        p.add_argument("--key2", help="16 hex digits (lock priorities)")
        p.add_argument("--key3", help="16 hex digits (traversal order)")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--key", help="key artifact path (sparse dictionary / ica basis)")
        p.add_argument("--oracle-code", dest="oracle_code",
                       help="sparse validation: modified-code file")
        p.add_argument("--delta", type=float, default=None,
                       help="ica-qim quantization step (default: auto)")
        p.add_argument("--block-side", dest="block_side", type=int, default=None)
        p.add_argument("--atoms", type=int, default=None)
        p.add_argument("--sparsity", type=int, default=None)
        p.add_argument("--ksvd-iters", dest="ksvd_iters", type=int, default=10)
        p.add_argument("--report", help="write the JSON report here instead of stdout")

    pe = sub.add_parser("embed", help="hide a message file in a cover PGM")
    pe.add_argument("--cover", required=True)
    pe.add_argument("--message", required=True)
    pe.add_argument("--out", required=True, help="stego PGM path")
    add_common(pe)
    pe.set_defaults(func=cmd_embed)

    px = sub.add_parser("extract", help="recover a message from a stego PGM")
    px.add_argument("--stego", required=True)
    px.add_argument("--out", required=True, help="recovered message path")
    px.add_argument("--expected-message", dest="expected_message",
                    help="reference message file; adds a BER field to the report")
    add_common(px)
    px.set_defaults(func=cmd_extract)

    pa = sub.add_parser("analyze", help="histogram statistics and chi-square test")
    pa.add_argument("image")
    pa.add_argument("--reference", help="reference PGM for PSNR / histogram comparison")
    pa.add_argument("--cooccurrence", help="DX,DY offset; adds co-occurrence stats")
    pa.add_argument("--cooccurrence-out", dest="cooccurrence_out",
                    help="dump the 256x256 co-occurrence counts as CSV")
    pa.add_argument("--report")
    pa.set_defaults(func=cmd_analyze)

    pb = sub.add_parser("bench", help="run experiment suites")
    pb.add_argument("suite", choices=BENCH_SUITES + ("all",))
    pb.add_argument("--seed", type=int, default=0)
    pb.add_argument("--trials", type=int, default=None)
    pb.add_argument("--out-dir", dest="out_dir", help="directory for CSV/JSON artifacts")
    pb.add_argument("--report")
    pb.set_defaults(func=cmd_bench)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as e:
        return EXIT_USAGE if e.code not in (0, None) else 0
    try:
        return args.func(args)
    except UsageError as e:
        sys.stderr.write("usage error: %s\n" % e)
        return EXIT_USAGE
    except CapacityError as e:
        emit_report({"error": "capacity_exceeded", "capacity_bits": e.capacity_bits,
                     "detail": str(e)}, getattr(args, "report", None))
        return EXIT_CAPACITY
    except (CorruptStreamError, TruncatedStreamError) as e:
        sys.stderr.write("extraction failed: %s\n" % e)
        return EXIT_CORRUPT
    except (PgmFormatError, OSError, ValueError, StegolabError) as e:
        sys.stderr.write("error: %s\n" % e)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())

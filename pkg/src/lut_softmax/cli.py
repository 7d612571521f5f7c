"""Command-line frontend: table generation, kernel execution, sweeps,
histograms, op counts, the stacked attention probe, and LUT inspection.

Exit codes: 0 success, 1 usage error, 2 runtime error. Every run is
seeded (flag > LUT_SOFTMAX_SEED env var > built-in default) so identical
invocations produce identical artifacts.
"""

from __future__ import annotations

import argparse
import json
import os
import struct
import sys

import numpy as np

from .attention import AttentionConfig, softmax_op_count, stacked_error_probe
from .engines import KernelConfig, Method, run_method
from .errors import EmptyInput, InvalidParams, LutSoftmaxError, MalformedHeader, MissingLut
from .harness import (
    DEFAULT_ALPHA_ENTRIES,
    DEFAULT_SEED,
    CorpusSpec,
    gen_corpus,
    histogram_to_csv,
    make_kernel_config,
    sum_exp_histogram,
    sweep,
    sweep_to_csv,
    sweep_to_json,
)
from .luts import WIDE_ALPHA_CASES, LutKind, rexp_tables, twodlut_tables
from .lutio import deserialize_luts, luts_to_json, serialize_luts
from .quantization import PRECISION_NAMES, PrecisionSpec, quantize_dequantize

METHOD_NAMES = [m.value for m in Method]


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


def _corpus_args(p: _Parser):
    p.add_argument("--dist", action="append", metavar="SPEC",
                   help="corpus distribution (repeatable): uniform:a,b | "
                        "gaussian:mu,sigma | attention_like:d_k")
    p.add_argument("--n-vectors", type=int)
    p.add_argument("--min-len", type=int)
    p.add_argument("--max-len", type=int)
    p.add_argument("--seed", type=int)


def build_parser() -> tuple[_Parser, dict]:
    parser = _Parser(prog="lut-softmax", description=__doc__)
    parser.add_argument("--config", metavar="FILE",
                        help="flat key=value file mirroring flag names; flags win")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND", parser_class=_Parser)
    parsers = {}

    p = parsers["lutgen"] = sub.add_parser("lutgen", help="build and write a LUT pair")
    p.add_argument("--method", choices=["rexp", "2dlut"])
    p.add_argument("--precision", choices=PRECISION_NAMES)
    p.add_argument("--alpha-entries", type=int, help="rexp: total alpha table length")
    p.add_argument("--case", type=int, choices=sorted(WIDE_ALPHA_CASES),
                   help="rexp: wide alpha preset (256/320/512 entries)")
    p.add_argument("--exp-entries", type=int, help="2dlut: exp table length")
    p.add_argument("--max-sum", type=float, help="2dlut: denominator coverage")
    p.add_argument("--scale-ex", type=float, help="2dlut: numerator bucket width")
    p.add_argument("--scale-sum", type=float, help="2dlut: denominator bucket width")
    p.add_argument("--dequant-scale", type=float)
    p.add_argument("--out", metavar="FILE")
    p.add_argument("--format", choices=["bin", "json"])

    p = parsers["softmax"] = sub.add_parser("softmax", help="run a kernel over logit vectors")
    p.add_argument("--method", choices=METHOD_NAMES)
    p.add_argument("--precision", choices=PRECISION_NAMES)
    p.add_argument("--in", dest="infile", metavar="FILE",
                   help="logits: CSV (one vector per line) or f32 binary")
    p.add_argument("--in-format", choices=["csv", "f32"])
    p.add_argument("--luts", metavar="FILE", help="table pair file (default: presets)")
    p.add_argument("--alpha-entries", type=int)
    p.add_argument("--input-scale", type=float,
                   help="snap inputs to a 1/scale grid before normalization")
    p.add_argument("--dequant-scale", type=float)
    p.add_argument("--out", metavar="FILE")
    p.add_argument("--format", choices=["csv", "json"])

    p = parsers["sweep"] = sub.add_parser("sweep", help="method x precision error report")
    p.add_argument("--methods", help="comma-separated method list")
    p.add_argument("--precisions", help="comma-separated precision list")
    _corpus_args(p)
    p.add_argument("--alpha-entries", type=int)
    p.add_argument("--threads", type=int)
    p.add_argument("--out", metavar="FILE")
    p.add_argument("--format", choices=["csv", "json"])

    p = parsers["hist"] = sub.add_parser("hist", help="sum-of-exponentials histogram")
    _corpus_args(p)
    p.add_argument("--bins", type=int)
    p.add_argument("--range", metavar="LO,HI")
    p.add_argument("--out", metavar="FILE")
    p.add_argument("--format", choices=["csv", "json"])

    p = parsers["attn"] = sub.add_parser("attn", help="stacked attention error probe")
    p.add_argument("--method", choices=METHOD_NAMES)
    p.add_argument("--precision", choices=PRECISION_NAMES)
    p.add_argument("--alpha-entries", type=int)
    p.add_argument("--layers", type=int)
    p.add_argument("--heads", type=int)
    p.add_argument("--seq", type=int)
    p.add_argument("--hidden", type=int)
    p.add_argument("--dk", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--out", metavar="FILE")
    p.add_argument("--format", choices=["csv", "json"])

    p = parsers["opcount"] = sub.add_parser("opcount", help="softmax invocations per sample")
    p.add_argument("--layers", type=int)
    p.add_argument("--heads", type=int)
    p.add_argument("--seq", type=int)

    p = parsers["inspect"] = sub.add_parser("inspect", help="dump a LUT file as JSON")
    p.add_argument("--in", dest="infile", metavar="FILE")

    return parser, parsers


def load_config_file(path: str) -> dict:
    values = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            key, sep, value = line.partition("=")
            if not sep:
                raise InvalidParams(f"{path}:{lineno}: expected 'key = value'")
            values[key.strip().replace("-", "_")] = value.strip()
    return values


def _merge_config(args, subparser: _Parser, cfgmap: dict):
    """Fill unset options from the config file, coercing through each
    option's argparse type. Explicit flags always win."""
    for action in subparser._actions:
        if action.dest in ("help", "command") or action.dest not in cfgmap:
            continue
        if getattr(args, action.dest, None) is not None:
            continue
        raw = cfgmap[action.dest]
        if action.dest == "dist":  # the only repeatable flag
            setattr(args, "dist", [v.strip() for v in raw.split(";")])
            continue
        try:
            setattr(args, action.dest, action.type(raw) if action.type else raw)
        except ValueError:
            raise _UsageError(f"config value {raw!r} invalid for --{action.dest}") from None


def _pick(value, default):
    return default if value is None else value


def _resolve_seed(seed):
    if seed is not None:
        return seed
    env = os.environ.get("LUT_SOFTMAX_SEED")
    return int(env) if env else DEFAULT_SEED


def _write_text(text: str, out: str | None):
    if out is None:
        sys.stdout.write(text)
    else:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)


def read_logits_csv(path: str) -> list:
    vectors = []
    with open(path, encoding="utf-8") as fh:
        for raw in fh:
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            vectors.append(np.array([float(tok) for tok in line.split(",")]))
    if not vectors:
        raise EmptyInput(f"{path} holds no logit vectors")
    return vectors


def read_logits_f32(path: str) -> list:
    """Raw little-endian f32 matrix with a (n_vectors, length) u32 header."""
    with open(path, "rb") as fh:
        data = fh.read()
    if len(data) < 8:
        raise MalformedHeader(f"{path}: too short for the 2-integer shape header")
    n, length = struct.unpack_from("<II", data)
    expected = 8 + 4 * n * length
    if n < 1 or length < 1 or len(data) != expected:
        raise MalformedHeader(f"{path}: shape ({n}, {length}) disagrees with file size")
    mat = np.frombuffer(data, dtype="<f4", count=n * length, offset=8)
    return [row.astype(np.float64) for row in mat.reshape(n, length)]


def write_logits_f32(path: str, vectors):
    mat = np.ascontiguousarray(vectors, dtype="<f4")
    with open(path, "wb") as fh:
        fh.write(struct.pack("<II", mat.shape[0], mat.shape[1]))
        fh.write(mat.tobytes())


def _read_logits(args) -> list:
    if args.infile is None:
        raise _UsageError("--in is required")
    fmt = args.in_format
    if fmt is None:
        fmt = "f32" if args.infile.endswith((".bin", ".f32")) else "csv"
    return read_logits_f32(args.infile) if fmt == "f32" else read_logits_csv(args.infile)


def _corpus_spec(args) -> CorpusSpec:
    defaults = CorpusSpec()
    return CorpusSpec(
        dists=tuple(_pick(args.dist, defaults.dists)),
        n_vectors=_pick(args.n_vectors, defaults.n_vectors),
        min_len=_pick(args.min_len, defaults.min_len),
        max_len=_pick(args.max_len, defaults.max_len),
        seed=_resolve_seed(args.seed),
    )


def _build_pair(args):
    if args.method is None or args.precision is None:
        raise _UsageError("lutgen needs --method and --precision")
    spec = PrecisionSpec.from_name(args.precision, args.dequant_scale)
    if args.method == "rexp":
        if args.case is not None and args.alpha_entries is not None:
            raise _UsageError("--case and --alpha-entries are mutually exclusive")
        alpha_entries = args.alpha_entries
        if args.case is not None:
            alpha_entries = WIDE_ALPHA_CASES[args.case]
        return rexp_tables(spec, alpha_entries)
    kwargs = {}
    if args.exp_entries is not None:
        kwargs["exp_entries"] = args.exp_entries
    if args.max_sum is not None:
        kwargs["max_sum"] = args.max_sum
    if args.scale_ex is not None:
        kwargs["scale_ex"] = args.scale_ex
    if args.scale_sum is not None:
        kwargs["scale_sum"] = args.scale_sum
    return twodlut_tables(spec, **kwargs)


def _cmd_lutgen(args) -> int:
    pair = _build_pair(args)
    fmt = _pick(args.format, "bin")
    if fmt == "json":
        _write_text(luts_to_json(pair) + "\n", args.out)
        return 0
    if args.out is None:
        raise _UsageError("binary output needs --out")
    with open(args.out, "wb") as fh:
        fh.write(serialize_luts(pair))
    return 0


def _config_from_lut_file(path: str, method: Method, args) -> KernelConfig:
    with open(path, "rb") as fh:
        luts = deserialize_luts(fh.read())
    by_kind = {lut.kind: lut for lut in luts}
    spec = luts[0].spec
    if args.precision is not None and spec.name != args.precision:
        raise InvalidParams(f"{path} holds {spec.name} tables, not {args.precision}")
    if args.dequant_scale is not None:
        spec = PrecisionSpec(spec.w, args.dequant_scale)
    if method is Method.REXP:
        if LutKind.RECIP_EXP not in by_kind or LutKind.ALPHA not in by_kind:
            raise MissingLut(f"{path} lacks the reciprocal-exp/alpha pair")
        return KernelConfig(spec, lut_recip=by_kind[LutKind.RECIP_EXP],
                            lut_alpha=by_kind[LutKind.ALPHA])
    if method is Method.TWODLUT:
        if LutKind.EXP not in by_kind or LutKind.SIGMA2D not in by_kind:
            raise MissingLut(f"{path} lacks the exp/sigma pair")
        return KernelConfig(spec, lut_exp=by_kind[LutKind.EXP],
                            lut_sigma=by_kind[LutKind.SIGMA2D])
    return KernelConfig(spec)


def _cmd_softmax(args) -> int:
    if args.method is None:
        raise _UsageError("softmax needs --method")
    method = Method(args.method)
    precision = _pick(args.precision, "uint8")
    if args.luts is not None:
        cfg = _config_from_lut_file(args.luts, method, args)
    elif method in (Method.EXACT, Method.REXP_RAW):
        cfg = None
    else:
        cfg = make_kernel_config(method, precision, args.alpha_entries)
        if cfg is not None and args.dequant_scale is not None:
            cfg = KernelConfig(
                PrecisionSpec(cfg.spec.w, args.dequant_scale),
                lut_recip=cfg.lut_recip, lut_alpha=cfg.lut_alpha,
                lut_exp=cfg.lut_exp, lut_sigma=cfg.lut_sigma,
            )
    vectors = _read_logits(args)
    if args.input_scale is not None:
        vectors = [quantize_dequantize(v, args.input_scale) for v in vectors]
    outputs = [run_method(method, v, cfg) for v in vectors]
    if _pick(args.format, "csv") == "json":
        payload = {
            "method": str(method),
            "precision": cfg.spec.name if cfg is not None else precision,
            "outputs": [out.values.tolist() for out in outputs],
        }
        _write_text(json.dumps(payload, indent=2) + "\n", args.out)
    else:
        lines = [",".join(repr(v) for v in out.values.tolist()) for out in outputs]
        _write_text("\n".join(lines) + "\n", args.out)
    return 0


def _cmd_sweep(args) -> int:
    methods = _pick(args.methods, ",".join(METHOD_NAMES)).split(",")
    precisions = _pick(args.precisions, ",".join(PRECISION_NAMES)).split(",")
    rows = sweep(
        [m.strip() for m in methods],
        [p.strip() for p in precisions],
        _corpus_spec(args),
        threads=_pick(args.threads, 1),
        alpha_entries=args.alpha_entries,
    )
    text = sweep_to_json(rows) + "\n" if _pick(args.format, "csv") == "json" else sweep_to_csv(rows)
    _write_text(text, args.out)
    return 0


def _cmd_hist(args) -> int:
    value_range = (0.0, 500.0)
    if args.range is not None:
        try:
            lo, hi = (float(tok) for tok in args.range.split(","))
        except ValueError:
            raise _UsageError(f"--range expects LO,HI, got {args.range!r}") from None
        value_range = (lo, hi)
    hist = sum_exp_histogram(
        gen_corpus(_corpus_spec(args)), bins=_pick(args.bins, 50), value_range=value_range
    )
    if _pick(args.format, "csv") == "json":
        payload = {
            "bins": hist.bins, "lo": hist.lo, "hi": hist.hi,
            "counts": hist.counts.tolist(), "mean": hist.mean,
        }
        _write_text(json.dumps(payload, indent=2) + "\n", args.out)
    else:
        _write_text(histogram_to_csv(hist), args.out)
    return 0


def _cmd_attn(args) -> int:
    method = Method(_pick(args.method, "rexp"))
    precision = _pick(args.precision, "uint8")
    heads = _pick(args.heads, 8)
    hidden = _pick(args.hidden, 64)
    cfg = AttentionConfig(
        heads=heads,
        seq_len=_pick(args.seq, 32),
        hidden=hidden,
        d_k=_pick(args.dk, max(1, hidden // heads)),
        layers=_pick(args.layers, 6),
    )
    kcfg = make_kernel_config(method, precision, args.alpha_entries)
    reports = stacked_error_probe(
        cfg, lambda row: run_method(method, row, kcfg), seed=_resolve_seed(args.seed)
    )
    if _pick(args.format, "csv") == "json":
        payload = [dict(layer=i + 1, **r.as_dict()) for i, r in enumerate(reports)]
        _write_text(json.dumps(payload, indent=2) + "\n", args.out)
    else:
        lines = ["layer,linf,l1_mean,kl_div,norm_dev,n_vectors"]
        for i, r in enumerate(reports):
            lines.append(
                f"{i + 1},{r.linf!r},{r.l1_mean!r},{r.kl_div!r},{r.norm_dev!r},{r.n_vectors}"
            )
        _write_text("\n".join(lines) + "\n", args.out)
    return 0


def _cmd_opcount(args) -> int:
    if args.layers is None or args.heads is None or args.seq is None:
        raise _UsageError("opcount needs --layers, --heads, and --seq")
    cfg = AttentionConfig(heads=args.heads, seq_len=args.seq, hidden=args.heads,
                          d_k=1, layers=args.layers)
    sys.stdout.write(f"{softmax_op_count(cfg)}\n")
    return 0


def _cmd_inspect(args) -> int:
    if args.infile is None:
        raise _UsageError("inspect needs --in")
    with open(args.infile, "rb") as fh:
        luts = deserialize_luts(fh.read())
    sys.stdout.write(luts_to_json(luts) + "\n")
    return 0


_COMMANDS = {
    "lutgen": _cmd_lutgen,
    "softmax": _cmd_softmax,
    "sweep": _cmd_sweep,
    "hist": _cmd_hist,
    "attn": _cmd_attn,
    "opcount": _cmd_opcount,
    "inspect": _cmd_inspect,
}


def dispatch(argv) -> int:
    parser, parsers = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            raise _UsageError("a command is required")
        if args.config:
            _merge_config(args, parsers[args.command], load_config_file(args.config))
        return _COMMANDS[args.command](args)
    except _UsageError as exc:
        parser.print_usage(sys.stderr)
        sys.stderr.write(f"error: {exc}\n")
        return 1
    except SystemExit as exc:  # argparse -h/--help
        return int(exc.code or 0)
    except (LutSoftmaxError, OSError, ValueError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 2


def main():
    sys.exit(dispatch(sys.argv[1:]))


if __name__ == "__main__":
    main()

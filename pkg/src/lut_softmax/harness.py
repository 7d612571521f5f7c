"""Logit-corpus generation, error metrics against the exact oracle,
sum-of-exponentials histograms, and method/precision sweep reports.
"""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .engines import KernelConfig, Method, ProbVector, rexp_config, run_method, twodlut_config
from .errors import InvalidParams, InvalidRange, LengthMismatch
from .quantization import PrecisionSpec, as_logit_vector

# Every seeded entry point defaults to this constant so identical
# invocations produce identical artifacts.
DEFAULT_SEED = 12345

# Floor applied to both KL arguments; keeps the metric finite when
# quantized outputs hit exact zero codes.
KL_EPS = 1e-12

# Wide normalizing-constant table so corpus sums up to max_len stay covered.
DEFAULT_ALPHA_ENTRIES = 256


@dataclass(frozen=True)
class ErrorReport:
    """Aggregate approximation error of a batch of vectors vs. the oracle.

    linf and l1_mean are elementwise max / mean absolute error over the
    pooled corpus; kl_div is the mean per-vector KL(exact || approx) under
    the epsilon floor; norm_dev is the worst per-vector |sum - 1|.
    """

    linf: float
    l1_mean: float
    kl_div: float
    norm_dev: float
    n_vectors: int

    def __post_init__(self):
        for name in ("linf", "l1_mean", "kl_div", "norm_dev"):
            if getattr(self, name) < 0:
                raise InvalidParams(f"{name} must be >= 0")
        if self.linf < self.l1_mean - 1e-12:
            raise InvalidParams("linf cannot be below the mean absolute error")

    def as_dict(self) -> dict:
        return {
            "linf": self.linf,
            "l1_mean": self.l1_mean,
            "kl_div": self.kl_div,
            "norm_dev": self.norm_dev,
            "n_vectors": self.n_vectors,
        }


@dataclass(frozen=True, eq=False)
class SumExpHistogram:
    bins: int
    lo: float
    hi: float
    counts: np.ndarray
    mean: float

    def __post_init__(self):
        counts = np.asarray(self.counts, dtype=np.int64)
        counts.flags.writeable = False
        object.__setattr__(self, "counts", counts)

    @property
    def edges(self) -> np.ndarray:
        return np.linspace(self.lo, self.hi, self.bins + 1)


@dataclass(frozen=True)
class CorpusSpec:
    """Deterministic synthetic logit corpus: distributions cycle per vector,
    lengths draw uniformly from [min_len, max_len]."""

    dists: tuple = ("gaussian:0,1", "uniform:-3,3", "attention_like:64")
    n_vectors: int = 2000
    min_len: int = 1
    max_len: int = 128
    seed: int = DEFAULT_SEED

    def __post_init__(self):
        if self.n_vectors < 1 or self.min_len < 1 or self.max_len < self.min_len:
            raise InvalidParams("corpus needs n_vectors >= 1 and 1 <= min_len <= max_len")
        if not self.dists:
            raise InvalidParams("corpus needs at least one distribution")
        object.__setattr__(self, "dists", tuple(self.dists))


def _parse_dist(dist: str):
    try:
        name, _, argstr = dist.partition(":")
        args = [float(a) for a in argstr.split(",")] if argstr else []
    except ValueError:
        raise InvalidParams(f"cannot parse distribution {dist!r}") from None
    return name.strip(), args


def gen_logits(dist: str, length: int, seed) -> np.ndarray:
    """Draw one logit vector from 'uniform:a,b', 'gaussian:mu,sigma', or
    'attention_like:d_k' (query-key dot products scaled by 1/sqrt(d_k))."""
    if length < 1:
        raise InvalidParams(f"length must be >= 1, got {length}")
    name, args = _parse_dist(dist)
    rng = np.random.default_rng(seed)
    if name == "uniform":
        if len(args) != 2 or args[0] > args[1]:
            raise InvalidParams(f"uniform needs a <= b, got {dist!r}")
        return rng.uniform(args[0], args[1], size=length)
    if name == "gaussian":
        if len(args) != 2 or args[1] < 0:
            raise InvalidParams(f"gaussian needs mu,sigma with sigma >= 0, got {dist!r}")
        return args[0] + args[1] * rng.standard_normal(length)
    if name == "attention_like":
        if len(args) != 1 or args[0] < 1 or args[0] != int(args[0]):
            raise InvalidParams(f"attention_like needs an integer d_k >= 1, got {dist!r}")
        d_k = int(args[0])
        q = rng.standard_normal(d_k)
        keys = rng.standard_normal((length, d_k))
        return keys @ q / np.sqrt(d_k)
    raise InvalidParams(f"unknown distribution {name!r}")


def gen_corpus(spec: CorpusSpec) -> list:
    rng = np.random.default_rng(spec.seed)
    corpus = []
    for i in range(spec.n_vectors):
        length = int(rng.integers(spec.min_len, spec.max_len + 1))
        child_seed = int(rng.integers(0, 2**63 - 1))
        corpus.append(gen_logits(spec.dists[i % len(spec.dists)], length, child_seed))
    return corpus


def _values(p) -> np.ndarray:
    return p.values if isinstance(p, ProbVector) else np.asarray(p, dtype=np.float64)


def kl_divergence(exact, approx) -> float:
    """KL(exact || approx) with both arguments floored at KL_EPS, clamped
    at zero (flooring without renormalizing can otherwise dip negative)."""
    p = np.maximum(_values(exact), KL_EPS)
    q = np.maximum(_values(approx), KL_EPS)
    return max(0.0, float(np.sum(p * np.log(p / q))))


def error_report(approx, exact) -> ErrorReport:
    """Pooled error metrics for paired sequences of probability vectors."""
    if len(approx) != len(exact):
        raise LengthMismatch(f"{len(approx)} approx vectors vs {len(exact)} exact")
    if len(approx) == 0:
        raise InvalidParams("cannot report on an empty corpus")
    linf = 0.0
    abs_sum = 0.0
    n_elems = 0
    kl_sum = 0.0
    norm_dev = 0.0
    for a_vec, e_vec in zip(approx, exact):
        a, e = _values(a_vec), _values(e_vec)
        if a.size != e.size:
            raise LengthMismatch(f"vector length {a.size} vs {e.size}")
        diff = np.abs(a - e)
        linf = max(linf, float(diff.max()))
        abs_sum += float(diff.sum())
        n_elems += a.size
        kl_sum += kl_divergence(e, a)
        norm_dev = max(norm_dev, abs(float(a.sum()) - 1.0))
    return ErrorReport(
        linf=linf,
        l1_mean=abs_sum / n_elems,
        kl_div=kl_sum / len(approx),
        norm_dev=norm_dev,
        n_vectors=len(approx),
    )


def sum_exp_values(vectors) -> np.ndarray:
    """Per-vector sum of e^(x - max(x)); the denominator the tables bucket."""
    return np.array([np.exp(as_logit_vector(v) - np.max(v)).sum() for v in vectors])


def sum_exp_histogram(vectors, bins: int = 50, value_range=(0.0, 500.0)) -> SumExpHistogram:
    lo, hi = float(value_range[0]), float(value_range[1])
    if bins < 1:
        raise InvalidRange(f"bins must be >= 1, got {bins}")
    if not lo < hi:
        raise InvalidRange(f"histogram range needs lo < hi, got ({lo}, {hi})")
    values = sum_exp_values(vectors)
    counts, _ = np.histogram(values, bins=bins, range=(lo, hi))
    return SumExpHistogram(bins=bins, lo=lo, hi=hi, counts=counts, mean=float(values.mean()))


@dataclass(frozen=True)
class SweepRow:
    method: Method
    precision: str
    report: ErrorReport


def make_kernel_config(method: Method, precision: str, alpha_entries: int | None = None):
    """Preset config for one sweep cell; None for methods that need no tables."""
    method = Method(method)
    if method is Method.REXP:
        return rexp_config(precision, alpha_entries or DEFAULT_ALPHA_ENTRIES)
    if method is Method.TWODLUT:
        return twodlut_config(precision)
    if method in (Method.LOGEXP, Method.LOGEXP_PLUS):
        return KernelConfig(PrecisionSpec.from_name(precision))
    return None


def sweep(methods, precisions, corpus, threads: int = 1, alpha_entries: int | None = None):
    """One ErrorReport row per (method, precision) over a shared corpus.

    corpus may be a CorpusSpec or a pre-generated list of logit vectors.
    Rows come back in methods-major order regardless of worker scheduling.
    """
    methods = [Method(m) for m in methods]
    precisions = list(precisions)
    if not methods or not precisions:
        raise InvalidParams("sweep needs at least one method and one precision")
    vectors = gen_corpus(corpus) if isinstance(corpus, CorpusSpec) else list(corpus)
    exact = [run_method(Method.EXACT, v) for v in vectors]

    def run_cell(cell):
        method, precision = cell
        cfg = make_kernel_config(method, precision, alpha_entries)
        approx = [run_method(method, v, cfg) for v in vectors]
        return SweepRow(method, precision, error_report(approx, exact))

    cells = [(m, p) for m in methods for p in precisions]
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(run_cell, cells))
    return [run_cell(cell) for cell in cells]


SWEEP_CSV_HEADER = "method,precision,linf,l1_mean,kl_div,norm_dev,n_vectors"


def sweep_to_csv(rows) -> str:
    lines = [SWEEP_CSV_HEADER]
    for row in rows:
        r = row.report
        lines.append(
            f"{row.method},{row.precision},{r.linf!r},{r.l1_mean!r},"
            f"{r.kl_div!r},{r.norm_dev!r},{r.n_vectors}"
        )
    return "\n".join(lines) + "\n"


def sweep_to_json(rows) -> str:
    nested: dict = {}
    for row in rows:
        nested.setdefault(str(row.method), {})[row.precision] = row.report.as_dict()
    return json.dumps(nested, indent=2)


def histogram_to_csv(hist: SumExpHistogram) -> str:
    edges = hist.edges
    lines = ["bin_lo,bin_hi,count"]
    for k in range(hist.bins):
        lines.append(f"{float(edges[k])!r},{float(edges[k + 1])!r},{int(hist.counts[k])}")
    lines.append(f"mean,{hist.mean!r}")
    return "\n".join(lines) + "\n"

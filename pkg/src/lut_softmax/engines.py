"""Softmax implementations behind one common interface.

The exact float oracle, the two divider-free LUT kernels (reciprocal-exp
normalization and the 2-D output table), and three prior-art baselines
(raw reciprocal-exp, log-transform with output rounding, and its
max-normalized variant).
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import ExpOverflow, AccumulatorOverflow, InvalidParams, MissingLut
from .luts import Lut1D, Lut2D, LutKind, rexp_tables, twodlut_tables
from .quantization import (
    PrecisionSpec,
    as_logit_vector,
    bucket_index,
    dequantize,
    normalize_max_minus,
    round_half_away,
)

# Integer sums are held in a signed 64-bit accumulator.
_ACC_LIMIT = 2**63


class Method(str, Enum):
    EXACT = "exact"
    REXP = "rexp"
    TWODLUT = "2dlut"
    REXP_RAW = "rexp_raw"
    LOGEXP = "logexp"
    LOGEXP_PLUS = "logexp_plus"

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True, eq=False)
class ProbVector:
    """Softmax output values in [0, 1] (exact or dequantized approximation)."""

    values: np.ndarray
    method: Method

    def __post_init__(self):
        arr = np.array(self.values, dtype=np.float64, copy=True).ravel()
        arr.flags.writeable = False
        object.__setattr__(self, "values", arr)
        if arr.size == 0:
            raise InvalidParams("probability vector must be non-empty")
        if arr.min() < 0.0 or arr.max() > 1.0:
            raise InvalidParams("probability values must lie in [0, 1]")
        if self.method is Method.EXACT and abs(arr.sum() - 1.0) > 1e-12:
            raise InvalidParams("exact softmax output must sum to 1")

    def __len__(self) -> int:
        return int(self.values.size)


@dataclass(frozen=True)
class KernelConfig:
    """Precision plus the tables a kernel needs; tables must share the spec.

    Index extraction defaults to floor (MSB semantics) on the input side
    and round for the 2-D table's numerator/denominator axes.
    """

    spec: PrecisionSpec
    lut_recip: Lut1D | None = None
    lut_alpha: Lut1D | None = None
    lut_exp: Lut1D | None = None
    lut_sigma: Lut2D | None = None
    input_index_mode: str = "floor"
    row_index_mode: str = "round"
    col_index_mode: str = "round"

    def __post_init__(self):
        expected = {
            "lut_recip": LutKind.RECIP_EXP,
            "lut_alpha": LutKind.ALPHA,
            "lut_exp": LutKind.EXP,
            "lut_sigma": LutKind.SIGMA2D,
        }
        for name, kind in expected.items():
            lut = getattr(self, name)
            if lut is None:
                continue
            if lut.kind != kind:
                raise InvalidParams(f"{name} holds a {lut.kind.name} table")
            if lut.spec.w != self.spec.w:
                raise InvalidParams(
                    f"{name} was built for w={lut.spec.w}, config uses w={self.spec.w}"
                )


def rexp_config(precision, alpha_entries: int | None = None, dequant_scale=None) -> KernelConfig:
    """Preset reciprocal-exp kernel config for a named precision."""
    recip, alpha = rexp_tables(precision, alpha_entries)
    spec = PrecisionSpec(recip.spec.w, dequant_scale)
    return KernelConfig(spec, lut_recip=recip, lut_alpha=alpha)


def twodlut_config(precision, dequant_scale=None, **table_kwargs) -> KernelConfig:
    """Preset 2-D LUT kernel config for a named precision."""
    lut_exp, lut_sigma = twodlut_tables(precision, **table_kwargs)
    spec = PrecisionSpec(lut_exp.spec.w, dequant_scale)
    return KernelConfig(spec, lut_exp=lut_exp, lut_sigma=lut_sigma)


def _check_accumulator(n: int, q_max: int):
    if n * q_max >= _ACC_LIMIT:
        raise AccumulatorOverflow(
            f"{n} codes of up to {q_max} cannot be summed in a 64-bit accumulator"
        )


def softmax_exact(x) -> ProbVector:
    """Exact softmax in float64, max-subtracted for overflow safety."""
    arr = as_logit_vector(x)
    e = np.exp(arr - arr.max())
    return ProbVector(e / e.sum(), Method.EXACT)


def softmax_rexp(x, cfg: KernelConfig) -> ProbVector:
    """Reciprocal-exp kernel: LUT numerators, integer-summed, rescaled by a
    normalizing-constant LUT. Integer arithmetic only between normalization
    and final dequantization; the output code is a product of two w-bit
    codes, so the default dequantization scale is q_max**2.
    """
    recip, alpha = cfg.lut_recip, cfg.lut_alpha
    if recip is None or alpha is None:
        raise MissingLut("rexp kernel needs lut_recip and lut_alpha")
    q_max = cfg.spec.q_max
    norm = normalize_max_minus(x)
    _check_accumulator(norm.size, q_max)
    idx = bucket_index(norm, recip.step, len(recip) - 1, cfg.input_index_mode)
    codes = recip.entries[idx]
    total = int(codes.sum())
    j = bucket_index(total / q_max, 1.0, len(alpha) - 1, cfg.input_index_mode)
    out_codes = codes * int(alpha.entries[j])
    scale = cfg.spec.dequant_scale if cfg.spec.dequant_scale is not None else q_max**2
    return ProbVector(dequantize(out_codes, scale), Method.REXP)


def softmax_2dlut(x, cfg: KernelConfig) -> ProbVector:
    """2-D LUT kernel: exp codes from a 1-D table, output codes read from
    the (numerator bucket, denominator bucket) table. No multiplier or
    divider after table construction.
    """
    lut_exp, lut_sigma = cfg.lut_exp, cfg.lut_sigma
    if lut_exp is None or lut_sigma is None:
        raise MissingLut("2dlut kernel needs lut_exp and lut_sigma")
    q_max = cfg.spec.q_max
    norm = normalize_max_minus(x)  # magnitude of x - max(x)
    _check_accumulator(norm.size, q_max)
    idx = bucket_index(norm, lut_exp.step, len(lut_exp) - 1, cfg.input_index_mode)
    ecodes = lut_exp.entries[idx]
    total = int(ecodes.sum())
    rows, cols = lut_sigma.rows, lut_sigma.cols
    row = bucket_index(ecodes / q_max, lut_sigma.scale_ex, rows - 1, cfg.row_index_mode)
    col = bucket_index(total / q_max, lut_sigma.scale_sum, cols, cfg.col_index_mode)
    col = max(1, col)  # a sum below one bucket saturates up to the first column
    out_codes = lut_sigma.entries[row, col - 1]
    scale = cfg.spec.dequant_scale if cfg.spec.dequant_scale is not None else q_max
    return ProbVector(dequantize(out_codes, scale), Method.TWODLUT)


def softmax_rexp_raw(x) -> ProbVector:
    """Raw reciprocal-exp baseline: 1/e^(max(x)-x_i), no normalization.

    Outputs need not sum to 1; the missing normalizing constant is exactly
    what makes this baseline collapse when stacked inside attention.
    """
    norm = normalize_max_minus(x)
    return ProbVector(np.exp(-norm), Method.REXP_RAW)


def softmax_logexp(x, w: int, normalized: bool = False) -> ProbVector:
    """Log-transform baseline: exp(x_i - ln sum(e^x)), rounded to a w-bit
    output grid. normalized=True subtracts max(x) inside, which is the
    variant that survives large positive logits.
    """
    if w < 2:
        raise InvalidParams(f"output precision needs w >= 2, got {w}")
    arr = as_logit_vector(x)
    prec = 2**w - 1
    if normalized:
        z = arr - arr.max()
        vals = np.exp(z - np.log(np.exp(z).sum()))
        method = Method.LOGEXP_PLUS
    else:
        with np.errstate(over="ignore"):
            total = np.exp(arr).sum()
        if not np.isfinite(total) or total == 0.0:
            raise ExpOverflow("sum of exponentials left the finite float range")
        vals = np.exp(arr - np.log(total))
        method = Method.LOGEXP
    return ProbVector(round_half_away(vals * prec) / prec, method)


def run_method(method: Method, x, cfg: KernelConfig | None = None) -> ProbVector:
    """Uniform dispatch used by the harness and CLI."""
    method = Method(method)
    if method is Method.EXACT:
        return softmax_exact(x)
    if method is Method.REXP_RAW:
        return softmax_rexp_raw(x)
    if cfg is None:
        raise MissingLut(f"method {method} needs a kernel config")
    if method is Method.REXP:
        return softmax_rexp(x, cfg)
    if method is Method.TWODLUT:
        return softmax_2dlut(x, cfg)
    if method is Method.LOGEXP:
        return softmax_logexp(x, cfg.spec.w, normalized=False)
    return softmax_logexp(x, cfg.spec.w, normalized=True)

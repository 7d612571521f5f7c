"""Divider-free, LUT-based softmax approximation toolkit.

Builds the integer lookup tables for arbitrary bit widths, executes the
reciprocal-exp and 2-D LUT kernels in pure integer arithmetic, and
verifies them against an exact oracle and prior-art baselines.
"""

from .attention import AttentionConfig, scaled_dot_attention, softmax_op_count, stacked_error_probe
from .engines import (
    KernelConfig,
    Method,
    ProbVector,
    rexp_config,
    run_method,
    softmax_2dlut,
    softmax_exact,
    softmax_logexp,
    softmax_rexp,
    softmax_rexp_raw,
    twodlut_config,
)
from .harness import (
    DEFAULT_SEED,
    CorpusSpec,
    ErrorReport,
    SumExpHistogram,
    error_report,
    gen_corpus,
    gen_logits,
    sum_exp_histogram,
    sweep,
)
from .luts import (
    Lut1D,
    Lut2D,
    LutKind,
    build_lut_alpha,
    build_lut_exp,
    build_lut_recip_exp,
    build_lut_sigma,
    lut_byte_size,
    rexp_tables,
    twodlut_tables,
)
from .lutio import deserialize_lut, deserialize_luts, serialize_lut, serialize_luts
from .quantization import (
    PrecisionSpec,
    bucket_index,
    dequantize,
    normalize_max_minus,
    normalize_sub_max,
)

__version__ = "0.1.0"

__all__ = [
    "AttentionConfig",
    "CorpusSpec",
    "DEFAULT_SEED",
    "ErrorReport",
    "KernelConfig",
    "Lut1D",
    "Lut2D",
    "LutKind",
    "Method",
    "PrecisionSpec",
    "ProbVector",
    "SumExpHistogram",
    "bucket_index",
    "build_lut_alpha",
    "build_lut_exp",
    "build_lut_recip_exp",
    "build_lut_sigma",
    "dequantize",
    "deserialize_lut",
    "deserialize_luts",
    "error_report",
    "gen_corpus",
    "gen_logits",
    "lut_byte_size",
    "normalize_max_minus",
    "normalize_sub_max",
    "rexp_config",
    "rexp_tables",
    "run_method",
    "scaled_dot_attention",
    "serialize_lut",
    "serialize_luts",
    "softmax_2dlut",
    "softmax_exact",
    "softmax_logexp",
    "softmax_op_count",
    "softmax_rexp",
    "softmax_rexp_raw",
    "stacked_error_probe",
    "sum_exp_histogram",
    "sweep",
    "twodlut_config",
    "twodlut_tables",
]

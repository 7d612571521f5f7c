"""Shared numeric substrate: precision configuration, max-normalization,
bucket (MSB-style) index extraction, and dequantization.

Everything here is a pure function of its inputs; the kernels and table
builders layer on top of these primitives.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import EmptyInput, InvalidScale, InvalidStep, NonFiniteInput

# Named precisions: value-representation bit widths. "int16" carries 15
# magnitude bits (codes live in [0, 32767], stored as two bytes).
PRECISION_BITS = {
    "int16": 15,
    "uint8": 8,
    "uint4": 4,
    "uint2": 2,
}

PRECISION_NAMES = tuple(PRECISION_BITS)


@dataclass(frozen=True)
class PrecisionSpec:
    """Bit width and derived quantization constants.

    q_max is the largest representable code, x_q the exponent index beyond
    which reciprocal-exp codes vanish. dequant_scale, when set, overrides
    the kernel's natural output divisor (q_max for single-code outputs,
    q_max**2 for the two-code product of the reciprocal-exp kernel); 1.0
    means "leave outputs as raw integer codes".
    """

    w: int
    dequant_scale: float | None = None
    q_max: int = field(init=False)
    x_q: int = field(init=False)

    def __post_init__(self):
        if not isinstance(self.w, int) or self.w < 1:
            raise InvalidScale(f"bit width must be a positive integer, got {self.w!r}")
        if self.dequant_scale is not None and not self.dequant_scale > 0:
            raise InvalidScale(f"dequant_scale must be > 0, got {self.dequant_scale!r}")
        object.__setattr__(self, "q_max", 2**self.w - 1)
        object.__setattr__(self, "x_q", math.ceil(math.log(self.q_max)))

    @classmethod
    def from_name(cls, name: str, dequant_scale: float | None = None) -> "PrecisionSpec":
        try:
            bits = PRECISION_BITS[name]
        except KeyError:
            raise InvalidScale(
                f"unknown precision {name!r}; expected one of {PRECISION_NAMES}"
            ) from None
        return cls(bits, dequant_scale)

    @property
    def bytes_per_entry(self) -> int:
        # Sub-byte precisions are stored one byte per entry.
        return 1 if self.w <= 8 else 2

    @property
    def name(self) -> str:
        for name, bits in PRECISION_BITS.items():
            if bits == self.w:
                return name
        return f"uint{self.w}"


def as_logit_vector(x) -> np.ndarray:
    """Validate and flatten logits to a 1-D float64 array.

    Rejects empty and non-finite input: every downstream table index would
    be undefined for NaN/Inf.
    """
    arr = np.asarray(x, dtype=np.float64).ravel()
    if arr.size == 0:
        raise EmptyInput("logit vector must contain at least one element")
    if not np.all(np.isfinite(arr)):
        raise NonFiniteInput("logit vector contains NaN or Inf")
    return arr


def normalize_sub_max(x) -> np.ndarray:
    """x -> x - max(x). All outputs <= 0, at least one exactly 0."""
    arr = as_logit_vector(x)
    return arr - arr.max()


def normalize_max_minus(x) -> np.ndarray:
    """x -> max(x) - x. All outputs >= 0, at least one exactly 0."""
    arr = as_logit_vector(x)
    return arr.max() - arr


def round_half_away(x):
    """Round to nearest integer, ties away from zero.

    This is the rounding bracket used for all table construction; numpy's
    np.round (ties-to-even) would disagree at .5 boundaries.
    """
    return np.sign(x) * np.floor(np.abs(x) + 0.5)


def bucket_index(v, step: float, max_index: int, mode: str = "floor"):
    """Map nonnegative value(s) onto a saturating bucket grid.

    Returns clamp(f(v / step), 0, max_index) with f = floor or
    round-half-away-from-zero. This is the format-independent meaning of
    addressing a LUT by the high-order bits of a fixed-point value.

    Accepts scalars or arrays; returns int64 of matching shape.
    """
    if not step > 0:
        raise InvalidStep(f"bucket step must be > 0, got {step!r}")
    if max_index < 0:
        raise InvalidStep(f"max_index must be >= 0, got {max_index!r}")
    scaled = np.asarray(v, dtype=np.float64) / step
    if mode == "floor":
        idx = np.floor(scaled)
    elif mode == "round":
        idx = round_half_away(scaled)
    else:
        raise InvalidStep(f"unknown index mode {mode!r}; expected 'floor' or 'round'")
    clipped = np.clip(idx, 0, max_index).astype(np.int64)
    return int(clipped) if np.isscalar(v) or np.ndim(v) == 0 else clipped


def dequantize(q, scale: float):
    """Restore real-valued output(s) from integer code(s): q / scale."""
    if not scale > 0:
        raise InvalidScale(f"dequantization scale must be > 0, got {scale!r}")
    return np.asarray(q, dtype=np.float64) / scale


def quantize_dequantize(x, input_scale: float) -> np.ndarray:
    """Snap logits to a 1/input_scale grid (round-trip through integer codes).

    Models inputs that arrive already quantized by a previous integer layer.
    """
    if not input_scale > 0:
        raise InvalidScale(f"input scale must be > 0, got {input_scale!r}")
    arr = as_logit_vector(x)
    return round_half_away(arr * input_scale) / input_scale

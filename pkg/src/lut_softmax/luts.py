"""Construction and inspection of the four lookup-table families.

Three 1-D tables (reciprocal-exp, normalizing-constant alpha, plain exp)
and one 2-D table mapping (numerator bucket, denominator bucket) directly
to softmax output codes. All entries are integer codes in [0, q_max],
rounded half-away-from-zero from the underlying real values.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import IntEnum

import numpy as np

from .errors import InvalidBoundary, InvalidParams, InvalidScale, InvalidStep
from .quantization import PrecisionSpec, round_half_away


class LutKind(IntEnum):
    """Table families; values double as the on-disk kind codes."""

    RECIP_EXP = 0
    ALPHA = 1
    EXP = 2
    SIGMA2D = 3


def _frozen_entries(entries, ndim: int) -> np.ndarray:
    arr = np.array(entries, dtype=np.int64)
    if arr.ndim != ndim or arr.size == 0:
        raise InvalidParams(f"expected non-empty {ndim}-D entry array, got shape {arr.shape}")
    arr.flags.writeable = False
    return arr


def _check_bounds(arr: np.ndarray, q_max: int):
    if arr.min() < 0 or arr.max() > q_max:
        raise InvalidParams(f"entries must lie in [0, {q_max}]")


@dataclass(frozen=True, eq=False)
class Lut1D:
    """Immutable 1-D integer table plus its construction metadata.

    step is the input-domain width of one index bucket: 1.0 for the
    reciprocal-exp and alpha tables, configurable for the exp table.
    """

    kind: LutKind
    entries: np.ndarray
    spec: PrecisionSpec
    step: float = 1.0

    def __post_init__(self):
        if self.kind not in (LutKind.RECIP_EXP, LutKind.ALPHA, LutKind.EXP):
            raise InvalidParams(f"{self.kind!r} is not a 1-D table kind")
        if not self.step > 0:
            raise InvalidStep(f"step must be > 0, got {self.step!r}")
        arr = _frozen_entries(self.entries, ndim=1)
        object.__setattr__(self, "entries", arr)
        _check_bounds(arr, self.spec.q_max)
        if self.kind in (LutKind.RECIP_EXP, LutKind.EXP):
            if np.any(np.diff(arr) > 0):
                raise InvalidParams("exp-family entries must be non-increasing")
        if self.kind == LutKind.RECIP_EXP and arr[0] != self.spec.q_max:
            raise InvalidParams("reciprocal-exp table must start at full scale")
        if self.kind == LutKind.ALPHA:
            if arr[-1] != 0:
                raise InvalidParams("alpha table must end with a zero entry")
            if np.any(np.diff(arr[1:]) > 0):
                raise InvalidParams("alpha entries must be non-increasing from index 1")

    def __len__(self) -> int:
        return int(self.entries.size)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, Lut1D)
            and self.kind == other.kind
            and self.spec == other.spec
            and self.step == other.step
            and np.array_equal(self.entries, other.entries)
        )


@dataclass(frozen=True, eq=False)
class Lut2D:
    """Precomputed softmax-output table indexed by (numerator bucket i,
    denominator bucket j); entry (i, j-1) holds the code for numerator
    i*scale_ex over denominator j*scale_sum.
    """

    entries: np.ndarray
    spec: PrecisionSpec
    scale_ex: float = 0.1
    scale_sum: float = 1.0
    max_sum: float = 60.0
    kind: LutKind = field(default=LutKind.SIGMA2D, init=False)

    def __post_init__(self):
        if not (self.scale_ex > 0 and self.scale_sum > 0 and self.max_sum > 0):
            raise InvalidScale("scale_ex, scale_sum, and max_sum must all be > 0")
        arr = _frozen_entries(self.entries, ndim=2)
        object.__setattr__(self, "entries", arr)
        _check_bounds(arr, self.spec.q_max)
        rows, cols = arr.shape
        if rows != int(round_half_away(1.0 / self.scale_ex)) + 1:
            raise InvalidParams(f"{rows} rows inconsistent with scale_ex={self.scale_ex}")
        if cols != int(round_half_away(self.max_sum / self.scale_sum)):
            raise InvalidParams(f"{cols} cols inconsistent with max_sum/scale_sum")
        if np.any(arr[0] != 0):
            raise InvalidParams("row 0 (zero numerator) must be all zeros")
        if np.any(np.diff(arr, axis=0) < 0):
            raise InvalidParams("entries must be non-decreasing in the numerator index")
        if np.any(np.diff(arr[1:], axis=1) > 0):
            raise InvalidParams("entries must be non-increasing in the denominator index")

    @property
    def rows(self) -> int:
        return int(self.entries.shape[0])

    @property
    def cols(self) -> int:
        return int(self.entries.shape[1])

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, Lut2D)
            and self.spec == other.spec
            and (self.scale_ex, self.scale_sum, self.max_sum)
            == (other.scale_ex, other.scale_sum, other.max_sum)
            and np.array_equal(self.entries, other.entries)
        )


def build_lut_recip_exp(spec: PrecisionSpec) -> Lut1D:
    """Reciprocal-exp table: entry i = round((1/e^i) * q_max), i = 0..x_q+1."""
    i = np.arange(spec.x_q + 2, dtype=np.float64)
    entries = round_half_away(np.exp(-i) * spec.q_max)
    return Lut1D(LutKind.RECIP_EXP, entries, spec, step=1.0)


def build_lut_alpha(spec: PrecisionSpec, x_s: int) -> Lut1D:
    """Normalizing-constant table: entry j = round((1/j) * q_max) for
    j = 1..x_s-1, with entry x_s pinned to 0.

    Entry 0 would divide by zero; it saturates to q_max instead (a sum
    bucketing to 0 means the accumulated total is below one bucket, and the
    closest safe normalizer is maximal).
    """
    if x_s < 1:
        raise InvalidBoundary(f"alpha boundary must be >= 1, got {x_s}")
    j = np.arange(1, x_s, dtype=np.float64)
    entries = np.concatenate(([spec.q_max], round_half_away(spec.q_max / j), [0]))
    return Lut1D(LutKind.ALPHA, entries, spec, step=1.0)


def build_lut_exp(spec: PrecisionSpec, n_entries: int, step: float) -> Lut1D:
    """Exp table: entry i = round(e^(-i*step) * q_max), i = 0..n_entries-1."""
    if n_entries < 2:
        raise InvalidParams(f"exp table needs at least 2 entries, got {n_entries}")
    if not step > 0:
        raise InvalidStep(f"exp table step must be > 0, got {step!r}")
    i = np.arange(n_entries, dtype=np.float64)
    entries = round_half_away(np.exp(-i * step) * spec.q_max)
    return Lut1D(LutKind.EXP, entries, spec, step=step)


def build_lut_sigma(
    spec: PrecisionSpec,
    scale_ex: float = 0.1,
    scale_sum: float = 1.0,
    max_sum: float = 60.0,
) -> Lut2D:
    """2-D softmax-output table.

    entry[i][j-1] = min(q_max, round((i*scale_ex)/(j*scale_sum) * q_max)),
    with i covering numerators up to 1.0 (the max after normalization) and
    j covering denominator sums up to max_sum. max_sum is canonicalized to
    cols*scale_sum so serialization round-trips structurally.
    """
    if not (scale_ex > 0 and scale_sum > 0 and max_sum > 0):
        raise InvalidScale("scale_ex, scale_sum, and max_sum must all be > 0")
    rows = int(round_half_away(1.0 / scale_ex)) + 1
    cols = int(round_half_away(max_sum / scale_sum))
    if cols < 1:
        raise InvalidScale(f"max_sum={max_sum} covers no denominator bucket")
    i = np.arange(rows, dtype=np.float64)[:, None]
    j = np.arange(1, cols + 1, dtype=np.float64)[None, :]
    vals = round_half_away((i * scale_ex) / (j * scale_sum) * spec.q_max)
    entries = np.minimum(vals, spec.q_max)
    return Lut2D(entries, spec, scale_ex, scale_sum, max_sum=cols * scale_sum)


def lut_byte_size(lut: Lut1D | Lut2D) -> int:
    """Storage bytes: one byte per entry up to 8 bits, two for int16."""
    return int(lut.entries.size) * lut.spec.bytes_per_entry


def trim_trailing_zero_codes(lut: Lut1D) -> Lut1D:
    """Drop zero entries past the first one.

    Indexes beyond the table end saturate to the last entry, so the
    trimmed table is behaviorally identical; it only removes redundant
    zero codes from storage (this is how the shipped uint2 reciprocal-exp
    table gets down to 3 entries).
    """
    arr = lut.entries
    end = arr.size
    while end >= 2 and arr[end - 1] == 0 and arr[end - 2] == 0:
        end -= 1
    if end == arr.size:
        return lut
    return Lut1D(lut.kind, arr[:end], lut.spec, lut.step)


# Shipped table shapes. The exp-table entry counts have no stated
# construction rule; the step is derived from coverage = ln(2*q_max),
# the input magnitude past which codes round to zero.
EXP_PRESET_ENTRIES = {"int16": 101, "uint8": 101, "uint4": 48, "uint2": 12}
SIGMA_PRESET_MAX_SUM = {"int16": 60.0, "uint8": 60.0, "uint4": 29.0, "uint2": 8.0}
COMPACT_ALPHA_ENTRIES = {"int16": 16, "uint8": 16, "uint4": 16, "uint2": 7}
WIDE_ALPHA_CASES = {1: 256, 2: 320, 3: 512}


def _as_spec(precision) -> PrecisionSpec:
    if isinstance(precision, PrecisionSpec):
        return precision
    return PrecisionSpec.from_name(precision)


def exp_table_coverage(spec: PrecisionSpec) -> float:
    """Input magnitude where exp codes round to zero: ln(2*q_max)."""
    return math.log(2 * spec.q_max)


def rexp_tables(precision, alpha_entries: int | None = None) -> tuple[Lut1D, Lut1D]:
    """Reciprocal-exp / alpha pair for a named precision.

    alpha_entries is the total alpha length (boundary + 1): the compact
    per-precision default, or one of the wide variants 256/320/512 for
    sum-heavy workloads (see WIDE_ALPHA_CASES).
    """
    spec = _as_spec(precision)
    if alpha_entries is None:
        alpha_entries = COMPACT_ALPHA_ENTRIES.get(spec.name, spec.q_max + 1)
    if alpha_entries < 2:
        raise InvalidBoundary(f"alpha table needs at least 2 entries, got {alpha_entries}")
    recip = trim_trailing_zero_codes(build_lut_recip_exp(spec))
    alpha = build_lut_alpha(spec, alpha_entries - 1)
    return recip, alpha


def twodlut_tables(
    precision,
    exp_entries: int | None = None,
    max_sum: float | None = None,
    scale_ex: float = 0.1,
    scale_sum: float = 1.0,
) -> tuple[Lut1D, Lut2D]:
    """Exp / sigma pair for a named precision, per-precision preset sizes."""
    spec = _as_spec(precision)
    if exp_entries is None:
        exp_entries = EXP_PRESET_ENTRIES.get(spec.name, 101)
    if max_sum is None:
        max_sum = SIGMA_PRESET_MAX_SUM.get(spec.name, 60.0)
    step = exp_table_coverage(spec) / (exp_entries - 1)
    lut_exp = build_lut_exp(spec, exp_entries, step)
    lut_sigma = build_lut_sigma(spec, scale_ex, scale_sum, max_sum)
    return lut_exp, lut_sigma

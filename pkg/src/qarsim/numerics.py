"""Scalar formats used on the wire and in the accumulator.

Three 8-bit codecs (symmetric INT8, FP8 E4M3, FP8 E5M2) plus software
BF16 rounding. E4M3 follows the common convention with no infinities,
a single NaN mantissa pattern and max finite 448; E5M2 is IEEE-like
(inf at exponent-all-ones/mantissa-zero, max finite 57344). Encoding
is round-to-nearest-even; magnitudes past the format max saturate to
the max finite value. NaN always survives encoding: FP8 NaN patterns
propagate, and INT8 maps NaN onto the otherwise unused code -128 so
corruption stays loud after decode instead of turning into a zero.
"""

from __future__ import annotations

import enum

import numpy as np

# Largest finite BF16 value, bit pattern 0x7F7F (exp 0xFE, mantissa 0x7F).
BF16_MAX = 3.3895313892515355e38


class Codec(enum.Enum):
    INT8 = "int8"
    F8E4M3 = "f8e4m3"
    F8E5M2 = "f8e5m2"

    @property
    def max_magnitude(self) -> float:
        return _MAX_MAG[self]


_MAX_MAG = {Codec.INT8: 127.0, Codec.F8E4M3: 448.0, Codec.F8E5M2: 57344.0}

# (exponent bits, mantissa bits, bias) per FP8 flavor.
_FP8_FIELDS = {Codec.F8E4M3: (4, 3, 7), Codec.F8E5M2: (5, 2, 15)}

# Canonical quiet-NaN code emitted for NaN inputs (decode accepts every
# NaN pattern; encode produces just this one).
_NAN_CODE = {Codec.F8E4M3: 0x7F, Codec.F8E5M2: 0x7E}
_INF_CODE = {Codec.F8E5M2: 0x7C}


def _fp8_decode_table(codec: Codec) -> np.ndarray:
    """256-entry float32 lookup table, one value per code."""
    exp_bits, man_bits, bias = _FP8_FIELDS[codec]
    exp_mask = (1 << exp_bits) - 1
    man_mask = (1 << man_bits) - 1
    out = np.empty(256, dtype=np.float64)
    for code in range(256):
        exp = (code >> man_bits) & exp_mask
        man = code & man_mask
        if exp == 0:
            # Subnormal: no implicit leading bit.
            val = man * 2.0 ** (1 - bias - man_bits)
        else:
            val = (1.0 + man * 2.0**-man_bits) * 2.0 ** (exp - bias)
        if codec is Codec.F8E4M3:
            if exp == exp_mask and man == man_mask:
                val = np.nan
        elif exp == exp_mask:
            val = np.inf if man == 0 else np.nan
        out[code] = -val if code & 0x80 else val
    return out.astype(np.float32)


_DECODE = {k: _fp8_decode_table(k) for k in _FP8_FIELDS}


def _fp8_encode_grid(codec: Codec):
    """Ascending finite non-negative values (= codes 0..K) and their midpoints.

    Codes are ordered by magnitude within a sign, so nearest-value search
    over this grid plus a tie rule on the low bit implements RNE exactly.
    Midpoints of adjacent FP8 values carry one extra mantissa bit and are
    exact in float64, so tie detection is exact too.
    """
    table = _DECODE[codec].astype(np.float64)
    finite = np.isfinite(table[:128])
    vals = table[:128][finite]
    assert np.all(np.diff(vals) > 0)
    mids = (vals[:-1] + vals[1:]) / 2.0
    return vals, mids


_ENCODE_GRID = {k: _fp8_encode_grid(k) for k in _FP8_FIELDS}


def encode(values, codec: Codec) -> np.ndarray:
    """Quantize float values to uint8 codes of the given codec (RNE, saturating)."""
    xf = np.asarray(values, dtype=np.float64)
    if codec is Codec.INT8:
        q = np.clip(np.rint(xf), -127.0, 127.0)
        q = np.where(np.isnan(xf), -128.0, q)
        return q.astype(np.int8).view(np.uint8)

    _, mids = _ENCODE_GRID[codec]
    mag = np.minimum(np.abs(xf), codec.max_magnitude)
    lo = np.searchsorted(mids, mag, side="left")
    hi = np.searchsorted(mids, mag, side="right")
    # lo != hi means mag sits exactly on a midpoint: of the two candidate
    # codes lo/lo+1 keep the even one.
    code = np.where(lo == hi, lo, lo + (lo & 1)).astype(np.uint8)
    code = code | np.where(np.signbit(xf), np.uint8(0x80), np.uint8(0))
    if codec in _INF_CODE:
        inf_pos = np.uint8(_INF_CODE[codec])
        code = np.where(np.isinf(xf), inf_pos | np.where(xf < 0, np.uint8(0x80), np.uint8(0)), code)
    return np.where(np.isnan(xf), np.uint8(_NAN_CODE[codec]), code)


def decode(codes, codec: Codec) -> np.ndarray:
    """Map uint8 codes back to float32 values."""
    c = np.asarray(codes, dtype=np.uint8)
    if codec is Codec.INT8:
        return c.view(np.int8).astype(np.float32)
    return _DECODE[codec][c]


def round_to_bf16(x):
    """Round float32 values to the nearest BF16-representable value (ties to even).

    Result stays float32. Finite overflow saturates to +/-BF16_MAX; NaN and
    inf pass through unchanged.
    """
    arr = np.asarray(x, dtype=np.float32)
    bits = arr.view(np.uint32).astype(np.uint64)
    rounded = ((bits + 0x7FFF + ((bits >> 16) & 1)) & 0xFFFF0000).astype(np.uint32)
    out = rounded.view(np.float32)
    finite = np.isfinite(arr)
    out = np.where(finite & ~np.isfinite(out), np.copysign(np.float32(BF16_MAX), arr), out)
    out = np.where(finite, out, arr)
    if arr.ndim == 0:
        return np.float32(out[()])
    return out

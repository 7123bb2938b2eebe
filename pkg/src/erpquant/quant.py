"""Post-training quantization codecs and logical model-size accounting.

All codecs round half away from zero. Symmetric schemes use codes in
``[-Q, Q]`` with ``Q = 2**(bits-1) - 1``; affine schemes use the full signed
range ``[-2**(bits-1), 2**(bits-1) - 1]``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .errors import FormatError, NumericError


class QuantScheme(enum.IntEnum):
    """Storage scheme; the integer value is the on-disk tag."""

    FLOAT64 = 0
    SYM_MAX_INT4 = 1
    SYM_MAX_INT8 = 2
    AFFINE_MINMAX_INT4 = 3
    AFFINE_MINMAX_INT8 = 4
    HIST256 = 5
    CODEBOOK1_PM = 6
    CODEBOOK1_01 = 7
    CODEBOOK2 = 8
    CODEBOOK3 = 9

    @property
    def tag(self):
        return self.name.lower()

    @classmethod
    def from_tag(cls, tag):
        if isinstance(tag, cls):
            return tag
        return cls[str(tag).upper()]

    @property
    def bits(self):
        return _BITS[self]

    @property
    def norm_param_count(self):
        return _NORM_COUNT[self]

    @property
    def is_symmetric(self):
        return self in (QuantScheme.SYM_MAX_INT4, QuantScheme.SYM_MAX_INT8)

    @property
    def is_affine(self):
        return self in (QuantScheme.AFFINE_MINMAX_INT4, QuantScheme.AFFINE_MINMAX_INT8)

    @property
    def is_codebook(self):
        return self in CODEBOOK_LEVELS

    @property
    def code_range(self):
        """Inclusive ``(lo, hi)`` range of valid codes."""
        if self.is_symmetric:
            q = 2 ** (self.bits - 1) - 1
            return -q, q
        if self.is_affine:
            return -(2 ** (self.bits - 1)), 2 ** (self.bits - 1) - 1
        if self is QuantScheme.FLOAT64:
            return None
        return 0, 2**self.bits - 1


_BITS = {
    QuantScheme.FLOAT64: 64,
    QuantScheme.SYM_MAX_INT4: 4,
    QuantScheme.SYM_MAX_INT8: 8,
    QuantScheme.AFFINE_MINMAX_INT4: 4,
    QuantScheme.AFFINE_MINMAX_INT8: 8,
    QuantScheme.HIST256: 8,
    QuantScheme.CODEBOOK1_PM: 1,
    QuantScheme.CODEBOOK1_01: 1,
    QuantScheme.CODEBOOK2: 2,
    QuantScheme.CODEBOOK3: 3,
}

_NORM_COUNT = {
    QuantScheme.FLOAT64: 0,
    QuantScheme.SYM_MAX_INT4: 1,
    QuantScheme.SYM_MAX_INT8: 1,
    QuantScheme.AFFINE_MINMAX_INT4: 2,
    QuantScheme.AFFINE_MINMAX_INT8: 2,
    QuantScheme.HIST256: 256,
    QuantScheme.CODEBOOK1_PM: 0,
    QuantScheme.CODEBOOK1_01: 0,
    QuantScheme.CODEBOOK2: 0,
    QuantScheme.CODEBOOK3: 0,
}

# Fixed level tables; never stored in model files.
CODEBOOK_LEVELS = {
    QuantScheme.CODEBOOK1_PM: (-1.0, 1.0),
    QuantScheme.CODEBOOK1_01: (0.0, 1.0),
    QuantScheme.CODEBOOK2: (-1.0, -0.33, 0.33, 1.0),
    QuantScheme.CODEBOOK3: (-1.0, -5 / 7, -3 / 7, -1 / 7, 1 / 7, 3 / 7, 5 / 7, 1.0),
}


@dataclass(frozen=True)
class QuantizedTensor:
    """Codes plus the float64 parameters needed to reconstruct them.

    ``norm_params`` is ``[s]`` for symmetric schemes, ``[vmin, vmax]`` for
    affine ones, the 256-entry table for ``hist256`` and the fixed level table
    for codebooks. For ``float64`` the ``codes`` array holds the values.
    """

    scheme: QuantScheme
    shape: tuple
    codes: np.ndarray
    norm_params: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "shape", tuple(int(d) for d in self.shape))
        object.__setattr__(self, "norm_params", np.asarray(self.norm_params, dtype=np.float64))

    @property
    def size(self):
        return int(np.prod(self.shape, dtype=np.int64))

    @property
    def size_bits(self):
        return tensor_size_bits(self.size, self.scheme)

    def __eq__(self, other):
        if not isinstance(other, QuantizedTensor):
            return NotImplemented
        return (
            self.scheme == other.scheme
            and self.shape == other.shape
            and self.codes.dtype == other.codes.dtype
            and np.array_equal(self.codes, other.codes)
            and self.norm_params.tobytes() == other.norm_params.tobytes()
        )


def round_half_away(x):
    return np.sign(x) * np.floor(np.abs(x) + 0.5)


def _checked(weights):
    w = np.asarray(weights, dtype=np.float64)
    if w.size == 0:
        raise NumericError("cannot quantize an empty array")
    if not np.all(np.isfinite(w)):
        raise NumericError("cannot quantize non-finite weights")
    return w


def _int_bits(bits):
    if bits not in (4, 8):
        raise ValueError(f"bits must be 4 or 8, got {bits}")
    return bits


def quantize_sym_max(weights, bits) -> QuantizedTensor:
    w = _checked(weights)
    _int_bits(bits)
    scheme = QuantScheme.SYM_MAX_INT4 if bits == 4 else QuantScheme.SYM_MAX_INT8
    q = 2 ** (bits - 1) - 1
    s = float(np.max(np.abs(w)))
    if s == 0.0:
        s = 1.0
    codes = np.clip(round_half_away(w * q / s), -q, q).astype(np.int8)
    return QuantizedTensor(scheme, w.shape, codes, [s])


def quantize_affine_minmax(weights, bits) -> QuantizedTensor:
    w = _checked(weights)
    _int_bits(bits)
    scheme = QuantScheme.AFFINE_MINMAX_INT4 if bits == 4 else QuantScheme.AFFINE_MINMAX_INT8
    qmin, qmax = scheme.code_range
    vmin, vmax = float(w.min()), float(w.max())
    if vmax > vmin:
        codes = qmin + round_half_away((w - vmin) * (qmax - qmin) / (vmax - vmin))
        codes = np.clip(codes, qmin, qmax)
    else:
        codes = np.full(w.shape, qmin)
    return QuantizedTensor(scheme, w.shape, codes.astype(np.int8), [vmin, vmax])


def quantize_hist256(weights) -> QuantizedTensor:
    """256 equal-width bins over ``[min, max]``; each bin reconstructs to its members' mean."""
    w = _checked(weights)
    lo, hi = float(w.min()), float(w.max())
    table = np.empty(256)
    if hi > lo:
        width = (hi - lo) / 256
        codes = np.minimum(np.floor((w - lo) * 256 / (hi - lo)), 255).astype(np.uint8)
        sums = np.bincount(codes.ravel(), weights=w.ravel(), minlength=256)
        counts = np.bincount(codes.ravel(), minlength=256)
        centers = lo + (np.arange(256) + 0.5) * width
        occupied = counts > 0
        table[:] = centers
        table[occupied] = sums[occupied] / counts[occupied]
    else:
        codes = np.zeros(w.shape, dtype=np.uint8)
        table[:] = lo
    return QuantizedTensor(QuantScheme.HIST256, w.shape, codes, table)


def quantize_codebook(weights, scheme) -> QuantizedTensor:
    """Map each weight to the index of its nearest level (ties go to the lower index)."""
    scheme = QuantScheme.from_tag(scheme)
    if not scheme.is_codebook:
        raise ValueError(f"{scheme.tag} is not a codebook scheme")
    w = _checked(weights)
    levels = np.asarray(CODEBOOK_LEVELS[scheme])
    codes = np.argmin(np.abs(w[..., None] - levels), axis=-1).astype(np.uint8)
    return QuantizedTensor(scheme, w.shape, codes, levels)


def as_float64(weights) -> QuantizedTensor:
    w = np.asarray(weights, dtype=np.float64)
    return QuantizedTensor(QuantScheme.FLOAT64, w.shape, w.copy(), [])


def quantize(weights, scheme) -> QuantizedTensor:
    scheme = QuantScheme.from_tag(scheme)
    if scheme is QuantScheme.FLOAT64:
        return as_float64(weights)
    if scheme.is_symmetric:
        return quantize_sym_max(weights, scheme.bits)
    if scheme.is_affine:
        return quantize_affine_minmax(weights, scheme.bits)
    if scheme is QuantScheme.HIST256:
        return quantize_hist256(weights)
    return quantize_codebook(weights, scheme)


def dequantize(t: QuantizedTensor) -> np.ndarray:
    scheme = t.scheme
    if scheme is QuantScheme.FLOAT64:
        return np.asarray(t.codes, dtype=np.float64).reshape(t.shape)
    codes = np.asarray(t.codes).astype(np.int64)
    lo, hi = scheme.code_range
    bad = np.flatnonzero((codes < lo) | (codes > hi))
    if bad.size:
        raise FormatError(f"code {codes.ravel()[bad[0]]} at index {bad[0]} outside [{lo}, {hi}] "
                          f"for {scheme.tag}")
    if scheme.is_symmetric:
        (s,) = t.norm_params
        out = codes * s / hi
    elif scheme.is_affine:
        vmin, vmax = t.norm_params
        out = vmin + (codes - lo) * (vmax - vmin) / (hi - lo) if vmax > vmin else np.full(codes.shape, vmin)
    else:
        out = t.norm_params[codes]
    return np.asarray(out, dtype=np.float64).reshape(t.shape)


def roundtrip(weights, scheme):
    """Quantize then dequantize (storage-only quantization)."""
    return dequantize(quantize(weights, scheme))


@dataclass(frozen=True)
class SizeBreakdown:
    filter_bits: int
    classifier_bits: int

    @property
    def total_bits(self):
        return self.filter_bits + self.classifier_bits


def tensor_size_bits(element_count, scheme):
    """Logical bits: packed codes plus one float64 per normalization parameter."""
    scheme = QuantScheme.from_tag(scheme)
    if element_count <= 0:
        raise ValueError("element_count must be positive")
    return int(element_count) * scheme.bits + scheme.norm_param_count * 64


def model_size_bits(filter_tensors, classifier_tensors) -> SizeBreakdown:
    """Each argument is a list of ``(element_count, scheme)`` pairs."""
    return SizeBreakdown(
        filter_bits=sum(tensor_size_bits(n, s) for n, s in filter_tensors),
        classifier_bits=sum(tensor_size_bits(n, s) for n, s in classifier_tensors),
    )

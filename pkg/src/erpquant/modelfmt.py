"""Bit-exact binary model files.

Layout (little-endian)::

    "PTQM" | u16 version | u16 section_count
    per section:
        u8 kind | u8 scheme | u32 rows | u32 cols | u32 norm_param_count
        (rows = 0 marks a 1-D tensor of length cols)
        float64[norm_param_count]
        payload: ceil(rows * cols * bits / 8) bytes

Payload packing by scheme width:

* 64 bits: raw float64 values.
* 8 bits: signed bytes, except ``hist256`` indices which are unsigned.
* 4 bits: offset binary ``code + 8``, two per byte, even index in the low nibble.
* 1/2/3 bits (codebooks): level indices packed LSB-first into a bit stream.

Padding bits must be zero. Codebook level tables are fixed constants and are
not written (``norm_param_count = 0``).
"""

from __future__ import annotations

import enum
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import FormatError, TruncationError
from .quant import CODEBOOK_LEVELS, QuantizedTensor, QuantScheme

MAGIC = b"PTQM"
VERSION = 1
_FILE_HEADER = struct.Struct("<4sHH")
_SECTION_HEADER = struct.Struct("<BBIII")


class SectionKind(enum.IntEnum):
    XDAWN_FILTERS = 0
    BLDA = 1
    ELM_INPUT = 2
    ELM_BIAS = 3
    ELM_OUTPUT = 4
    STANDARDIZER = 5


@dataclass(frozen=True)
class Section:
    kind: SectionKind
    tensor: QuantizedTensor

    def __eq__(self, other):
        if not isinstance(other, Section):
            return NotImplemented
        return self.kind == other.kind and self.tensor == other.tensor


def payload_nbytes(count, scheme):
    return (count * QuantScheme(scheme).bits + 7) // 8


def _dims(shape):
    if len(shape) == 1:
        return 0, shape[0]
    if len(shape) == 2:
        return shape
    raise ValueError(f"only 1-D and 2-D tensors are supported, got shape {shape}")


def _pack_bits(values, bits):
    values = np.asarray(values, dtype=np.uint8).ravel()
    shifts = np.arange(bits, dtype=np.uint8)
    stream = ((values[:, None] >> shifts) & 1).astype(np.uint8).ravel()
    return np.packbits(stream, bitorder="little").tobytes()


def _unpack_bits(buf, count, bits):
    stream = np.unpackbits(np.frombuffer(buf, dtype=np.uint8), bitorder="little")
    used = stream[: count * bits].reshape(count, bits)
    if np.any(stream[count * bits:]):
        return None
    return (used << np.arange(bits, dtype=np.uint8)).sum(axis=1).astype(np.uint8)


def encode_payload(t: QuantizedTensor) -> bytes:
    scheme = t.scheme
    codes = np.asarray(t.codes).ravel()
    if scheme is QuantScheme.FLOAT64:
        return codes.astype("<f8").tobytes()
    if scheme is QuantScheme.HIST256:
        return codes.astype(np.uint8).tobytes()
    if scheme.bits == 8:
        return codes.astype(np.int8).tobytes()
    if scheme.bits == 4:
        nib = (codes.astype(np.int16) + 8).astype(np.uint8)
        if nib.size % 2:
            nib = np.append(nib, np.uint8(0))
        return (nib[0::2] | (nib[1::2] << 4)).astype(np.uint8).tobytes()
    return _pack_bits(codes, scheme.bits)


def decode_payload(buf, count, scheme, where=""):
    scheme = QuantScheme(scheme)
    if scheme is QuantScheme.FLOAT64:
        return np.frombuffer(buf, dtype="<f8", count=count).astype(np.float64)
    if scheme is QuantScheme.HIST256:
        return np.frombuffer(buf, dtype=np.uint8, count=count).copy()
    if scheme.bits == 8:
        return np.frombuffer(buf, dtype=np.int8, count=count).copy()
    if scheme.bits == 4:
        raw = np.frombuffer(buf, dtype=np.uint8)
        nib = np.empty(raw.size * 2, dtype=np.uint8)
        nib[0::2] = raw & 0x0F
        nib[1::2] = raw >> 4
        if count % 2 and nib[-1] != 0:
            raise FormatError(f"{where}nonzero padding nibble")
        return (nib[:count].astype(np.int16) - 8).astype(np.int8)
    codes = _unpack_bits(buf, count, scheme.bits)
    if codes is None:
        raise FormatError(f"{where}nonzero padding bits")
    return codes


def encode(sections) -> bytes:
    out = [_FILE_HEADER.pack(MAGIC, VERSION, len(sections))]
    for sec in sections:
        t = sec.tensor
        rows, cols = _dims(t.shape)
        scheme = t.scheme
        params = np.asarray([] if scheme.is_codebook else t.norm_params, dtype="<f8")
        out.append(_SECTION_HEADER.pack(int(sec.kind), int(scheme), rows, cols, params.size))
        out.append(params.tobytes())
        out.append(encode_payload(t))
    return b"".join(out)


def decode(raw: bytes):
    if len(raw) < _FILE_HEADER.size:
        raise TruncationError("file shorter than header", len(raw))
    magic, version, n_sections = _FILE_HEADER.unpack_from(raw, 0)
    if magic != MAGIC:
        raise FormatError(f"bad magic {magic!r}", 0)
    if version != VERSION:
        raise FormatError(f"unsupported version {version}", 4)
    pos = _FILE_HEADER.size
    sections = []
    for i in range(n_sections):
        where = f"section {i}: "
        if pos + _SECTION_HEADER.size > len(raw):
            raise TruncationError(f"{where}header truncated", pos)
        kind, scheme, rows, cols, n_params = _SECTION_HEADER.unpack_from(raw, pos)
        try:
            kind, scheme = SectionKind(kind), QuantScheme(scheme)
        except ValueError:
            raise FormatError(f"{where}unknown kind {kind} or scheme {scheme}", pos) from None
        expected_params = 0 if scheme.is_codebook else scheme.norm_param_count
        if n_params != expected_params:
            raise FormatError(f"{where}{scheme.tag} needs {expected_params} norm params, "
                              f"header says {n_params}", pos + 10)
        pos += _SECTION_HEADER.size
        if pos + 8 * n_params > len(raw):
            raise TruncationError(f"{where}norm params truncated", pos)
        params = np.frombuffer(raw, dtype="<f8", count=n_params, offset=pos).astype(np.float64)
        pos += 8 * n_params
        count = cols if rows == 0 else rows * cols
        nbytes = payload_nbytes(count, scheme)
        if pos + nbytes > len(raw):
            raise TruncationError(f"{where}payload needs {nbytes} bytes, "
                                  f"{len(raw) - pos} remain", len(raw))
        try:
            codes = decode_payload(raw[pos:pos + nbytes], count, scheme, where)
        except FormatError as exc:
            raise FormatError(str(exc), pos + nbytes - 1) from None
        pos += nbytes
        if scheme.is_codebook:
            params = np.asarray(CODEBOOK_LEVELS[scheme])
        shape = (cols,) if rows == 0 else (rows, cols)
        sections.append(Section(kind, QuantizedTensor(scheme, shape, codes.reshape(shape), params)))
    if pos != len(raw):
        raise FormatError(f"{len(raw) - pos} trailing bytes after last section", pos)
    return sections


def save_model(sections, path) -> int:
    data = encode(sections)
    Path(path).write_bytes(data)
    return len(data)


def load_model(path):
    return decode(Path(path).read_bytes())


def payload_bits(sections):
    """On-disk payload plus norm-parameter bits (excludes headers)."""
    total = 0
    for sec in sections:
        t = sec.tensor
        n_params = 0 if t.scheme.is_codebook else t.scheme.norm_param_count
        total += 8 * payload_nbytes(t.size, t.scheme) + 64 * n_params
    return total


def logical_bits(sections):
    return sum(sec.tensor.size_bits for sec in sections)

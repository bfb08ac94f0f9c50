"""On-disk formats: DGF1 field snapshots, EIG1 eigenvector dumps, CSV tables.

DGF1: magic "DGF1", little-endian u32 N, then (re, im) f64 pairs for
k = -N..N.  EIG1: magic "EIG1", u32 K, (re, im) pairs for k = 1..K, then
one (re, im) pair for the spectral parameter.  All little-endian.
"""

from __future__ import annotations

import hashlib
import struct

import numpy as np

from .spectral import RealCircleField


class FormatError(ValueError):
    """Malformed or truncated snapshot file."""


_DGF_MAGIC = b"DGF1"
_EIG_MAGIC = b"EIG1"


def write_dgf1(path, field: RealCircleField) -> None:
    n = field.max_mode
    buf = bytearray(_DGF_MAGIC)
    buf += struct.pack("<I", n)
    inter = np.empty(2 * len(field.coeffs))
    inter[0::2] = field.coeffs.real
    inter[1::2] = field.coeffs.imag
    buf += struct.pack(f"<{len(inter)}d", *inter)
    with open(path, "wb") as fh:
        fh.write(buf)


def read_dgf1(path) -> RealCircleField:
    with open(path, "rb") as fh:
        raw = fh.read()
    if raw[:4] != _DGF_MAGIC:
        raise FormatError(f"{path}: bad magic {raw[:4]!r}")
    if len(raw) < 8:
        raise FormatError(f"{path}: truncated header")
    (n,) = struct.unpack_from("<I", raw, 4)
    want = 8 + 16 * (2 * n + 1)
    if len(raw) != want:
        raise FormatError(f"{path}: expected {want} bytes for N={n}, got {len(raw)}")
    flat = np.frombuffer(raw, dtype="<f8", offset=8)
    c = flat[0::2] + 1j * flat[1::2]
    if not np.all(np.isfinite(flat)):
        raise FormatError(f"{path}: non-finite coefficient")
    try:
        return RealCircleField(c)
    except ValueError as e:
        raise FormatError(f"{path}: {e}") from e


def write_eig1(path, coeffs, lam) -> None:
    """coeffs holds modes k = 1..K."""
    c = np.asarray(coeffs, dtype=np.complex128)
    buf = bytearray(_EIG_MAGIC)
    buf += struct.pack("<I", len(c))
    inter = np.empty(2 * len(c) + 2)
    inter[0:-2:2] = c.real
    inter[1:-2:2] = c.imag
    inter[-2] = complex(lam).real
    inter[-1] = complex(lam).imag
    buf += struct.pack(f"<{len(inter)}d", *inter)
    with open(path, "wb") as fh:
        fh.write(buf)


def read_eig1(path):
    """Returns (coeffs for k = 1..K, lambda)."""
    with open(path, "rb") as fh:
        raw = fh.read()
    if raw[:4] != _EIG_MAGIC:
        raise FormatError(f"{path}: bad magic {raw[:4]!r}")
    (k,) = struct.unpack_from("<I", raw, 4)
    want = 8 + 16 * (k + 1)
    if len(raw) != want:
        raise FormatError(f"{path}: expected {want} bytes for K={k}, got {len(raw)}")
    flat = np.frombuffer(raw, dtype="<f8", offset=8)
    c = flat[0:-2:2] + 1j * flat[1:-2:2]
    lam = complex(flat[-2], flat[-1])
    return c, lam


def format_float(x) -> str:
    """17 significant digits, enough to round-trip a double exactly."""
    return format(float(x), ".17g")


def write_csv(path, header, rows) -> None:
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(v if isinstance(v, str) else format_float(v) for v in row) + "\n")


def sha256_of(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()

"""Feature matrix file formats.

Binary layout: 8-byte magic "DIVBSFM1", n_rows and dim as unsigned 64-bit
little-endian, a has_labels byte, then the row-major float64 payload and,
when labelled, n_rows int32 labels, all little-endian.  The binary format
round-trips bit-exactly; CSV uses shortest-exact decimal rendering and
round-trips value-exactly.
"""
from __future__ import annotations

import csv
import os
import struct
import tempfile

import numpy as np

from .errors import LoadError
from .linalg import FeatureMatrix

MAGIC = b"DIVBSFM1"
HEADER = struct.Struct("<8sQQB")  # 25 bytes


def atomic_write_bytes(path: str, payload: bytes):
    d = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "wb") as f:
            f.write(payload)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def atomic_write_text(path: str, text: str):
    atomic_write_bytes(path, text.encode("utf-8"))


def write_features_binary(matrix: FeatureMatrix, path: str):
    has_labels = matrix.row_labels is not None
    parts = [
        HEADER.pack(MAGIC, matrix.n_rows, matrix.dim, 1 if has_labels else 0),
        np.ascontiguousarray(matrix.values, dtype="<f8").tobytes(),
    ]
    if has_labels:
        parts.append(np.ascontiguousarray(matrix.row_labels, dtype="<i4").tobytes())
    atomic_write_bytes(path, b"".join(parts))


def read_features_binary(path: str) -> FeatureMatrix:
    with open(path, "rb") as f:
        blob = f.read()
    if len(blob) < HEADER.size:
        raise LoadError(f"{path}: truncated header at offset {len(blob)}")
    magic, n_rows, dim, has_labels = HEADER.unpack_from(blob, 0)
    if magic != MAGIC:
        raise LoadError(f"{path}: bad magic at offset 0")
    if has_labels not in (0, 1):
        raise LoadError(f"{path}: invalid has_labels byte at offset 24")
    expected = HEADER.size + 8 * n_rows * dim + 4 * n_rows * has_labels
    if len(blob) != expected:
        raise LoadError(
            f"{path}: file length {len(blob)} does not match expected {expected} bytes"
        )
    if n_rows < 1 or dim < 1:
        raise LoadError(f"{path}: invalid shape {n_rows}x{dim} in header")
    values = np.frombuffer(
        blob, dtype="<f8", count=n_rows * dim, offset=HEADER.size
    ).reshape(n_rows, dim)
    bad = np.flatnonzero(~np.isfinite(values.ravel()))
    if bad.size:
        off = HEADER.size + 8 * int(bad[0])
        raise LoadError(f"{path}: non-finite value at byte offset {off}")
    labels = None
    if has_labels:
        labels = np.frombuffer(
            blob, dtype="<i4", count=n_rows, offset=HEADER.size + 8 * n_rows * dim
        )
    return FeatureMatrix(values.copy(), None if labels is None else labels.copy())


def write_features_csv(matrix: FeatureMatrix, path: str):
    has_labels = matrix.row_labels is not None
    header = [f"f{j}" for j in range(matrix.dim)]
    if has_labels:
        header.append("label")
    lines = [",".join(header)]
    for i in range(matrix.n_rows):
        cells = [repr(float(v)) for v in matrix.values[i]]
        if has_labels:
            cells.append(str(int(matrix.row_labels[i])))
        lines.append(",".join(cells))
    atomic_write_text(path, "\n".join(lines) + "\n")


def read_features_csv(path: str) -> FeatureMatrix:
    with open(path, "r", newline="") as f:
        reader = csv.reader(f)
        try:
            header = next(reader)
        except StopIteration:
            raise LoadError(f"{path}: empty file at line 1") from None
        has_labels = bool(header) and header[-1].strip().lower() == "label"
        n_cols = len(header)
        dim = n_cols - 1 if has_labels else n_cols
        if dim < 1:
            raise LoadError(f"{path}: no feature columns at line 1")
        rows = []
        labels = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != n_cols:
                raise LoadError(f"{path}: expected {n_cols} columns at line {lineno}")
            try:
                vals = [float(c) for c in row[:dim]]
            except ValueError as exc:
                raise LoadError(f"{path}: bad number at line {lineno}: {exc}") from None
            if not all(np.isfinite(vals)):
                raise LoadError(f"{path}: non-finite value at line {lineno}")
            rows.append(vals)
            if has_labels:
                try:
                    labels.append(int(row[-1]))
                except ValueError:
                    raise LoadError(f"{path}: bad label at line {lineno}") from None
    if not rows:
        raise LoadError(f"{path}: no data rows")
    return FeatureMatrix(np.array(rows), np.array(labels, dtype=np.int32) if has_labels else None)


def read_features(path: str) -> FeatureMatrix:
    """Load a feature file, sniffing binary vs CSV by the magic bytes."""
    with open(path, "rb") as f:
        head = f.read(len(MAGIC))
    if head == MAGIC:
        return read_features_binary(path)
    return read_features_csv(path)


def write_features(matrix: FeatureMatrix, path: str, fmt: str | None = None):
    """Write a feature file; fmt defaults to csv for .csv paths, else binary."""
    if fmt is None:
        fmt = "csv" if path.lower().endswith(".csv") else "binary"
    if fmt == "csv":
        write_features_csv(matrix, path)
    elif fmt == "binary":
        write_features_binary(matrix, path)
    else:
        raise ValueError(f"unknown format {fmt!r}")

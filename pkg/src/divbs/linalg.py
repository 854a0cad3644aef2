"""Dense vector primitives and incremental orthonormal-basis maintenance.

Everything here is double precision and deterministic: identical inputs
produce bitwise-identical outputs on the same platform.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ContractViolationError

DEFAULT_EPS = 1e-10


def _as_float_vector(v) -> np.ndarray:
    a = np.asarray(v, dtype=np.float64)
    if a.ndim != 1:
        raise ContractViolationError(f"expected a 1-D vector, got shape {a.shape}")
    return a


def dot(a, b) -> float:
    """Inner product of two equal-length real vectors."""
    av = _as_float_vector(a)
    bv = _as_float_vector(b)
    if av.shape != bv.shape:
        raise ContractViolationError(
            f"dot: length mismatch {av.shape[0]} vs {bv.shape[0]}"
        )
    return float(np.dot(av, bv))


@dataclass
class FeatureMatrix:
    """N x D matrix of per-sample selection features, optionally labelled.

    values is row-major float64, one feature vector per row.  row_labels,
    when present, assigns an integer group/class id to each row.
    """

    values: np.ndarray
    row_labels: np.ndarray | None = None

    def __post_init__(self):
        self.values = np.ascontiguousarray(self.values, dtype=np.float64)
        if self.values.ndim != 2:
            raise ContractViolationError(
                f"feature values must be 2-D, got shape {self.values.shape}"
            )
        n, d = self.values.shape
        if n < 1 or d < 1:
            raise ContractViolationError(f"feature matrix must be at least 1x1, got {n}x{d}")
        if not np.isfinite(self.values).all():
            raise ContractViolationError("feature values contain NaN or Inf")
        if self.row_labels is not None:
            self.row_labels = np.ascontiguousarray(self.row_labels, dtype=np.int32)
            if self.row_labels.shape != (n,):
                raise ContractViolationError(
                    f"row_labels length {self.row_labels.shape} does not match {n} rows"
                )

    @property
    def n_rows(self) -> int:
        return self.values.shape[0]

    @property
    def dim(self) -> int:
        return self.values.shape[1]


def batch_sum(features: FeatureMatrix) -> np.ndarray:
    """Column-wise sum over all rows."""
    return features.values.sum(axis=0)


class OrthonormalBasis:
    """Ordered set of pairwise-orthonormal unit vectors, grown incrementally.

    eps controls when a residual counts as zero: a candidate is considered
    linearly dependent when its residual norm is <= eps * max(1, ||v||).
    """

    def __init__(self, dim: int, eps: float = DEFAULT_EPS):
        if dim < 1:
            raise ContractViolationError(f"basis dim must be >= 1, got {dim}")
        self.dim = int(dim)
        self.eps = float(eps)
        self._size = 0
        self._store = np.empty((min(16, self.dim), self.dim), dtype=np.float64)

    def __len__(self) -> int:
        return self._size

    @property
    def vectors(self) -> np.ndarray:
        """Basis vectors as a read-only (size, dim) view."""
        view = self._store[: self._size]
        view.flags.writeable = False
        return view

    def residual(self, v) -> np.ndarray:
        """Component of v orthogonal to the current span.

        Projection is subtracted in two sweeps; the second sweep scrubs
        roundoff left by heavy cancellation when v is nearly in the span.
        """
        r = _as_float_vector(v).copy()
        if r.shape[0] != self.dim:
            raise ContractViolationError(
                f"vector length {r.shape[0]} does not match basis dim {self.dim}"
            )
        E = self._store[: self._size]
        if self._size:
            r -= E.T @ (E @ r)
            r -= E.T @ (E @ r)
        return r

    def _append(self, e: np.ndarray):
        if self._size == self._store.shape[0]:
            grown = np.empty(
                (min(self.dim, max(2 * self._size, 1)), self.dim), dtype=np.float64
            )
            grown[: self._size] = self._store[: self._size]
            self._store = grown
        self._store[self._size] = e
        self._size += 1

    def extend(self, v) -> np.ndarray | None:
        """Append the normalized residual of v, or return None if dependent."""
        if self._size >= self.dim:
            return None
        vv = _as_float_vector(v)
        r = self.residual(vv)
        norm = float(np.linalg.norm(r))
        if norm <= self.eps * max(1.0, float(np.linalg.norm(vv))):
            return None
        e = r / norm
        self._append(e)
        return e

    def gram(self) -> np.ndarray:
        """Full Gram matrix of the basis vectors (identity when healthy)."""
        vecs = self.vectors
        return vecs @ vecs.T


# Module-level aliases matching the functional surface used elsewhere.
def residual(v, basis: OrthonormalBasis) -> np.ndarray:
    return basis.residual(v)


def extend_basis(basis: OrthonormalBasis, v) -> np.ndarray | None:
    return basis.extend(v)

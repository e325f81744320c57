"""Bit-packed GF(2) linear algebra.

Rows are stored as little-endian ``uint64`` words: column ``j`` lives in word
``j // 64`` at bit ``j % 64``.  Padding bits past the last column are always
zero, so equality and popcounts can work on whole words.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

WORD_BITS = 64


def n_words(n: int) -> int:
    return (n + WORD_BITS - 1) // WORD_BITS


def pack_bits(dense: np.ndarray) -> np.ndarray:
    """Pack a 2-D 0/1 array of shape ``(r, n)`` into ``(r, n_words(n))`` uint64."""
    dense = np.asarray(dense, dtype=np.uint8)
    if dense.ndim != 2:
        raise ValueError("pack_bits expects a 2-D array")
    r, n = dense.shape
    w = n_words(n)
    padded = np.zeros((r, w * WORD_BITS), dtype=np.uint8)
    padded[:, :n] = dense & 1
    packed = np.packbits(padded, axis=1, bitorder="little")
    return np.ascontiguousarray(packed).view("<u8").astype(np.uint64, copy=False)


def unpack_bits(words: np.ndarray, n: int) -> np.ndarray:
    words = np.ascontiguousarray(words, dtype=np.uint64)
    if words.ndim == 1:
        return unpack_bits(words[None, :], n)[0]
    as_bytes = words.astype("<u8", copy=False).view(np.uint8)
    return np.unpackbits(as_bytes, axis=1, count=n, bitorder="little")


def _popcount_rows(words: np.ndarray) -> np.ndarray:
    return np.bitwise_count(words).sum(axis=-1, dtype=np.int64)


class Gf2Vector:
    """Immutable packed binary vector."""

    def __init__(self, n: int, bits: np.ndarray | None = None):
        if n < 0:
            raise ValueError("vector length must be non-negative")
        self.n = int(n)
        if bits is None:
            bits = np.zeros(n_words(n), dtype=np.uint64)
        else:
            bits = np.array(bits, dtype=np.uint64, copy=True).reshape(-1)
            if bits.size != n_words(n):
                raise ValueError("bit storage does not match vector length")
        bits.flags.writeable = False
        self.bits = bits
        self._weight: int | None = None

    @classmethod
    def zeros(cls, n: int) -> "Gf2Vector":
        return cls(n)

    @classmethod
    def from_support(cls, n: int, support: Iterable[int]) -> "Gf2Vector":
        idx = np.asarray(sorted(set(int(i) for i in support)), dtype=np.int64)
        if idx.size and (idx[0] < 0 or idx[-1] >= n):
            raise IndexError("support index out of range")
        dense = np.zeros(n, dtype=np.uint8)
        dense[idx] = 1
        return cls.from_dense(dense)

    @classmethod
    def from_dense(cls, dense: Sequence[int] | np.ndarray) -> "Gf2Vector":
        arr = np.asarray(dense, dtype=np.uint8).reshape(-1) & 1
        return cls(arr.size, pack_bits(arr[None, :])[0])

    @property
    def weight(self) -> int:
        if self._weight is None:
            self._weight = int(np.bitwise_count(self.bits).sum())
        return self._weight

    def is_zero(self) -> bool:
        return not self.bits.any()

    def support(self) -> np.ndarray:
        return np.flatnonzero(self.to_dense())

    def to_dense(self) -> np.ndarray:
        return unpack_bits(self.bits, self.n)

    def __getitem__(self, i: int) -> int:
        if not 0 <= i < self.n:
            raise IndexError(i)
        return int((int(self.bits[i // WORD_BITS]) >> (i % WORD_BITS)) & 1)

    def __len__(self) -> int:
        return self.n

    def __xor__(self, other: "Gf2Vector") -> "Gf2Vector":
        if other.n != self.n:
            raise ValueError("length mismatch")
        return Gf2Vector(self.n, self.bits ^ other.bits)

    __add__ = __xor__

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Gf2Vector):
            return NotImplemented
        return self.n == other.n and bool(np.array_equal(self.bits, other.bits))

    def __hash__(self) -> int:
        return hash((self.n, self.bits.tobytes()))

    def __repr__(self) -> str:
        supp = self.support().tolist()
        if len(supp) > 12:
            shown = ", ".join(map(str, supp[:12])) + ", ..."
        else:
            shown = ", ".join(map(str, supp))
        return f"Gf2Vector(n={self.n}, weight={self.weight}, support=[{shown}])"


@dataclass(frozen=True)
class EliminationProfile:
    """Reduced row echelon data for one matrix.

    ``basis`` holds the nonzero RREF rows; row ``i`` has its leading one at
    ``pivots[i]`` and zeros at every other pivot column.
    """

    rows: int
    cols: int
    pivots: np.ndarray
    basis: "Gf2Matrix"

    @property
    def rank(self) -> int:
        return int(self.pivots.size)

    def reduce(self, v: Gf2Vector) -> Gf2Vector:
        """Residual of ``v`` after clearing every pivot column."""
        if v.n != self.cols:
            raise ValueError(f"vector length {v.n} != matrix columns {self.cols}")
        if self.rank == 0:
            return v
        p = self.pivots
        coeff = ((v.bits[p // WORD_BITS] >> (p % WORD_BITS).astype(np.uint64)) & 1).astype(bool)
        if not coeff.any():
            return v
        combo = np.bitwise_xor.reduce(self.basis.words[coeff], axis=0)
        return Gf2Vector(self.cols, v.bits ^ combo)

    def coefficients(self, v: Gf2Vector) -> np.ndarray:
        """Indices of basis rows whose sum equals ``v`` (valid when ``v`` is in the span)."""
        p = self.pivots
        coeff = ((v.bits[p // WORD_BITS] >> (p % WORD_BITS).astype(np.uint64)) & 1).astype(bool)
        return np.flatnonzero(coeff)


def _rref(words: np.ndarray, cols: int) -> tuple[np.ndarray, np.ndarray]:
    """In-place Gauss-Jordan elimination with lowest-index pivot selection."""
    nrows = words.shape[0]
    pivots: list[int] = []
    r = 0
    for col in range(cols):
        if r == nrows:
            break
        w = col // WORD_BITS
        shift = np.uint64(col % WORD_BITS)
        colbits = (words[:, w] >> shift) & np.uint64(1)
        below = np.flatnonzero(colbits[r:])
        if below.size == 0:
            continue
        p = r + int(below[0])
        if p != r:
            words[[r, p]] = words[[p, r]]
            colbits[[r, p]] = colbits[[p, r]]
        mask = colbits.astype(bool)
        mask[r] = False
        if mask.any():
            # rows >= r vanish left of col, so only words >= w can change
            words[mask, w:] ^= words[r, w:]
        pivots.append(col)
        r += 1
    return words[:r].copy(), np.asarray(pivots, dtype=np.int64)


class Gf2Matrix:
    """Dense bit-packed binary matrix; treat as immutable after construction."""

    def __init__(self, rows: int, cols: int, words: np.ndarray | None = None):
        if rows < 0 or cols < 0:
            raise ValueError("matrix dimensions must be non-negative")
        self.rows = int(rows)
        self.cols = int(cols)
        if words is None:
            words = np.zeros((rows, n_words(cols)), dtype=np.uint64)
        else:
            words = np.ascontiguousarray(words, dtype=np.uint64).reshape(rows, n_words(cols))
        words.flags.writeable = False
        self.words = words
        self._lock = threading.Lock()
        self._profile: EliminationProfile | None = None

    # construction -----------------------------------------------------

    @classmethod
    def zeros(cls, rows: int, cols: int) -> "Gf2Matrix":
        return cls(rows, cols)

    @classmethod
    def identity(cls, n: int) -> "Gf2Matrix":
        return cls.from_dense(np.eye(n, dtype=np.uint8))

    @classmethod
    def from_dense(cls, dense: np.ndarray | Sequence[Sequence[int]]) -> "Gf2Matrix":
        arr = np.asarray(dense, dtype=np.uint8)
        if arr.ndim != 2:
            if arr.size == 0:
                arr = arr.reshape(0, 0)
            else:
                raise ValueError("from_dense expects a 2-D array")
        return cls(arr.shape[0], arr.shape[1], pack_bits(arr & 1))

    @classmethod
    def from_supports(cls, rows: int, cols: int, supports: Iterable[Iterable[int]]) -> "Gf2Matrix":
        """Build from per-row column index lists; repeated indices cancel mod 2."""
        dense = np.zeros((rows, cols), dtype=np.uint8)
        count = 0
        for i, supp in enumerate(supports):
            for j in supp:
                dense[i, j] ^= 1
            count += 1
        if count != rows:
            raise ValueError(f"expected {rows} row supports, got {count}")
        return cls.from_dense(dense)

    @classmethod
    def from_vectors(cls, vectors: Sequence[Gf2Vector], cols: int | None = None) -> "Gf2Matrix":
        if not vectors:
            return cls(0, cols or 0)
        n = vectors[0].n
        if any(v.n != n for v in vectors):
            raise ValueError("vectors must share a length")
        return cls(len(vectors), n, np.stack([v.bits for v in vectors]))

    # views ------------------------------------------------------------

    @property
    def shape(self) -> tuple[int, int]:
        return (self.rows, self.cols)

    def to_dense(self) -> np.ndarray:
        if self.rows == 0:
            return np.zeros((0, self.cols), dtype=np.uint8)
        return unpack_bits(self.words, self.cols)

    def row(self, i: int) -> Gf2Vector:
        return Gf2Vector(self.cols, self.words[i])

    def row_vectors(self) -> list[Gf2Vector]:
        return [self.row(i) for i in range(self.rows)]

    def row_supports(self) -> list[np.ndarray]:
        dense = self.to_dense()
        return [np.flatnonzero(r) for r in dense]

    def columns(self, idx: Sequence[int] | np.ndarray) -> np.ndarray:
        """Dense ``(rows, len(idx))`` 0/1 array of the selected columns."""
        idx = np.asarray(idx, dtype=np.int64)
        if idx.size and (idx.min() < 0 or idx.max() >= self.cols):
            raise IndexError("column index out of range")
        shifts = (idx % WORD_BITS).astype(np.uint64)
        return ((self.words[:, idx // WORD_BITS] >> shifts) & np.uint64(1)).astype(np.uint8)

    def column_submatrix(self, idx: Sequence[int] | np.ndarray) -> "Gf2Matrix":
        return Gf2Matrix.from_dense(self.columns(idx))

    def select_rows(self, idx: Sequence[int] | np.ndarray) -> "Gf2Matrix":
        idx = np.asarray(idx, dtype=np.int64)
        return Gf2Matrix(idx.size, self.cols, self.words[idx])

    def transpose(self) -> "Gf2Matrix":
        return Gf2Matrix.from_dense(self.to_dense().T)

    @property
    def T(self) -> "Gf2Matrix":
        return self.transpose()

    def row_weights(self) -> np.ndarray:
        return _popcount_rows(self.words)

    def col_weights(self) -> np.ndarray:
        return self.to_dense().sum(axis=0, dtype=np.int64)

    def nnz(self) -> int:
        return int(_popcount_rows(self.words).sum())

    def is_zero(self) -> bool:
        return not self.words.any()

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Gf2Matrix):
            return NotImplemented
        return self.shape == other.shape and bool(np.array_equal(self.words, other.words))

    def __hash__(self) -> int:
        return hash((self.rows, self.cols, self.words.tobytes()))

    def __add__(self, other: "Gf2Matrix") -> "Gf2Matrix":
        if self.shape != other.shape:
            raise ValueError("shape mismatch")
        return Gf2Matrix(self.rows, self.cols, self.words ^ other.words)

    __xor__ = __add__

    def __matmul__(self, other):
        if isinstance(other, Gf2Vector):
            return mat_vec(self, other)
        return mat_mul(self, other)

    def __repr__(self) -> str:
        return f"Gf2Matrix({self.rows}x{self.cols}, nnz={self.nnz()})"

    # elimination ------------------------------------------------------

    def profile(self) -> EliminationProfile:
        if self._profile is None:
            with self._lock:
                if self._profile is None:
                    reduced, pivots = _rref(np.array(self.words, copy=True), self.cols)
                    basis = Gf2Matrix(reduced.shape[0], self.cols, reduced)
                    self._profile = EliminationProfile(self.rows, self.cols, pivots, basis)
        return self._profile

    @cached_property
    def rank(self) -> int:
        return self.profile().rank


def vstack(*mats: Gf2Matrix) -> Gf2Matrix:
    mats = tuple(m for m in mats)
    if not mats:
        raise ValueError("nothing to stack")
    cols = mats[0].cols
    if any(m.cols != cols for m in mats):
        raise ValueError("column counts differ")
    words = np.concatenate([m.words for m in mats], axis=0)
    return Gf2Matrix(words.shape[0], cols, words)


def hstack(*mats: Gf2Matrix) -> Gf2Matrix:
    rows = mats[0].rows
    if any(m.rows != rows for m in mats):
        raise ValueError("row counts differ")
    return Gf2Matrix.from_dense(np.concatenate([m.to_dense() for m in mats], axis=1))


def block_diag(*mats: Gf2Matrix) -> Gf2Matrix:
    rows = sum(m.rows for m in mats)
    cols = sum(m.cols for m in mats)
    dense = np.zeros((rows, cols), dtype=np.uint8)
    r = c = 0
    for m in mats:
        dense[r:r + m.rows, c:c + m.cols] = m.to_dense()
        r += m.rows
        c += m.cols
    return Gf2Matrix.from_dense(dense)


# ----------------------------------------------------------------------
# operations


def rank(m: Gf2Matrix) -> int:
    return m.profile().rank


def kernel_matrix(m: Gf2Matrix) -> Gf2Matrix:
    """Kernel basis as the rows of a ``(cols - rank) x cols`` matrix."""
    prof = m.profile()
    free = np.setdiff1d(np.arange(m.cols), prof.pivots, assume_unique=True)
    k = np.zeros((free.size, m.cols), dtype=np.uint8)
    k[np.arange(free.size), free] = 1
    if prof.rank and free.size:
        reduced = prof.basis.columns(free)  # rank x |free|
        k[:, prof.pivots] = reduced.T
    return Gf2Matrix.from_dense(k) if free.size else Gf2Matrix(0, m.cols)


def kernel_basis(m: Gf2Matrix) -> list[Gf2Vector]:
    return kernel_matrix(m).row_vectors()


def in_row_space(profile: EliminationProfile | Gf2Matrix, v: Gf2Vector) -> bool:
    if isinstance(profile, Gf2Matrix):
        profile = profile.profile()
    return profile.reduce(v).is_zero()


def _check_support(m: Gf2Matrix, support: Iterable[int]) -> np.ndarray:
    idx = np.unique(np.asarray(list(support), dtype=np.int64))
    if idx.size and (idx[0] < 0 or idx[-1] >= m.cols):
        raise IndexError("support index out of range")
    return idx


def restricted_kernel(m: Gf2Matrix, support: Iterable[int]) -> tuple[np.ndarray, Gf2Matrix]:
    """Kernel of ``m[:, support]`` in local coordinates.

    Returns the sorted support and a matrix whose rows are kernel vectors of
    the column submatrix (length ``len(support)``).
    """
    idx = _check_support(m, support)
    if idx.size == 0:
        return idx, Gf2Matrix(0, 0)
    sub = m.columns(idx)
    sub = sub[sub.any(axis=1)]
    return idx, kernel_matrix(Gf2Matrix.from_dense(sub.reshape(-1, idx.size)))


def embed(local: Gf2Matrix | np.ndarray, support: np.ndarray, n: int) -> np.ndarray:
    """Scatter local-coordinate rows back into dense length-``n`` rows."""
    dense_local = local.to_dense() if isinstance(local, Gf2Matrix) else np.asarray(local, dtype=np.uint8)
    out = np.zeros((dense_local.shape[0], n), dtype=np.uint8)
    out[:, support] = dense_local
    return out


def solve_restricted(m: Gf2Matrix, support: Iterable[int]) -> list[Gf2Vector]:
    idx, local = restricted_kernel(m, support)
    if idx.size == 0 or local.rows == 0:
        return []
    full = embed(local, idx, m.cols)
    return Gf2Matrix.from_dense(full).row_vectors()


def mat_vec(m: Gf2Matrix, v: Gf2Vector) -> Gf2Vector:
    if v.n != m.cols:
        raise ValueError(f"dimension mismatch: {m.shape} x {v.n}")
    if m.rows == 0:
        return Gf2Vector(0)
    parity = (_popcount_rows(m.words & v.bits) & 1).astype(np.uint8)
    return Gf2Vector.from_dense(parity)


def syndrome_dense(m: Gf2Matrix, v: Gf2Vector) -> np.ndarray:
    if v.n != m.cols:
        raise ValueError(f"dimension mismatch: {m.shape} x {v.n}")
    return (_popcount_rows(m.words & v.bits) & 1).astype(np.uint8)


def mat_mul(a: Gf2Matrix, b: Gf2Matrix) -> Gf2Matrix:
    if a.cols != b.rows:
        raise ValueError(f"dimension mismatch: {a.shape} x {b.shape}")
    out = np.zeros((a.rows, n_words(b.cols)), dtype=np.uint64)
    if a.rows and b.rows:
        dense = a.to_dense()
        for i in range(a.rows):
            idx = np.flatnonzero(dense[i])
            if idx.size:
                out[i] = np.bitwise_xor.reduce(b.words[idx], axis=0)
    return Gf2Matrix(a.rows, b.cols, out)


def combine_rows(m: Gf2Matrix, coeff: Iterable[int]) -> Gf2Vector:
    """Sum of the rows listed in ``coeff``."""
    idx = np.asarray(list(coeff), dtype=np.int64)
    if idx.size == 0:
        return Gf2Vector(m.cols)
    return Gf2Vector(m.cols, np.bitwise_xor.reduce(m.words[idx], axis=0))

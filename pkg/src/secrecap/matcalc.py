"""Matrix-calculus primitives for derivative assembly in reduced coordinates.

Conventions (frozen, all index maps depend on them):
  * vec is column-major: ``vec(A) = A.ravel(order="F")``.
  * vech stacks the lower triangle column by column, diagonal included,
    so for S = [[a, b], [b, c]] we get vech(S) = [a, b, c].

Duplication matrices are small dense 0/1 arrays, built once per dimension
and cached (dimensions up to 64 are supported, which covers the intended
problem sizes by a wide margin).
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np

__all__ = [
    "vec",
    "unvec",
    "vech",
    "unvech",
    "vech_len",
    "vech_dim",
    "vech_diag_indices",
    "duplication_matrix",
    "reduced_duplication_matrix",
    "kron",
    "sym",
    "psd_sqrt",
]

_MAX_DIM = 64


def sym(a: np.ndarray) -> np.ndarray:
    """Exact symmetrization, (A + A') / 2."""
    return 0.5 * (a + a.T)


def vec(a: np.ndarray) -> np.ndarray:
    """Column-major vectorization."""
    return np.asarray(a).ravel(order="F")


def unvec(v: np.ndarray, rows: int, cols: int) -> np.ndarray:
    """Inverse of :func:`vec` for a ``rows x cols`` matrix."""
    return np.asarray(v).reshape((rows, cols), order="F")


def vech_len(m: int) -> int:
    return m * (m + 1) // 2


def vech_dim(length: int) -> int:
    """Matrix dimension m with m(m+1)/2 == length."""
    m = int(round((np.sqrt(8 * length + 1) - 1) / 2))
    if vech_len(m) != length:
        raise ValueError(f"{length} is not a triangular number m(m+1)/2")
    return m


@lru_cache(maxsize=None)
def _vech_indices(m: int) -> tuple[np.ndarray, np.ndarray]:
    # Upper-triangle indices enumerate (r, c) row-major with r <= c; swapping
    # the two arrays walks the lower triangle column by column.
    iu = np.triu_indices(m)
    return iu[1].copy(), iu[0].copy()


def vech(s: np.ndarray) -> np.ndarray:
    """Half-vectorization: lower-triangular entries, column-wise."""
    s = np.asarray(s)
    if s.ndim != 2 or s.shape[0] != s.shape[1]:
        raise ValueError(f"vech needs a square matrix, got shape {s.shape}")
    rows, cols = _vech_indices(s.shape[0])
    return s[rows, cols].copy()


def unvech(v: np.ndarray) -> np.ndarray:
    """Rebuild the symmetric matrix S with vech(S) == v."""
    v = np.asarray(v)
    m = vech_dim(v.size)
    rows, cols = _vech_indices(m)
    s = np.zeros((m, m), dtype=float)
    s[rows, cols] = v
    s[cols, rows] = v
    return s


@lru_cache(maxsize=None)
def vech_diag_indices(m: int) -> np.ndarray:
    """Positions of the diagonal entries (i, i) inside vech order."""
    rows, cols = _vech_indices(m)
    return np.flatnonzero(rows == cols)


@lru_cache(maxsize=None)
def duplication_matrix(m: int) -> np.ndarray:
    """0/1 matrix D of shape (m^2, m(m+1)/2) with D @ vech(S) == vec(S)
    for every symmetric S."""
    if not 1 <= m <= _MAX_DIM:
        raise ValueError(f"dimension {m} outside supported range 1..{_MAX_DIM}")
    rows, cols = _vech_indices(m)
    half_index = np.zeros((m, m), dtype=int)
    half_index[rows, cols] = np.arange(rows.size)
    half_index[cols, rows] = half_index[rows, cols]
    d = np.zeros((m * m, vech_len(m)))
    for c in range(m):
        for r in range(m):
            d[c * m + r, half_index[r, c]] = 1.0
    d.flags.writeable = False
    return d


@lru_cache(maxsize=None)
def reduced_duplication_matrix(n1: int, n2: int) -> np.ndarray:
    """0/1 matrix Dt of shape ((n1+n2)^2, n1*n2) mapping vec(dB) of an
    n2 x n1 block B to vec of the hollow symmetric embedding

        [[0,  B'],
         [B,  0 ]].

    Equivalently the duplication matrix of dimension n1+n2 restricted to the
    columns addressing the off-diagonal block.
    """
    if not (1 <= n1 <= _MAX_DIM and 1 <= n2 <= _MAX_DIM):
        raise ValueError(f"dimensions ({n1}, {n2}) outside supported range")
    n = n1 + n2
    dt = np.zeros((n * n, n1 * n2))
    for j in range(n1):          # column of B
        for i in range(n2):      # row of B
            col = j * n2 + i     # column-major index into vec(B)
            dt[j * n + (n1 + i), col] = 1.0
            dt[(n1 + i) * n + j, col] = 1.0
    dt.flags.writeable = False
    return dt


def kron(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Kronecker product. With column-major vec this satisfies
    vec(B X A') == (A (x) B) vec(X) and tr(ABCD) == vec(D)'(A (x) C') vec(B')."""
    return np.kron(np.asarray(a), np.asarray(b))


def psd_sqrt(s: np.ndarray) -> np.ndarray:
    """Symmetric square root of a positive semidefinite matrix.

    Small negative eigenvalues from rounding are clipped to zero.
    """
    w, v = np.linalg.eigh(sym(np.asarray(s, dtype=float)))
    w = np.clip(w, 0.0, None)
    return sym((v * np.sqrt(w)) @ v.T)

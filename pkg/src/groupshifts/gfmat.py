"""Exact linear algebra over the prime field GF(p).

Matrices are 2-d numpy int64 arrays with entries reduced mod p.  Row spaces
represent subspaces; the canonical form is the reduced row echelon form with
zero rows dropped.  All arithmetic is exact (p is small, products fit easily
in int64).
"""

from __future__ import annotations

import numpy as np


def zeros(rows: int, cols: int) -> np.ndarray:
    return np.zeros((rows, cols), dtype=np.int64)


def identity(n: int) -> np.ndarray:
    return np.eye(n, dtype=np.int64)


def as_matrix(rows, cols: int, p: int) -> np.ndarray:
    """Build a reduced matrix from an iterable of rows (empty -> 0 x cols)."""
    rows = list(rows)
    if not rows:
        return zeros(0, cols)
    mat = np.array(rows, dtype=np.int64) % p
    if mat.ndim != 2 or mat.shape[1] != cols:
        raise ValueError(f"expected rows of length {cols}")
    return mat


def rref(mat: np.ndarray, p: int) -> tuple[np.ndarray, list[int]]:
    """Reduced row echelon form mod p; returns (matrix without zero rows,
    pivot column indices)."""
    m = mat.copy() % p
    nrows, ncols = m.shape
    pivots: list[int] = []
    r = 0
    for c in range(ncols):
        if r >= nrows:
            break
        sel = None
        for i in range(r, nrows):
            if m[i, c] % p:
                sel = i
                break
        if sel is None:
            continue
        if sel != r:
            m[[r, sel]] = m[[sel, r]]
        inv = pow(int(m[r, c]), p - 2, p)
        m[r] = (m[r] * inv) % p
        for i in range(nrows):
            if i != r and m[i, c]:
                m[i] = (m[i] - m[i, c] * m[r]) % p
        pivots.append(c)
        r += 1
    return m[:r], pivots


def rank(mat: np.ndarray, p: int) -> int:
    return rref(mat, p)[0].shape[0]


def in_row_space(basis: np.ndarray, vec: np.ndarray, p: int) -> bool:
    """Whether vec lies in the row space of an RREF basis."""
    v = vec.copy() % p
    for row in basis:
        piv = int(np.argmax(row != 0)) if row.any() else -1
        if piv >= 0 and v[piv]:
            v = (v - v[piv] * row) % p
    return not v.any()


def reduce_vector(basis: np.ndarray, vec: np.ndarray, p: int) -> np.ndarray:
    """Residue of vec modulo the row space of an RREF basis."""
    v = vec.copy() % p
    for row in basis:
        if not row.any():
            continue
        piv = int(np.argmax(row != 0))
        if v[piv]:
            v = (v - v[piv] * row) % p
    return v


def nullspace(mat: np.ndarray, p: int) -> np.ndarray:
    """RREF basis of {x : mat @ x = 0 (mod p)}."""
    ncols = mat.shape[1]
    red, pivots = rref(mat, p)
    free = [c for c in range(ncols) if c not in pivots]
    rows = []
    for f in free:
        v = np.zeros(ncols, dtype=np.int64)
        v[f] = 1
        for i, c in enumerate(pivots):
            v[c] = (-red[i, f]) % p
        rows.append(v)
    if not rows:
        return zeros(0, ncols)
    basis, _ = rref(np.array(rows, dtype=np.int64), p)
    return basis


def intersect_row_spaces(a: np.ndarray, b: np.ndarray, p: int) -> np.ndarray:
    """RREF basis of rowspace(a) & rowspace(b) (Zassenhaus)."""
    ncols = a.shape[1]
    if b.shape[1] != ncols:
        raise ValueError("width mismatch")
    top = np.hstack([a, a])
    bot = np.hstack([b, zeros(b.shape[0], ncols)])
    stacked = np.vstack([top, bot]) if top.size or bot.size else zeros(0, 2 * ncols)
    red, _ = rref(stacked, p)
    rows = [row[ncols:] for row in red if not row[:ncols].any()]
    basis, _ = rref(as_matrix(rows, ncols, p), p) if rows else (zeros(0, ncols), [])
    return basis


def annihilator(basis: np.ndarray, ncols: int, p: int) -> np.ndarray:
    """Basis N with rowspace(basis) = {v : N @ v = 0}; N has ncols columns."""
    if basis.shape[0] == 0:
        return identity(ncols)
    return nullspace(basis, p)


def solve_image(basis: np.ndarray, target: np.ndarray, p: int):
    """Coefficients x with x @ basis = target, or None if target is outside
    the row space.  basis must be in RREF."""
    v = target.copy() % p
    coeffs = np.zeros(basis.shape[0], dtype=np.int64)
    for i, row in enumerate(basis):
        if not row.any():
            continue
        piv = int(np.argmax(row != 0))
        if v[piv]:
            coeffs[i] = v[piv]
            v = (v - v[piv] * row) % p
    if v.any():
        return None
    return coeffs

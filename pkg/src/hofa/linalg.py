"""Exact Gaussian elimination over F_p on int64 numpy arrays."""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .errors import SchemaError
from .space import Coset, _coords


def rref(a, p: int) -> tuple[np.ndarray, list[int]]:
    """Reduced row echelon form of ``a`` mod p and its pivot columns."""
    m = np.array(a, dtype=np.int64) % p
    if m.ndim != 2:
        raise SchemaError("rref expects a matrix")
    rows, cols = m.shape
    pivots = []
    r = 0
    for c in range(cols):
        if r == rows:
            break
        nz = np.nonzero(m[r:, c])[0]
        if nz.size == 0:
            continue
        piv = r + nz[0]
        if piv != r:
            m[[r, piv]] = m[[piv, r]]
        m[r] = (m[r] * pow(int(m[r, c]), -1, p)) % p
        col = m[:, c].copy()
        col[r] = 0
        m = (m - np.outer(col, m[r])) % p
        pivots.append(c)
        r += 1
    return m, pivots


def rank_fp(a, p: int) -> int:
    a = np.asarray(a)
    if a.size == 0:
        return 0
    return len(rref(a, p)[1])


def solve_mod_p(a, b, p: int) -> np.ndarray | None:
    """One solution of ``a @ x = b`` mod p (free variables set to 0), or None."""
    a = np.asarray(a, dtype=np.int64) % p
    b = np.asarray(b, dtype=np.int64).reshape(-1) % p
    rows, cols = a.shape
    if rows != b.shape[0]:
        raise SchemaError("right-hand side length does not match the matrix")
    if cols == 0:
        return np.zeros(0, np.int64) if not b.any() else None
    aug, pivots = rref(np.hstack([a, b[:, None]]), p)
    if cols in pivots:
        return None
    x = np.zeros(cols, dtype=np.int64)
    for r, c in enumerate(pivots):
        x[c] = aug[r, -1]
    return x


def nullspace_mod_p(a, p: int) -> np.ndarray:
    """Basis of ``{x : a @ x = 0}`` as rows of the returned array."""
    a = np.asarray(a, dtype=np.int64) % p
    cols = a.shape[1]
    r, pivots = rref(a, p) if a.shape[0] else (np.zeros((0, cols), np.int64), [])
    free = [c for c in range(cols) if c not in pivots]
    basis = np.zeros((len(free), cols), dtype=np.int64)
    for i, f in enumerate(free):
        basis[i, f] = 1
        for row, c in enumerate(pivots):
            basis[i, c] = (-r[row, f]) % p
    return basis


def inverse_mod_p(a, p: int) -> np.ndarray:
    a = np.asarray(a, dtype=np.int64) % p
    n = a.shape[0]
    if a.shape != (n, n):
        raise SchemaError("inverse of a non-square matrix")
    aug, pivots = rref(np.hstack([a, np.eye(n, dtype=np.int64)]), p)
    if pivots[:n] != list(range(n)):
        raise SchemaError("matrix is singular")
    return aug[:, n:]


def _coset_system(constraints, coset: Coset):
    p = coset.p
    if not constraints:
        return np.zeros((0, coset.dim), np.int64), np.zeros(0, np.int64)
    xs = np.array([_coords(x) for x, _ in constraints], dtype=np.int64)
    if xs.shape[1] != coset.n:
        raise SchemaError(f"constraint vectors have dimension {xs.shape[1]}, coset lives in F_p^{coset.n}")
    lam = np.array([int(l) for _, l in constraints], dtype=np.int64)
    mat = (xs @ coset.basis_matrix.T) % p
    rhs = (lam - xs @ np.asarray(coset.u0, np.int64)) % p
    return mat, rhs


def solvability_criterion(constraints: Sequence, coset: Coset) -> bool:
    """Criterion (ii): every ``mu`` with ``sum mu_i x_i`` orthogonal to U kills ``lambda - x.u0``."""
    mat, rhs = _coset_system(constraints, coset)
    if mat.shape[0] == 0:
        return True
    mus = nullspace_mod_p(mat.T, coset.p)
    return not ((mus @ rhs) % coset.p).any()


def solve_on_coset(constraints: Sequence, coset: Coset) -> tuple | None:
    """Some ``y`` in ``coset`` with ``x_i . y = lambda_i`` for every constraint, or None.

    ``constraints`` is a sequence of ``(x_i, lambda_i)`` pairs.  The row
    reduction is cross-checked against :func:`solvability_criterion`.
    """
    p = coset.p
    mat, rhs = _coset_system(constraints, coset)
    if mat.shape[0] == 0:
        return coset.u0
    lam = solve_mod_p(mat, rhs, p)
    assert (lam is not None) == solvability_criterion(constraints, coset)
    if lam is None:
        return None
    y = (np.asarray(coset.u0) + lam @ coset.basis_matrix) % p if coset.dim else np.asarray(coset.u0)
    return tuple(int(c) for c in y)

"""Exhaustive scans over coefficient vectors.

Candidates are maps ``x -> C @ features(x)`` with ``C`` ranging over every
``(h, F)`` residue matrix.  Candidate order is lexicographic in the
flattened ``C`` (component 1 first, feature 1 most significant), so taking
the first maximiser gives the lexicographically smallest one.
"""

from __future__ import annotations

import numpy as np

from .space import ProductSpace, character, check_budget

CHUNK = 1 << 14


def _all_rows(p: int, nfeat: int) -> np.ndarray:
    return ProductSpace(p, (nfeat,)).coords


def best_agreement(features: np.ndarray, targets: np.ndarray, p: int, budget: int | None = None) -> tuple[np.ndarray, int]:
    """Maximise ``#{x : C @ features[x] = targets[x]}`` over all ``C``.

    ``features`` is ``(D, F)``, ``targets`` is ``(D, h)``.  Returns the
    lexicographically first maximiser and the count.
    """
    features = np.asarray(features, dtype=np.int64) % p
    targets = np.asarray(targets, dtype=np.int64) % p
    if targets.ndim == 1:
        targets = targets[:, None]
    ndom, nfeat = features.shape
    h = targets.shape[1]
    rows_count = p**nfeat
    check_budget(rows_count**h * max(ndom, 1), budget, "agreement scan")
    rows = _all_rows(p, nfeat)
    if ndom == 0:
        return np.zeros((h, nfeat), np.int64), 0
    vals = (rows @ features.T) % p  # (R, D)
    hits = [vals == targets[:, c][None, :] for c in range(h)]
    acc = hits[0]
    for c in range(1, h):
        acc = (acc[:, None, :] & hits[c][None, :, :]).reshape(-1, ndom)
    counts = acc.sum(axis=1)
    best = int(np.argmax(counts))
    digits = np.unravel_index(best, (rows_count,) * h)
    return np.stack([rows[i] for i in digits]), int(counts[best])


def best_correlation(features: np.ndarray, values: np.ndarray, p: int, tol: float = 1e-12, budget: int | None = None) -> tuple[np.ndarray, float]:
    """Maximise ``|E_x f(x) chi(c . features(x))|`` over all coefficient rows ``c``.

    The average is over all ``D`` rows of ``features``; maximisers within
    ``tol`` of the best value tie, and the lexicographically smallest wins.
    """
    features = np.asarray(features, dtype=np.int64) % p
    ndom, nfeat = features.shape
    count = p**nfeat
    check_budget(count * ndom, budget, "correlation scan")
    rows = _all_rows(p, nfeat)
    corr = np.empty(count)
    for lo in range(0, count, CHUNK):
        chunk = rows[lo : lo + CHUNK]
        corr[lo : lo + CHUNK] = np.abs(character(p, (chunk @ features.T) % p) @ values) / ndom
    first = int(np.flatnonzero(corr >= corr.max() - tol)[0])
    return rows[first].copy(), float(corr[first])

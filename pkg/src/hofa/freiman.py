"""Partial maps and Freiman-type structure on them.

A :class:`PartialMap` is a domain ``A`` inside a product space together
with values in ``F_p^h``.  This module checks (multi-)homomorphism
properties exactly, counts additive quadruples, extends dense
2-homomorphisms to affine maps, builds arrangements and tri-arrangements,
and runs the brute-force scans used as oracles for the inverse theorems.

Vectors in ``F_p^h`` are often packed into a single integer code in the
canonical order of ``F_p^h``; vector addition then becomes a table lookup.
"""

from __future__ import annotations

import itertools
from collections import Counter
from dataclasses import dataclass
from functools import cached_property
from typing import Iterator, Sequence

import numpy as np

from .errors import PreconditionError, SchemaError
from .multiaffine import MultiAffineMap, _shape_of, all_subsets
from .rng import SplitMix64, derive_seed
from .search import best_agreement
from .space import Coset, LinearMapFp, ProductSpace, check_budget


@dataclass(frozen=True, eq=False)
class PartialMap:
    """``phi : A -> F_p^h`` with ``A`` a subset of ``space``."""

    space: ProductSpace
    h: int
    domain: np.ndarray  # bool, one flag per point
    values: np.ndarray  # (total_size, h); zero off the domain

    def __post_init__(self):
        s = self.space
        dom = np.asarray(self.domain, dtype=bool).reshape(-1)
        vals = np.asarray(self.values, dtype=np.int64).reshape(s.total_size, self.h) % s.p
        if dom.shape[0] != s.total_size:
            raise SchemaError("domain flags do not match the space")
        vals = np.where(dom[:, None], vals, 0)
        dom.setflags(write=False)
        vals.setflags(write=False)
        object.__setattr__(self, "domain", dom)
        object.__setattr__(self, "values", vals)

    @classmethod
    def from_entries(cls, space: ProductSpace, h: int, entries) -> PartialMap:
        """``entries`` maps point (or index) to a value vector."""
        dom = np.zeros(space.total_size, bool)
        vals = np.zeros((space.total_size, h), np.int64)
        items = entries.items() if hasattr(entries, "items") else entries
        for x, v in items:
            i = int(x) if isinstance(x, (int, np.integer)) else space.index_of(x)
            if dom[i]:
                raise SchemaError(f"point {i} listed twice")
            dom[i] = True
            vals[i] = np.asarray(v, dtype=np.int64).reshape(h)
        return cls(space, h, dom, vals)

    @classmethod
    def restriction(cls, phi, domain=None) -> PartialMap:
        """Restrict a :class:`MultiAffineMap` or :class:`LinearMapFp` to ``domain`` (mask or indices)."""
        if isinstance(phi, MultiAffineMap):
            space, h, table = phi.space, phi.h, phi.table
        else:
            raise SchemaError("can only restrict a MultiAffineMap")
        return cls(space, h, _as_mask(space, domain), table)

    @classmethod
    def full(cls, space: ProductSpace, values) -> PartialMap:
        vals = np.asarray(values, dtype=np.int64)
        vals = vals.reshape(space.total_size, -1)
        return cls(space, vals.shape[1], np.ones(space.total_size, bool), vals)

    @property
    def p(self) -> int:
        return self.space.p

    @property
    def size(self) -> int:
        return int(self.domain.sum())

    @property
    def density(self) -> float:
        return self.size / self.space.total_size

    @cached_property
    def indices(self) -> np.ndarray:
        return np.flatnonzero(self.domain)

    @cached_property
    def codes(self) -> np.ndarray:
        """Values packed into integers (canonical order of ``F_p^h``)."""
        return _value_space(self.p, self.h).indices_of(self.values)

    def __call__(self, x):
        i = int(x) if isinstance(x, (int, np.integer)) else self.space.index_of(x)
        if not self.domain[i]:
            return None
        return tuple(int(v) for v in self.values[i])

    def restrict(self, mask) -> PartialMap:
        return PartialMap(self.space, self.h, self.domain & _as_mask(self.space, mask), self.values)

    def with_values(self, values) -> PartialMap:
        return PartialMap(self.space, self.h, self.domain, values)

    def flat(self) -> PartialMap:
        return PartialMap(self.space.flat(), self.h, self.domain, self.values)

    def __eq__(self, other):
        return (
            isinstance(other, PartialMap)
            and self.space == other.space
            and self.h == other.h
            and np.array_equal(self.domain, other.domain)
            and np.array_equal(self.values, other.values)
        )

    __hash__ = None

    def to_json(self) -> dict:
        return {
            "space": self.space.to_json(),
            "h": self.h,
            "entries": [[int(i), [int(v) for v in self.values[i]]] for i in self.indices],
        }

    @classmethod
    def from_json(cls, obj: dict) -> PartialMap:
        try:
            space = ProductSpace.from_json(obj["space"])
            h = int(obj["h"])
            return cls.from_entries(space, h, [(int(i), v) for i, v in obj["entries"]])
        except (KeyError, TypeError, ValueError) as exc:
            raise SchemaError(f"bad partial-map JSON: {exc}") from exc


def _as_mask(space: ProductSpace, domain) -> np.ndarray:
    if domain is None:
        return np.ones(space.total_size, bool)
    arr = np.asarray(domain)
    if arr.dtype == bool:
        if arr.shape != (space.total_size,):
            raise SchemaError("domain mask has the wrong length")
        return arr.copy()
    mask = np.zeros(space.total_size, bool)
    mask[arr.astype(np.int64).reshape(-1)] = True
    return mask


def _value_space(p: int, h: int) -> ProductSpace:
    return ProductSpace(p, (h,))


# --------------------------------------------------------------------------- homomorphisms


@dataclass(frozen=True)
class HomCheck:
    ok: bool
    witness: tuple | None = None  # ((a_1..a_m), (b_1..b_m)) as point indices

    def __bool__(self):
        return self.ok

    def to_json(self) -> dict:
        return {"ok": self.ok, "witness": None if self.witness is None else [list(t) for t in self.witness]}


def _hom_dp(group: ProductSpace, dom: np.ndarray, codes: np.ndarray, m: int, p: int, h: int):
    """Freiman m-homomorphism test on many slices of one group at once.

    ``dom`` and ``codes`` are ``(S, |G|)``.  Tracks which (sum of points,
    sum of values) pairs are reachable with j terms, with a parent pointer
    per state; a sum reached with two different value sums is a violation.
    Returns one witness (or None) per slice.
    """
    n = group.total_size
    vs = _value_space(p, h)
    P = vs.total_size
    S = dom.shape[0]
    check_budget(m * S * n * n * P, group.budget, "homomorphism check")
    add_g = group.add_table
    add_v = vs.add_table
    state_g = np.repeat(np.arange(n), P)
    state_v = np.tile(np.arange(P), n)
    reach = np.zeros((S, n * P), bool)
    reach[:, 0] = True
    parents = []
    rows = np.arange(S)[:, None]
    for _ in range(m):
        new = np.zeros_like(reach)
        par = np.full((S, n * P), -1, np.int64)
        for a in range(n):
            live = dom[:, a]
            if not live.any():
                continue
            tgt = add_g[state_g, a][None, :] * P + add_v[state_v[None, :], codes[:, a][:, None]]
            src = reach & live[:, None]
            fresh = src & ~new[rows, tgt]
            par_view = par[rows, tgt]
            par[rows, tgt] = np.where(fresh, a, par_view)
            new[rows, tgt] |= src
        parents.append(par)
        reach = new
    out = []
    grid = reach.reshape(S, n, P)
    for s in range(S):
        multi = np.flatnonzero(grid[s].sum(axis=1) > 1)
        if multi.size == 0:
            out.append(None)
            continue
        g = int(multi[0])
        c1, c2 = np.flatnonzero(grid[s, g])[:2]
        out.append((_backtrack(parents, s, g * P + c1, add_g, add_v, codes[s], P, group),
                    _backtrack(parents, s, g * P + c2, add_g, add_v, codes[s], P, group)))
    return out


def _backtrack(parents, s, state, add_g, add_v, codes, P, group):
    neg_g = group.neg
    seq = []
    for par in reversed(parents):
        a = int(par[s, state])
        seq.append(a)
        g, v = divmod(state, P)
        g_prev = int(add_g[g, neg_g[a]])
        # v_prev is the code with v_prev + code(a) = v
        v_prev = int(np.flatnonzero(add_v[:, codes[a]] == v)[0])
        state = g_prev * P + v_prev
    assert state == 0
    return tuple(reversed(seq))


def is_freiman_hom(phi: PartialMap, m: int = 2, mode: str = "exhaustive", samples: int = 100_000, seed: int = 0) -> HomCheck:
    """Does ``sum a_i = sum b_i`` force ``sum phi(a_i) = sum phi(b_i)`` (m terms a side)?

    The space is read as the single group ``F_p^{sum dims}``.
    """
    if m < 1:
        raise SchemaError("order must be positive")
    flat = phi.space.flat()
    if mode == "exhaustive":
        wit = _hom_dp(flat, phi.domain[None, :], phi.codes[None, :], m, phi.p, phi.h)[0]
        return HomCheck(wit is None, wit)
    if mode != "sample":
        raise SchemaError(f"unknown mode {mode!r}")
    idx = phi.indices
    if idx.size == 0:
        return HomCheck(True)
    rng = SplitMix64(seed)
    c = flat.coords
    for _ in range(samples):
        a = idx[rng.integers(idx.size, m)]
        b = idx[rng.integers(idx.size, m - 1)]
        last = flat.indices_of((c[a].sum(axis=0) - c[b].sum(axis=0))[None, :])[0]
        if not phi.domain[last]:
            continue
        b = np.append(b, last)
        if ((phi.values[a].sum(axis=0) - phi.values[b].sum(axis=0)) % phi.p).any():
            return HomCheck(False, (tuple(int(i) for i in a), tuple(int(i) for i in b)))
    return HomCheck(True)


def _slices(space: ProductSpace, d: int):
    """Index array ``(S, |G_d|)``: row s lists the points of the s-th line in direction d."""
    full = tuple(space.factor_size(e) for e in range(1, space.k + 1))
    idx = np.arange(space.total_size).reshape(full)
    return np.moveaxis(idx, d - 1, -1).reshape(-1, full[d - 1])


def is_multi_hom(phi: PartialMap, m: int = 2) -> HomCheck:
    """Freiman m-homomorphism along every axis-parallel line."""
    s = phi.space
    for d in range(1, s.k + 1):
        lines = _slices(s, d)
        wits = _hom_dp(s.factor(d), phi.domain[lines], phi.codes[lines], m, s.p, phi.h)
        for row, wit in enumerate(wits):
            if wit is not None:
                a, b = wit
                return HomCheck(False, (tuple(int(lines[row, i]) for i in a), tuple(int(lines[row, i]) for i in b)))
    return HomCheck(True)


def count_d_additive_quadruples(space: ProductSpace, subset, d: int, sigma: PartialMap | None = None) -> tuple[int, int]:
    """Ordered quadruples in ``S`` agreeing off ``d`` with ``x - y + z - w = 0`` in ``G_d``.

    Returns ``(total, respected)``; ``respected`` counts those with
    ``sigma(x) - sigma(y) + sigma(z) - sigma(w) = 0`` (equal to ``total``
    when ``sigma`` is None).  Degenerate quadruples are included.
    """
    mask = _as_mask(space, subset)
    lines = _slices(space, d)
    g = space.factor(d)
    n = g.total_size
    check_budget(lines.shape[0] * n * n, space.budget, "quadruple count")
    add = g.add_table
    inl = mask[lines]  # (S, n)
    pair = inl[:, :, None] & inl[:, None, :]
    srow = np.arange(lines.shape[0])[:, None, None]
    key = srow * n + add[None, :, :]
    r = np.bincount(key[pair], minlength=lines.shape[0] * n)
    total = int((r.astype(np.int64) ** 2).sum())
    if sigma is None:
        return total, total
    if sigma.space != space:
        raise SchemaError("sigma lives on a different space")
    if (mask & ~sigma.domain).any():
        raise SchemaError("sigma must be defined on all of S")
    vs = _value_space(space.p, sigma.h)
    codes = sigma.codes[lines]
    vsum = vs.add_table[codes[:, :, None], codes[:, None, :]]
    key2 = key * vs.total_size + vsum
    r2 = np.bincount(key2[pair], minlength=lines.shape[0] * n * vs.total_size)
    respected = int((r2.astype(np.int64) ** 2).sum())
    assert respected <= total
    return total, respected


# --------------------------------------------------------------------------- affine extension


@dataclass(frozen=True, eq=False)
class AffineOnCoset:
    """An affine map on ``coset``, written in the coset's coordinates ``lambda``."""

    coset: Coset
    map: LinearMapFp  # lambda -> F_p^h

    def __call__(self, x) -> tuple:
        return tuple(int(v) for v in self.map(self.coset.coordinates_of(x)))

    def table(self) -> np.ndarray:
        """Values at ``coset.members()`` in order."""
        return self.map(self.coset.params())

    def to_json(self) -> dict:
        return {
            "coset": {"u0": list(self.coset.u0), "basis": [list(b) for b in self.coset.basis]},
            "matrix": self.map.matrix.tolist(),
            "offset": self.map.offset.tolist(),
        }


def _coset_view(phi: PartialMap, coset: Coset | None) -> tuple[Coset, np.ndarray, np.ndarray]:
    """Coset, member indices in the flat space, and which members lie in the domain."""
    flat = phi.space.flat()
    coset = coset or Coset.full(phi.p, flat.ncoords)
    if coset.n != flat.ncoords:
        raise SchemaError("coset dimension does not match the space")
    members = flat.indices_of(coset.members())
    outside = phi.domain.copy()
    outside[members] = False
    if outside.any():
        raise SchemaError("domain is not contained in the coset")
    return coset, members, phi.domain[members]


def affine_extension(phi: PartialMap, coset: Coset | None = None, strict: bool = True) -> AffineOnCoset:
    """The affine map on ``coset`` extending a dense 2-homomorphism.

    Needs ``|A| > (4/5)|C|``.  The value at ``x`` is ``phi(a) + phi(b) - phi(c)``
    for the first ``a, b, c`` in ``A`` with ``a + b - c = x``.  With
    ``strict`` the result is compared against an exhaustive scan of all
    affine maps on ``C`` to confirm it is the only one extending ``phi``.
    """
    coset, members, indom = _coset_view(phi, coset)
    p = phi.p
    size = members.size
    if 5 * int(indom.sum()) <= 4 * size:
        raise PreconditionError(f"domain density {indom.sum()}/{size} is not above 4/5")
    hom = is_freiman_hom(phi, 2)
    if not hom:
        raise PreconditionError("phi does not respect every additive quadruple", witness=hom.witness)
    # work in coset coordinates, where the coset is the group F_p^dim
    t = ProductSpace(p, (coset.dim,))
    vals = phi.values[members]  # value of the j-th member, member j has coordinates t.coords[j]
    dom = np.flatnonzero(indom)
    add = t.add_table
    sub = add[:, t.neg]
    psi = np.zeros((size, phi.h), np.int64)
    for x in range(size):
        # b = x - a + c for every (a, c) in A x A
        b = sub[x][dom][:, None]
        b = add[b, dom[None, :]]
        ok = indom[b]
        if not ok.any():
            raise AssertionError("density bound failed to produce a representation")
        ia, ic = np.unravel_index(int(np.flatnonzero(ok.reshape(-1))[0]), ok.shape)
        a, c, bb = dom[ia], dom[ic], b[ia, ic]
        psi[x] = (vals[a] + vals[bb] - vals[c]) % p
    offset = psi[0]
    # e_i sits at index p^(dim-1-i) in canonical order
    unit = [p ** (coset.dim - 1 - i) for i in range(coset.dim)]
    matrix = np.stack([(psi[u] - offset) % p for u in unit], axis=1) if coset.dim else np.zeros((phi.h, 0), np.int64)
    ext = AffineOnCoset(coset, LinearMapFp(p, matrix.reshape(phi.h, coset.dim), offset))
    assert np.array_equal(ext.table(), psi), "extension is not affine on the coset"
    assert np.array_equal(psi[indom], vals[indom]), "extension does not agree with phi"
    if strict:
        feats = np.hstack([np.ones((size, 1), np.int64), t.coords])[dom]
        count = _count_extensions(feats, vals[dom], p, phi.h)
        assert count == 1, f"{count} affine maps extend phi"
    return ext


def _count_extensions(feats: np.ndarray, targets: np.ndarray, p: int, h: int) -> int:
    rows = ProductSpace(p, (feats.shape[1],)).coords
    check_budget(rows.shape[0] * feats.shape[0] * h, None, "affine uniqueness scan")
    vals = (rows @ feats.T) % p
    n = 1
    for c in range(h):
        n *= int((vals == targets[:, c][None, :]).all(axis=1).sum())
    return n


def best_affine_agreement(phi: PartialMap, coset: Coset | None = None, budget: int | None = None) -> tuple[AffineOnCoset, int]:
    """Affine map on the coset agreeing with ``phi`` most often (lexicographic ties)."""
    coset, members, indom = _coset_view(phi, coset)
    t = ProductSpace(phi.p, (coset.dim,))
    feats = np.hstack([np.ones((members.size, 1), np.int64), t.coords])
    coeffs, count = best_agreement(feats[indom], phi.values[members][indom], phi.p, budget)
    return AffineOnCoset(coset, LinearMapFp(phi.p, coeffs[:, 1:], coeffs[:, 0])), count


# --------------------------------------------------------------------------- arrangements


@dataclass(frozen=True)
class Arrangement:
    """Points of a ``word``-arrangement (word[0] is the outermost split) of the given lengths."""

    space: ProductSpace
    word: tuple
    lengths: int
    points: tuple

    def __post_init__(self):
        word = tuple(int(d) for d in self.word)
        for d in word:
            self.space._dir(d)
        object.__setattr__(self, "word", word)
        if len(self.points) != 2 ** len(word):
            raise SchemaError("an arrangement of a length-r word has 2^r points")
        got = _arrangement_lengths(self.space, word, np.asarray(self.points))
        if got != int(self.lengths):
            raise SchemaError("points do not satisfy the arrangement length law")

    @property
    def signs(self) -> np.ndarray:
        return arrangement_signs(len(self.word))

    def to_json(self) -> dict:
        return {"word": list(self.word), "lengths": int(self.lengths), "points": [int(i) for i in self.points]}


def arrangement_signs(r: int) -> np.ndarray:
    """``+1`` for points reached through an even number of second halves."""
    signs = np.ones(1, np.int64)
    for _ in range(r):
        signs = np.concatenate([signs, -signs])
    return signs


def _arrangement_lengths(space: ProductSpace, word, pts: np.ndarray) -> int | None:
    if not word:
        return int(pts[0])
    half = len(pts) // 2
    l1 = _arrangement_lengths(space, word[1:], pts[:half])
    l2 = _arrangement_lengths(space, word[1:], pts[half:])
    if l1 is None or l2 is None:
        return None
    d = word[0]
    lo, hi = space.offsets[d - 1], space.offsets[d]
    c1, c2 = space.coords[l1].copy(), space.coords[l2]
    keep = np.ones(space.ncoords, bool)
    keep[lo:hi] = False
    if not np.array_equal(c1[keep], c2[keep]):
        return None
    c1[lo:hi] -= c2[lo:hi]
    return int(space.indices_of(c1[None, :])[0])


def _arrangement_slots(word) -> list:
    """Direction of every free parameter, in the order they are consumed."""
    if not word:
        return []
    rest = _arrangement_slots(word[1:])
    return [word[0]] + rest + rest


def _build_arrangements(space: ProductSpace, word, lengths: np.ndarray, params: Iterator) -> np.ndarray:
    """``(M, 2^r, ncoords)`` coordinates; ``params`` yields ``(M,)`` factor indices per slot."""
    if not word:
        return lengths[:, None, :]
    d = word[0]
    lo, hi = space.offsets[d - 1], space.offsets[d]
    y = space.factor(d).coords[next(params)]
    l1 = lengths.copy()
    l1[:, lo:hi] = (l1[:, lo:hi] + y) % space.p
    l2 = lengths.copy()
    l2[:, lo:hi] = y
    q1 = _build_arrangements(space, word[1:], l1, params)
    q2 = _build_arrangements(space, word[1:], l2, params)
    return np.concatenate([q1, q2], axis=1)


def _param_grid(space: ProductSpace, slots, mode: str, count: int, rng: SplitMix64 | None, budget) -> np.ndarray:
    sizes = [space.factor_size(d) for d in slots]
    if mode == "exhaustive":
        total = int(np.prod(sizes, dtype=object)) if sizes else 1
        check_budget(total * 2 ** max(len(slots), 1), budget if budget is not None else space.budget, "arrangement enumeration")
        if not sizes:
            return np.zeros((0, 1), np.int64)
        return np.indices(sizes).reshape(len(sizes), -1)
    if mode == "sample":
        return np.stack([rng.integers(n, count) for n in sizes]) if sizes else np.zeros((0, count), np.int64)
    raise SchemaError(f"unknown mode {mode!r}")


def arrangement_points(space: ProductSpace, word, lengths, mode: str = "exhaustive", count: int = 0,
                       seed: int = 0, budget: int | None = None) -> np.ndarray:
    """Point indices ``(M, 2^r)`` of all (or ``count`` sampled) arrangements."""
    word = tuple(int(d) for d in word)
    for d in word:
        space._dir(d)
    lidx = int(lengths) if isinstance(lengths, (int, np.integer)) else space.index_of(lengths)
    slots = _arrangement_slots(word)
    grid = _param_grid(space, slots, mode, count, SplitMix64(seed) if mode == "sample" else None, budget)
    m = grid.shape[1]
    base = np.tile(space.coords[lidx], (m, 1))
    pts = _build_arrangements(space, word, base, iter(grid))
    return space.indices_of(pts.reshape(-1, space.ncoords)).reshape(m, -1)


def enumerate_arrangements(space: ProductSpace, word, lengths, mode: str = "exhaustive", count: int = 0,
                           seed: int = 0, budget: int | None = None) -> Iterator[Arrangement]:
    lidx = int(lengths) if isinstance(lengths, (int, np.integer)) else space.index_of(lengths)
    for row in arrangement_points(space, word, lidx, mode, count, seed, budget):
        yield Arrangement(space, tuple(word), lidx, tuple(int(i) for i in row))


def _signed_values(phi: PartialMap, pts: np.ndarray, signs: np.ndarray):
    valid = phi.domain[pts].all(axis=1)
    vals = (phi.values[pts] * signs[None, :, None]).sum(axis=1) % phi.p
    return vals, valid


def arrangement_value(phi: PartialMap, q: Arrangement) -> tuple | None:
    """``phi(q) = phi(q_1) - phi(q_2)`` recursively; None if a point is outside the domain."""
    vals, valid = _signed_values(phi, np.asarray(q.points)[None, :], q.signs)
    return tuple(int(v) for v in vals[0]) if valid[0] else None


@dataclass(frozen=True)
class TriArrangement:
    """Points of a ``(k, k-1, ..., i)``-tri-arrangement; the outermost split is in direction i."""

    space: ProductSpace
    word: tuple
    lengths: int
    points: tuple

    def __post_init__(self):
        word = _check_tri_word(self.space, self.word)
        object.__setattr__(self, "word", word)
        if len(self.points) != 3 ** len(word):
            raise SchemaError("a tri-arrangement of a length-r word has 3^r points")
        if _tri_lengths(self.space, word, np.asarray(self.points)) != int(self.lengths):
            raise SchemaError("points do not satisfy the tri-arrangement length law")

    @property
    def signs(self) -> np.ndarray:
        return tri_signs(len(self.word))

    def to_json(self) -> dict:
        return {"word": list(self.word), "lengths": int(self.lengths), "points": [int(i) for i in self.points]}


def _check_tri_word(space: ProductSpace, word) -> tuple:
    word = tuple(int(d) for d in word)
    if word and word != tuple(range(space.k, space.k - len(word), -1)):
        raise SchemaError(f"tri-arrangement words run k, k-1, ..., i; got {word}")
    return word


def tri_signs(r: int) -> np.ndarray:
    signs = np.ones(1, np.int64)
    for _ in range(r):
        signs = np.concatenate([signs, signs, -signs])
    return signs


def _tri_lengths(space: ProductSpace, word, pts: np.ndarray) -> int | None:
    if not word:
        return int(pts[0])
    third = len(pts) // 3
    ls = [_tri_lengths(space, word[:-1], pts[j * third : (j + 1) * third]) for j in range(3)]
    if any(l is None for l in ls):
        return None
    i = word[-1]
    lo, hi = space.offsets[i - 1], space.offsets[i]
    cs = [space.coords[l].copy() for l in ls]
    keep = np.ones(space.ncoords, bool)
    keep[lo:hi] = False
    if not (np.array_equal(cs[0][keep], cs[1][keep]) and np.array_equal(cs[0][keep], cs[2][keep])):
        return None
    out = cs[0]
    out[lo:hi] = cs[0][lo:hi] + cs[1][lo:hi] - cs[2][lo:hi]
    return int(space.indices_of(out[None, :])[0])


def _tri_slots(word) -> list:
    if not word:
        return []
    rest = _tri_slots(word[:-1])
    return [word[-1], word[-1]] + rest * 3


def _build_tri(space: ProductSpace, word, lengths: np.ndarray, params: Iterator) -> np.ndarray:
    if not word:
        return lengths[:, None, :]
    i = word[-1]
    lo, hi = space.offsets[i - 1], space.offsets[i]
    fc = space.factor(i).coords
    u, v = fc[next(params)], fc[next(params)]
    w = (u + v - lengths[:, lo:hi]) % space.p
    parts = []
    for val in (u, v, w):
        l = lengths.copy()
        l[:, lo:hi] = val
        parts.append(_build_tri(space, word[:-1], l, params))
    return np.concatenate(parts, axis=1)


def tri_arrangement_points(space: ProductSpace, word, lengths, mode: str = "exhaustive", count: int = 0,
                           seed: int = 0, budget: int | None = None) -> np.ndarray:
    word = _check_tri_word(space, word)
    lidx = int(lengths) if isinstance(lengths, (int, np.integer)) else space.index_of(lengths)
    slots = _tri_slots(word)
    grid = _param_grid(space, slots, mode, count, SplitMix64(seed) if mode == "sample" else None, budget)
    m = grid.shape[1]
    base = np.tile(space.coords[lidx], (m, 1))
    pts = _build_tri(space, word, base, iter(grid))
    return space.indices_of(pts.reshape(-1, space.ncoords)).reshape(m, -1)


def enumerate_tri_arrangements(space: ProductSpace, word, lengths, mode: str = "exhaustive", count: int = 0,
                               seed: int = 0, budget: int | None = None) -> Iterator[TriArrangement]:
    lidx = int(lengths) if isinstance(lengths, (int, np.integer)) else space.index_of(lengths)
    for row in tri_arrangement_points(space, word, lidx, mode, count, seed, budget):
        yield TriArrangement(space, tuple(word), lidx, tuple(int(i) for i in row))


def tri_arrangement_value(phi: PartialMap, q: TriArrangement) -> tuple | None:
    """``phi(q) = phi(q_1) + phi(q_2) - phi(q_3)`` recursively."""
    vals, valid = _signed_values(phi, np.asarray(q.points)[None, :], q.signs)
    return tuple(int(v) for v in vals[0]) if valid[0] else None


# --------------------------------------------------------------------------- random filtering and census


def drc_filter(phi: PartialMap, t: int, seed: int) -> PartialMap:
    """Keep ``x`` with ``pi(phi(x)) = psi(x)`` for random linear ``pi`` and multilinear ``psi``.

    ``pi : F_p^h -> F_p^t`` is drawn first, then the coefficients of the
    ``[k]``-linear ``psi`` into ``F_p^t``, all from ``SplitMix64(seed)``.
    """
    if t < 0:
        raise SchemaError("t must be non-negative")
    if t == 0:
        return phi
    s = phi.space
    rng = SplitMix64(seed)
    pi = rng.residues(s.p, t * phi.h).reshape(t, phi.h)
    top = frozenset(range(1, s.k + 1))
    shape = (t,) + _shape_of(s, top)
    psi = MultiAffineMap(s, t, {top: rng.residues(s.p, int(np.prod(shape))).reshape(shape)})
    kept = ((phi.values @ pi.T) % s.p == psi.table).all(axis=1)
    return phi.restrict(kept)


@dataclass(frozen=True)
class CensusReport:
    equal_fraction: float | None
    tuples_valid: int
    tuples_drawn: int
    per_lengths: tuple  # (lengths index, valid tuples, modal value or None)

    def to_json(self) -> dict:
        return {
            "equal_fraction": self.equal_fraction,
            "tuples_valid": self.tuples_valid,
            "tuples_drawn": self.tuples_drawn,
            "per_lengths": [
                {"lengths": l, "valid": n, "value": None if v is None else list(v), "status": "ok" if v is not None else "no data"}
                for l, n, v in self.per_lengths
            ],
        }


def respected_census(phi: PartialMap, shapes: Sequence[Sequence[int]], lengths_sample: int, per_lengths: int, seed: int) -> CensusReport:
    """Sampled agreement of arrangement values with common lengths.

    Lengths are drawn first (stratum ``j`` uses the seed derived from
    ``(seed, j)``); inside a stratum, ``per_lengths`` tuples of
    arrangements, one per shape, are sampled.  A tuple counts when all its
    points lie in the domain, and agrees when all its values coincide.
    """
    s = phi.space
    root = SplitMix64(seed)
    lengths = root.integers(s.total_size, lengths_sample)
    valid_total = agree_total = 0
    rows = []
    for j, l in enumerate(lengths):
        sub = derive_seed(seed, j)
        vals, oks = [], []
        for n, word in enumerate(shapes):
            pts = arrangement_points(s, word, int(l), "sample", per_lengths, derive_seed(sub, n))
            v, ok = _signed_values(phi, pts, arrangement_signs(len(word)))
            vals.append(v)
            oks.append(ok)
        ok = np.all(oks, axis=0)
        codes = np.stack([_value_space(s.p, phi.h).indices_of(v) for v in vals])  # (shapes, samples)
        agree = ok & (codes == codes[0]).all(axis=0)
        valid_total += int(ok.sum())
        agree_total += int(agree.sum())
        if ok.any():
            counter = Counter(int(c) for c in codes[:, ok].reshape(-1))
            top = max(counter.values())
            mode = min(c for c, n in counter.items() if n == top)
            modal = tuple(int(x) for x in _value_space(s.p, phi.h).coords[mode])
        else:
            modal = None
        rows.append((int(l), int(ok.sum()), modal))
    frac = agree_total / valid_total if valid_total else None
    return CensusReport(frac, valid_total, lengths_sample * per_lengths, tuple(rows))


# --------------------------------------------------------------------------- inverse-theorem oracle


def monomial_features(space: ProductSpace) -> tuple[list, np.ndarray]:
    """Labels ``(I, j)`` and the ``(total_size, prod(n_i + 1))`` table of ``prod_{i in I} x_{i, j_i}``."""
    labels, cols = [], []
    for I in all_subsets(space.k):
        order = sorted(I)
        for j in itertools.product(*[range(space.dims[d - 1]) for d in order]):
            col = np.ones(space.total_size, np.int64)
            for d, jj in zip(order, j):
                col = col * space.coords[:, space.offsets[d - 1] + jj]
            labels.append((I, j))
            cols.append(col % space.p)
    return labels, np.stack(cols, axis=1)


def _map_from_coeffs(space: ProductSpace, labels, coeffs: np.ndarray) -> MultiAffineMap:
    h = coeffs.shape[0]
    parts = {}
    for n, (I, j) in enumerate(labels):
        arr = parts.setdefault(I, np.zeros((h,) + _shape_of(space, I), np.int64))
        arr[(slice(None),) + tuple(j)] = coeffs[:, n]
    return MultiAffineMap(space, h, parts)


def multiaffine_inverse_search(phi: PartialMap, budget: int | None = None) -> tuple[MultiAffineMap, int]:
    """Global multiaffine map agreeing with ``phi`` on the most domain points."""
    labels, feats = monomial_features(phi.space)
    coeffs, count = best_agreement(feats[phi.domain], phi.values[phi.domain], phi.p, budget)
    return _map_from_coeffs(phi.space, labels, coeffs), count


def corrupt(phi: PartialMap, fraction: float, seed: int) -> PartialMap:
    """Replace the values at ``round(fraction |A|)`` domain points by different random values."""
    if not 0 <= fraction <= 1:
        raise SchemaError("fraction must lie in [0, 1]")
    idx = phi.indices
    n = int(round(fraction * idx.size))
    if n == 0:
        return phi
    rng = SplitMix64(seed)
    chosen = idx[rng.permutation(idx.size)[:n]]
    vals = phi.values.copy()
    shift = rng.integers(phi.p**phi.h - 1, n) + 1 if phi.p**phi.h > 1 else np.zeros(n, np.int64)
    vs = _value_space(phi.p, phi.h)
    new_codes = vs.add_table[phi.codes[chosen], shift]
    vals[chosen] = vs.coords[new_codes]
    return phi.with_values(vals)


def random_domain(space: ProductSpace, density: float, seed: int) -> np.ndarray:
    """Mask with exactly ``round(density |G|)`` points."""
    rng = SplitMix64(seed)
    n = int(round(density * space.total_size))
    mask = np.zeros(space.total_size, bool)
    mask[rng.permutation(space.total_size)[:n]] = True
    return mask


def drc_kept_rate(phi: PartialMap, t: int, trials: int, seed: int) -> dict:
    """Mean kept fraction of the domain over ``trials`` filters seeded by ``(seed, i)``.

    ``expected`` is exact: a point is kept with probability ``p^-t`` unless
    some factor vanishes and its value is zero, in which case it always is.
    """
    if phi.size == 0:
        raise SchemaError("empty domain")
    s = phi.space
    idx = phi.indices
    zero_factor = np.zeros(idx.size, bool)
    for d in range(1, s.k + 1):
        zero_factor |= ~s.coords[idx][:, s.axes_of(d)].any(axis=1)
    always = zero_factor & ~phi.values[idx].any(axis=1)
    kept = np.array([drc_filter(phi, t, derive_seed(seed, i)).size / phi.size for i in range(trials)])
    mean = float(kept.mean())
    se = float(kept.std(ddof=1) / np.sqrt(trials)) if trials > 1 else 0.0
    expected = float(np.where(always, 1.0, float(phi.p) ** -t).mean()) if t else 1.0
    return {"mean": mean, "se": se, "expected": expected, "z": (mean - expected) / se if se else 0.0, "trials": trials}

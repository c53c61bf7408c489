"""Multilinear forms, multiaffine maps and their varieties.

A multilinear form on ``G_I`` stores one coefficient per choice of basis
coordinate in each factor of ``I``; a multiaffine map into ``F_p^h`` stores,
for every ``I``, an ``(h, n_i...)`` coefficient array.  Everything is
evaluated exactly over the integers and reduced mod p, and whole-space
tables are built by contracting one factor at a time.

Sets ``I`` are 1-based frozensets, matching the direction numbering used
throughout the package.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Iterator, Mapping, Sequence

import numpy as np

from .errors import BudgetError, PreconditionError, SchemaError
from .linalg import solve_mod_p
from .rng import SplitMix64
from .space import Coset, ProductSpace, character, check_budget

TOL = 1e-9


def _subset(I) -> frozenset:
    return frozenset(int(i) for i in I)


def _shape_of(space: ProductSpace, I) -> tuple:
    return tuple(space.dims[d - 1] for d in sorted(I))


def _check_subset(space: ProductSpace, I) -> None:
    for d in I:
        space._dir(d)


def _contract(space: ProductSpace, I, coeffs: np.ndarray) -> np.ndarray:
    """Evaluate ``coeffs`` (leading axes, then one axis per factor of I) at every point.

    Returns ``(*lead, s_1, ..., s_k)`` with ``s_d = |G_d|`` for ``d in I``
    and 1 otherwise, so parts on different supports broadcast together.
    """
    p = space.p
    order = sorted(I)
    t = np.asarray(coeffs, dtype=np.int64) % p
    lead = t.ndim - len(order)
    for d in order:
        xd = space.factor(d).coords
        t = np.tensordot(t, xd, axes=([lead], [1])) % p
    shape = t.shape[:lead] + tuple(space.factor_size(d) if d in I else 1 for d in range(1, space.k + 1))
    return t.reshape(shape)


# --------------------------------------------------------------------------- types


@dataclass(frozen=True, eq=False)
class MultilinearForm:
    """``alpha(x_I) = sum_j coeffs[j] prod_{i in I} x_{i, j_i}`` mod p."""

    space: ProductSpace
    support: frozenset
    coeffs: np.ndarray

    def __post_init__(self):
        support = _subset(self.support)
        _check_subset(self.space, support)
        c = np.asarray(self.coeffs, dtype=np.int64) % self.space.p
        if c.shape != _shape_of(self.space, support):
            raise SchemaError(f"coefficient shape {c.shape} does not match support {sorted(support)}")
        c.setflags(write=False)
        object.__setattr__(self, "support", support)
        object.__setattr__(self, "coeffs", c)

    @classmethod
    def zero(cls, space: ProductSpace, support) -> MultilinearForm:
        support = _subset(support)
        return cls(space, support, np.zeros(_shape_of(space, support), np.int64))

    @classmethod
    def random(cls, space: ProductSpace, support, rng: SplitMix64) -> MultilinearForm:
        support = _subset(support)
        shape = _shape_of(space, support)
        return cls(space, support, rng.residues(space.p, int(np.prod(shape, dtype=int))).reshape(shape))

    @property
    def p(self) -> int:
        return self.space.p

    def is_zero(self) -> bool:
        return not self.coeffs.any()

    def __call__(self, x) -> int:
        return eval_form(self, x)

    @cached_property
    def table(self) -> np.ndarray:
        """Values at every point of the space, canonical order."""
        check_budget(self.space.total_size, self.space.budget, "form table")
        return np.broadcast_to(_contract(self.space, self.support, self.coeffs), self._full_shape).reshape(-1)

    @property
    def _full_shape(self) -> tuple:
        return tuple(self.space.factor_size(d) for d in range(1, self.space.k + 1))

    def as_map(self) -> MultiAffineMap:
        return MultiAffineMap(self.space, 1, {self.support: self.coeffs[None, ...]})

    def __eq__(self, other):
        return (
            isinstance(other, MultilinearForm)
            and self.space == other.space
            and self.support == other.support
            and np.array_equal(self.coeffs, other.coeffs)
        )

    __hash__ = None


def eval_form(alpha: MultilinearForm, x) -> int:
    """Evaluate at a full point ``x`` (one vector per factor); coordinates outside the support are ignored."""
    s = alpha.space
    flat = s.flatten_point(x)
    t = alpha.coeffs
    for d in sorted(alpha.support):
        lo, hi = s.offsets[d - 1], s.offsets[d]
        t = np.tensordot(flat[lo:hi], t, axes=([0], [0])) % s.p
    return int(t) % s.p


@dataclass(frozen=True, eq=False)
class MultiAffineMap:
    """``Phi(x) = sum_I Phi_I(x_I)`` into ``F_p^h``; ``parts[I]`` has shape ``(h, n_I...)``."""

    space: ProductSpace
    h: int
    parts: Mapping = field(default_factory=dict)

    def __post_init__(self):
        if self.h < 0:
            raise SchemaError("codomain dimension must be non-negative")
        clean = {}
        for I, c in dict(self.parts).items():
            I = _subset(I)
            _check_subset(self.space, I)
            c = np.asarray(c, dtype=np.int64) % self.space.p
            want = (self.h,) + _shape_of(self.space, I)
            if c.shape != want:
                raise SchemaError(f"part {sorted(I)} has shape {c.shape}, expected {want}")
            if I in clean:
                c = (clean[I] + c) % self.space.p
            c.setflags(write=False)
            clean[I] = c
        object.__setattr__(self, "parts", clean)

    @classmethod
    def zero(cls, space: ProductSpace, h: int) -> MultiAffineMap:
        return cls(space, h, {})

    @classmethod
    def from_forms(cls, forms: Sequence[Sequence[MultilinearForm]]) -> MultiAffineMap:
        """Component ``c`` is the sum of the forms in ``forms[c]``."""
        if not forms:
            raise SchemaError("need at least one component")
        space = next(f.space for comp in forms for f in comp)
        h = len(forms)
        parts: dict = {}
        for c, comp in enumerate(forms):
            for f in comp:
                arr = parts.setdefault(f.support, np.zeros((h,) + _shape_of(space, f.support), np.int64))
                arr[c] = (arr[c] + f.coeffs) % space.p
        return cls(space, h, parts)

    @classmethod
    def random(cls, space: ProductSpace, h: int, rng: SplitMix64, supports: Iterable | None = None) -> MultiAffineMap:
        """Uniform coefficients on every listed support (default: all subsets of [k])."""
        if supports is None:
            supports = all_subsets(space.k)
        parts = {}
        for I in supports:
            I = _subset(I)
            shape = (h,) + _shape_of(space, I)
            parts[I] = rng.residues(space.p, int(np.prod(shape, dtype=int))).reshape(shape)
        return cls(space, h, parts)

    @property
    def p(self) -> int:
        return self.space.p

    def nonzero_parts(self) -> dict:
        return {I: c for I, c in self.parts.items() if c.any()}

    def multilinear_parts(self) -> dict:
        """The stored decomposition, one ``(h, n_I...)`` array per nonzero ``I``."""
        return dict(sorted(self.nonzero_parts().items(), key=lambda kv: (len(kv[0]), sorted(kv[0]))))

    def component(self, c: int) -> MultiAffineMap:
        return MultiAffineMap(self.space, 1, {I: a[c : c + 1] for I, a in self.parts.items()})

    def form(self, I, c: int = 0) -> MultilinearForm:
        I = _subset(I)
        arr = self.parts.get(I)
        if arr is None:
            return MultilinearForm.zero(self.space, I)
        return MultilinearForm(self.space, I, arr[c])

    @cached_property
    def table(self) -> np.ndarray:
        """``(total_size, h)`` array of values in canonical order."""
        s = self.space
        check_budget(s.total_size * max(self.h, 1), s.budget, "map table")
        full = tuple(s.factor_size(d) for d in range(1, s.k + 1))
        acc = np.zeros((self.h,) + full, dtype=np.int64)
        for I, c in self.parts.items():
            acc = (acc + _contract(s, I, c)) % s.p
        return acc.reshape(self.h, -1).T.copy()

    def __call__(self, x) -> tuple:
        return eval_map(self, x)

    def __eq__(self, other):
        if not isinstance(other, MultiAffineMap) or self.space != other.space or self.h != other.h:
            return False
        a, b = self.nonzero_parts(), other.nonzero_parts()
        return a.keys() == b.keys() and all(np.array_equal(a[I], b[I]) for I in a)

    __hash__ = None

    def to_json(self) -> dict:
        return {
            "space": self.space.to_json(),
            "h": self.h,
            "parts": [{"I": sorted(I), "coeffs": c.tolist()} for I, c in self.multilinear_parts().items()],
        }

    @classmethod
    def from_json(cls, obj: dict, space: ProductSpace | None = None) -> MultiAffineMap:
        try:
            space = space or ProductSpace.from_json(obj["space"])
            return cls(space, int(obj["h"]), {_subset(part["I"]): np.array(part["coeffs"], dtype=np.int64) for part in obj["parts"]})
        except (KeyError, TypeError, ValueError) as exc:
            raise SchemaError(f"bad multiaffine-map JSON: {exc}") from exc


def eval_map(phi: MultiAffineMap, x) -> tuple:
    s = phi.space
    flat = s.flatten_point(x)
    out = np.zeros(phi.h, dtype=np.int64)
    for I, c in phi.parts.items():
        t = c
        for d in sorted(I):
            lo, hi = s.offsets[d - 1], s.offsets[d]
            t = np.tensordot(t, flat[lo:hi], axes=([1], [0])) % s.p
        out = (out + t) % s.p
    return tuple(int(v) for v in out)


def all_subsets(k: int) -> list:
    return [frozenset(c) for r in range(k + 1) for c in itertools.combinations(range(1, k + 1), r)]


@dataclass(frozen=True)
class DownSet:
    """A family of subsets of ``[k]`` closed under taking subsets."""

    k: int
    members: frozenset

    def __post_init__(self):
        mem = frozenset(_subset(I) for I in self.members)
        for I in mem:
            if any(d < 1 or d > self.k for d in I):
                raise SchemaError(f"{sorted(I)} is not a subset of [{self.k}]")
            for r in range(len(I)):
                for sub in itertools.combinations(sorted(I), r):
                    if frozenset(sub) not in mem:
                        raise SchemaError(f"not a down-set: {sorted(sub)} missing below {sorted(I)}")
        object.__setattr__(self, "members", mem)

    @classmethod
    def generated_by(cls, k: int, tops: Iterable) -> DownSet:
        mem = set()
        for I in tops:
            I = sorted(_subset(I))
            for r in range(len(I) + 1):
                mem.update(frozenset(c) for c in itertools.combinations(I, r))
        return cls(k, frozenset(mem))

    def __contains__(self, I) -> bool:
        return _subset(I) in self.members


def is_supported(phi: MultiAffineMap, family: DownSet) -> bool:
    return all(I in family for I in phi.nonzero_parts())


def is_mixed_linear(phi: MultiAffineMap) -> bool:
    """Every component has at most one nonzero part."""
    for c in range(phi.h):
        if sum(1 for a in phi.parts.values() if a[c].any()) > 1:
            return False
    return True


# --------------------------------------------------------------------------- varieties


@dataclass(frozen=True, eq=False)
class Variety:
    """``{x : map(x) = target}``; codimension is the stored codomain dimension."""

    map: MultiAffineMap
    target: tuple = None

    def __post_init__(self):
        target = (0,) * self.map.h if self.target is None else tuple(int(t) % self.map.p for t in self.target)
        if len(target) != self.map.h:
            raise SchemaError("target length must equal the codomain dimension")
        object.__setattr__(self, "target", target)

    @property
    def space(self) -> ProductSpace:
        return self.map.space

    @property
    def codim(self) -> int:
        return self.map.h

    @cached_property
    def mask(self) -> np.ndarray:
        if self.map.h == 0:
            return np.ones(self.space.total_size, bool)
        return (self.map.table == np.asarray(self.target)).all(axis=1)

    def contains(self, x) -> bool:
        return bool(self.mask[self.space.index_of(x)])

    def is_multilinear(self) -> bool:
        return not any(self.target) and all(len(I) > 0 for I in self.map.nonzero_parts())

    def to_json(self) -> dict:
        out = self.map.to_json()
        out["target"] = list(self.target)
        return out

    @classmethod
    def from_json(cls, obj: dict) -> Variety:
        return cls(MultiAffineMap.from_json(obj), tuple(obj.get("target", ())) or None)


def _assert_size_bound(v: Variety, size: int) -> None:
    s = v.space
    if size:
        # |B| >= p^{-k r} |G|, compared in integers
        assert size * s.p ** (s.k * v.codim) >= s.total_size, "variety smaller than p^(-kr)|G|"


def variety_size(v: Variety) -> int:
    size = int(v.mask.sum())
    _assert_size_bound(v, size)
    return size


def variety_members(v: Variety) -> Iterator[tuple]:
    variety_size(v)
    for i in np.nonzero(v.mask)[0]:
        yield v.space.point_of(int(i))


def slice_size_profile(v: Variety, i: int) -> np.ndarray:
    """Counts ``|V_{x_[i]}|`` indexed by the prefix ``x_[i]`` in canonical order."""
    s = v.space
    if not 0 <= i <= s.k:
        raise SchemaError(f"prefix length must be in [0, {s.k}]")
    prefix = int(np.prod([s.factor_size(d) for d in range(1, i + 1)], dtype=np.int64))
    counts = v.mask.reshape(prefix, -1).sum(axis=1).astype(np.int64)
    if i == s.k - 1 and s.k >= 1:
        gk = s.factor_size(s.k)
        vals = set(int(c) for c in counts if c)
        assert len(vals) <= v.codim + 1, "too many distinct slice sizes"
        allowed = {gk // s.p**j for j in range(v.codim + 1) if gk % s.p**j == 0}
        assert vals <= allowed, "last-coordinate slice is not a coset"
    return counts


# --------------------------------------------------------------------------- bias and ranks


def _scalar_table(alpha) -> tuple[np.ndarray, ProductSpace, bool]:
    if isinstance(alpha, MultilinearForm):
        return alpha.table, alpha.space, True
    if isinstance(alpha, MultiAffineMap):
        if alpha.h != 1:
            raise SchemaError("bias needs a scalar-valued map")
        nz = alpha.nonzero_parts()
        ml = len(nz) <= 1 and all(len(I) == alpha.space.k for I in nz)
        return alpha.table[:, 0], alpha.space, ml
    raise SchemaError(f"cannot take the bias of {type(alpha).__name__}")


def bias(alpha) -> complex:
    """``E_x chi(alpha(x))``."""
    tab, s, multilinear = _scalar_table(alpha)
    counts = np.bincount(tab, minlength=s.p)
    val = complex(np.sum(counts * character(s.p, np.arange(s.p))) / s.total_size)
    if multilinear:
        assert abs(val.imag) <= TOL and val.real >= -TOL, "bias of a multilinear form must be real and non-negative"
    return val


def top_part(phi: MultiAffineMap) -> MultilinearForm:
    """The ``[k]``-part of a scalar map."""
    return phi.form(frozenset(range(1, phi.space.k + 1)))


def analytic_rank(alpha) -> float:
    b = bias(alpha).real
    if b <= TOL:
        return math.inf
    return -math.log(b, _scalar_table(alpha)[1].p)


def nonzero_count(phi: MultiAffineMap) -> int:
    s = phi.space
    count = int(phi.table.any(axis=1).sum()) if phi.h else 0
    assert count == 0 or count * s.p**s.k >= s.total_size, "nonzero count below p^-k |G|"
    return count


# partition rank ------------------------------------------------------------------------

PRANK_MAX_K = 3
PRANK_MAX_DIM = 3
PRANK_MAX_R = 4


@dataclass(frozen=True, eq=False)
class PartitionRankResult:
    rank: int
    terms: tuple  # (I, beta, gamma) with beta on I and gamma on the complement
    verified: bool

    def to_json(self) -> dict:
        return {
            "rank": self.rank,
            "verified": self.verified,
            "terms": [
                {"I": sorted(I), "beta": b.coeffs.tolist(), "gamma": g.coeffs.tolist()} for I, b, g in self.terms
            ],
        }


def _normalized_tensors(p: int, shape: tuple) -> list[np.ndarray]:
    """Nonzero tensors whose first nonzero entry is 1 (one per projective class)."""
    size = int(np.prod(shape, dtype=int))
    out = []
    for vec in itertools.product(range(p), repeat=size):
        nz = next((v for v in vec if v), 0)
        if nz == 1:
            out.append(np.array(vec, dtype=np.int64).reshape(shape))
    return out


def _term_columns(alpha_shape: tuple, I_axes: tuple, beta: np.ndarray) -> np.ndarray:
    """Matrix sending the flattened ``gamma`` to the flattened tensor of ``beta (x) gamma``."""
    k = len(alpha_shape)
    rest = tuple(a for a in range(k) if a not in I_axes)
    m = int(np.prod([alpha_shape[a] for a in rest], dtype=int))
    t = np.multiply.outer(beta, np.eye(m, dtype=np.int64).reshape(tuple(alpha_shape[a] for a in rest) + (m,)))
    # axes of t: I_axes..., rest..., m  ->  0..k-1, m
    order = list(I_axes) + list(rest)
    perm = [order.index(a) for a in range(k)] + [k]
    return t.transpose(perm).reshape(-1, m)


def partition_rank_search(alpha: MultilinearForm, max_rank: int = PRANK_MAX_R, budget: int | None = None) -> PartitionRankResult | None:
    """Smallest decomposition ``alpha = sum beta_i(x_{I_i}) gamma_i(x_{[k] minus I_i})``.

    Iterative deepening on r.  Each ``I_i`` is taken to contain factor 1 (a
    product over ``I`` and its complement is the same product), each
    ``beta_i`` is enumerated up to scalars, and the ``gamma_i`` come from one
    linear system mod p.  Returns None when the rank exceeds ``max_rank``.
    """
    s = alpha.space
    k = s.k
    if alpha.support != frozenset(range(1, k + 1)):
        raise SchemaError("partition rank needs a form on all k factors")
    if k > PRANK_MAX_K or max(s.dims) > PRANK_MAX_DIM or max_rank > PRANK_MAX_R:
        raise BudgetError(f"partition-rank search is capped at k<={PRANK_MAX_K}, dims<={PRANK_MAX_DIM}, r<={PRANK_MAX_R}")
    p = s.p
    target = alpha.coeffs.reshape(-1)
    if not target.any():
        return PartitionRankResult(0, (), True)
    if k == 1:
        return None
    shape = alpha.coeffs.shape
    subsets = [frozenset(c) for r in range(1, k) for c in itertools.combinations(range(1, k + 1), r) if 1 in c]
    cands = {I: _normalized_tensors(p, _shape_of(s, I)) for I in subsets}
    limit = budget if budget is not None else s.budget
    for r in range(1, max_rank + 1):
        patterns = list(itertools.combinations_with_replacement(subsets, r))
        work = sum(
            math.prod(math.comb(len(cands[I]), pat.count(I)) for I in set(pat)) for pat in patterns
        )
        check_budget(work, limit, f"partition-rank level {r}")
        for pat in patterns:
            groups = [(I, pat.count(I)) for I in sorted(set(pat), key=lambda J: sorted(J))]
            choice_iters = [itertools.combinations(range(len(cands[I])), c) for I, c in groups]
            for choice in itertools.product(*choice_iters):
                terms = [(I, cands[I][j]) for (I, _), js in zip(groups, choice) for j in js]
                cols = [_term_columns(shape, tuple(d - 1 for d in sorted(I)), b) for I, b in terms]
                sol = solve_mod_p(np.hstack(cols), target, p)
                if sol is None:
                    continue
                out, pos = [], 0
                for (I, b), col in zip(terms, cols):
                    comp = frozenset(range(1, k + 1)) - I
                    g = sol[pos : pos + col.shape[1]].reshape(_shape_of(s, comp))
                    pos += col.shape[1]
                    out.append((I, MultilinearForm(s, I, b), MultilinearForm(s, comp, g)))
                return PartitionRankResult(r, tuple(out), _verify_decomposition(alpha, out))
    return None


def _verify_decomposition(alpha: MultilinearForm, terms) -> bool:
    acc = np.zeros(alpha.space.total_size, dtype=np.int64)
    for _, b, g in terms:
        acc = (acc + b.table * g.table) % alpha.p
    ok = bool(np.array_equal(acc, alpha.table))
    assert ok, "partition-rank decomposition does not re-evaluate to the form"
    return ok


# symmetric forms ---------------------------------------------------------------------


def _check_square(psi: MultilinearForm) -> int:
    s = psi.space
    if psi.support != frozenset(range(1, s.k + 1)):
        raise SchemaError("form must involve every factor")
    if len(set(s.dims)) != 1:
        raise SchemaError("all factors must share one dimension")
    return s.k


def permute_form(psi: MultilinearForm, perm: Sequence[int]) -> MultilinearForm:
    """``psi_pi(a_1..a_k) = psi(a_{pi(1)}, ..., a_{pi(k)})`` with ``perm`` 1-based."""
    k = _check_square(psi)
    perm = [int(i) - 1 for i in perm]
    if sorted(perm) != list(range(k)):
        raise SchemaError(f"{perm} is not a permutation of [{k}]")
    inv = [perm.index(m) for m in range(k)]
    return MultilinearForm(psi.space, psi.support, np.transpose(psi.coeffs, inv))


def symmetrize(psi: MultilinearForm) -> MultilinearForm:
    """``(1/k!) sum_pi psi_pi``; needs ``p > k``."""
    k = _check_square(psi)
    p = psi.p
    if p <= k:
        raise SchemaError(f"symmetrization needs p > k (p={p}, k={k})")
    acc = np.zeros_like(psi.coeffs)
    for perm in itertools.permutations(range(1, k + 1)):
        acc = (acc + permute_form(psi, perm).coeffs) % p
    out = MultilinearForm(psi.space, psi.support, acc * pow(math.factorial(k), -1, p))
    for i in range(1, k):
        swap = list(range(1, k + 1))
        swap[i - 1], swap[i] = swap[i], swap[i - 1]
        assert permute_form(out, swap) == out, "symmetrization is not symmetric"
    return out


def is_symmetric(psi: MultilinearForm) -> bool:
    k = _check_square(psi)
    return all(permute_form(psi, perm) == psi for perm in itertools.permutations(range(1, k + 1)))


# quasirandomness ---------------------------------------------------------------------


@dataclass(frozen=True)
class QuasirandomReport:
    empty: bool
    delta: float | None
    delta_exact: tuple | None  # (slice count, |C2|)
    slice_failure: float
    pair_failure: float
    eta_min: float

    def to_json(self) -> dict:
        return {
            "empty": self.empty,
            "delta": self.delta,
            "slice_failure": self.slice_failure,
            "pair_failure": self.pair_failure,
            "eta_min": self.eta_min,
        }


def check_quasirandom(beta: MultiAffineMap, lam, c1: Coset | None = None, c2: Coset | None = None) -> QuasirandomReport:
    """Density and smallest quasirandomness parameter of ``{beta = lam}`` on ``C1 x C2``.

    ``delta`` is the most common column density (ties go to the larger);
    ``eta_min`` is the larger of the fraction of columns of the wrong size
    and the fraction of column pairs whose intersection has the wrong size.
    """
    s = beta.space
    if s.k != 2:
        raise SchemaError("quasirandomness is defined for biaffine maps on G1 x G2")
    p = s.p
    c1 = c1 or Coset.full(p, s.dims[0])
    c2 = c2 or Coset.full(p, s.dims[1])
    if c1.n != s.dims[0] or c2.n != s.dims[1]:
        raise SchemaError("cosets must live in the two factors")
    m1, m2 = c1.members(), c2.members()
    check_budget(len(m1) ** 2 * len(m2), s.budget, "quasirandomness check")
    i1 = s.factor(1).indices_of(m1)
    i2 = s.factor(2).indices_of(m2)
    tab = beta.table.reshape(s.factor_size(1), s.factor_size(2), beta.h)[np.ix_(i1, i2)]
    cols = (tab == np.asarray(lam, dtype=np.int64).reshape(-1) % p).all(axis=2)  # (|C1|, |C2|)
    sizes = cols.sum(axis=1)
    n2 = len(m2)
    if not sizes.any():
        return QuasirandomReport(True, None, None, 0.0, 0.0, 0.0)
    vals, freq = np.unique(sizes, return_counts=True)
    best = int(vals[np.flatnonzero(freq == freq.max())[-1]])
    slice_fail = float(np.mean(sizes != best))
    inter = cols.astype(np.int64) @ cols.T.astype(np.int64)
    # |V_x1 cap V_x2| = delta^2 |C2|  <=>  inter * |C2| = best^2
    pair_fail = float(np.mean(inter * n2 != best * best))
    return QuasirandomReport(False, best / n2, (best, n2), slice_fail, pair_fail, max(slice_fail, pair_fail))


# multilinear variety inside a multilinear set ---------------------------------------


def _membership_table(space: ProductSpace, m) -> np.ndarray:
    if isinstance(m, Variety):
        return m.mask
    if isinstance(m, np.ndarray):
        mask = np.asarray(m, dtype=bool).reshape(-1)
        if mask.shape[0] != space.total_size:
            raise SchemaError("membership table has the wrong length")
        return mask
    if callable(m):
        return np.array([bool(m(x)) for x in space.points()], dtype=bool)
    raise SchemaError("M must be a Variety, a boolean table or a membership callable")


def multilinear_set_witness(space: ProductSpace, mask: np.ndarray):
    """None if every axis slice of ``mask`` is empty or a subspace, else ``(d, index)``."""
    full = tuple(space.factor_size(d) for d in range(1, space.k + 1))
    t = mask.reshape(full)
    for d in range(1, space.k + 1):
        rows = np.moveaxis(t, d - 1, -1).reshape(-1, full[d - 1])
        g = space.factor(d)
        add = g.add_table
        nonempty = rows.any(axis=1)
        bad = nonempty & ~rows[:, 0]
        # closure under addition: a, b in S  =>  a + b in S
        closed = ~(rows[:, :, None] & rows[:, None, :] & ~rows[:, add]).any(axis=(1, 2))
        bad |= ~closed
        if bad.any():
            return d, int(np.flatnonzero(bad)[0])
    return None


@dataclass(frozen=True, eq=False)
class ExtractionResult:
    variety: Variety
    witnesses: tuple  # the point y chosen at each induction step (indices)
    codims: tuple  # codimension of B^0, ..., B^k


def multilinear_variety_inside(m, b: Variety) -> ExtractionResult:
    """A nonempty multilinear variety inside the multilinear set ``M`` containing ``B``.

    Follows the induction over directions: ``B``'s map is split into pieces
    ``beta_I(x_I) = lambda_I``, and at step ``d`` every piece with ``d`` in
    ``I`` becomes ``beta_I(x_I) = 0`` together with
    ``beta_I(x_{I - d}, y_d) = lambda_I``, where ``y`` is the first member
    of the current variety in canonical order.
    """
    s = b.space
    p = s.p
    mask = _membership_table(s, m)
    bad = multilinear_set_witness(s, mask)
    if bad is not None:
        raise PreconditionError(f"M is not a multilinear set (direction {bad[0]}, slice {bad[1]})", witness=bad)
    bmask = b.mask
    if not bmask.any():
        raise PreconditionError("B is empty")
    outside = np.flatnonzero(bmask & ~mask)
    if outside.size:
        raise PreconditionError("B is not contained in M", witness=s.point_of(int(outside[0])))

    y0 = int(np.flatnonzero(bmask)[0])
    yflat = s.coords[y0]
    # pieces: (I, coeffs (rows, n_I...), lam (rows,))
    pieces = []
    for I, c in b.map.nonzero_parts().items():
        if not I:
            continue
        lam = _contract_at(s, I, c, yflat)
        pieces.append((I, c, lam))
    codims = [sum(c.shape[0] for _, c, _ in pieces)]
    current = _pieces_mask(s, pieces)
    assert current[y0] and not (current & ~bmask).any(), "B^0 must be a nonempty subset of B"
    witnesses = []
    for d in range(1, s.k + 1):
        y = int(np.flatnonzero(current)[0])
        witnesses.append(y)
        yd = s.coords[y][s.offsets[d - 1] : s.offsets[d]]
        nxt = []
        for I, c, lam in pieces:
            if d not in I:
                nxt.append((I, c, lam))
                continue
            nxt.append((I, c, np.zeros_like(lam)))
            rest = I - {d}
            axis = 1 + sorted(I).index(d)
            plugged = np.tensordot(c, yd, axes=([axis], [0])) % p
            if rest:
                nxt.append((rest, plugged, lam))
            else:
                assert np.array_equal(plugged.reshape(-1) % p, lam % p), "constant constraint fails at the witness"
        pieces = nxt
        current = _pieces_mask(s, pieces)
        codims.append(sum(c.shape[0] for _, c, _ in pieces))
        assert current.any() and not (current & ~mask).any(), f"B^{d} left M"
    assert all(not lam.any() for _, _, lam in pieces)
    rows = [(I, row) for I, c, _ in pieces for row in c]
    parts = {}
    for n, (I, row) in enumerate(rows):
        arr = parts.setdefault(I, np.zeros((len(rows),) + _shape_of(s, I), np.int64))
        arr[n] = row
    out = Variety(MultiAffineMap(s, len(rows), parts))
    assert out.is_multilinear()
    variety_size(out)
    return ExtractionResult(out, tuple(witnesses), tuple(codims))


def _contract_at(s: ProductSpace, I, coeffs: np.ndarray, flat: np.ndarray) -> np.ndarray:
    t = coeffs
    for d in sorted(I):
        t = np.tensordot(t, flat[s.offsets[d - 1] : s.offsets[d]], axes=([1], [0])) % s.p
    return t


def _pieces_mask(s: ProductSpace, pieces) -> np.ndarray:
    full = tuple(s.factor_size(d) for d in range(1, s.k + 1))
    mask = np.ones(full, dtype=bool)
    for I, c, lam in pieces:
        vals = _contract(s, I, c)
        mask &= (vals == lam.reshape((-1,) + (1,) * s.k)).all(axis=0)
    return mask.reshape(-1)


def random_variety(space: ProductSpace, codim: int, rng: SplitMix64, nonempty: bool = True) -> Variety:
    """Random multiaffine map with target its value at a random point (so nonempty) or a random target."""
    phi = MultiAffineMap.random(space, codim, rng)
    if nonempty:
        x = rng.below(space.total_size)
        target = tuple(int(v) for v in phi.table[x]) if codim else ()
    else:
        target = tuple(int(v) for v in rng.residues(space.p, codim))
    return Variety(phi, target or None)

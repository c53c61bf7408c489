"""Derivatives, polynomial degree and polynomial phases on ``F_p^n``.

Additive derivatives use ``Delta_a f(x) = f(x + a) - f(x)``; multiplicative
ones use ``d_a f(x) = f(x) conj f(x - a)``.  Degree statements do not
depend on the sign convention.

Polynomials are stored as functions: exponents are reduced with
``x^p = x``, so every exponent lies in ``[0, p - 1]`` and the degree is the
degree of that reduced form.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import SchemaError
from .harmonic import FunctionTable
from .multiaffine import MultilinearForm, is_symmetric
from .rng import SplitMix64
from .search import best_agreement, best_correlation
from .space import ProductSpace, character, check_budget


def _group(p: int, n: int) -> ProductSpace:
    return ProductSpace(p, (n,))


@dataclass(frozen=True, eq=False)
class GroupFunctionH:
    """A total function ``F_p^n -> F_p^h``; ``values`` is ``(p^n, h)``."""

    space: ProductSpace
    values: np.ndarray

    def __post_init__(self):
        s = self.space
        if s.k != 1:
            raise SchemaError("GroupFunctionH lives on a single group F_p^n")
        v = np.asarray(self.values, dtype=np.int64)
        if v.ndim == 1:
            v = v[:, None]
        if v.shape[0] != s.total_size or v.shape[1] < 1:
            raise SchemaError("values must be a (p^n, h) table with h >= 1")
        v = v % s.p
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @classmethod
    def from_polys(cls, polys) -> GroupFunctionH:
        polys = list(polys)
        return cls(_group(polys[0].p, polys[0].n), np.stack([g.table for g in polys], axis=1))

    @property
    def p(self) -> int:
        return self.space.p

    @property
    def h(self) -> int:
        return self.values.shape[1]

    def __call__(self, x) -> tuple:
        return tuple(int(v) for v in self.values[self.space.index_of((x,))])

    def __eq__(self, other):
        return isinstance(other, GroupFunctionH) and self.space == other.space and np.array_equal(self.values, other.values)

    __hash__ = None

    def to_json(self) -> dict:
        return {"space": self.space.to_json(), "h": self.h, "values": self.values.tolist()}

    @classmethod
    def from_json(cls, obj: dict) -> GroupFunctionH:
        try:
            return cls(ProductSpace.from_json(obj["space"]), np.array(obj["values"], dtype=np.int64))
        except (KeyError, TypeError, ValueError) as exc:
            raise SchemaError(f"bad group-function JSON: {exc}") from exc


def _point(space: ProductSpace, a) -> int:
    if isinstance(a, (int, np.integer)):
        return int(a)
    return space.index_of((a,)) if space.k == 1 and not _is_nested(a) else space.index_of(a)


def _is_nested(a) -> bool:
    try:
        return len(a) > 0 and hasattr(a[0], "__len__")
    except TypeError:
        return False


def delta(f: GroupFunctionH, a) -> GroupFunctionH:
    """``x -> f(x + a) - f(x)``."""
    s = f.space
    ai = _point(s, a)
    shifted = f.values[s.add_table[:, ai]]
    return GroupFunctionH(s, shifted - f.values)


def mult_derivative(f: FunctionTable, a) -> FunctionTable:
    """``x -> f(x) conj f(x - a)`` on the flattened group."""
    s = f.space
    flat = s.flat()
    ai = int(a) if isinstance(a, (int, np.integer)) else s.index_of(a)
    back = flat.add_table[:, flat.neg[ai]]
    return FunctionTable(s, f.values * f.values[back].conj())


# --------------------------------------------------------------------------- degree


def _iterated(f: GroupFunctionH, order: int, budget) -> np.ndarray:
    """All ``Delta_{a_1} ... Delta_{a_order} f(x)``, shape ``(|G|^order, |G|, h)``.

    Row index is ``(a_1, ..., a_order)`` in mixed radix with ``a_1`` most
    significant.
    """
    s = f.space
    n = s.total_size
    check_budget(n ** (order + 1) * f.h, budget if budget is not None else s.budget, "iterated derivatives")
    dt = np.int16 if f.p < 128 else np.int32
    d = f.values.astype(dt)[None, :, :]
    add = s.add_table
    for _ in range(order):
        # new[m, a, x] = d[m, x + a] - d[m, x]
        shifted = d[:, add, :]  # (M, a, x, h)
        d = ((shifted - d[:, None, :, :]) % f.p).astype(dt).reshape(-1, n, f.h)
    return d


@dataclass(frozen=True)
class DegreeCheck:
    ok: bool
    witness: tuple | None = None  # (a_1, ..., a_{d+1}, x) as indices

    def __bool__(self):
        return self.ok

    def to_json(self) -> dict:
        return {"ok": self.ok, "witness": None if self.witness is None else list(self.witness)}


def _check_order(f: GroupFunctionH, d: int) -> None:
    if d < 0:
        raise SchemaError("degree must be non-negative")
    if d >= f.p:
        raise SchemaError(f"the derivative test only characterises degree d < p (d={d}, p={f.p})")


def _sample_derivatives(f: GroupFunctionH, order: int, samples: int, seed: int):
    """Sampled ``(x, a_1..a_order)`` tuples and the iterated derivative there."""
    s = f.space
    rng = SplitMix64(seed)
    x = rng.integers(s.total_size, samples)
    a = rng.integers(s.total_size, (order, samples))
    c = s.coords
    acc = np.zeros((samples, f.h), np.int64)
    for mask in itertools.product((0, 1), repeat=order):
        pt = c[x].copy()
        for i, m in enumerate(mask):
            if m:
                pt += c[a[i]]
        sign = -1 if (order - sum(mask)) % 2 else 1
        acc += sign * f.values[s.indices_of(pt)]
    return x, a, acc % f.p


def degree_test(f: GroupFunctionH, d: int, mode: str = "exhaustive", samples: int = 100_000, seed: int = 0,
                budget: int | None = None) -> DegreeCheck:
    """Do all ``(d+1)``-fold derivatives vanish?  Requires ``d < p``."""
    _check_order(f, d)
    if mode == "sample":
        x, a, vals = _sample_derivatives(f, d + 1, samples, seed)
        bad = np.flatnonzero(vals.any(axis=1))
        if bad.size:
            i = bad[0]
            return DegreeCheck(False, tuple(int(v) for v in a[:, i]) + (int(x[i]),))
        return DegreeCheck(True)
    if mode != "exhaustive":
        raise SchemaError(f"unknown mode {mode!r}")
    vals = _iterated(f, d + 1, budget)
    nz = np.flatnonzero(vals.any(axis=2).reshape(-1))
    if nz.size == 0:
        return DegreeCheck(True)
    n = f.space.total_size
    digits = np.unravel_index(int(nz[0]), (n,) * (d + 2))
    return DegreeCheck(False, tuple(int(v) for v in digits))


def approx_poly_fraction(f: GroupFunctionH, d: int, mode: str = "exhaustive", samples: int = 100_000, seed: int = 0,
                         budget: int | None = None) -> float:
    """Fraction of ``(x, a_1, ..., a_{d+1})`` where the iterated derivative vanishes."""
    if d < 0:
        raise SchemaError("degree must be non-negative")
    if mode == "sample":
        _, _, vals = _sample_derivatives(f, d + 1, samples, seed)
        return float(np.mean(~vals.any(axis=1)))
    if mode != "exhaustive":
        raise SchemaError(f"unknown mode {mode!r}")
    vals = _iterated(f, d + 1, budget)
    return float(np.mean(~vals.any(axis=2)))


# --------------------------------------------------------------------------- monomial polynomials


def _reduce_exp(e: int, p: int) -> int:
    return 0 if e == 0 else (e - 1) % (p - 1) + 1


@dataclass(frozen=True, eq=False)
class MonomialPoly:
    """``sum_e c_e x^e`` over ``F_p`` in ``n`` variables, Frobenius-reduced."""

    p: int
    n: int
    terms: dict

    def __post_init__(self):
        _group(self.p, 0)
        if self.n < 0:
            raise SchemaError("number of variables must be non-negative")
        clean: dict = {}
        for exps, c in dict(self.terms).items():
            exps = tuple(int(e) for e in exps)
            if len(exps) != self.n or any(e < 0 for e in exps):
                raise SchemaError(f"exponent vector {exps} does not fit {self.n} variables")
            key = tuple(_reduce_exp(e, self.p) for e in exps)
            clean[key] = (clean.get(key, 0) + int(c)) % self.p
        object.__setattr__(self, "terms", {e: c for e, c in sorted(clean.items()) if c})

    @classmethod
    def zero(cls, p: int, n: int) -> MonomialPoly:
        return cls(p, n, {})

    @classmethod
    def random(cls, p: int, n: int, d: int, rng: SplitMix64, homogeneous: bool = False) -> MonomialPoly:
        mons = monomials(p, n, d)
        if homogeneous:
            mons = [e for e in mons if sum(e) == d]
        coeffs = rng.residues(p, len(mons))
        return cls(p, n, dict(zip(mons, coeffs)))

    @property
    def degree(self) -> int:
        """Reduced degree; -1 for the zero polynomial."""
        return max((sum(e) for e in self.terms), default=-1)

    def is_homogeneous(self, k: int) -> bool:
        return all(sum(e) == k for e in self.terms)

    @cached_property
    def table(self) -> np.ndarray:
        """Values at every point of ``F_p^n`` in canonical order."""
        c = _group(self.p, self.n).coords
        out = np.zeros(c.shape[0], np.int64)
        for exps, coef in self.terms.items():
            term = np.full(c.shape[0], coef, np.int64)
            for j, e in enumerate(exps):
                if e:
                    term = term * pow_mod(c[:, j], e, self.p) % self.p
            out = (out + term) % self.p
        return out

    def __call__(self, x) -> int:
        x = [int(v) for v in x]
        total = 0
        for exps, coef in self.terms.items():
            term = coef
            for v, e in zip(x, exps):
                term = term * pow(v, e, self.p) % self.p
            total += term
        return total % self.p

    def as_function(self) -> GroupFunctionH:
        return GroupFunctionH(_group(self.p, self.n), self.table)

    def __add__(self, other: MonomialPoly) -> MonomialPoly:
        self._same(other)
        terms = dict(self.terms)
        for e, c in other.terms.items():
            terms[e] = terms.get(e, 0) + c
        return MonomialPoly(self.p, self.n, terms)

    def __neg__(self) -> MonomialPoly:
        return MonomialPoly(self.p, self.n, {e: -c for e, c in self.terms.items()})

    def __sub__(self, other: MonomialPoly) -> MonomialPoly:
        return self + (-other)

    def scale(self, c: int) -> MonomialPoly:
        return MonomialPoly(self.p, self.n, {e: c * v for e, v in self.terms.items()})

    def _same(self, other):
        if (self.p, self.n) != (other.p, other.n):
            raise SchemaError("polynomials over different rings")

    def __eq__(self, other):
        return isinstance(other, MonomialPoly) and (self.p, self.n, self.terms) == (other.p, other.n, other.terms)

    __hash__ = None

    def __repr__(self):
        if not self.terms:
            return "0"
        parts = []
        for exps, c in self.terms.items():
            mono = "*".join(f"x{j + 1}" + (f"^{e}" if e > 1 else "") for j, e in enumerate(exps) if e)
            parts.append(f"{c}*{mono}" if mono else str(c))
        return " + ".join(parts)

    def to_json(self) -> dict:
        return {"p": self.p, "n": self.n, "terms": [{"exps": list(e), "c": c} for e, c in self.terms.items()]}

    @classmethod
    def from_json(cls, obj: dict) -> MonomialPoly:
        try:
            return cls(int(obj["p"]), int(obj["n"]), {tuple(t["exps"]): int(t["c"]) for t in obj["terms"]})
        except (KeyError, TypeError, ValueError) as exc:
            raise SchemaError(f"bad polynomial JSON: {exc}") from exc


def pow_mod(x: np.ndarray, e: int, p: int) -> np.ndarray:
    out = np.ones_like(x)
    for _ in range(e):
        out = out * x % p
    return out


def monomials(p: int, n: int, d: int) -> list:
    """Reduced exponent vectors of total degree at most ``d``, by degree then lexicographically."""
    mons = [e for e in itertools.product(range(min(p - 1, d) + 1), repeat=n) if sum(e) <= d]
    return sorted(mons, key=lambda e: (sum(e), e))


def monomial_table(p: int, n: int, mons) -> np.ndarray:
    """``(p^n, len(mons))`` values of each monomial."""
    c = _group(p, n).coords
    cols = []
    for exps in mons:
        col = np.ones(c.shape[0], np.int64)
        for j, e in enumerate(exps):
            if e:
                col = col * pow_mod(c[:, j], e, p) % p
        cols.append(col)
    return np.stack(cols, axis=1) if cols else np.zeros((c.shape[0], 0), np.int64)


# --------------------------------------------------------------------------- polarization


def polarize(g: MonomialPoly, k: int) -> MultilinearForm:
    """``sigma(a_1..a_k) = Delta_{a_1} ... Delta_{a_k} g``, a symmetric k-linear form.

    Coefficients come from derivatives along basis vectors at 0; the value
    is checked to be independent of the basepoint, and against the full
    derivative table when that is small.
    """
    p, n = g.p, g.n
    if p <= k:
        raise SchemaError(f"polarization needs p > k (p={p}, k={k})")
    if g.degree > k:
        raise SchemaError(f"degree {g.degree} exceeds k={k}")
    G = _group(p, n)
    f = g.as_function()
    unit = [p ** (n - 1 - j) for j in range(n)]  # index of e_j
    shape = (n,) * k
    coeffs = np.zeros(shape, np.int64)
    for idx in itertools.product(range(n), repeat=k):
        h = f
        for j in idx:
            h = delta(h, unit[j])
        vals = h.values[:, 0]
        assert (vals == vals[0]).all(), "k-th derivative depends on the basepoint"
        coeffs[idx] = vals[0]
    space = ProductSpace(p, (n,) * k)
    sigma = MultilinearForm(space, frozenset(range(1, k + 1)), coeffs)
    if G.total_size ** (k + 1) <= 1 << 16:
        full = _iterated(f, k, None)[:, 0, 0]
        assert np.array_equal(full, sigma.table), "polarization disagrees with the derivative table"
    assert is_symmetric(sigma)
    return sigma


def poly_from_symmetric(sigma: MultilinearForm, k: int | None = None) -> MonomialPoly:
    """``g(x) = sigma(x, ..., x) / k!``."""
    s = sigma.space
    k = s.k if k is None else k
    if k != s.k or len(set(s.dims)) != 1:
        raise SchemaError("sigma must be a k-linear form on G^k")
    p, n = s.p, s.dims[0]
    if p <= k:
        raise SchemaError(f"needs p > k (p={p}, k={k})")
    inv = pow(math.factorial(k), -1, p)
    terms: dict = {}
    for idx in itertools.product(range(n), repeat=k):
        c = int(sigma.coeffs[idx])
        if not c:
            continue
        exps = [0] * n
        for j in idx:
            exps[j] += 1
        key = tuple(exps)
        terms[key] = terms.get(key, 0) + c * inv
    return MonomialPoly(p, n, terms)


# --------------------------------------------------------------------------- correlation


def _single_group_table(f: FunctionTable) -> tuple[int, int]:
    s = f.space
    return s.p, s.ncoords


def phase_correlation(f: FunctionTable, g: MonomialPoly) -> float:
    """``|E_x f(x) omega^{g(x)}|``."""
    p, n = _single_group_table(f)
    if (p, n) != (g.p, g.n):
        raise SchemaError("table and polynomial live on different groups")
    return float(abs(np.mean(f.values * character(p, g.table))))


def best_poly_correlation(f: FunctionTable, d: int, budget: int | None = None, tol: float = 1e-12) -> tuple[MonomialPoly, float]:
    """Polynomial of degree at most ``d`` maximising :func:`phase_correlation`.

    Candidates are coefficient vectors over :func:`monomials` in
    lexicographic order; maximisers within ``tol`` tie and the first wins.
    """
    p, n = _single_group_table(f)
    mons = monomials(p, n, d)
    coeffs, val = best_correlation(monomial_table(p, n, mons), f.values, p, tol, budget)
    return MonomialPoly(p, n, dict(zip(mons, coeffs))), val


def best_poly_agreement(f: GroupFunctionH, d: int, budget: int | None = None) -> tuple[list, int]:
    """Polynomial map of degree at most ``d`` (one polynomial per component) agreeing most often."""
    p, n = f.p, f.space.ncoords
    mons = monomials(p, n, d)
    coeffs, count = best_agreement(monomial_table(p, n, mons), f.values, p, budget)
    return [MonomialPoly(p, n, dict(zip(mons, row))) for row in coeffs], count


def poly_phase(g: MonomialPoly, sign: int = 1) -> FunctionTable:
    """``x -> omega^{sign g(x)}`` as a table."""
    return FunctionTable(_group(g.p, g.n), character(g.p, sign * g.table), True)

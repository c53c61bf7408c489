"""Prime fields, product spaces and cosets.

Points of a product space ``G_1 x ... x G_k`` with ``G_i = F_p^{n_i}`` are
numbered in a fixed mixed-radix order: factor 1 varies slowest and, inside
a factor, coordinate 1 is the most significant p-ary digit.  Consequently a
dense table over the space reshapes to a ``(p,) * sum(dims)`` array whose
axes are the coordinates in order, which is how most of the package
vectorises its enumerations.
"""

from __future__ import annotations

import cmath
import itertools
import os
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterator, Sequence

import numpy as np

from .errors import BudgetError, SchemaError

DEFAULT_BUDGET = 1 << 24


def default_budget() -> int:
    """Enumeration budget: ``HOFA_BUDGET`` if set, else 2**24."""
    env = os.environ.get("HOFA_BUDGET")
    return int(env) if env else DEFAULT_BUDGET


def check_budget(count: int, budget: int | None = None, what: str = "enumeration") -> None:
    limit = default_budget() if budget is None else budget
    if count > limit:
        raise BudgetError(f"{what} needs {count} items, budget is {limit}")


def _is_prime(n: int) -> bool:
    if n < 2:
        return False
    return all(n % d for d in range(2, int(n**0.5) + 1))


@dataclass(frozen=True)
class PrimeModulus:
    p: int

    def __post_init__(self):
        if not isinstance(self.p, (int, np.integer)) or not 2 <= self.p <= 251 or not _is_prime(int(self.p)):
            raise SchemaError(f"p must be a prime in [2, 251], got {self.p!r}")
        object.__setattr__(self, "p", int(self.p))

    @property
    def omega(self) -> complex:
        return cmath.exp(2j * cmath.pi / self.p)

    def character(self, a) -> complex | np.ndarray:
        return character(self.p, a)

    def inv(self, a: int) -> int:
        return pow(int(a) % self.p, -1, self.p)


def _modulus(m) -> int:
    return m.p if isinstance(m, PrimeModulus) else int(m)


def character(m, a):
    """``chi(a) = exp(2 pi i a / p)``; works elementwise on arrays."""
    p = _modulus(m)
    if isinstance(a, np.ndarray):
        return np.exp(2j * np.pi * (a % p) / p)
    return cmath.exp(2j * cmath.pi * (int(a) % p) / p)


@dataclass(frozen=True)
class FpVector:
    modulus: PrimeModulus
    coords: tuple

    def __post_init__(self):
        coords = tuple(int(c) for c in self.coords)
        if any(c < 0 or c >= self.modulus.p for c in coords):
            raise SchemaError(f"coordinates must lie in [0, {self.modulus.p})")
        object.__setattr__(self, "coords", coords)

    def __len__(self):
        return len(self.coords)

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.coords, dtype=dtype or np.int64)

    def __add__(self, other: FpVector) -> FpVector:
        p = self.modulus.p
        return FpVector(self.modulus, tuple((a + b) % p for a, b in zip(self.coords, other.coords, strict=True)))

    def __sub__(self, other: FpVector) -> FpVector:
        p = self.modulus.p
        return FpVector(self.modulus, tuple((a - b) % p for a, b in zip(self.coords, other.coords, strict=True)))


def _coords(v) -> np.ndarray:
    return np.asarray(v.coords if isinstance(v, FpVector) else v, dtype=np.int64)


def dot(u, v, p: int | None = None) -> int:
    """Standard dot product mod p."""
    if p is None:
        if isinstance(u, FpVector):
            p = u.modulus.p
        elif isinstance(v, FpVector):
            p = v.modulus.p
        else:
            raise SchemaError("modulus required for plain sequences")
    if isinstance(u, FpVector) and isinstance(v, FpVector) and u.modulus != v.modulus:
        raise SchemaError("moduli differ")
    a, b = _coords(u), _coords(v)
    if a.shape != b.shape:
        raise SchemaError(f"dimension mismatch: {a.shape} vs {b.shape}")
    return int(np.dot(a, b) % p)


@dataclass(frozen=True)
class ProductSpace:
    """``F_p^{n_1} x ... x F_p^{n_k}`` with the canonical point numbering."""

    p: int
    dims: tuple
    budget: int | None = field(default=None, compare=False)

    def __post_init__(self):
        PrimeModulus(self.p)
        dims = tuple(int(n) for n in self.dims)
        if not dims or any(n < 0 for n in dims):
            raise SchemaError("dims must be a non-empty sequence of non-negative integers")
        object.__setattr__(self, "p", int(self.p))
        object.__setattr__(self, "dims", dims)
        check_budget(self.total_size, self.budget, "space")

    @classmethod
    def single(cls, p: int, n: int, budget: int | None = None) -> ProductSpace:
        return cls(p, (n,), budget)

    @property
    def modulus(self) -> PrimeModulus:
        return PrimeModulus(self.p)

    @property
    def k(self) -> int:
        return len(self.dims)

    @property
    def ncoords(self) -> int:
        return sum(self.dims)

    @property
    def total_size(self) -> int:
        return self.p**self.ncoords

    @property
    def tensor_shape(self) -> tuple:
        return (self.p,) * self.ncoords

    def factor_size(self, d: int) -> int:
        """Size of factor ``d`` (1-based)."""
        return self.p ** self.dims[self._dir(d)]

    def _dir(self, d: int) -> int:
        if not 1 <= d <= self.k:
            raise SchemaError(f"direction {d} outside [1, {self.k}]")
        return d - 1

    @cached_property
    def offsets(self) -> tuple:
        return tuple(int(x) for x in np.concatenate([[0], np.cumsum(self.dims)]))

    def axes_of(self, d: int) -> tuple:
        """Tensor axes belonging to factor ``d`` (1-based)."""
        i = self._dir(d)
        return tuple(range(self.offsets[i], self.offsets[i + 1]))

    def factor(self, d: int) -> ProductSpace:
        return ProductSpace(self.p, (self.dims[self._dir(d)],), self.budget)

    def sub(self, dirs: Sequence[int]) -> ProductSpace:
        """The product of the factors listed in ``dirs`` (1-based, in that order)."""
        return ProductSpace(self.p, tuple(self.dims[self._dir(d)] for d in dirs), self.budget)

    def flat(self) -> ProductSpace:
        """The same points viewed as the single group ``F_p^{sum dims}``."""
        return ProductSpace(self.p, (self.ncoords,), self.budget)

    @cached_property
    def coords(self) -> np.ndarray:
        """All points as a ``(total_size, ncoords)`` residue array in canonical order."""
        if self.ncoords == 0:
            return np.zeros((1, 0), dtype=np.int64)
        grids = np.indices(self.tensor_shape, dtype=np.int64)
        return grids.reshape(self.ncoords, -1).T.copy()

    def factor_coords(self, d: int) -> np.ndarray:
        """Columns of :attr:`coords` belonging to factor ``d``."""
        i = self._dir(d)
        return self.coords[:, self.offsets[i] : self.offsets[i + 1]]

    @cached_property
    def _weights(self) -> np.ndarray:
        return self.p ** np.arange(self.ncoords - 1, -1, -1, dtype=np.int64)

    def flatten_point(self, x) -> np.ndarray:
        """Point given per factor (sequence of sequences) or as flat coordinates -> flat vector."""
        if isinstance(x, np.ndarray) and x.ndim == 1 and len(x) == self.ncoords:
            flat = x.astype(np.int64)
        elif isinstance(x, (list, tuple)) and len(x) == self.ncoords and all(isinstance(c, (int, np.integer)) for c in x):
            flat = np.asarray(x, dtype=np.int64)
        else:
            parts = [_coords(part) for part in x]
            if len(parts) != self.k or any(len(a) != n for a, n in zip(parts, self.dims)):
                raise SchemaError(f"point {x!r} does not match dims {self.dims}")
            flat = np.concatenate(parts) if parts else np.zeros(0, np.int64)
        if np.any((flat < 0) | (flat >= self.p)):
            raise SchemaError(f"coordinates of {x!r} outside [0, {self.p})")
        return flat

    def split_point(self, flat) -> tuple:
        flat = [int(c) for c in flat]
        return tuple(tuple(flat[self.offsets[i] : self.offsets[i + 1]]) for i in range(self.k))

    def index_of(self, x) -> int:
        return int(self.flatten_point(x) @ self._weights)

    def indices_of(self, coords: np.ndarray) -> np.ndarray:
        """Vectorised :meth:`index_of` for an ``(m, ncoords)`` coordinate array."""
        return (np.asarray(coords, dtype=np.int64) % self.p) @ self._weights

    def point_of(self, i: int) -> tuple:
        if not 0 <= i < self.total_size:
            raise SchemaError(f"index {i} outside [0, {self.total_size})")
        return self.split_point(self.coords[i])

    def points(self) -> Iterator[tuple]:
        for i in range(self.total_size):
            yield self.split_point(self.coords[i])

    # group structure on the flattened space ---------------------------------

    @cached_property
    def add_table(self) -> np.ndarray:
        """``add_table[i, j]`` = index of point i + point j."""
        check_budget(self.total_size**2, self.budget, "addition table")
        c = self.coords
        return self.indices_of(c[:, None, :] + c[None, :, :])

    @cached_property
    def neg(self) -> np.ndarray:
        return self.indices_of(-self.coords)

    def add(self, i, j):
        return self.indices_of(self.coords[i] + self.coords[j])

    def sub_idx(self, i, j):
        return self.indices_of(self.coords[i] - self.coords[j])

    def to_json(self) -> dict:
        return {"p": self.p, "dims": list(self.dims)}

    @classmethod
    def from_json(cls, obj: dict, budget: int | None = None) -> ProductSpace:
        try:
            return cls(int(obj["p"]), tuple(int(n) for n in obj["dims"]), budget)
        except (KeyError, TypeError) as exc:
            raise SchemaError(f"bad space JSON: {obj!r}") from exc


@dataclass(frozen=True)
class Coset:
    """``u0 + span(basis)`` inside a single factor ``F_p^n``."""

    p: int
    u0: tuple
    basis: tuple = ()

    def __post_init__(self):
        from .linalg import rank_fp

        PrimeModulus(self.p)
        u0 = tuple(int(c) % self.p for c in _coords(self.u0))
        basis = tuple(tuple(int(c) % self.p for c in _coords(b)) for b in self.basis)
        if any(len(b) != len(u0) for b in basis):
            raise SchemaError("basis vectors must match the basepoint dimension")
        if basis and rank_fp(np.array(basis), self.p) != len(basis):
            raise SchemaError("coset basis is not linearly independent")
        object.__setattr__(self, "u0", u0)
        object.__setattr__(self, "basis", basis)

    @classmethod
    def full(cls, p: int, n: int) -> Coset:
        return cls(p, (0,) * n, tuple(tuple(int(i == j) for j in range(n)) for i in range(n)))

    @property
    def n(self) -> int:
        return len(self.u0)

    @property
    def dim(self) -> int:
        return len(self.basis)

    @property
    def size(self) -> int:
        return self.p**self.dim

    @property
    def basis_matrix(self) -> np.ndarray:
        return np.array(self.basis, dtype=np.int64).reshape(self.dim, self.n)

    def params(self) -> np.ndarray:
        """All coefficient vectors ``lambda`` in canonical order, shape ``(size, dim)``."""
        return ProductSpace(self.p, (self.dim,)).coords

    def members(self) -> np.ndarray:
        """All points ``u0 + lambda . basis``, shape ``(size, n)``, distinct."""
        return (np.asarray(self.u0) + self.params() @ self.basis_matrix) % self.p

    def contains(self, x) -> bool:
        from .linalg import solve_mod_p

        diff = (_coords(x) - np.asarray(self.u0)) % self.p
        if self.dim == 0:
            return not diff.any()
        return solve_mod_p(self.basis_matrix.T, diff, self.p) is not None

    def coordinates_of(self, x) -> np.ndarray:
        """The unique ``lambda`` with ``x = u0 + lambda . basis``."""
        from .linalg import solve_mod_p

        diff = (_coords(x) - np.asarray(self.u0)) % self.p
        lam = solve_mod_p(self.basis_matrix.T, diff, self.p) if self.dim else (None if diff.any() else np.zeros(0, np.int64))
        if lam is None:
            raise SchemaError(f"{x!r} is not in the coset")
        return lam


@dataclass(frozen=True)
class LinearMapFp:
    """``x -> matrix @ x + offset`` over F_p (``offset`` zero for a linear map)."""

    p: int
    matrix: np.ndarray
    offset: np.ndarray | None = None

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=np.int64) % self.p
        if m.ndim != 2:
            raise SchemaError("matrix must be two-dimensional")
        object.__setattr__(self, "matrix", m)
        off = np.zeros(m.shape[0], np.int64) if self.offset is None else np.asarray(self.offset, np.int64) % self.p
        if off.shape != (m.shape[0],):
            raise SchemaError("offset must match the codomain dimension")
        object.__setattr__(self, "offset", off)

    @property
    def domain_dim(self) -> int:
        return self.matrix.shape[1]

    @property
    def codomain_dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def is_linear(self) -> bool:
        return not self.offset.any()

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(_coords(x) if not isinstance(x, np.ndarray) else x, dtype=np.int64)
        return (x @ self.matrix.T + self.offset) % self.p

    def __eq__(self, other):
        return (
            isinstance(other, LinearMapFp)
            and self.p == other.p
            and np.array_equal(self.matrix, other.matrix)
            and np.array_equal(self.offset, other.offset)
        )

    def __hash__(self):
        return hash((self.p, self.matrix.tobytes(), self.offset.tobytes()))


def all_vectors(p: int, n: int) -> Iterator[tuple]:
    return itertools.product(range(p), repeat=n)

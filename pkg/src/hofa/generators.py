"""Seeded instance generators.  Same seed and parameters, same instance."""

from __future__ import annotations

import numpy as np

from .errors import SchemaError
from .freiman import PartialMap, corrupt, random_domain
from .harmonic import FunctionTable
from .multiaffine import MultiAffineMap, Variety, random_variety
from .polynomial import MonomialPoly
from .rng import SplitMix64, derive_seed
from .space import ProductSpace

TABLE_KINDS = ("disc", "phase", "sign", "gaussian")


def random_table(space: ProductSpace, seed: int, kind: str = "disc") -> FunctionTable:
    """``disc``: uniform in the unit disc; ``phase``: unimodular; ``sign``: +-1;
    ``gaussian``: unbounded complex normal (Box-Muller on the stream)."""
    rng = SplitMix64(seed)
    n = space.total_size
    if kind == "disc":
        vals = rng.unit_disc(n)
    elif kind == "phase":
        vals = np.exp(2j * np.pi * rng.random(n))
    elif kind == "sign":
        vals = 1.0 - 2.0 * rng.integers(2, n)
    elif kind == "gaussian":
        u1, u2 = 1.0 - rng.random(n), rng.random(n)
        r = np.sqrt(-2 * np.log(u1))
        vals = r * np.cos(2 * np.pi * u2) + 1j * r * np.sin(2 * np.pi * u2)
    else:
        raise SchemaError(f"unknown table kind {kind!r}; expected one of {TABLE_KINDS}")
    return FunctionTable(space, vals, kind != "gaussian")


def random_multiaffine(space: ProductSpace, h: int, seed: int, supports=None) -> MultiAffineMap:
    return MultiAffineMap.random(space, h, SplitMix64(seed), supports)


def random_restriction(space: ProductSpace, h: int, density: float, seed: int) -> tuple[MultiAffineMap, PartialMap]:
    phi = random_multiaffine(space, h, derive_seed(seed, 0))
    return phi, PartialMap.restriction(phi, random_domain(space, density, derive_seed(seed, 1)))


def corruption(phi: PartialMap, fraction: float, seed: int) -> PartialMap:
    return corrupt(phi, fraction, seed)


def variety(space: ProductSpace, codim: int, seed: int, nonempty: bool = True) -> Variety:
    return random_variety(space, codim, SplitMix64(seed), nonempty)


def random_poly(p: int, n: int, d: int, seed: int, homogeneous: bool = False) -> MonomialPoly:
    return MonomialPoly.random(p, n, d, SplitMix64(seed), homogeneous)

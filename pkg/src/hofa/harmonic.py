"""Dense complex tables on product spaces: Fourier analysis, convolutions, norms.

Conventions
-----------
* ``fourier(f)(r) = E_x f(x) chi(-r.x)`` and ``f(x) = sum_r fhat(r) chi(r.x)``.
* ``conv(f, g)(x) = E_y f(x + y) conj(g(y))``.
* ``dir_conv(f, d)`` is the same average taken along factor ``d`` only.
* Directions are 1-based.  ``mixed_conv(f, (d1, ..., dr))`` applies ``d1``
  first, so it is the operator written ``conv_{dr} ... conv_{d1} f``.

Transforms go through ``numpy.fft`` on the ``(p,) * n`` tensor view, which
is exactly the character sum over ``F_p^n``; :func:`fourier_direct` keeps the
plain double loop around as an oracle.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .errors import PreconditionError, SchemaError
from .space import ProductSpace, character, check_budget

TOL = 1e-9


@dataclass(frozen=True, eq=False)
class FunctionTable:
    """A complex function on ``space`` stored in canonical index order."""

    space: ProductSpace
    values: np.ndarray
    bounded: bool = False

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.complex128).reshape(-1)
        if v.shape[0] != self.space.total_size:
            raise SchemaError(f"table has {v.shape[0]} values, space has {self.space.total_size} points")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)
        if self.bounded and np.abs(v).max(initial=0.0) > 1 + 1e-12:
            raise SchemaError("bounded flag set but max modulus exceeds 1")

    @classmethod
    def constant(cls, space: ProductSpace, c: complex = 1.0) -> FunctionTable:
        return cls(space, np.full(space.total_size, c, dtype=np.complex128), abs(c) <= 1)

    @classmethod
    def from_function(cls, space: ProductSpace, fn) -> FunctionTable:
        return cls(space, np.array([fn(x) for x in space.points()], dtype=np.complex128))

    @classmethod
    def character_table(cls, space: ProductSpace, s) -> FunctionTable:
        """``x -> chi(s . x)`` on the flattened space."""
        s = space.flatten_point(s) if not isinstance(s, (int, np.integer)) else space.coords[int(s)]
        return cls(space, character(space.p, space.coords @ s), True)

    @property
    def tensor(self) -> np.ndarray:
        return self.values.reshape(self.space.tensor_shape)

    def __call__(self, x) -> complex:
        return complex(self.values[self.space.index_of(x)])

    def conj(self) -> FunctionTable:
        return FunctionTable(self.space, self.values.conj(), self.bounded)

    def _binary(self, other, op):
        if isinstance(other, FunctionTable):
            _same_space(self, other)
            other = other.values
        return FunctionTable(self.space, op(self.values, other))

    def __add__(self, other):
        return self._binary(other, np.add)

    def __sub__(self, other):
        return self._binary(other, np.subtract)

    def __mul__(self, other):
        return self._binary(other, np.multiply)

    __rmul__ = __mul__

    def allclose(self, other: FunctionTable, tol: float = TOL) -> bool:
        return self.space == other.space and bool(np.abs(self.values - other.values).max(initial=0) <= tol)

    def to_json(self) -> dict:
        return {
            "space": self.space.to_json(),
            "bounded": self.bounded,
            "values": [[float(z.real), float(z.imag)] for z in self.values],
        }

    @classmethod
    def from_json(cls, obj: dict) -> FunctionTable:
        try:
            space = ProductSpace.from_json(obj["space"])
            vals = np.array([complex(re, im) for re, im in obj["values"]], dtype=np.complex128)
        except (KeyError, TypeError, ValueError) as exc:
            raise SchemaError("bad function-table JSON") from exc
        return cls(space, vals, bool(obj.get("bounded", False)))


@dataclass(frozen=True, eq=False)
class Spectrum:
    """Fourier coefficients indexed by frequency (same numbering as points)."""

    space: ProductSpace
    coefficients: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coefficients, dtype=np.complex128).reshape(-1)
        if c.shape[0] != self.space.total_size:
            raise SchemaError("spectrum length does not match the space")
        object.__setattr__(self, "coefficients", c)

    def __getitem__(self, r) -> complex:
        idx = r if isinstance(r, (int, np.integer)) else self.space.index_of(r)
        return complex(self.coefficients[idx])

    def to_json(self) -> dict:
        return {
            "space": self.space.to_json(),
            "values": [[float(z.real), float(z.imag)] for z in self.coefficients],
        }

    @classmethod
    def from_json(cls, obj: dict) -> Spectrum:
        t = FunctionTable.from_json(obj)
        return cls(t.space, t.values)


def _same_space(f: FunctionTable, g: FunctionTable) -> None:
    if f.space != g.space:
        raise SchemaError(f"space mismatch: {f.space} vs {g.space}")


def _require_bounded(*tables: FunctionTable) -> None:
    for t in tables:
        if np.abs(t.values).max(initial=0.0) > 1 + 1e-12:
            raise PreconditionError("function is not bounded by 1", witness=int(np.abs(t.values).argmax()))


# --------------------------------------------------------------------------- Fourier


def fourier(f: FunctionTable) -> Spectrum:
    """``fhat(r) = E_x f(x) chi(-r.x)`` over the flattened group."""
    s = f.space
    if s.ncoords == 0:
        return Spectrum(s, f.values.copy())
    coeffs = np.fft.fftn(f.tensor) / s.total_size
    return Spectrum(s, coeffs.reshape(-1))


def inverse_fourier(spec: Spectrum) -> FunctionTable:
    s = spec.space
    if s.ncoords == 0:
        return FunctionTable(s, spec.coefficients.copy())
    vals = np.fft.ifftn(spec.coefficients.reshape(s.tensor_shape)) * s.total_size
    return FunctionTable(s, vals.reshape(-1))


def fourier_direct(f: FunctionTable) -> Spectrum:
    """Double-loop character sum; the oracle for :func:`fourier`."""
    s = f.space
    check_budget(s.total_size**2, s.budget, "direct Fourier transform")
    c = s.coords
    phases = character(s.p, -(c @ c.T))
    return Spectrum(s, phases @ f.values / s.total_size)


# --------------------------------------------------------------------------- convolutions


def conv(f: FunctionTable, g: FunctionTable) -> FunctionTable:
    """``(f * g)(x) = E_y f(x + y) conj g(y)``, computed through the spectrum."""
    _same_space(f, g)
    fh, gh = fourier(f), fourier(g)
    return inverse_fourier(Spectrum(f.space, fh.coefficients * gh.coefficients.conj()))


def conv_direct(f: FunctionTable, g: FunctionTable) -> FunctionTable:
    _same_space(f, g)
    s = f.space
    add = s.add_table
    return FunctionTable(s, (f.values[add] * g.values.conj()[None, :]).mean(axis=1))


def dir_conv(f: FunctionTable, d: int) -> FunctionTable:
    """Convolution of ``f`` with itself along factor ``d``."""
    s = f.space
    axes = s.axes_of(d)
    t = f.tensor
    if not axes:
        return FunctionTable(s, (np.abs(t) ** 2).reshape(-1))
    size = s.factor_size(d)
    fh = np.fft.fftn(t, axes=axes)
    out = np.fft.ifftn(fh * fh.conj(), axes=axes) / size
    return FunctionTable(s, out.reshape(-1))


def mixed_conv(f: FunctionTable, dirs: Sequence[int]) -> FunctionTable:
    """Repeated :func:`dir_conv`, ``dirs[0]`` applied first."""
    if not dirs:
        raise SchemaError("mixed_conv needs at least one direction")
    for d in dirs:
        f.space._dir(d)
    out = f
    for d in dirs:
        out = dir_conv(out, d)
    return out


def mixed_conv_expanded(f: FunctionTable, dirs: Sequence[int], x, budget: int | None = None) -> complex:
    """Value of ``mixed_conv(f, dirs)`` at ``x`` as one average over a configuration.

    With ``e_1, ..., e_r`` the directions listed outermost first (the reverse
    of ``dirs``), the average runs over parameters
    ``a^i in G_{e_i}^{{0,1}^{i-1}}`` and multiplies ``Conj^{r-|eps|} f``
    over the ``2^r`` points whose ``d``-th coordinate is
    ``eps_{j1}...eps_{jl} x_d + eps_{j2}...eps_{jl} a^{j1} + ... + a^{jl}``,
    ``j1 < ... < jl`` being the positions of ``d`` in ``e``.
    """
    s = f.space
    if not dirs:
        raise SchemaError("need at least one direction")
    e = list(reversed(dirs))
    r = len(e)
    for d in e:
        s._dir(d)
    xf = s.flatten_point(x) if not isinstance(x, (int, np.integer)) else s.coords[int(x)]
    slots = [(i, pre) for i in range(r) for pre in range(2 ** i)]
    sizes = [s.factor_size(e[i]) for i, _ in slots]
    total = int(np.prod(sizes, dtype=object))
    check_budget(total * 2**r, budget if budget is not None else s.budget, "configuration expansion")
    # params[slot] : index of a^{i}_{prefix} inside its factor, for every configuration
    params = np.indices(sizes).reshape(len(slots), -1) if slots else np.zeros((0, 1), np.int64)
    slot_of = {key: n for n, key in enumerate(slots)}
    factor_coords = {d: s.factor(d).coords for d in set(e)}
    positions = {d: [i for i in range(r) if e[i] == d] for d in range(1, s.k + 1)}
    acc = np.ones(params.shape[1], dtype=np.complex128)
    for eps in itertools.product((0, 1), repeat=r):
        pt = np.tile(xf, (params.shape[1], 1))
        for d in range(1, s.k + 1):
            js = positions[d]
            if not js:
                continue
            lo, hi = s.offsets[d - 1], s.offsets[d]
            fc = factor_coords[d]
            coord = np.zeros((params.shape[1], hi - lo), dtype=np.int64)
            if all(eps[j] for j in js):
                coord += xf[lo:hi]
            for m, j in enumerate(js):
                if all(eps[t] for t in js[m + 1 :]):
                    prefix = int("".join(map(str, eps[:j])) or "0", 2)
                    coord += fc[params[slot_of[(j, prefix)]]]
            pt[:, lo:hi] = coord
        vals = f.values[s.indices_of(pt)]
        if (r - sum(eps)) % 2:
            vals = vals.conj()
        acc *= vals
    return complex(acc.mean())


# --------------------------------------------------------------------------- norms


def lq_norm(f: FunctionTable, q: float) -> float:
    if q < 1:
        raise SchemaError("q must be at least 1")
    return float(np.mean(np.abs(f.values) ** q) ** (1.0 / q))


def linf_norm(f: FunctionTable) -> float:
    return float(np.abs(f.values).max(initial=0.0))


def l1_distance(f: FunctionTable, g: FunctionTable) -> float:
    _same_space(f, g)
    return float(np.mean(np.abs(f.values - g.values)))


def _mult_derivatives(batch: np.ndarray, s: ProductSpace) -> np.ndarray:
    """All ``x -> f(x) conj f(x - a)`` for every row f of ``batch`` and every a."""
    sub = s.add_table[:, s.neg]  # sub[x, a] = x - a
    shifted = batch[:, sub]  # (B, x, a)
    out = batch[:, :, None] * shifted.conj()
    return out.transpose(0, 2, 1).reshape(-1, s.total_size)


def uk_norm_power(f: FunctionTable, k: int, budget: int | None = None) -> float:
    """``||f||_{U^k}^{2^k}`` through ``E_a ||d_a f||_{U^{k-1}}^{2^{k-1}}``."""
    if k < 1:
        raise SchemaError("order k must be at least 1")
    s = f.space.flat()
    check_budget(s.total_size**k, budget if budget is not None else s.budget, f"U^{k} recursion")
    batch = f.values[None, :]
    for _ in range(k - 1):
        batch = _mult_derivatives(batch, s)
    val = np.mean(np.abs(batch.mean(axis=1)) ** 2)
    return float(val)


def uk_norm(f: FunctionTable, k: int, budget: int | None = None) -> float:
    val = uk_norm_power(f, k, budget)
    if val < -TOL:
        raise AssertionError(f"U^{k} power is negative: {val}")
    return max(val, 0.0) ** (1.0 / 2**k)


def uk_norm_direct(f: FunctionTable, k: int, budget: int | None = None) -> complex:
    """The defining average over ``(x, a_1..a_k)`` (returns the 2^k-th power)."""
    s = f.space.flat()
    n = s.total_size
    check_budget(n ** (k + 1), budget if budget is not None else s.budget, "direct U^k")
    c = s.coords
    grids = np.indices((n,) * (k + 1)).reshape(k + 1, -1)
    x, avec = grids[0], grids[1:]
    acc = np.ones(grids.shape[1], dtype=np.complex128)
    for eps in itertools.product((0, 1), repeat=k):
        pt = c[x].copy()
        for i, e in enumerate(eps):
            if e:
                pt -= c[avec[i]]
        vals = f.values[s.indices_of(pt)]
        acc *= vals.conj() if sum(eps) % 2 else vals
    return complex(acc.mean())


def _factor_tensor(f: FunctionTable) -> np.ndarray:
    """Values reshaped to ``(|G_1|, ..., |G_k|)``."""
    s = f.space
    return f.values.reshape(tuple(s.factor_size(d) for d in range(1, s.k + 1)))


def box_norm_power(f: FunctionTable) -> float:
    """``||f||_box^{2^k}`` by peeling one factor at a time."""
    s = f.space
    sizes = [s.factor_size(d) for d in range(1, s.k + 1)]
    check_budget(int(np.prod([m * m for m in sizes], dtype=object)), s.budget, "box norm")
    batch = _factor_tensor(f)[None, ...]
    for level in range(s.k - 1, 0, -1):
        # g_{x,y}(z) = f(z, y) conj f(z, x) for the last remaining factor
        b = batch.reshape(batch.shape[0], -1, sizes[level])
        prod = b[:, :, None, :] * b[:, :, :, None].conj()  # (B, z, x, y)
        batch = prod.transpose(0, 2, 3, 1).reshape(-1, *sizes[:level])
    return float(np.mean(np.abs(batch.reshape(batch.shape[0], -1).mean(axis=1)) ** 2))


def box_norm(f: FunctionTable) -> float:
    val = box_norm_power(f)
    return max(val, 0.0) ** (1.0 / 2**f.space.k)


def box_inner(tables: Mapping[frozenset, FunctionTable] | Sequence[FunctionTable]) -> complex:
    """``E_{x,y} prod_I Conj^{|I|} f_I(x_I, y_rest)`` over all ``I`` in ``[k]``.

    ``tables`` maps each subset ``I`` (1-based) to ``f_I``; a sequence is read
    with ``tables[m]`` belonging to the set whose bitmask is ``m`` (bit
    ``i-1`` set when ``i`` is in ``I``).
    """
    if isinstance(tables, Mapping):
        first = next(iter(tables.values()))
        k = first.space.k
        seq = [tables[frozenset(i + 1 for i in range(k) if m >> i & 1)] for m in range(2**k)]
    else:
        seq = list(tables)
        k = seq[0].space.k
        if len(seq) != 2**k:
            raise SchemaError("need one table per subset of [k]")
    s = seq[0].space
    for t in seq:
        _same_space(seq[0], t)
    sizes = [s.factor_size(d) for d in range(1, k + 1)]
    check_budget(int(np.prod([m * m for m in sizes], dtype=object)), s.budget, "box inner product")
    grids = np.indices(tuple(sizes) * 2).reshape(2 * k, -1)
    xs, ys = grids[:k], grids[k:]
    acc = np.ones(grids.shape[1], dtype=np.complex128)
    for m, t in enumerate(seq):
        idx = 0
        for i in range(k):
            idx = idx * sizes[i] + (xs[i] if m >> i & 1 else ys[i])
        vals = t.values[idx]
        acc *= vals.conj() if bin(m).count("1") % 2 else vals
    return complex(acc.mean())


# --------------------------------------------------------------------------- spectra


def large_spectrum(f: FunctionTable, eps: float) -> list[int]:
    """Frequencies ``r`` (as indices) with ``|fhat(r)| >= eps``; at most ``eps^-2`` of them."""
    if eps <= 0:
        raise SchemaError("eps must be positive")
    _require_bounded(f)
    coeffs = np.abs(fourier(f).coefficients)
    out = [int(r) for r in np.nonzero(coeffs >= eps)[0]]
    assert len(out) <= eps**-2 + 1e-9, "large spectrum exceeds eps^-2"
    return out


@dataclass(frozen=True, eq=False)
class SpectralApproximation:
    approximant: FunctionTable
    support: tuple
    l2_error: float
    residual: FunctionTable

    def lq_error(self, q: float) -> float:
        return lq_norm(self.residual, q)


def spectral_conv_approx(f: FunctionTable, g: FunctionTable, eps: float, q: float = 4.0) -> SpectralApproximation:
    """Approximate ``conv(f, g)`` by its Fourier series restricted to the joint large spectrum.

    The support is ``{r : |fhat(r)|, |ghat(r)| >= eps/2}``, the smallest set the
    L^2 estimate allows; it also contains every frequency where both
    coefficients reach ``eps``, so the L^q estimate ``8 eps^(1/q)`` applies too.
    Both bounds are asserted.
    """
    _same_space(f, g)
    _require_bounded(f, g)
    fh, gh = fourier(f).coefficients, fourier(g).coefficients
    mask = (np.abs(fh) >= eps / 2) & (np.abs(gh) >= eps / 2)
    approx = inverse_fourier(Spectrum(f.space, np.where(mask, fh * gh.conj(), 0)))
    residual = conv(f, g) - approx
    res = SpectralApproximation(approx, tuple(int(r) for r in np.nonzero(mask)[0]), lq_norm(residual, 2), residual)
    assert res.l2_error <= eps + TOL
    assert res.lq_error(q) <= 8 * eps ** (1 / q) + TOL
    return res


def shifted_correlation_energy(f: FunctionTable, g: FunctionTable) -> float:
    """``(E_d |E_x conj f(x) g(x + d)|^2)^2``, computed directly."""
    _same_space(f, g)
    s = f.space
    add = s.add_table
    corr = (f.values.conj()[:, None] * g.values[add]).mean(axis=0)
    return float(np.mean(np.abs(corr) ** 2) ** 2)


def fourier_l4(f: FunctionTable) -> float:
    return float(np.sum(np.abs(fourier(f).coefficients) ** 4))

"""Brute-force oracles and golden-file suites.

The functions here deliberately avoid the fast paths of the main modules:
plain loops, direct character sums and explicit enumeration.  Each suite
produces ``{key: {"config": ..., "values": ...}}`` with keys the config
hash, and :func:`compare_goldens` reports the first divergence.
"""

from __future__ import annotations

import cmath
import itertools
import math
from typing import Callable

import numpy as np

from .errors import SchemaError
from .generators import random_table
from .harmonic import FunctionTable, mixed_conv_expanded
from .records import _plain, config_hash
from .rng import SplitMix64, derive_seed
from .space import ProductSpace


# --------------------------------------------------------------------------- direct formulas


def fourier_loop(f: FunctionTable) -> np.ndarray:
    s = f.space
    pts = [tuple(int(c) for c in row) for row in s.coords]
    out = []
    for r in pts:
        acc = 0j
        for x, v in zip(pts, f.values):
            acc += v * cmath.exp(-2j * cmath.pi * (sum(a * b for a, b in zip(r, x)) % s.p) / s.p)
        out.append(acc / len(pts))
    return np.array(out)


def u2_loop(f: FunctionTable) -> complex:
    """``E_{x,a,b} f(x) conj f(x-a) conj f(x-b) f(x-a-b)``."""
    s = f.space
    pts = [tuple(int(c) for c in row) for row in s.coords]
    idx = {x: i for i, x in enumerate(pts)}
    v = f.values
    sub = lambda x, y: tuple((a - b) % s.p for a, b in zip(x, y))
    acc = 0j
    for x in pts:
        for a in pts:
            xa = sub(x, a)
            for b in pts:
                acc += v[idx[x]] * v[idx[xa]].conjugate() * v[idx[sub(x, b)]].conjugate() * v[idx[sub(xa, b)]]
    return acc / len(pts) ** 3


def quadruples_loop(space: ProductSpace, mask, d: int, values=None) -> tuple[int, int]:
    pts = [space.split_point(row) for row in space.coords]
    members = [i for i in range(space.total_size) if mask[i]]
    total = respected = 0
    p = space.p
    for x, y, z, w in itertools.product(members, repeat=4):
        px, py, pz, pw = pts[x], pts[y], pts[z], pts[w]
        if any(not (px[e] == py[e] == pz[e] == pw[e]) for e in range(space.k) if e != d - 1):
            continue
        if any((a - b + c - e) % p for a, b, c, e in zip(px[d - 1], py[d - 1], pz[d - 1], pw[d - 1])):
            continue
        total += 1
        if values is None or not any((values[x][j] - values[y][j] + values[z][j] - values[w][j]) % p for j in range(len(values[x]))):
            respected += 1
    return total, respected


def quasirandom_dot_loop(n: int) -> dict:
    """Slice and pair statistics of ``{x . y = 0}`` on ``F_2^n x F_2^n`` by set arithmetic."""
    pts = list(itertools.product(range(2), repeat=n))
    cols = {x: frozenset(y for y in pts if sum(a * b for a, b in zip(x, y)) % 2 == 0) for x in pts}
    sizes = [len(c) for c in cols.values()]
    counts = {s: sizes.count(s) for s in set(sizes)}
    top = max(counts.values())
    best = max(s for s, c in counts.items() if c == top)
    N = len(pts)
    slice_fail = sum(1 for s in sizes if s != best) / N
    pair_fail = sum(1 for a in pts for b in pts if len(cols[a] & cols[b]) * N != best * best) / N**2
    return {"delta": best / N, "eta_min": max(slice_fail, pair_fail), "pair_failure": pair_fail, "slice_failure": slice_fail}


def affine_scan_reversed(p: int, n: int, domain: list, values: list) -> tuple[list, int]:
    """Best affine ``F_p^n -> F_p`` by scanning candidates from last to first."""
    best, best_c = -1, None
    cands = list(itertools.product(range(p), repeat=n + 1))
    for c in reversed(cands):
        agree = sum(1 for x, v in zip(domain, values) if (c[0] + sum(a * b for a, b in zip(c[1:], x))) % p == v)
        if agree >= best:  # ">=" while walking backwards keeps the lexicographically smallest
            best, best_c = agree, c
    return list(best_c), best


def biaffine_scan(domain: list, values: list) -> int:
    """Best agreement of ``c0 + c1 x + c2 y + c3 x y`` over F_2 (dims (1,1))."""
    best = 0
    for c in itertools.product(range(2), repeat=4):
        agree = sum(1 for (x, y), v in zip(domain, values) if (c[0] + c[1] * x + c[2] * y + c[3] * x * y) % 2 == v)
        best = max(best, agree)
    return best


def coset_intersection_trials(p: int, n: int, r: int, delta: float, trials: int, seed: int) -> dict:
    """Mean of ``N = #{lambda : x_0 + lambda . x in S}`` over random ``x_0..x_r``; ``E N = delta p^r``."""
    size = p**n
    rng = SplitMix64(seed)
    m = int(round(delta * size))
    S = np.zeros(size, bool)
    S[rng.permutation(size)[:m]] = True
    dens = m / size
    space = ProductSpace(p, (n,))
    lam = ProductSpace(p, (r,)).coords  # (p^r, r)
    x = rng.integers(size, (trials, r + 1))
    c = space.coords
    pts = c[x[:, 0]][:, None, :] + np.einsum("lr,trn->tln", lam, c[x[:, 1:]])
    N = S[space.indices_of(pts.reshape(-1, n)).reshape(trials, -1)].sum(axis=1)
    mean = float(N.mean())
    se = float(N.std(ddof=1) / math.sqrt(trials))
    expected = dens * p**r
    return {"mean": mean, "se": se, "expected": expected, "z": (mean - expected) / se if se else 0.0}


# --------------------------------------------------------------------------- suites


def _entry(config: dict, values: dict) -> tuple[str, dict]:
    return config_hash(config), {"config": config, "values": _plain(values)}


def suite_harmonic_micro(seed: int = 0) -> dict:
    out = {}
    for i in range(20):
        space = ProductSpace(2, (4,)) if i % 2 == 0 else ProductSpace(3, (2,))
        s = derive_seed(seed, i)
        f = random_table(space, s, "disc")
        fh = fourier_loop(f)
        cfg = {"suite": "harmonic-micro", "space": space.to_json(), "seed": s, "kind": "disc"}
        k, v = _entry(cfg, {"u2_power": u2_loop(f).real, "fourier_l4": float(np.sum(np.abs(fh) ** 4)),
                            "parseval": float(np.sum(np.abs(fh) ** 2)), "mean_sq": float(np.mean(np.abs(f.values) ** 2))})
        out[k] = v
    return out


def suite_config_formula(seed: int = 0) -> dict:
    out = {}
    space = ProductSpace(2, (1, 1))
    words = [w for r in (1, 2, 3) for w in itertools.product((1, 2), repeat=r)]
    for i in range(4):
        s = derive_seed(seed, i)
        f = random_table(space, s, "disc")
        for w in words:
            vals = [mixed_conv_expanded(f, w, x) for x in range(space.total_size)]
            k, v = _entry({"suite": "config-formula", "seed": s, "word": list(w)}, {"values": vals})
            out[k] = v
    return out


def suite_quadruples(seed: int = 0) -> dict:
    out = {}
    space = ProductSpace(2, (2, 1))
    for i in range(6):
        rng = SplitMix64(derive_seed(seed, i))
        mask = rng.integers(2, space.total_size).astype(bool)
        vals = rng.residues(2, space.total_size).reshape(-1, 1)
        for d in (1, 2):
            total, resp = quadruples_loop(space, mask, d, vals.tolist())
            cfg = {"suite": "quadruples", "seed": derive_seed(seed, i), "d": d, "space": space.to_json()}
            k, v = _entry(cfg, {"total": total, "respected": resp, "mask": mask, "values": vals})
            out[k] = v
    return out


def suite_quasirandom(seed: int = 0) -> dict:
    out = {}
    for n in (2, 3, 4):
        k, v = _entry({"suite": "quasirandom", "n": n, "form": "x.y", "target": 0}, quasirandom_dot_loop(n))
        out[k] = v
    return out


def suite_affine_scan(seed: int = 0) -> dict:
    out = {}
    pts = list(itertools.product(range(2), repeat=3))
    for i in range(10):
        rng = SplitMix64(derive_seed(seed, i))
        keep = [j for j in range(8) if rng.below(4)]
        vals = rng.residues(2, len(keep)).tolist()
        coeffs, agree = affine_scan_reversed(2, 3, [pts[j] for j in keep], vals)
        cfg = {"suite": "affine-scan", "seed": derive_seed(seed, i)}
        k, v = _entry(cfg, {"domain": keep, "values": vals, "coeffs": coeffs, "agreement": agree})
        out[k] = v
    return out


def suite_multiaffine_scan(seed: int = 0) -> dict:
    out = {}
    pts = list(itertools.product(range(2), repeat=2))
    for i in range(10):
        rng = SplitMix64(derive_seed(seed, i))
        keep = [j for j in range(4) if rng.below(3)]
        vals = rng.residues(2, len(keep)).tolist()
        cfg = {"suite": "multiaffine-scan", "seed": derive_seed(seed, i)}
        k, v = _entry(cfg, {"domain": keep, "values": vals, "agreement": biaffine_scan([pts[j] for j in keep], vals)})
        out[k] = v
    return out


def suite_coset_intersection(seed: int = 0) -> dict:
    out = {}
    for j, delta in enumerate((0.25, 0.5)):
        s = derive_seed(seed, j)
        cfg = {"suite": "coset-intersection", "p": 2, "n": 8, "r": 3, "delta": delta, "trials": 10_000, "seed": s}
        k, v = _entry(cfg, coset_intersection_trials(2, 8, 3, delta, 10_000, s))
        out[k] = v
    return out


SUITES: dict[str, Callable[[int], dict]] = {
    "harmonic-micro": suite_harmonic_micro,
    "config-formula": suite_config_formula,
    "quadruples": suite_quadruples,
    "quasirandom": suite_quasirandom,
    "affine-scan": suite_affine_scan,
    "multiaffine-scan": suite_multiaffine_scan,
    "coset-intersection": suite_coset_intersection,
}


def run_suite(name: str, seed: int = 0) -> dict:
    if name not in SUITES:
        raise SchemaError(f"unknown suite {name!r}; known: {', '.join(sorted(SUITES))}")
    return {"suite": name, "seed": seed, "entries": SUITES[name](seed)}


def compare_goldens(expected, actual, tol: float = 1e-9, path: str = "") -> tuple[str, object, object] | None:
    """First key path where the two structures differ (numbers within ``tol``), or None."""
    if isinstance(expected, dict) and isinstance(actual, dict):
        for key in sorted(set(expected) | set(actual)):
            if key not in expected or key not in actual:
                return f"{path}/{key}", expected.get(key), actual.get(key)
            hit = compare_goldens(expected[key], actual[key], tol, f"{path}/{key}")
            if hit:
                return hit
        return None
    if isinstance(expected, list) and isinstance(actual, list):
        if len(expected) != len(actual):
            return f"{path}/len", len(expected), len(actual)
        for i, (a, b) in enumerate(zip(expected, actual)):
            hit = compare_goldens(a, b, tol, f"{path}/{i}")
            if hit:
                return hit
        return None
    if isinstance(expected, bool) or isinstance(actual, bool):
        return None if expected == actual else (path, expected, actual)
    if isinstance(expected, (int, float)) and isinstance(actual, (int, float)):
        return None if abs(expected - actual) <= tol else (path, expected, actual)
    return None if expected == actual else (path, expected, actual)

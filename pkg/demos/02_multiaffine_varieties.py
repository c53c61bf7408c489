# Multiaffine maps, their varieties, bias and rank.
# Run: python3 demos/02_multiaffine_varieties.py

import numpy as np

from hofa import ProductSpace, rank_fp
from hofa.multiaffine import (
    MultiAffineMap,
    MultilinearForm,
    analytic_rank,
    bias,
    check_quasirandom,
    partition_rank_search,
    random_variety,
    top_part,
    variety_size,
)
from hofa.rng import SplitMix64

# the dot product x.y on F_2^3 x F_2^3, as a bilinear form
G = ProductSpace(2, (3, 3))
dot = MultilinearForm(G, frozenset({1, 2}), np.eye(3, dtype=np.int64))
print("bias of x.y", round(bias(dot.as_map()).real, 12), "(= 2^-3)")
print("analytic rank", analytic_rank(dot.as_map()))

# for bilinear forms, partition rank is just matrix rank
rng = SplitMix64(5)
for _ in range(3):
    a = MultilinearForm.random(G, frozenset({1, 2}), rng)
    res = partition_rank_search(a)
    print("partition rank", res.rank, "matrix rank", rank_fp(a.coeffs, 2))

# lower-order perturbations never increase the bias
phi = MultiAffineMap.random(ProductSpace(3, (1, 2)), 1, SplitMix64(7))
print(f"|bias(phi)| {abs(bias(phi)):.4f} <= bias(top part) {bias(top_part(phi)).real:.4f}")

# a variety cut out by r equations keeps at least a p^(-kr) share of the space
H = ProductSpace(2, (2, 2))
v = random_variety(H, 2, SplitMix64(3))
print("variety size", variety_size(v), "bound", H.total_size / 2 ** (2 * 2))

# {x.y = 0} gets more quasirandom as n grows
for n in (2, 3, 4):
    beta = MultilinearForm(ProductSpace(2, (n, n)), frozenset({1, 2}), np.eye(n, dtype=np.int64)).as_map()
    rep = check_quasirandom(beta, (0,))
    print(f"n={n}: density {rep.delta}, eta_min {rep.eta_min:.4f}")

# Partial maps that respect additive quadruples, and how to recover them.
# Run: python3 demos/03_freiman_homomorphisms.py

import numpy as np

from hofa import ProductSpace
from hofa.freiman import PartialMap, affine_extension, corrupt, drc_kept_rate, is_multi_hom, multiaffine_inverse_search
from hofa.generators import random_restriction

# an affine map F_2^3 -> F_2 seen on 7 of its 8 points
s = ProductSpace(2, (3,))
vals = (s.coords @ np.array([1, 0, 1]) + 1) % 2
pm = PartialMap.full(s, vals.reshape(-1, 1)).restrict(np.arange(8) != 5)
ext = affine_extension(pm)
print("recovered matrix", ext.map.matrix.tolist(), "offset", ext.map.offset.tolist())

# a multiaffine map restricted to a random 60% domain is a multi-homomorphism
G = ProductSpace(2, (2, 2))
phi, rest = random_restriction(G, 1, 0.6, seed=21)
print("domain size", rest.size, "multi-hom:", is_multi_hom(rest, 2).ok)

# corrupt a fifth of the values; on a sparse domain few quadruples may notice,
# but no multiaffine map agrees everywhere any more
bad = corrupt(rest, 0.2, seed=22)
print("corrupted multi-hom:", is_multi_hom(bad, 2).ok)
best, agreement = multiaffine_inverse_search(bad)
print(f"best multiaffine agreement {agreement} / {bad.size}")

# the random filter keeps a pure-tensor point with probability p^-t
single = PartialMap.from_entries(ProductSpace(3, (1, 1)), 1, {((1,), (1,)): [1]})
stats = drc_kept_rate(single, 1, 5000, 23)
print(f"kept rate {stats['mean']:.4f} vs {stats['expected']:.4f} (z={stats['z']:+.2f})")

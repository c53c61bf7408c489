# Fourier analysis and uniformity norms on small F_p^n.
# Run: python3 demos/01_fourier_and_uniformity.py

import numpy as np

from hofa import ProductSpace
from hofa.generators import random_table
from hofa.harmonic import (
    FunctionTable,
    fourier,
    fourier_l4,
    large_spectrum,
    mixed_conv,
    spectral_conv_approx,
    uk_norm,
    uk_norm_power,
)

G = ProductSpace(2, (6,))
f = random_table(G, seed=11, kind="sign")
fh = fourier(f).coefficients

# Parseval: sum of |f^(r)|^2 equals the mean of |f|^2 (1 for a +-1 function)
print("parseval", np.sum(np.abs(fh) ** 2))

# the U^2 norm to the fourth is the l4 mass of the spectrum
print("U2^4", uk_norm_power(f, 2), "sum |f^|^4", fourier_l4(f))

# a linear phase has a single huge coefficient; random noise has only a few above 0.3
chi = FunctionTable(G, (-1.0) ** (G.coords @ np.array([1, 0, 1, 1, 0, 0])), True)
print("large spectrum of a character", large_spectrum(chi, 0.5))
print("large spectrum of noise at eps=0.3", large_spectrum(f, 0.3))

# a quadratic phase is invisible to U^2-type statistics but has U^3 norm 1
x = G.coords
q = FunctionTable(G, (-1.0) ** ((x[:, 0] * x[:, 1] + x[:, 2] * x[:, 3] + x[:, 4] * x[:, 5]) % 2), True)
print("quadratic phase: max |q^|", np.abs(fourier(q).coefficients).max(), "U3", uk_norm(q, 3))

# convolution can be approximated by keeping only the large spectrum
g = random_table(G, seed=12)
for eps in (0.1, 0.3):
    res = spectral_conv_approx(f, g, eps)
    print(f"eps={eps}: kept {len(res.support)} characters, L2 error {res.l2_error:.4f}")

# mixed convolutions on a product space act one direction at a time
H = ProductSpace(2, (2, 2))
h = random_table(H, seed=13)
print("mixed conv along (1, 2):", np.round(mixed_conv(h, (1, 2)).values.real, 3)[:4], "...")

# Polynomial phases, degree testing and polarization.
# Run: python3 demos/04_polynomial_phases.py

from hofa.harmonic import uk_norm
from hofa.polynomial import MonomialPoly, best_poly_correlation, degree_test, poly_from_symmetric, poly_phase, polarize
from hofa.rng import SplitMix64

# x^2 over F_5 has degree 2: the order-2 test fails, the order-3 test passes
x2 = MonomialPoly(5, 1, {(2,): 1})
print("deg<=1?", bool(degree_test(x2.as_function(), 1)), "deg<=2?", bool(degree_test(x2.as_function(), 2)))

# polarization gives the symmetric form, and it can be undone
sym = polarize(x2, 2)
print("polarization of x^2:", sym.coeffs.tolist(), "round trip ok:", poly_from_symmetric(sym, 2) == x2)

# phases of degree < k have unit U^k norm
g = MonomialPoly.random(5, 1, 2, SplitMix64(1))
print("U3 of a quadratic phase", uk_norm(poly_phase(g), 3))

# exhaustive search finds the polynomial behind a phase
g = MonomialPoly.random(2, 3, 2, SplitMix64(2))
best, corr = best_poly_correlation(poly_phase(g, -1), 2)
print("best correlation", round(corr, 12), "found", best)

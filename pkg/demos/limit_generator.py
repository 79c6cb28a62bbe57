"""The inter-well rate matrix of the builtin triple-well landscape.

Builds the limit generator Q on the three minima, prints its entries,
spectrum, and eigenvectors.  Everything here is closed-form in the well
geometry; no mesh or noise level is involved yet.
"""

import numpy as np

from metaspec import chain, potential, spectral

ALPHA = 1.8

p = potential.example_potential()
print(f"potential: minima {p.minima}, maxima {p.maxima}")

QL = chain.limit_generator(p, ALPHA)
print(f"\nlimit generator Q at alpha = {ALPHA}:")
for row in QL.matrix:
    print("  " + "  ".join(f"{v:+.6f}" for v in row))
print(f"row sums: {QL.matrix.sum(axis=1)}")

lam = np.sort(spectral.eigenvalues(QL.matrix).real)[::-1]
print(f"\nspectrum: {np.round(lam, 6)}")
print("the zero mode is the constant; the other two set the slow timescales")

for v in lam:
    vec = spectral.eigenvector(QL.matrix, v).real
    print(f"  lambda = {v:+.6f}: eigenvector {np.round(vec, 3)}")
print("\nunder max-normalization these are the well-constant shapes that")
print("the mesh eigenvectors approach as the noise level goes to zero.")

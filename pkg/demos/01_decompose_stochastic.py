"""Write a stochastic matrix as Tr(P'_i R P''_j R) and rebuild it."""
import numpy as np

from csmkit import lemma1_decompose, lemma1_reconstruct, validate_stochastic
from csmkit.stochastic import constraint_residuals

np.set_printoptions(precision=4, suppress=True)

c, s = np.cos(np.pi / 8), np.sin(np.pi / 8)
pi = validate_stochastic([[c**2, s**2], [s**2, c**2]])
print("transition matrix (columns sum to one):")
print(np.asarray(pi))

dec = lemma1_decompose(pi)
print("\ndiagonal of R:", dec.r)
print("c + s, c - s  :", np.array([c + s, c - s]))
print("constraints   :", constraint_residuals(dec))

# this matrix is |rotation|^2, yet the decomposition does not choose R = 1
print("rebuilt:")
print(np.asarray(lemma1_reconstruct(dec)))

# a random 5x5 with a few exact zeros
rng = np.random.default_rng(0)
P = rng.dirichlet(np.ones(5), size=5).T
P[0, 1] = 0.0
P[:, 1] /= P[:, 1].sum()
dec = lemma1_decompose(validate_stochastic(P))
err = np.abs(np.asarray(lemma1_reconstruct(dec)) - P).max()
print(f"\n5x5 round trip error: {err:.2e}")

"""Which doubly stochastic matrices come from a unitary?"""
from itertools import permutations

import numpy as np

from csmkit import TransitionMatrix, certify_unistochastic, haar_unitary, unistochastic_from_unitary
from csmkit.unistochastic import optimize_phases, unistochastic_oracle_3x3

# squared moduli of a random unitary: always certified, with a witness
T = unistochastic_from_unitary(haar_unitary(5, 1))
res = certify_unistochastic(T)
print("Haar 5x5:", res.status, f"residual {res.certificate.residual:.1e}", f"after {res.restarts_used} restarts")

# the cyclic matrix: column pairs give triangle sides 1/2, 0, 0, which cannot close
cyc = TransitionMatrix([[0.5, 0.5, 0], [0, 0.5, 0.5], [0.5, 0, 0.5]])
print("cyclic   :", certify_unistochastic(cyc).status, "| oracle:", unistochastic_oracle_3x3(cyc))
print("best phase-search objective:", optimize_phases(cyc, restarts=32).objective)

# how much of the Birkhoff polytope is unistochastic for N = 3?
rng = np.random.default_rng(0)
perms = [np.eye(3)[list(p)] for p in permutations(range(3))]
hits = 0
for _ in range(2000):
    w = rng.dirichlet(np.ones(6))
    hits += unistochastic_oracle_3x3(TransitionMatrix(sum(a * P for a, P in zip(w, perms))))
print(f"uniform Birkhoff samples that are unistochastic: {hits / 2000:.1%}")

"""Two spin-1/2 particles: coupled vs separated contexts and CHSH."""
import numpy as np

from csmkit import certify_unistochastic, spin

np.set_printoptions(precision=3, suppress=True)

T = spin.context_transition_coupled_vs_separated()
print("coupled (columns) -> product (rows):", spin.COUPLED_LABELS, spin.PRODUCT_LABELS, sep="\n")
print(np.asarray(T))
print("unistochastic:", certify_unistochastic(T).status)

psi = spin.singlet_state()
for deg in (0, 45, 90, 180):
    b = spin.planar_direction(deg)
    print(f"E(z, {deg:3d} deg) = {spin.correlation(psi, [0, 0, 1], b):+.4f}")

dirs = [spin.planar_direction(a) for a in (0, 90, 45, 135)]
print("\nCHSH at 0/90/45/135:", spin.chsh(*dirs), " bound 2*sqrt(2) =", 2 * np.sqrt(2))

rng = np.random.default_rng(0)
vals = []
for _ in range(2000):
    v = rng.standard_normal((4, 3))
    vals.append(abs(spin.chsh(*(v / np.linalg.norm(v, axis=1, keepdims=True)))))
print(f"largest |CHSH| over 2000 random settings: {max(vals):.4f}")

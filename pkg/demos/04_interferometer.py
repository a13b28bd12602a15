"""Beam-splitter meshes: Reck decomposition and counting statistics."""
import numpy as np

from csmkit import haar_unitary
from csmkit.interferometer import (
    ExperimentConfig,
    network_transition,
    network_unitary,
    permutation_network,
    reck_decompose,
    run_experiment,
)

np.set_printoptions(precision=3, suppress=True)

U = haar_unitary(5, 3)
net = reck_decompose(U)
print(f"{net.n_beam_splitters} beam splitters, {net.n_phase_shifters} phase shifters")
print("recomposition error:", np.linalg.norm(network_unitary(net) - U))

res = run_experiment(ExperimentConfig(5, net, prepare_outcome=0, shots=50_000, seed=1))
print("\nprepared line 0, 50k shots")
print("born     :", res.born)
print("observed :", res.frequencies)
print("z-scores :", res.zscores)

# a pure permutation sends every shot to one detector
perm = permutation_network([2, 0, 1])
print("\npermutation transition:")
print(np.asarray(network_transition(perm)))
print(run_experiment(ExperimentConfig(3, perm, 1, 1000)).counts)

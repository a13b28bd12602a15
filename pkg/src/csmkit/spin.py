"""Two spin-1/2 particles: separated vs coupled contexts, singlet correlations, CHSH.

Product basis order is ``(|++>, |+->, |-+>, |-->)`` with ``+`` meaning
spin up along z.
"""
from __future__ import annotations

import numpy as np

from .interferometer import PureState
from .linalg import ProjectorFrame
from .stochastic import TransitionMatrix, born_probability

SQRT_HALF = 1.0 / np.sqrt(2.0)

PAULI = np.array([
    [[0, 1], [1, 0]],
    [[0, -1j], [1j, 0]],
    [[1, 0], [0, -1]],
], dtype=np.complex128)

PRODUCT_LABELS = ("++", "+-", "-+", "--")
COUPLED_LABELS = ("S=1,m=+1", "S=1,m=-1", "S=1,m=0", "S=0,m=0")


def direction(v) -> np.ndarray:
    v = np.asarray(v, dtype=float).ravel()
    if v.shape != (3,):
        raise ValueError(f"a spin direction is a 3-vector, got shape {v.shape}")
    nrm = np.linalg.norm(v)
    if abs(nrm - 1.0) > 1e-12:
        raise ValueError(f"spin direction has norm {nrm:.15g}, expected 1")
    return v


def planar_direction(angle_deg: float) -> np.ndarray:
    """Unit vector in the x-z plane at ``angle_deg`` from the z axis."""
    t = np.deg2rad(angle_deg)
    return np.array([np.sin(t), 0.0, np.cos(t)])


def coupled_basis_matrix() -> np.ndarray:
    """Rows are the coupled kets ``|S, m_S>`` in the product basis.

    Row order: ``|1,1>, |1,-1>, |1,0>, |0,0>``.
    """
    h = SQRT_HALF
    return np.array([
        [1.0, 0.0, 0.0, 0.0],
        [0.0, 0.0, 0.0, 1.0],
        [0.0, h, h, 0.0],
        [0.0, h, -h, 0.0],
    ])


def product_frame() -> ProjectorFrame:
    return ProjectorFrame(np.eye(4))


def coupled_frame() -> ProjectorFrame:
    return ProjectorFrame(coupled_basis_matrix().T)


def context_transition_coupled_vs_separated() -> TransitionMatrix:
    """Entry ``(j, i)``: probability of product ket ``j`` starting from coupled ket ``i``."""
    C, S = coupled_frame(), product_frame()
    p = np.array([[born_probability(C[i], S[j]) for i in range(4)] for j in range(4)])
    return TransitionMatrix(p)


def singlet_state() -> PureState:
    return PureState([0.0, SQRT_HALF, -SQRT_HALF, 0.0])


def spin_projector(n, sign: int) -> np.ndarray:
    """``(1 + sign * n.sigma) / 2``."""
    n = direction(n)
    return 0.5 * (np.eye(2) + sign * np.einsum("k,kij->ij", n, PAULI))


def joint_probabilities(state: PureState, a, b) -> np.ndarray:
    """Table ``t[x, y]`` for Alice's result ``x`` along ``a`` and Bob's ``y`` along ``b``.

    Index 0 is ``+``, index 1 is ``-``.
    """
    psi = state.amplitudes if isinstance(state, PureState) else PureState(state).amplitudes
    rho = np.outer(psi, np.conj(psi))
    table = np.empty((2, 2))
    for x, sa in enumerate((1, -1)):
        for y, sb in enumerate((1, -1)):
            P = np.kron(spin_projector(a, sa), spin_projector(b, sb))
            table[x, y] = np.trace(rho @ P).real
    return table


def correlation(state: PureState, a, b) -> float:
    t = joint_probabilities(state, a, b)
    return float(t[0, 0] + t[1, 1] - t[0, 1] - t[1, 0])


def chsh(a, a2, b, b2, state: PureState | None = None) -> float:
    """``E(a,b) - E(a,b') + E(a',b) + E(a',b')``, on the singlet by default."""
    state = state or singlet_state()
    return (correlation(state, a, b) - correlation(state, a, b2)
            + correlation(state, a2, b) + correlation(state, a2, b2))


def bell_report(a, a2, b, b2) -> dict:
    psi = singlet_state()
    dirs = {"a": a, "a'": a2, "b": b, "b'": b2}
    pairs = {"E(a,b)": (a, b), "E(a,b')": (a, b2), "E(a',b)": (a2, b), "E(a',b')": (a2, b2)}
    return {
        "directions": {k: direction(v).tolist() for k, v in dirs.items()},
        "tables": {k: joint_probabilities(psi, *v).tolist() for k, v in pairs.items()},
        "correlations": {k: correlation(psi, *v) for k, v in pairs.items()},
        "chsh": chsh(a, a2, b, b2),
        "tsirelson_bound": 2.0 * np.sqrt(2.0),
    }

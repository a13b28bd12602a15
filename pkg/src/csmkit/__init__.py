"""Numerical toolkit for contexts, modalities and their transition probabilities."""
from .linalg import (
    ProjectorFrame,
    frame_from_unitary,
    haar_unitary,
    is_unitary,
    projector_from_vector,
    svd,
    trace_product,
)
from .stochastic import (
    DensityMatrix,
    Lemma1Decomposition,
    TransitionMatrix,
    born_probability,
    constraint_residuals,
    gleason_pure_state_check,
    is_doubly_stochastic,
    lemma1_decompose,
    lemma1_reconstruct,
    unistochastic_from_unitary,
    validate_stochastic,
)
from .unistochastic import CertifyOptions, certify_unistochastic, unistochastic_oracle_3x3

__version__ = "0.1.0"

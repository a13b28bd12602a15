"""Dense complex linear algebra used by the rest of the package.

Matrices are plain ``numpy.ndarray`` objects (complex128).  Rank-one
projectors and complete projector frames get light validation helpers so
that downstream code can rely on their invariants.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from functools import reduce
from typing import Sequence

import numpy as np

TOL_UNITARY = 1e-10
TOL_PROJECTOR = 1e-10


class DimensionError(ValueError):
    pass


class DegenerateInputError(ValueError):
    pass


class ValidationError(ValueError):
    pass


def as_matrix(M, square: bool = False) -> np.ndarray:
    A = np.asarray(M, dtype=np.complex128)
    if A.ndim != 2:
        raise DimensionError(f"expected a 2-d matrix, got shape {A.shape}")
    if square and A.shape[0] != A.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise ValidationError("matrix has non-finite entries")
    return A


def dagger(M: np.ndarray) -> np.ndarray:
    return np.conj(M).T


def is_unitary(M, tol: float = TOL_UNITARY) -> bool:
    """True iff ``||M^dagger M - 1||_F <= tol``."""
    A = as_matrix(M, square=True)
    err = np.linalg.norm(dagger(A) @ A - np.eye(A.shape[0]))
    return bool(err <= tol)


def check_unitary(M, tol: float = TOL_UNITARY) -> np.ndarray:
    A = as_matrix(M, square=True)
    err = np.linalg.norm(dagger(A) @ A - np.eye(A.shape[0]))
    if err > tol:
        raise ValidationError(f"matrix is not unitary: ||U^+U - 1||_F = {err:.3e} > {tol:g}")
    return A


def is_projector(P, tol: float = TOL_PROJECTOR) -> bool:
    """Hermitian, idempotent and of unit trace (rank one)."""
    try:
        A = as_matrix(P, square=True)
    except ValueError:
        return False
    return bool(
        np.linalg.norm(A - dagger(A)) <= tol
        and np.linalg.norm(A @ A - A) <= tol
        and abs(np.trace(A) - 1.0) <= tol
    )


def projector_from_vector(v) -> np.ndarray:
    """Rank-one projector ``v v^dagger / |v|^2``."""
    v = np.asarray(v, dtype=np.complex128).ravel()
    norm2 = np.vdot(v, v).real
    if not np.isfinite(norm2) or norm2 <= 0.0:
        raise DegenerateInputError("cannot build a projector from a zero vector")
    return np.outer(v, np.conj(v)) / norm2


@dataclass(frozen=True, eq=False)
class ProjectorFrame:
    """A complete set of mutually orthogonal rank-one projectors.

    ``vectors[:, i]`` is a unit vector spanning ``projectors[i]``.  The
    vectors are kept because Born probabilities and state collapse need
    them; the projectors are what the algebra talks about.
    """

    vectors: np.ndarray

    def __post_init__(self):
        V = as_matrix(self.vectors, square=True)
        V.setflags(write=False)
        object.__setattr__(self, "vectors", V)

    @property
    def dim(self) -> int:
        return self.vectors.shape[0]

    @property
    def projectors(self) -> list[np.ndarray]:
        return [projector_from_vector(self.vectors[:, i]) for i in range(self.dim)]

    def __len__(self):
        return self.dim

    def __getitem__(self, i) -> np.ndarray:
        return projector_from_vector(self.vectors[:, i])

    def check(self, tol: float = TOL_PROJECTOR) -> None:
        P = self.projectors
        n = self.dim
        for i in range(n):
            for j in range(n):
                target = P[i] if i == j else 0.0
                if np.linalg.norm(P[i] @ P[j] - target) > tol:
                    raise ValidationError(f"projectors {i} and {j} are not orthogonal")
        if np.linalg.norm(sum(P) - np.eye(n)) > tol:
            raise ValidationError("projectors do not sum to the identity")


def frame_from_unitary(U, tol: float = TOL_UNITARY) -> ProjectorFrame:
    """Frame whose i-th projector is spanned by column i of ``U``."""
    return ProjectorFrame(check_unitary(U, tol))


def computational_frame(n: int) -> ProjectorFrame:
    return ProjectorFrame(np.eye(n))


def svd(A):
    """Singular value decomposition ``A = L @ diag(s) @ R^dagger``.

    Singular values come back in descending order.  Each singular pair is
    phase-fixed so that the largest-modulus entry of the left vector is real
    and positive; within a group of tied singular values the pairs are
    ordered lexicographically by their (phase-fixed) left vectors.  Both
    rules only make the output reproducible; the factorization is unchanged.

    Returns
    -------
    L : (m, k) complex array
    s : (k,) float array
    R : (n, k) complex array
    """
    A = as_matrix(A)
    L, s, Rh = np.linalg.svd(A, full_matrices=False)
    R = dagger(Rh)
    k = s.size
    for c in range(k):
        idx = int(np.argmax(np.abs(L[:, c]) - 1e-12 * np.arange(L.shape[0])))
        phase = L[idx, c] / abs(L[idx, c]) if abs(L[idx, c]) > 0 else 1.0
        L[:, c] /= phase
        R[:, c] /= phase

    scale = max(s[0], 1.0) if k else 1.0
    order = list(range(k))
    start = 0
    while start < k:
        stop = start + 1
        while stop < k and s[start] - s[stop] <= 1e-12 * scale:
            stop += 1
        if stop - start > 1:
            group = sorted(
                range(start, stop),
                key=lambda c: tuple(np.round(np.c_[L[:, c].real, L[:, c].imag].ravel(), 12)),
            )
            order[start:stop] = group
        start = stop
    return L[:, order], s[order], R[:, order]


def trace_product(matrices: Sequence) -> complex:
    """Trace of the ordered product ``M_0 @ M_1 @ ... @ M_k``."""
    if not matrices:
        raise DimensionError("need at least one matrix")
    mats = [as_matrix(M) for M in matrices]
    for a, b in zip(mats, mats[1:]):
        if a.shape[1] != b.shape[0]:
            raise DimensionError(f"cannot multiply {a.shape} by {b.shape}")
    prod = reduce(np.matmul, mats)
    if prod.shape[0] != prod.shape[1]:
        raise DimensionError(f"product has non-square shape {prod.shape}")
    return complex(np.trace(prod))


def haar_unitary(n: int, rng=None) -> np.ndarray:
    """Haar-distributed unitary from the QR decomposition of a Ginibre matrix."""
    rng = np.random.default_rng(rng)
    Z = (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) / np.sqrt(2.0)
    Q, R = np.linalg.qr(Z)
    d = np.diag(R)
    return Q * (d / np.abs(d))


def matrix_to_dict(M) -> dict:
    A = as_matrix(M)
    out = {"rows": A.shape[0], "cols": A.shape[1], "re": A.real.tolist()}
    if np.any(A.imag != 0):
        out["im"] = A.imag.tolist()
    return out


def matrix_from_dict(d: dict) -> np.ndarray:
    try:
        rows, cols = int(d["rows"]), int(d["cols"])
        re = np.asarray(d["re"], dtype=float)
        im = np.asarray(d["im"], dtype=float) if "im" in d else np.zeros_like(re)
    except (KeyError, TypeError, ValueError) as exc:
        raise ValidationError(f"bad matrix record: {exc}") from exc
    if re.shape != (rows, cols) or im.shape != (rows, cols):
        raise DimensionError(f"declared shape ({rows}, {cols}) does not match data {re.shape}")
    return as_matrix(re + 1j * im)


def matrix_from_json(text: str) -> np.ndarray:
    return matrix_from_dict(json.loads(text))


def matrix_to_json(M) -> str:
    return json.dumps(matrix_to_dict(M))

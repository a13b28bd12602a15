"""Transition matrices between two contexts.

Convention: ``p[j, i]`` is the probability of finding outcome ``j`` of the
final context given outcome ``i`` of the initial one, so every *column* of a
transition matrix sums to one.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .linalg import (
    TOL_PROJECTOR,
    DimensionError,
    ProjectorFrame,
    ValidationError,
    as_matrix,
    check_unitary,
    dagger,
    is_projector,
    svd,
)

TOL_STOCH = 1e-9


class StochasticityError(ValidationError):
    """Raised with the list of violations found by :func:`validate_stochastic`."""

    def __init__(self, violations: list[str]):
        self.violations = violations
        super().__init__("; ".join(violations))


@dataclass(frozen=True, eq=False)
class TransitionMatrix:
    p: np.ndarray

    def __post_init__(self):
        p = np.array(self.p, dtype=float)
        p.setflags(write=False)
        object.__setattr__(self, "p", p)

    @property
    def n(self) -> int:
        return self.p.shape[0]

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.p, dtype=dtype)

    def to_dict(self) -> dict:
        return {"n": self.n, "convention": "column", "p": self.p.tolist()}

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, d: dict, tol: float = TOL_STOCH) -> "TransitionMatrix":
        try:
            n, p = int(d["n"]), d["p"]
        except (KeyError, TypeError, ValueError) as exc:
            raise ValidationError(f"bad transition matrix record: {exc}") from exc
        convention = d.get("convention", "column")
        if convention != "column":
            raise ValidationError(f"unsupported convention {convention!r}; expected 'column'")
        M = np.asarray(p, dtype=float)
        if M.shape != (n, n):
            raise DimensionError(f"declared n={n} does not match data of shape {M.shape}")
        return validate_stochastic(M, tol)

    @classmethod
    def from_json(cls, text: str, tol: float = TOL_STOCH) -> "TransitionMatrix":
        return cls.from_dict(json.loads(text), tol)


def validate_stochastic(M, tol: float = TOL_STOCH) -> TransitionMatrix:
    """Check that ``M`` is a real column-stochastic matrix.

    All problems are collected before raising, so the error message names
    every offending column.
    """
    A = as_matrix(M, square=True)
    violations = []
    if np.any(np.abs(A.imag) > 0):
        violations.append("matrix has complex entries")
    P = A.real
    for j, i in zip(*np.nonzero(P < -tol)):
        violations.append(f"entry ({j}, {i}) is negative: {P[j, i]:g}")
    for j, i in zip(*np.nonzero(P > 1 + tol)):
        violations.append(f"entry ({j}, {i}) exceeds 1: {P[j, i]:g}")
    sums = P.sum(axis=0)
    for i, s in enumerate(sums):
        if abs(s - 1.0) > tol:
            violations.append(f"column {i} sums to {s:.12g} (off by {s - 1.0:+.3g})")
    if violations:
        raise StochasticityError(violations)
    return TransitionMatrix(np.clip(P, 0.0, 1.0))


def is_doubly_stochastic(pi: TransitionMatrix, tol: float = TOL_STOCH) -> bool:
    return bool(np.all(np.abs(np.asarray(pi).sum(axis=1) - 1.0) <= tol))


@dataclass(frozen=True, eq=False)
class Lemma1Decomposition:
    """``p[j, i] = Tr(P'_i R P''_j R)`` with a nonnegative diagonal ``R``.

    ``r`` holds the diagonal of ``R``.
    """

    frame_initial: ProjectorFrame
    frame_final: ProjectorFrame
    r: np.ndarray

    def __post_init__(self):
        r = np.array(self.r, dtype=float)
        if r.ndim != 1 or np.any(r < 0):
            raise ValidationError("r must be a 1-d array of nonnegative values")
        r.setflags(write=False)
        object.__setattr__(self, "r", r)
        if not (self.frame_initial.dim == self.frame_final.dim == r.size):
            raise DimensionError("frames and r must share one dimension")

    @property
    def n(self) -> int:
        return self.r.size

    @property
    def R(self) -> np.ndarray:
        return np.diag(self.r).astype(np.complex128)


def lemma1_decompose(pi: TransitionMatrix) -> Lemma1Decomposition:
    """Write a stochastic matrix in the form ``Tr(P'_i R P''_j R)``.

    With ``A[j, i] = sqrt(p[j, i]) = L diag(s) V^dagger`` the initial frame
    is spanned by the rows of ``V``, the final frame by the rows of ``L``
    and ``R = diag(s)``; then ``<x_i| R |y_j> = A[j, i]``.  Column
    normalization of ``p`` is ``(A^dagger A)_ii = 1``, i.e.
    ``Tr(P'_i R^2) = 1``, and summing over ``i`` gives ``Tr(R^2) = N``.
    The decomposition is not unique when singular values are degenerate.
    """
    P = np.asarray(pi, dtype=float)
    A = np.sqrt(np.clip(P, 0.0, None))
    L, s, V = svd(A)
    # rows of V and L are orthonormal, so their transposes are unitary
    return Lemma1Decomposition(ProjectorFrame(V.T), ProjectorFrame(L.T), s)


def lemma1_reconstruct(dec: Lemma1Decomposition) -> TransitionMatrix:
    n = dec.n
    R = dec.R
    Pi = dec.frame_initial.projectors
    Pf = dec.frame_final.projectors
    out = np.empty((n, n))
    for i in range(n):
        for j in range(n):
            t = np.trace(Pi[i] @ R @ Pf[j] @ R)
            if abs(t.imag) > 1e-12:
                raise ValidationError(f"trace for ({j}, {i}) has imaginary part {t.imag:.3e}")
            out[j, i] = t.real
    return TransitionMatrix(out)


def constraint_residuals(dec: Lemma1Decomposition) -> dict:
    """Residuals ``Tr(R^2) - N`` and ``Tr(P'_i (R^2 - 1))`` for each ``i``."""
    R2 = dec.R @ dec.R
    shifted = R2 - np.eye(dec.n)
    per = [float(np.trace(P @ shifted).real) for P in dec.frame_initial.projectors]
    return {"trace_r2_minus_N": float(np.trace(R2).real - dec.n), "per_projector": per}


def born_probability(P_u, P_v, tol: float = TOL_PROJECTOR) -> float:
    """``Tr(P_u P_v)`` for two rank-one projectors, i.e. ``|<u|v>|^2``."""
    for name, P in (("P_u", P_u), ("P_v", P_v)):
        if not is_projector(P, tol):
            raise ValidationError(f"{name} is not a rank-one projector")
    P_u, P_v = np.asarray(P_u), np.asarray(P_v)
    if P_u.shape != P_v.shape:
        raise DimensionError(f"projector shapes differ: {P_u.shape} vs {P_v.shape}")
    # sum of elementwise products is symmetric in its arguments, unlike a matmul
    val = float(np.sum(P_u.real * P_v.real + P_u.imag * P_v.imag))
    return min(max(val, 0.0), 1.0)


def unistochastic_from_unitary(U) -> TransitionMatrix:
    """``p[j, i] = |U[j, i]|^2``; doubly stochastic by unitarity."""
    U = check_unitary(U)
    return TransitionMatrix(np.abs(U) ** 2)


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    rho: np.ndarray
    tol: float = field(default=1e-10, repr=False)

    def __post_init__(self):
        rho = as_matrix(self.rho, square=True).copy()
        if np.linalg.norm(rho - dagger(rho)) > self.tol:
            raise ValidationError("density matrix is not Hermitian")
        if abs(np.trace(rho) - 1.0) > self.tol:
            raise ValidationError(f"density matrix has trace {np.trace(rho).real:.12g}")
        lo = np.linalg.eigvalsh(rho).min()
        if lo < -self.tol:
            raise ValidationError(f"density matrix has negative eigenvalue {lo:.3e}")
        rho.setflags(write=False)
        object.__setattr__(self, "rho", rho)


class PreconditionError(ValueError):
    def __init__(self, message: str, measured: float):
        self.measured = measured
        super().__init__(message)


def gleason_pure_state_check(rho: DensityMatrix, P, tol: float = 1e-10) -> bool:
    """Check that ``Tr(rho P) = 1`` forces ``rho = P``.

    ``Tr(rho P) = 1 - eps`` bounds every other matrix element of ``rho`` in
    the basis adapted to ``P`` by ``sqrt(eps)``, so the Frobenius distance is
    compared against a tolerance of ``sqrt(2 * tol) + tol``.
    """
    if not is_projector(P):
        raise ValidationError("P is not a rank-one projector")
    rho_m = rho.rho if isinstance(rho, DensityMatrix) else DensityMatrix(rho).rho
    overlap = float(np.trace(rho_m @ P).real)
    if abs(overlap - 1.0) > tol:
        raise PreconditionError(f"Tr(rho P) = {overlap:.12g} is not 1 within {tol:g}", overlap)
    return bool(np.linalg.norm(rho_m - P) <= np.sqrt(2.0 * tol) + tol)
